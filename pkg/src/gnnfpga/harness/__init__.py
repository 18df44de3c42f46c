"""Run plumbing: datasets, configuration, file formats, the float oracle and the CLI."""

from .config import RunConfig, dump_run_config, load_run_config, parse_run_config
from .dataset import Dataset, load_dataset_csv, parse_dataset_csv
from .fileformats import ModelFile, load_lut, load_model, lut_bytes, model_bytes, save_lut, save_model
from .oracle import OracleNet, finite_difference_gradients, oracle_backward, oracle_forward, oracle_loss
