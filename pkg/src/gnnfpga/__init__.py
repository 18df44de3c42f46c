"""Bit-exact fixed-point simulator of a general feed-forward network accelerator."""

from .datapath import (
    PIPELINE_FILL,
    CycleLog,
    GradientSum,
    MacBankConfig,
    SignalVector,
    WeightMatrix,
    accumulate_update,
    mac_bank_matvec,
    outer_product,
)
from .errors import GnnFpgaError
from .fxp import AccValue, FxpValue, QFormat, acc_readout, fxp_mac, fxp_mul, quantize
from .kernels import available_backends, backend_name, use_backend
from .lut import LutKind, LutTable, build_lut, lut_error_sweep, lut_eval, softmax_hw
from .network import (
    NetworkConfig,
    NetworkState,
    apply_gradients,
    backward,
    cross_entropy,
    evaluate,
    forward,
    init_network,
    predict,
    train,
    train_epoch,
)
from .scheduler import estimate_resources, schedule_backward, schedule_epoch, schedule_forward

__version__ = "0.1.0"
