"""``key = value`` run configuration files.

Relative paths resolve against the directory holding the config file.
Unknown keys are an error.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError
from ..fxp import QFormat
from ..network import NetworkConfig

REQUIRED = ("input_dim", "hidden_dims", "output_dim")
DEFAULTS = {
    "activation": "tanh",
    "total_bits": "16",
    "frac_bits": "14",
    "bank_width": "16",
    "softmax_limit": "1024",
    "gamma": "0.125",
    "seed": "0",
    "epochs": "1",
    "batch_size": "1",
    "dataset": "",
    "out_model": "model.gnn",
    "out_metrics": "metrics.csv",
    "lut_size": "1024",
    "acc_bits": "32",
    "oracle_compare": "false",
}
KEYS = REQUIRED + tuple(DEFAULTS)


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig
    epochs: int = 1
    batch_size: int = 1
    dataset: Path = None
    out_model: Path = Path("model.gnn")
    out_metrics: Path = Path("metrics.csv")
    oracle_compare: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs: must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size: must be >= 1")


def _int(key, value):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return int(value, 0)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _bool(key, value):
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _path(value, base):
    if not value:
        return None
    p = Path(value)
    return p if p.is_absolute() else (base / p)


def parse_run_config(text: str, base_dir=".") -> RunConfig:
    base = Path(base_dir)
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in raw:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        raw[key] = value
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"{key}: required key missing")
    vals = {**DEFAULTS, **raw}

    hidden = tuple(_int("hidden_dims", h.strip()) for h in vals["hidden_dims"].split(",") if h.strip())
    if not hidden:
        raise ConfigError("hidden_dims: at least one hidden layer is required")
    try:
        gamma = float(vals["gamma"])
    except ValueError:
        raise ConfigError(f"gamma: expected a number, got {vals['gamma']!r}") from None
    ints = {
        key: _int(key, vals[key])
        for key in ("input_dim", "output_dim", "total_bits", "frac_bits", "bank_width",
                    "softmax_limit", "seed", "lut_size", "acc_bits")
    }
    try:
        fmt = QFormat(ints.pop("total_bits"), ints.pop("frac_bits"))
        network = NetworkConfig(
            hidden_dims=hidden, activation=vals["activation"], fmt=fmt, gamma=gamma, **ints
        )
    except ValueError as exc:
        raise ConfigError(f"invalid network settings: {exc}") from None
    return RunConfig(
        network=network,
        epochs=_int("epochs", vals["epochs"]),
        batch_size=_int("batch_size", vals["batch_size"]),
        dataset=_path(vals["dataset"], base),
        out_model=_path(vals["out_model"], base),
        out_metrics=_path(vals["out_metrics"], base),
        oracle_compare=_bool("oracle_compare", vals["oracle_compare"]),
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError:
        raise ConfigError(f"{path}: not UTF-8") from None
    return parse_run_config(text, path.parent)


def dump_run_config(cfg: RunConfig) -> str:
    """Serialise so that ``parse_run_config`` gives back an equal config."""
    net = cfg.network
    pairs = [
        ("input_dim", net.input_dim),
        ("hidden_dims", ",".join(str(h) for h in net.hidden_dims)),
        ("output_dim", net.output_dim),
        ("activation", net.activation.value),
        ("total_bits", net.fmt.total_bits),
        ("frac_bits", net.fmt.frac_bits),
        ("bank_width", net.bank_width),
        ("softmax_limit", net.softmax_limit),
        ("gamma", repr(net.gamma.real)),
        ("seed", net.seed),
        ("lut_size", net.lut_size),
        ("acc_bits", net.acc_bits),
        ("epochs", cfg.epochs),
        ("batch_size", cfg.batch_size),
        ("dataset", cfg.dataset or ""),
        ("out_model", cfg.out_model or ""),
        ("out_metrics", cfg.out_metrics or ""),
        ("oracle_compare", str(cfg.oracle_compare).lower()),
    ]
    return "".join(f"{k} = {v}\n" for k, v in pairs)
