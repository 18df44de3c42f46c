"""Lookup-table activations and the sum-limited hardware softmax.

A table samples ``f`` at ``x_min + i*step`` for ``i < n`` and is read by
nearest index with clamping at both ends, a single memory read per lookup.
The index is computed from the input raw with integer arithmetic only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .datapath import SignalVector
from .errors import FormatMismatchError, GnnFpgaError
from .fxp import FxpValue, QFormat, quantize_array, to_real

DEFAULT_LUT_SIZE = 1024
DEFAULT_LUT_RANGE = (-8.0, 8.0)
EXP_DEPTH = 8.0
DEFAULT_SOFTMAX_LIMIT = 1024


class LutKind(str, enum.Enum):
    TANH = "tanh"
    SIGMOID = "sigmoid"
    RELU = "relu"
    EXP = "exp"
    TANH_DERIV = "tanh_deriv"
    SIGMOID_DERIV = "sigmoid_deriv"
    RELU_DERIV = "relu_deriv"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> LutKind:
        for kind, c in _CODES.items():
            if c == code:
                return kind
        raise GnnFpgaError(f"unknown LUT kind code {code}")


_CODES = {
    LutKind.TANH: 0,
    LutKind.SIGMOID: 1,
    LutKind.RELU: 2,
    LutKind.EXP: 3,
    LutKind.TANH_DERIV: 4,
    LutKind.SIGMOID_DERIV: 5,
    LutKind.RELU_DERIV: 6,
}

MONOTONE = {LutKind.TANH, LutKind.SIGMOID, LutKind.RELU, LutKind.EXP}
DERIVATIVE = {
    LutKind.TANH: LutKind.TANH_DERIV,
    LutKind.SIGMOID: LutKind.SIGMOID_DERIV,
    LutKind.RELU: LutKind.RELU_DERIV,
}
ACTIVATIONS = tuple(DERIVATIVE)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


REFERENCE = {
    LutKind.TANH: np.tanh,
    LutKind.SIGMOID: _sigmoid,
    LutKind.RELU: lambda x: np.maximum(x, 0.0),
    LutKind.EXP: np.exp,
    LutKind.TANH_DERIV: lambda x: 1.0 - np.tanh(x) ** 2,
    LutKind.SIGMOID_DERIV: lambda x: _sigmoid(x) * (1.0 - _sigmoid(x)),
    LutKind.RELU_DERIV: lambda x: (np.asarray(x) > 0).astype(np.float64),
}


@dataclass(frozen=True, eq=False)
class LutTable:
    kind: LutKind
    fmt: QFormat
    x_min: float
    x_max: float
    entries: np.ndarray
    index_params: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.entries)
        if not self.x_min < self.x_max:
            raise GnnFpgaError(f"invalid LUT range [{self.x_min}, {self.x_max}]")
        if n < 16 or n & (n - 1):
            raise GnnFpgaError(f"LUT size must be a power of two >= 16, got {n}")
        entries = np.asarray(self.entries, dtype=np.int64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "kind", LutKind(self.kind))
        # index = round((raw - offset) / step), offset and step in raw units;
        # both are exact binary rationals because the bounds are doubles
        offset = Fraction(self.x_min) * self.fmt.scale
        step = (Fraction(self.x_max) - Fraction(self.x_min)) * self.fmt.scale / n
        r, s = offset.numerator, offset.denominator
        p, q = step.numerator, step.denominator
        object.__setattr__(self, "index_params", (q, s, r, p))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def step(self) -> float:
        return (self.x_max - self.x_min) / self.n

    def sample_points(self) -> np.ndarray:
        return self.x_min + np.arange(self.n) * self.step

    def __eq__(self, other):
        if not isinstance(other, LutTable):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.fmt == other.fmt
            and self.x_min == other.x_min
            and self.x_max == other.x_max
            and np.array_equal(self.entries, other.entries)
        )


def build_lut(
    kind,
    fmt: QFormat,
    x_min: float = DEFAULT_LUT_RANGE[0],
    x_max: float = DEFAULT_LUT_RANGE[1],
    n: int = DEFAULT_LUT_SIZE,
) -> LutTable:
    """Sample ``kind`` in double precision at ``x_min + i*(x_max - x_min)/n`` and quantize."""
    kind = LutKind(kind)
    x_min, x_max = float(x_min), float(x_max)
    if not (math.isfinite(x_min) and math.isfinite(x_max)) or not x_min < x_max:
        raise GnnFpgaError(f"invalid LUT range [{x_min}, {x_max}]")
    if n < 16 or n & (n - 1):
        raise GnnFpgaError(f"LUT size must be a power of two >= 16, got {n}")
    xs = x_min + np.arange(n) * ((x_max - x_min) / n)
    return LutTable(kind, fmt, x_min, x_max, quantize_array(REFERENCE[kind](xs), fmt))


def softmax_exp_table(fmt: QFormat, n: int = DEFAULT_LUT_SIZE, depth: float = EXP_DEPTH) -> LutTable:
    """Exp table whose samples cover ``(-depth, 0]`` with the last entry at exactly 0.

    After the max-shift the largest logit always reads ``exp(0) = 1``.
    """
    step = depth / n
    return build_lut(LutKind.EXP, fmt, -depth + step, step, n)


def _check_input_fmt(table: LutTable, fmt: QFormat) -> None:
    if fmt.frac_bits != table.fmt.frac_bits:
        raise FormatMismatchError(
            f"LUT input has {fmt.frac_bits} fractional bits, table expects {table.fmt.frac_bits}"
        )


def lut_lookup_raw(table: LutTable, raws) -> np.ndarray:
    """Table read for integer raws carrying ``table.fmt.frac_bits`` fractional bits."""
    raws = np.ascontiguousarray(raws, dtype=np.int64)
    return kernels.lut_lookup(raws, table.entries, table.index_params)


def lut_eval(table: LutTable, x: FxpValue) -> FxpValue:
    """Nearest-entry read; inputs beyond the sampled range clamp to the end entries."""
    _check_input_fmt(table, x.fmt)
    raw = lut_lookup_raw(table, np.array([x.raw], dtype=np.int64))[0]
    return FxpValue(int(raw), table.fmt)


def lut_bank_eval(table: LutTable, x: SignalVector, ports: int) -> tuple[SignalVector, int]:
    """Apply the table to every element with ``ports`` parallel reads per cycle."""
    _check_input_fmt(table, x.fmt)
    out = lut_lookup_raw(table, x.data)
    return SignalVector(out, table.fmt), -(-x.dim // ports)


def lut_error_sweep(table: LutTable, samples: int) -> float:
    """Max |lut_eval(x) - f(x)| over a dense uniform sweep of representable x.

    The sweep covers the part of ``[x_min, x_max]`` the format can represent.
    """
    if samples < table.n:
        raise GnnFpgaError(f"need at least {table.n} samples, got {samples}")
    fmt = table.fmt
    lo = max(table.x_min, fmt.min_real)
    hi = min(table.x_max, fmt.max_real)
    raws = np.unique(quantize_array(np.linspace(lo, hi, samples), fmt))
    xs = to_real(raws, fmt)
    keep = (xs >= table.x_min) & (xs <= table.x_max)
    raws, xs = raws[keep], xs[keep]
    got = to_real(lut_lookup_raw(table, raws), fmt)
    return float(np.max(np.abs(got - REFERENCE[table.kind](xs))))


def _as_signal(z) -> SignalVector:
    if isinstance(z, SignalVector):
        return z
    z = list(z)
    if not z:
        raise GnnFpgaError("softmax of an empty vector")
    fmt = z[0].fmt
    for v in z:
        if v.fmt != fmt:
            raise FormatMismatchError("softmax inputs mix formats")
    return SignalVector(np.array([v.raw for v in z], dtype=np.int64), fmt)


def softmax_bank(
    z, exp_table: LutTable, limit: int = DEFAULT_SOFTMAX_LIMIT, ports: int = 1
) -> tuple[SignalVector, tuple[int, int, int]]:
    """Hardware softmax plus the cycles of its (exp, sum, divide) phases.

    The sum register saturates at ``limit`` (in real units); each output is
    ``e_j / sum`` by rounded integer division.
    """
    z = _as_signal(z)
    if z.dim == 0:
        raise GnnFpgaError("softmax of an empty vector")
    if exp_table.kind != LutKind.EXP:
        raise GnnFpgaError(f"softmax needs an exp table, got {exp_table.kind.value}")
    _check_input_fmt(exp_table, z.fmt)
    fmt = exp_table.fmt
    # max-shift runs in a subtractor one bit wider than the operands
    shifted = z.data - z.data.max()
    e = lut_lookup_raw(exp_table, shifted).tolist()
    total = min(sum(e), limit << fmt.frac_bits)
    total = max(total, 1)
    out = [fmt.saturate((2 * (ej << fmt.frac_bits) + total) // (2 * total)) for ej in e]
    phase = -(-z.dim // ports)
    return SignalVector(np.array(out, dtype=np.int64), fmt), (phase, phase, phase)


def softmax_hw(z, exp_table: LutTable, limit: int = DEFAULT_SOFTMAX_LIMIT) -> SignalVector:
    return softmax_bank(z, exp_table, limit)[0]
