"""Signed fixed-point arithmetic with saturation and round-to-nearest.

Every datapath signal is a two's-complement integer ``raw`` interpreted as
``raw * 2**-frac_bits``.  Rounding is to nearest with ties away from zero and
happens only where a product is narrowed back to the operand format (the
multiplier output and the accumulator readout).  Overflow always saturates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatMismatchError, GnnFpgaError

DEFAULT_ACC_BITS = 32
MAX_ACC_BITS = 62


@dataclass(frozen=True)
class QFormat:
    """Signed fixed-point format: ``total_bits`` wide, ``frac_bits`` after the point."""

    total_bits: int = 16
    frac_bits: int = 14

    def __post_init__(self):
        if not 2 <= self.total_bits <= 32:
            raise GnnFpgaError(f"total_bits must be in [2, 32], got {self.total_bits}")
        if not 0 <= self.frac_bits <= self.total_bits - 1:
            raise GnnFpgaError(
                f"frac_bits must be in [0, {self.total_bits - 1}], got {self.frac_bits}"
            )

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def ulp(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def min_real(self) -> float:
        return self.raw_min / self.scale

    @property
    def max_real(self) -> float:
        return self.raw_max / self.scale

    def saturate(self, raw: int) -> int:
        if raw > self.raw_max:
            return self.raw_max
        if raw < self.raw_min:
            return self.raw_min
        return raw

    def __str__(self) -> str:
        return f"Q{self.total_bits - self.frac_bits}.{self.frac_bits}"


Q2_14 = QFormat(16, 14)


@dataclass(frozen=True)
class FxpValue:
    raw: int
    fmt: QFormat = Q2_14

    def __post_init__(self):
        if not self.fmt.raw_min <= self.raw <= self.fmt.raw_max:
            raise GnnFpgaError(f"raw {self.raw} does not fit in {self.fmt}")

    @property
    def real(self) -> float:
        return self.raw / self.fmt.scale

    def __float__(self) -> float:
        return self.real

    def __mul__(self, other: FxpValue) -> FxpValue:
        return fxp_mul(self, other)

    def __add__(self, other: FxpValue) -> FxpValue:
        return fxp_add_sat(self, other)

    def __sub__(self, other: FxpValue) -> FxpValue:
        return fxp_sub_sat(self, other)

    def __neg__(self) -> FxpValue:
        return fxp_neg(self)


def acc_limits(acc_bits: int) -> tuple[int, int]:
    return -(1 << (acc_bits - 1)), (1 << (acc_bits - 1)) - 1


@dataclass(frozen=True)
class AccValue:
    """Accumulator register of one MAC unit; holds products at ``2 * frac_bits``."""

    raw: int = 0
    fmt: QFormat = Q2_14
    acc_bits: int = DEFAULT_ACC_BITS

    def __post_init__(self):
        if not self.fmt.total_bits <= self.acc_bits <= MAX_ACC_BITS:
            raise GnnFpgaError(
                f"acc_bits must be in [{self.fmt.total_bits}, {MAX_ACC_BITS}], got {self.acc_bits}"
            )
        lo, hi = acc_limits(self.acc_bits)
        if not lo <= self.raw <= hi:
            raise GnnFpgaError(f"accumulator raw {self.raw} does not fit in {self.acc_bits} bits")


def round_shift(value: int, shift: int) -> int:
    """Arithmetic right shift by ``shift`` rounding to nearest, ties away from zero."""
    if shift == 0:
        return value
    half = 1 << (shift - 1)
    if value >= 0:
        return (value + half) >> shift
    return -((-value + half) >> shift)


def _check_fmt(*fmts: QFormat) -> None:
    first = fmts[0]
    for f in fmts[1:]:
        if f != first:
            raise FormatMismatchError(f"format mismatch: {first} vs {f}")


def quantize_raw(x: float, fmt: QFormat) -> int:
    x = float(x)
    if not math.isfinite(x):
        raise GnnFpgaError("non-finite input")
    a = abs(x)
    # anything this large saturates; avoids inf from ldexp
    if a >= 2.0 ** (fmt.total_bits - fmt.frac_bits + 1):
        return fmt.raw_max if x > 0 else fmt.raw_min
    a = math.ldexp(a, fmt.frac_bits)
    fl = math.floor(a)
    r = fl + 1 if a - fl >= 0.5 else fl
    return fmt.saturate(r if x >= 0 else -r)


def quantize(x: float, fmt: QFormat = Q2_14) -> FxpValue:
    """Nearest representable value to ``x`` (ties away from zero), saturated."""
    return FxpValue(quantize_raw(x, fmt), fmt)


def quantize_array(x, fmt: QFormat = Q2_14) -> np.ndarray:
    """Vectorised :func:`quantize`; returns the int64 raws."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise GnnFpgaError("non-finite input")
    limit = 2.0 ** (fmt.total_bits - fmt.frac_bits + 1)
    a = np.ldexp(np.minimum(np.abs(x), limit), fmt.frac_bits)
    fl = np.floor(a)
    r = fl + (a - fl >= 0.5)
    r = np.where(x < 0, -r, r)
    return np.clip(r, fmt.raw_min, fmt.raw_max).astype(np.int64)


def to_real(raw, fmt: QFormat = Q2_14):
    """Real value(s) of raw integer(s); exact in double for total_bits <= 32."""
    return np.asarray(raw, dtype=np.float64) / fmt.scale


def fxp_mul(a: FxpValue, b: FxpValue) -> FxpValue:
    _check_fmt(a.fmt, b.fmt)
    fmt = a.fmt
    return FxpValue(fmt.saturate(round_shift(a.raw * b.raw, fmt.frac_bits)), fmt)


def fxp_add_sat(a: FxpValue, b: FxpValue) -> FxpValue:
    _check_fmt(a.fmt, b.fmt)
    return FxpValue(a.fmt.saturate(a.raw + b.raw), a.fmt)


def fxp_sub_sat(a: FxpValue, b: FxpValue) -> FxpValue:
    _check_fmt(a.fmt, b.fmt)
    return FxpValue(a.fmt.saturate(a.raw - b.raw), a.fmt)


def fxp_neg(a: FxpValue) -> FxpValue:
    return FxpValue(a.fmt.saturate(-a.raw), a.fmt)


def fxp_mac(acc: AccValue, a: FxpValue, b: FxpValue) -> AccValue:
    """``acc + a*b`` at accumulator width, saturating; no shift until readout."""
    _check_fmt(acc.fmt, a.fmt, b.fmt)
    lo, hi = acc_limits(acc.acc_bits)
    raw = acc.raw + a.raw * b.raw
    raw = hi if raw > hi else lo if raw < lo else raw
    return AccValue(raw, acc.fmt, acc.acc_bits)


def acc_readout(acc: AccValue) -> FxpValue:
    fmt = acc.fmt
    return FxpValue(fmt.saturate(round_shift(acc.raw, fmt.frac_bits)), fmt)
