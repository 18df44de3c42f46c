"""Compute units of the accelerator: mult-add bank, mult module, accu module.

Vectors and matrices hold int64 raws in numpy arrays (row-major); element
accessors hand out :class:`FxpValue`.  Every unit returns the cycles it was
busy, counted by stepping its schedule in the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FormatMismatchError, GnnFpgaError, ShapeError
from .fxp import (
    DEFAULT_ACC_BITS,
    MAX_ACC_BITS,
    FxpValue,
    QFormat,
    Q2_14,
    acc_limits,
    quantize_array,
    to_real,
)


@dataclass(frozen=True)
class MacBankConfig:
    bank_width: int = 16
    fmt: QFormat = Q2_14
    acc_bits: int = DEFAULT_ACC_BITS

    def __post_init__(self):
        if self.bank_width < 1:
            raise GnnFpgaError(f"bank_width must be >= 1, got {self.bank_width}")
        if not self.fmt.total_bits <= self.acc_bits <= MAX_ACC_BITS:
            raise GnnFpgaError(f"acc_bits must be in [{self.fmt.total_bits}, {MAX_ACC_BITS}]")

    @property
    def acc_range(self) -> tuple[int, int]:
        return acc_limits(self.acc_bits)


def _as_raw_array(data, ndim: int) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.int64)
    if arr.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-d array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class SignalVector:
    data: np.ndarray
    fmt: QFormat = Q2_14

    def __post_init__(self):
        arr = _as_raw_array(self.data, 1)
        if arr.size and (arr.min() < self.fmt.raw_min or arr.max() > self.fmt.raw_max):
            raise GnnFpgaError(f"vector entries outside {self.fmt}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_real(cls, values, fmt: QFormat = Q2_14) -> SignalVector:
        return cls(quantize_array(np.atleast_1d(values), fmt), fmt)

    @classmethod
    def zeros(cls, dim: int, fmt: QFormat = Q2_14) -> SignalVector:
        return cls(np.zeros(dim, dtype=np.int64), fmt)

    @property
    def dim(self) -> int:
        return len(self.data)

    def real(self) -> np.ndarray:
        return to_real(self.data, self.fmt)

    def __len__(self):
        return self.dim

    def __getitem__(self, i) -> FxpValue:
        return FxpValue(int(self.data[i]), self.fmt)

    def __eq__(self, other):
        if not isinstance(other, SignalVector):
            return NotImplemented
        return self.fmt == other.fmt and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """``rows x cols`` matrix; maps a ``cols``-vector to a ``rows``-vector."""

    data: np.ndarray
    fmt: QFormat = Q2_14

    def __post_init__(self):
        arr = _as_raw_array(self.data, 2)
        if arr.size and (arr.min() < self.fmt.raw_min or arr.max() > self.fmt.raw_max):
            raise GnnFpgaError(f"matrix entries outside {self.fmt}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_real(cls, values, fmt: QFormat = Q2_14) -> WeightMatrix:
        return cls(quantize_array(np.atleast_2d(values), fmt), fmt)

    @classmethod
    def zeros(cls, rows: int, cols: int, fmt: QFormat = Q2_14) -> WeightMatrix:
        return cls(np.zeros((rows, cols), dtype=np.int64), fmt)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def T(self) -> WeightMatrix:
        return WeightMatrix(self.data.T, self.fmt)

    def real(self) -> np.ndarray:
        return to_real(self.data, self.fmt)

    def at(self, i: int, j: int) -> FxpValue:
        return FxpValue(int(self.data[i, j]), self.fmt)

    def __eq__(self, other):
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return self.fmt == other.fmt and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class GradientSum:
    """Batch gradient held at accumulator width (raws share the operand scale)."""

    data: np.ndarray
    fmt: QFormat = Q2_14
    acc_bits: int = DEFAULT_ACC_BITS

    def __post_init__(self):
        arr = _as_raw_array(self.data, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, rows: int, cols: int, bank: MacBankConfig) -> GradientSum:
        return cls(np.zeros((rows, cols), dtype=np.int64), bank.fmt, bank.acc_bits)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def _check_fmt(bank: MacBankConfig, *fmts: QFormat) -> None:
    for f in fmts:
        if f != bank.fmt:
            raise FormatMismatchError(f"operand format {f} does not match bank format {bank.fmt}")


def mac_bank_matvec(bank: MacBankConfig, w: WeightMatrix, x: SignalVector) -> tuple[SignalVector, int]:
    """``y = W x`` on the mult-add bank.

    Unit ``u`` of pass ``p`` owns output row ``p*B + u`` and consumes one
    column per cycle in ascending order, so a pass costs ``cols`` cycles and
    there are ``ceil(rows / B)`` passes.  Results do not depend on ``B``.
    """
    _check_fmt(bank, w.fmt, x.fmt)
    if w.cols != x.dim:
        raise ShapeError(f"matrix has {w.cols} columns but vector has {x.dim} entries")
    fmt = bank.fmt
    acc_lo, acc_hi = bank.acc_range
    y, cycles = kernels.matvec(
        w.data, x.data, bank.bank_width, fmt.frac_bits, fmt.raw_min, fmt.raw_max, acc_lo, acc_hi
    )
    return SignalVector(y, fmt), int(cycles)


def outer_product(bank: MacBankConfig, delta: SignalVector, s2: SignalVector) -> tuple[WeightMatrix, int]:
    """``G[i, j] = delta[i] * s2[j]`` on the mult module, ``B`` products per cycle."""
    _check_fmt(bank, delta.fmt, s2.fmt)
    if delta.dim == 0 or s2.dim == 0:
        raise ShapeError("outer product of an empty vector")
    fmt = bank.fmt
    g, cycles = kernels.outer(
        delta.data, s2.data, bank.bank_width, fmt.frac_bits, fmt.raw_min, fmt.raw_max
    )
    return WeightMatrix(g, fmt), int(cycles)


def hadamard(bank: MacBankConfig, a: SignalVector, b: SignalVector) -> tuple[SignalVector, int]:
    _check_fmt(bank, a.fmt, b.fmt)
    if a.dim != b.dim:
        raise ShapeError(f"elementwise product of sizes {a.dim} and {b.dim}")
    fmt = bank.fmt
    c, cycles = kernels.hadamard(a.data, b.data, bank.bank_width, fmt.frac_bits, fmt.raw_min, fmt.raw_max)
    return SignalVector(c, fmt), int(cycles)


def vector_sub(bank: MacBankConfig, a: SignalVector, b: SignalVector) -> tuple[SignalVector, int]:
    """Saturating ``a - b`` on the accu module."""
    _check_fmt(bank, a.fmt, b.fmt)
    if a.dim != b.dim:
        raise ShapeError(f"subtraction of sizes {a.dim} and {b.dim}")
    fmt = bank.fmt
    out = np.clip(a.data - b.data, fmt.raw_min, fmt.raw_max)
    return SignalVector(out, fmt), -(-a.dim // bank.bank_width)


def grad_accumulate(bank: MacBankConfig, total: GradientSum, g: WeightMatrix) -> tuple[GradientSum, int]:
    """Add one sample's gradient into the batch sum at accumulator width."""
    _check_fmt(bank, total.fmt, g.fmt)
    if total.shape != g.shape:
        raise ShapeError(f"gradient shape {g.shape} does not match sum shape {total.shape}")
    acc_lo, acc_hi = bank.acc_range
    out, cycles = kernels.acc_add(total.data, g.data, bank.bank_width, acc_lo, acc_hi)
    return GradientSum(out, bank.fmt, bank.acc_bits), int(cycles)


def accumulate_update(
    bank: MacBankConfig, w: WeightMatrix, g, gamma: FxpValue
) -> tuple[WeightMatrix, int]:
    """``W' = W + (-gamma) * G`` elementwise, rounding the product once.

    ``g`` may be a :class:`WeightMatrix` or a wider :class:`GradientSum`.
    """
    _check_fmt(bank, w.fmt, g.fmt, gamma.fmt)
    if w.shape != g.shape:
        raise ShapeError(f"gradient shape {g.shape} does not match weight shape {w.shape}")
    fmt = bank.fmt
    out, cycles = kernels.scale_update(
        w.data, g.data, gamma.raw, bank.bank_width, fmt.frac_bits, fmt.raw_min, fmt.raw_max
    )
    return WeightMatrix(out, fmt), int(cycles)


# control-unit pipeline fill charged per stage; a model constant, not a measurement
PIPELINE_FILL = 4


@dataclass(frozen=True)
class StageEntry:
    name: str
    unit: str
    cycles: int
    phase: str


@dataclass
class CycleLog:
    """Control-unit record of every stage executed, each charged ``fill`` extra cycles."""

    fill: int = 0
    entries: list = field(default_factory=list)

    def record(self, name: str, unit: str, cycles: int, phase: str) -> None:
        self.entries.append(StageEntry(name, unit, cycles + self.fill, phase))

    @property
    def total(self) -> int:
        return sum(e.cycles for e in self.entries)

    def total_for(self, phase: str) -> int:
        return sum(e.cycles for e in self.entries if e.phase == phase)
