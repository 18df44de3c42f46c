"""Binary model ("GNN1") and LUT dump ("LUT1") files.

All integers are little-endian.  Raw values are stored as two's-complement
integers of ``ceil(total_bits / 8)`` bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datapath import WeightMatrix
from ..errors import FileFormatError, GnnFpgaError
from ..fxp import QFormat
from ..lut import LutKind, LutTable

MODEL_MAGIC = b"GNN1"
LUT_MAGIC = b"LUT1"

_NUMPY_INT = {1: "<i1", 2: "<i2", 4: "<i4"}


def _word_bytes(fmt: QFormat) -> int:
    return (fmt.total_bits + 7) // 8


def pack_raws(raws: np.ndarray, fmt: QFormat) -> bytes:
    width = _word_bytes(fmt)
    flat = np.asarray(raws, dtype=np.int64).ravel()
    if width in _NUMPY_INT:
        return flat.astype(_NUMPY_INT[width]).tobytes()
    return b"".join(int(v).to_bytes(width, "little", signed=True) for v in flat.tolist())


def unpack_raws(buf: bytes, count: int, fmt: QFormat) -> np.ndarray:
    width = _word_bytes(fmt)
    if len(buf) != count * width:
        raise FileFormatError(f"expected {count * width} bytes of raw values, found {len(buf)}")
    if width in _NUMPY_INT:
        out = np.frombuffer(buf, dtype=_NUMPY_INT[width]).astype(np.int64)
    else:
        out = np.array(
            [int.from_bytes(buf[i:i + width], "little", signed=True) for i in range(0, len(buf), width)],
            dtype=np.int64,
        )
    if out.size and (out.min() < fmt.raw_min or out.max() > fmt.raw_max):
        raise FileFormatError(f"raw value outside {fmt}")
    return out


def _fmt(total_bits: int, frac_bits: int) -> QFormat:
    try:
        return QFormat(total_bits, frac_bits)
    except GnnFpgaError as exc:
        raise FileFormatError(str(exc)) from None


@dataclass(frozen=True)
class ModelFile:
    fmt: QFormat
    activation: LutKind
    weights: tuple  # WeightMatrix per layer, (out x in)

    @property
    def dims(self) -> tuple:
        return (self.weights[0].cols, *(w.rows for w in self.weights))


def model_bytes(weights, fmt: QFormat, activation) -> bytes:
    activation = LutKind(activation)
    parts = [MODEL_MAGIC, struct.pack("<BBBBI", fmt.total_bits, fmt.frac_bits, activation.code, 0, len(weights))]
    for w in weights:
        parts.append(struct.pack("<II", w.cols, w.rows))
    for w in weights:
        parts.append(pack_raws(w.data, fmt))
    return b"".join(parts)


def parse_model(buf: bytes) -> ModelFile:
    if len(buf) < 12 or buf[:4] != MODEL_MAGIC:
        raise FileFormatError("not a GNN1 model file")
    total_bits, frac_bits, act_code, _reserved, n_layers = struct.unpack_from("<BBBBI", buf, 4)
    fmt = _fmt(total_bits, frac_bits)
    try:
        activation = LutKind.from_code(act_code)
    except GnnFpgaError as exc:
        raise FileFormatError(str(exc)) from None
    pos = 12
    if n_layers < 1 or len(buf) < pos + 8 * n_layers:
        raise FileFormatError("truncated layer table")
    shapes = []
    for _ in range(n_layers):
        d_in, d_out = struct.unpack_from("<II", buf, pos)
        shapes.append((d_out, d_in))
        pos += 8
    for (_, d_in), (d_out_prev, _) in zip(shapes[1:], shapes[:-1]):
        if d_in != d_out_prev:
            raise FileFormatError("layer dimensions do not chain")
    width = _word_bytes(fmt)
    expected = pos + sum(r * c for r, c in shapes) * width
    if len(buf) != expected:
        raise FileFormatError(f"model file is {len(buf)} bytes, expected {expected}")
    weights = []
    for rows, cols in shapes:
        n = rows * cols
        raws = unpack_raws(buf[pos:pos + n * width], n, fmt)
        weights.append(WeightMatrix(raws.reshape(rows, cols), fmt))
        pos += n * width
    return ModelFile(fmt, activation, tuple(weights))


def save_model(path, weights, fmt: QFormat, activation) -> None:
    Path(path).write_bytes(model_bytes(weights, fmt, activation))


def load_model(path) -> ModelFile:
    return parse_model(Path(path).read_bytes())


def lut_bytes(table: LutTable) -> bytes:
    fmt = table.fmt
    head = LUT_MAGIC + struct.pack(
        "<BBBBddI", table.kind.code, fmt.total_bits, fmt.frac_bits, 0, table.x_min, table.x_max, table.n
    )
    return head + pack_raws(table.entries, fmt)


def parse_lut(buf: bytes) -> LutTable:
    head = struct.calcsize("<BBBBddI")
    if len(buf) < 4 + head or buf[:4] != LUT_MAGIC:
        raise FileFormatError("not a LUT1 dump")
    code, total_bits, frac_bits, _reserved, x_min, x_max, n = struct.unpack_from("<BBBBddI", buf, 4)
    fmt = _fmt(total_bits, frac_bits)
    entries = unpack_raws(buf[4 + head:], n, fmt)
    try:
        return LutTable(LutKind.from_code(code), fmt, x_min, x_max, entries)
    except GnnFpgaError as exc:
        raise FileFormatError(str(exc)) from None


def save_lut(path, table: LutTable) -> None:
    Path(path).write_bytes(lut_bytes(table))


def load_lut(path) -> LutTable:
    return parse_lut(Path(path).read_bytes())
