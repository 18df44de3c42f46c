"""Label-first CSV datasets, quantized on load."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DatasetError
from ..fxp import QFormat, Q2_14, quantize_array, to_real


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray  # (n, feature_dim) raws
    labels: np.ndarray
    fmt: QFormat = Q2_14
    n_classes: int = 2

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def real_features(self) -> np.ndarray:
        return to_real(self.features, self.fmt)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.fmt == other.fmt
            and self.n_classes == other.n_classes
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


def parse_dataset_csv(text: str, feature_dim: int, k: int, fmt: QFormat = Q2_14) -> Dataset:
    """Each line: ``label,f1,...,f_dim``.  LF or CRLF; one trailing empty line allowed."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetError("empty dataset")
    labels, rows = [], []
    for lineno, line in enumerate(lines, start=1):
        line = line.removesuffix("\r")
        fields = line.split(",")
        if len(fields) != feature_dim + 1:
            raise DatasetError(
                f"line {lineno}: expected {feature_dim + 1} fields (label + {feature_dim} features), got {len(fields)}"
            )
        try:
            label = int(fields[0])
            values = [float(f) for f in fields[1:]]
        except ValueError:
            raise DatasetError(f"line {lineno}: malformed value in {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise DatasetError(f"line {lineno}: non-finite feature")
        if not 0 <= label < k:
            raise DatasetError(f"line {lineno}: label {label} outside [0, {k})")
        labels.append(label)
        rows.append(values)
    features = quantize_array(np.array(rows, dtype=np.float64).reshape(len(rows), feature_dim), fmt)
    return Dataset(features, np.array(labels, dtype=np.int64), fmt, k)


def load_dataset_csv(path, feature_dim: int, k: int, fmt: QFormat = Q2_14) -> Dataset:
    try:
        text = Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{path}: not UTF-8 ({exc.reason})") from None
    return parse_dataset_csv(text, feature_dim, k, fmt)
