"""Kernel backend selection.

The compiled extension (``_kernels``, built from Cython) is used when it
imports; otherwise the pure-Python module is.  Set ``GNNFPGA_BACKEND=python``
to force the fallback.  Both backends are bit-identical; the compiled one is
only used when every intermediate provably fits in int64, so very wide
accumulators or LUT index parameters silently route to the exact Python path.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_INT64_SAFE = 1 << 62


def _default_backend():
    wanted = os.environ.get("GNNFPGA_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in _BACKENDS:
            raise ImportError(f"GNNFPGA_BACKEND={wanted!r} is not available")
        return _BACKENDS[wanted]
    return _compiled if _compiled is not None else _kernels_py


_active = _default_backend()


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend_name() -> str:
    return _active.NAME


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]


@contextlib.contextmanager
def use_backend(name: str):
    previous = _active.NAME
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def _absmax(a: np.ndarray) -> int:
    return int(np.abs(a).max()) if a.size else 0


def matvec(w, x, bank, frac, lo, hi, acc_lo, acc_hi):
    # operands <= 2**31 and accumulator <= 2**61: always int64-safe
    return _active.matvec(w, x, bank, frac, lo, hi, acc_lo, acc_hi)


def outer(a, b, bank, frac, lo, hi):
    return _active.outer(a, b, bank, frac, lo, hi)


def hadamard(a, b, bank, frac, lo, hi):
    return _active.hadamard(a, b, bank, frac, lo, hi)


def scale_update(w, g, gamma, bank, frac, lo, hi):
    impl = _active
    if _absmax(g) * (abs(int(gamma)) + 1) >= _INT64_SAFE:
        impl = _kernels_py
    return impl.scale_update(w, g, gamma, bank, frac, lo, hi)


def acc_add(s, g, bank, acc_lo, acc_hi):
    return _active.acc_add(s, g, bank, acc_lo, acc_hi)


def lut_lookup(raws, entries, params):
    """``params`` = (q, s, r, p): index = round(q*(raw*s - r) / (p*s))."""
    q, s, r, p = params
    impl = _active
    if 2 * q * (_absmax(raws) * s + abs(r)) + p * s >= _INT64_SAFE or 2 * p * s >= _INT64_SAFE:
        impl = _kernels_py
    return impl.lut_lookup(raws, entries, q, s, r, p)
