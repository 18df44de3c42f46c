"""Pure-Python datapath kernels, exact for any operand width.

Each function mirrors the compiled kernel of the same name: arrays in are
int64 numpy arrays, arithmetic is on Python ints, and the MAC-bank schedule is
stepped cycle by cycle so the returned cycle counts are counted, not computed.
"""

import numpy as np

from .fxp import round_shift

NAME = "python"


def _sat(v, lo, hi):
    return hi if v > hi else lo if v < lo else v


def matvec(w, x, bank, frac, lo, hi, acc_lo, acc_hi):
    rows = w.tolist()
    xs = x.tolist()
    H = len(rows)
    out = [0] * H
    cycles = 0
    for base in range(0, H, bank):
        units = rows[base:base + bank]
        acc = [0] * len(units)
        for t, xt in enumerate(xs):
            for u, row in enumerate(units):
                acc[u] = _sat(acc[u] + row[t] * xt, acc_lo, acc_hi)
            cycles += 1
        for u, a in enumerate(acc):
            out[base + u] = _sat(round_shift(a, frac), lo, hi)
    return np.array(out, dtype=np.int64), cycles


def _lanes(total, bank):
    """Yield chunks of flat indices, one chunk per cycle."""
    for start in range(0, total, bank):
        yield range(start, min(start + bank, total))


def outer(a, b, bank, frac, lo, hi):
    av, bv = a.tolist(), b.tolist()
    n, m = len(av), len(bv)
    out = [0] * (n * m)
    cycles = 0
    for lanes in _lanes(n * m, bank):
        for k in lanes:
            out[k] = _sat(round_shift(av[k // m] * bv[k % m], frac), lo, hi)
        cycles += 1
    return np.array(out, dtype=np.int64).reshape(n, m), cycles


def hadamard(a, b, bank, frac, lo, hi):
    av, bv = a.tolist(), b.tolist()
    out = [0] * len(av)
    cycles = 0
    for lanes in _lanes(len(av), bank):
        for k in lanes:
            out[k] = _sat(round_shift(av[k] * bv[k], frac), lo, hi)
        cycles += 1
    return np.array(out, dtype=np.int64), cycles


def scale_update(w, g, gamma, bank, frac, lo, hi):
    n, m = w.shape
    wv, gv = w.ravel().tolist(), g.ravel().tolist()
    ngamma = _sat(-int(gamma), lo, hi)
    out = [0] * (n * m)
    cycles = 0
    for lanes in _lanes(n * m, bank):
        for k in lanes:
            step = _sat(round_shift(ngamma * gv[k], frac), lo, hi)
            out[k] = _sat(wv[k] + step, lo, hi)
        cycles += 1
    return np.array(out, dtype=np.int64).reshape(n, m), cycles


def acc_add(s, g, bank, acc_lo, acc_hi):
    n, m = s.shape
    sv, gv = s.ravel().tolist(), g.ravel().tolist()
    out = [0] * (n * m)
    cycles = 0
    for lanes in _lanes(n * m, bank):
        for k in lanes:
            out[k] = _sat(sv[k] + gv[k], acc_lo, acc_hi)
        cycles += 1
    return np.array(out, dtype=np.int64).reshape(n, m), cycles


def lut_lookup(raws, entries, q, s, r, p):
    last = len(entries) - 1
    den = 2 * p * s
    out = []
    for raw in raws.tolist():
        num = 2 * q * (raw * s - r) + p * s
        idx = 0 if num < 0 else min(num // den, last)
        out.append(int(entries[idx]))
    return np.array(out, dtype=np.int64)
