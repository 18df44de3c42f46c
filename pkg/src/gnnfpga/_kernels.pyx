# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled datapath kernels.

Same contracts as ``_kernels_py``.  Callers guarantee that every intermediate
fits in int64 (see ``kernels.py``); nothing here checks for overflow.
"""

import numpy as np
from libc.stdint cimport int64_t

NAME = "compiled"


cdef inline int64_t _sat(int64_t v, int64_t lo, int64_t hi) noexcept nogil:
    if v > hi:
        return hi
    if v < lo:
        return lo
    return v


cdef inline int64_t _rshift_round(int64_t v, int s) noexcept nogil:
    cdef int64_t half
    if s == 0:
        return v
    half = (<int64_t>1) << (s - 1)
    if v >= 0:
        return (v + half) >> s
    return -((-v + half) >> s)


def matvec(const int64_t[:, ::1] w, const int64_t[::1] x, Py_ssize_t bank,
           int frac, int64_t lo, int64_t hi, int64_t acc_lo, int64_t acc_hi):
    cdef Py_ssize_t H = w.shape[0], T = w.shape[1]
    cdef Py_ssize_t base, t, u, row
    cdef long long cycles = 0
    out = np.empty(H, dtype=np.int64)
    acc_buf = np.zeros(bank, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int64_t[::1] acc = acc_buf
    with nogil:
        base = 0
        while base < H:
            for u in range(bank):
                acc[u] = 0
            for t in range(T):
                for u in range(bank):
                    row = base + u
                    if row < H:
                        acc[u] = _sat(acc[u] + w[row, t] * x[t], acc_lo, acc_hi)
                cycles += 1
            for u in range(bank):
                row = base + u
                if row < H:
                    o[row] = _sat(_rshift_round(acc[u], frac), lo, hi)
            base += bank
    return out, cycles


def outer(const int64_t[::1] a, const int64_t[::1] b, Py_ssize_t bank,
          int frac, int64_t lo, int64_t hi):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], total = n * m
    cdef Py_ssize_t k = 0, u
    cdef long long cycles = 0
    out = np.empty((n, m), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    with nogil:
        while k < total:
            for u in range(bank):
                if k < total:
                    o[k // m, k % m] = _sat(_rshift_round(a[k // m] * b[k % m], frac), lo, hi)
                    k += 1
            cycles += 1
    return out, cycles


def hadamard(const int64_t[::1] a, const int64_t[::1] b, Py_ssize_t bank,
             int frac, int64_t lo, int64_t hi):
    cdef Py_ssize_t n = a.shape[0], k = 0, u
    cdef long long cycles = 0
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    with nogil:
        while k < n:
            for u in range(bank):
                if k < n:
                    o[k] = _sat(_rshift_round(a[k] * b[k], frac), lo, hi)
                    k += 1
            cycles += 1
    return out, cycles


def scale_update(const int64_t[:, ::1] w, const int64_t[:, ::1] g, int64_t gamma,
                 Py_ssize_t bank, int frac, int64_t lo, int64_t hi):
    cdef Py_ssize_t n = w.shape[0], m = w.shape[1], total = n * m
    cdef Py_ssize_t k = 0, u, i, j
    cdef long long cycles = 0
    cdef int64_t step
    cdef int64_t ngamma = _sat(-gamma, lo, hi)
    out = np.empty((n, m), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    with nogil:
        while k < total:
            for u in range(bank):
                if k < total:
                    i = k // m
                    j = k % m
                    step = _sat(_rshift_round(ngamma * g[i, j], frac), lo, hi)
                    o[i, j] = _sat(w[i, j] + step, lo, hi)
                    k += 1
            cycles += 1
    return out, cycles


def acc_add(const int64_t[:, ::1] s, const int64_t[:, ::1] g, Py_ssize_t bank,
            int64_t acc_lo, int64_t acc_hi):
    cdef Py_ssize_t n = s.shape[0], m = s.shape[1], total = n * m
    cdef Py_ssize_t k = 0, u
    cdef long long cycles = 0
    out = np.empty((n, m), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    with nogil:
        while k < total:
            for u in range(bank):
                if k < total:
                    o[k // m, k % m] = _sat(s[k // m, k % m] + g[k // m, k % m], acc_lo, acc_hi)
                    k += 1
            cycles += 1
    return out, cycles


def lut_lookup(const int64_t[::1] raws, const int64_t[::1] entries,
               int64_t q, int64_t s, int64_t r, int64_t p):
    cdef Py_ssize_t n = raws.shape[0], last = entries.shape[0] - 1, k
    cdef int64_t num, den = 2 * p * s, idx
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    with nogil:
        for k in range(n):
            num = 2 * q * (raws[k] * s - r) + p * s
            if num < 0:
                idx = 0
            else:
                idx = num // den
                if idx > last:
                    idx = last
            o[k] = entries[idx]
    return out
