"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--repeat N]

Each row reports the best of N runs per backend and the speedup.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from gnnfpga import kernels
from gnnfpga.datapath import MacBankConfig, SignalVector, WeightMatrix, mac_bank_matvec, outer_product
from gnnfpga.harness.dataset import Dataset
from gnnfpga.lut import build_lut, lut_lookup_raw
from gnnfpga.network import NetworkConfig, train


def _cases():
    rng = np.random.default_rng(0)
    w64 = WeightMatrix(rng.integers(-16384, 16385, (64, 64)))
    x64 = SignalVector(rng.integers(-16384, 16385, 64))
    w256 = WeightMatrix(rng.integers(-16384, 16385, (256, 256)))
    x256 = SignalVector(rng.integers(-16384, 16385, 256))
    a = SignalVector(rng.integers(-16384, 16385, 128))
    b = SignalVector(rng.integers(-16384, 16385, 128))
    tanh = build_lut("tanh", w64.fmt, -8, 8, 1024)
    raws = rng.integers(-32768, 32768, 4096)
    bank = MacBankConfig(16)
    xor = Dataset(np.array([[0, 0], [0, 16384], [16384, 0], [16384, 16384]]), np.array([0, 1, 1, 0]))
    xor_cfg = NetworkConfig(2, (4,), 2, gamma=0.5)
    return [
        ("matvec 64x64, B=16", lambda: mac_bank_matvec(bank, w64, x64)),
        ("matvec 256x256, B=16", lambda: mac_bank_matvec(bank, w256, x256)),
        ("outer 128x128, B=16", lambda: outer_product(bank, a, b)),
        ("tanh LUT, 4096 reads", lambda: lut_lookup_raw(tanh, raws)),
        ("XOR 2-4-2, 100 epochs", lambda: train(xor_cfg, xor, 100, 4)),
    ]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    header = f"{'case':<26}" + "".join(f"{b + ' ms':>14}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for name, fn in _cases():
        times = {}
        for backend in backends:
            with kernels.use_backend(backend):
                fn()  # warm-up
                times[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        row = f"{name:<26}" + "".join(f"{times[b]:>14.3f}" for b in backends)
        if len(backends) > 1:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
