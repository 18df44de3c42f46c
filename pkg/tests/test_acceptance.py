"""Acceptance gate.

Each test checks one criterion at its stated tolerance and prints a single
``ACCEPTANCE <n> PASS|FAIL`` line.  Run with ``pytest tests/test_acceptance.py -v``.
"""

import math
import shutil
import time

import numpy as np
import pytest

from gnnfpga import kernels
from gnnfpga.cli import main
from gnnfpga.datapath import CycleLog, MacBankConfig, SignalVector, WeightMatrix, mac_bank_matvec
from gnnfpga.fxp import Q2_14, quantize_array
from gnnfpga.harness.config import load_run_config
from gnnfpga.harness.fileformats import load_model, save_model
from gnnfpga.harness.oracle import (
    OracleNet,
    finite_difference_gradients,
    oracle_backward,
    oracle_forward,
    oracle_train_epoch,
)
from gnnfpga.lut import LutKind, build_lut, lut_error_sweep, softmax_exp_table, softmax_hw
from gnnfpga.network import (
    NetworkConfig,
    backward,
    forward,
    init_network,
    one_hot,
    state_from_weights,
    train,
)
from gnnfpga.scheduler import estimate_resources, schedule_backward, schedule_forward

from conftest import FIXTURES


@pytest.fixture
def report(capsys):
    def _report(n, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, f"criterion {n} failed: {detail}"

    return _report


def _xor_dir(tmp_path, name):
    d = tmp_path / name
    d.mkdir()
    shutil.copy(FIXTURES / "xor.csv", d / "xor.csv")
    shutil.copy(FIXTURES / "xor.cfg", d / "xor.cfg")
    return d


def test_1_xor_end_to_end(report, xor_data):
    run = load_run_config(FIXTURES / "xor.cfg")
    cfg = run.network
    assert cfg.dims == (2, 4, 2) and cfg.activation == LutKind.TANH and cfg.fmt == Q2_14
    assert cfg.gamma.real == 0.5 and run.batch_size == 4 and run.epochs == 2000

    # float oracle first: same seed-derived weights, same schedule
    onet = OracleNet.from_config(cfg)
    feats = xor_data.real_features()
    oracle_epoch = None
    for epoch in range(run.epochs):
        _, acc = oracle_train_epoch(onet, feats, xor_data.labels, cfg.gamma.real, run.batch_size)
        if acc == 1.0 and oracle_epoch is None:
            oracle_epoch = epoch + 1
    oracle_ok = oracle_epoch is not None and oracle_train_epoch(
        onet, feats, xor_data.labels, 0.0, run.batch_size
    )[1] == 1.0

    t0 = time.perf_counter()
    state, history = train(cfg, xor_data, run.epochs, run.batch_size)
    elapsed = time.perf_counter() - t0
    first = next((i + 1 for i, h in enumerate(history) if h.accuracy == 1.0), None)
    ok = oracle_ok and first is not None and history[-1].accuracy == 1.0 and elapsed < 10.0
    report(
        1,
        "XOR 2-4-2 reaches 4/4 within 2000 epochs in < 10 s",
        ok,
        f"oracle 4/4 at epoch {oracle_epoch}, fixed point 4/4 at epoch {first}, "
        f"final accuracy {history[-1].accuracy}, {elapsed:.2f} s on {kernels.backend_name()} backend",
    )


def test_2_gradient_correctness(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(3):
        onet = OracleNet.from_config(NetworkConfig(6, (8,), 4, seed=seed))
        x = rng.uniform(-1, 1, 6)
        label = int(rng.integers(0, 4))
        analytic = oracle_backward(onet, x, label)
        numeric = finite_difference_gradients(onet, x, label, h=1e-5)
        for a, n in zip(analytic, numeric):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    elapsed = time.perf_counter() - t0
    report(
        2,
        "backprop vs central differences on 6-8-4, rel. error <= 1e-4 in < 5 s",
        worst <= 1e-4 and elapsed < 5.0,
        f"max relative error {worst:.2e} over 3 nets x 80 weights, {elapsed:.2f} s",
    )


def _random_net(rng):
    t = int(rng.integers(1, 17))
    hidden = tuple(int(h) for h in rng.integers(1, 17, int(rng.integers(1, 4))))
    k = int(rng.integers(2, 17))
    act = str(rng.choice(["tanh", "sigmoid", "relu"]))
    cfg = NetworkConfig(t, hidden, k, activation=act, bank_width=int(rng.integers(1, 17)))
    weights = []
    for rows, cols in cfg.layer_shapes:
        r = min(1.0, math.sqrt(6.0 / (rows + cols)))
        weights.append(WeightMatrix(quantize_array(rng.uniform(-r, r, (rows, cols)))))
    return cfg, state_from_weights(cfg, weights)


def test_3_quantization_fidelity(report):
    rng = np.random.default_rng(3)
    worst = 0.0
    n_nets = 150
    for _ in range(n_nets):
        cfg, state = _random_net(rng)
        assert all(np.all(np.abs(w.real()) <= 1.0) for w in state.weights)
        onet = OracleNet.from_state(state)
        for _ in range(4):
            x = SignalVector.from_real(rng.uniform(-1, 1, cfg.input_dim))
            got = forward(state, cfg, x).yhat.real()
            ref = oracle_forward(onet, x.real())
            worst = max(worst, float(np.max(np.abs(got - ref))))
    report(
        3,
        "fixed-point forward within L-inf 0.05 of float on quantized weights",
        worst <= 0.05,
        f"{n_nets} nets, dims <= 16, 4 inputs each, worst L-inf {worst:.4f}",
    )


def test_4_lut_error_bound(report):
    e1 = lut_error_sweep(build_lut(LutKind.TANH, Q2_14, -8, 8, 1024), 1 << 16)
    e2 = lut_error_sweep(build_lut(LutKind.TANH, Q2_14, -8, 8, 2048), 1 << 16)
    ratio = e2 / e1
    report(
        4,
        "tanh LUT N=1024 error <= 0.01, doubling N halves it",
        e1 <= 0.01 and 0.4 <= ratio <= 0.6,
        f"N=1024 max error {e1:.5f}, N=2048 {e2:.5f}, ratio {ratio:.3f}",
    )


def test_5_hardware_softmax(report):
    rng = np.random.default_rng(5)
    table = softmax_exp_table(Q2_14)
    n_vec = 12_000
    neg = bad_sum = bad_argmax = checked = 0
    for _ in range(n_vec):
        k = int(rng.integers(2, 17))
        raws = rng.integers(Q2_14.raw_min, Q2_14.raw_max + 1, k)
        out = softmax_hw(SignalVector(raws), table)
        neg += int(np.any(out.data < 0))
        bad_sum += int(abs(out.real().sum() - 1.0) > k * 2**-14)
        z = raws / 2**14
        top2 = np.sort(z)[-2:]
        if top2[1] - top2[0] > table.step:
            checked += 1
            ref = np.exp(z - z.max())
            bad_argmax += int(np.argmax(out.data) != np.argmax(ref / ref.sum()))
    report(
        5,
        "softmax non-negative, sum within K*2^-14, argmax agrees beyond LUT step",
        neg == 0 and bad_sum == 0 and bad_argmax == 0,
        f"{n_vec} vectors K in 2..16: {neg} negative, {bad_sum} sum violations, "
        f"{bad_argmax}/{checked} argmax disagreements",
    )


def test_6_bank_width_invariance(report):
    rng = np.random.default_rng(6)
    mismatches = bad_cycles = 0
    trials = 0
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            for i in range(10):
                # half the instances use the full format range so saturation paths are hit
                span = 1 << 15 if i % 2 else 1 << 14
                w = WeightMatrix(rng.integers(-span, span, (64, 64)))
                x = SignalVector(rng.integers(-span, span, 64))
                ref = None
                for B in (1, 2, 7, 64):
                    out, cycles = mac_bank_matvec(MacBankConfig(B), w, x)
                    bad_cycles += int(cycles != -(-64 // B) * 64)
                    if ref is None:
                        ref = out
                    mismatches += int(out != ref)
                    trials += 1
    report(
        6,
        "mac_bank_matvec bit-identical for B in {1,2,7,64}, cycles = ceil(H/B)*T",
        mismatches == 0 and bad_cycles == 0,
        f"{trials} runs on 64x64 over backends {kernels.available_backends()}: "
        f"{mismatches} mismatches, {bad_cycles} cycle errors",
    )


def test_7_scheduler_consistency(report):
    rng = np.random.default_rng(7)
    n_cfg = 30
    failures = 0
    for _ in range(n_cfg):
        hidden = tuple(int(h) for h in rng.integers(1, 25, int(rng.integers(1, 4))))
        cfg = NetworkConfig(
            int(rng.integers(1, 25)), hidden, int(rng.integers(2, 12)),
            bank_width=int(rng.integers(1, 40)), seed=int(rng.integers(0, 10_000)),
        )
        state = init_network(cfg)
        fwd_log, bwd_log = CycleLog(0), CycleLog(0)
        x = SignalVector.from_real(rng.uniform(-1, 1, cfg.input_dim))
        trace = forward(state, cfg, x, fwd_log)
        backward(state, cfg, trace, one_hot(int(rng.integers(0, cfg.output_dim)), cfg.output_dim), bwd_log)
        fwd, bwd = schedule_forward(cfg, fill=0), schedule_backward(cfg, fill=0)
        # the backward schedule also covers folding into the batch sum, appended after the walk
        bwd_walk = [e for e in bwd.entries if not e.name.endswith(".grad_acc")]
        ok = (
            fwd_log.entries == fwd.entries
            and fwd_log.total == fwd.total_forward
            and bwd_log.entries == bwd_walk
        )
        failures += int(not ok)
    report(
        7,
        "schedule_forward/backward (P=0) equal simulated cycle counts",
        failures == 0,
        f"{n_cfg} random configs, {failures} mismatches",
    )


def test_8_resource_budget(report, tmp_path, capsys):
    res = estimate_resources(NetworkConfig(784, (64,), 10, bank_width=16, lut_size=1024))
    cfg_text = "input_dim = 784\nhidden_dims = 64\noutput_dim = 10\nbank_width = {}\n"
    codes = {}
    for B in (16, 2520, 2521, 3000):
        p = tmp_path / f"b{B}.cfg"
        p.write_text(cfg_text.format(B))
        codes[B] = main(["estimate", "--config", str(p)])
    err = capsys.readouterr().err
    ok = (
        res.weight_bits == 813_056
        and res.fits
        and codes[16] == 0
        and codes[2521] == 1
        and codes[3000] == 1
        and "DSP" in err
    )
    report(
        8,
        "784-64-10 stores 813,056 weight bits and fits; estimate exits 1 for B > 2520",
        ok,
        f"weight bits {res.weight_bits}, DSP {res.dsp_used}/2520, BRAM {res.bram_bits_used}/{res.bram_budget_bits}, "
        f"exit codes {codes}",
    )


def test_9_determinism_and_serialization(report, tmp_path):
    a, b = _xor_dir(tmp_path, "a"), _xor_dir(tmp_path, "b")
    rc = [main(["train", "--config", str(d / "xor.cfg")]) for d in (a, b)]
    first, second = ((d / "xor.gnn").read_bytes() for d in (a, b))
    m = load_model(a / "xor.gnn")
    save_model(tmp_path / "again.gnn", m.weights, m.fmt, m.activation)
    resaved = (tmp_path / "again.gnn").read_bytes()
    ok = rc == [0, 0] and first == second and resaved == first
    report(
        9,
        "identical train runs give byte-identical models; save-load-save is byte-exact",
        ok,
        f"model {len(first)} bytes, runs identical: {first == second}, round trip exact: {resaved == first}",
    )
