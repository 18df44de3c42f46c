"""Command-line driver: ``gnnfpga {train,eval,trace,estimate,gen-lut}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .datapath import SignalVector
from .errors import GnnFpgaError
from .fxp import QFormat
from .harness.config import load_run_config
from .harness.dataset import load_dataset_csv
from .harness.fileformats import load_model, save_lut, save_model
from .harness.oracle import OracleNet, oracle_train_epoch
from .lut import LutKind, build_lut
from .network import (
    NetworkConfig,
    epoch_order,
    evaluate,
    forward,
    init_network,
    state_from_weights,
    train_epoch,
)
from .scheduler import estimate_resources, report_text, schedule_epoch

log = logging.getLogger("gnnfpga")


def _dataset_for(run):
    if run.dataset is None:
        raise GnnFpgaError("config has no 'dataset' key")
    net = run.network
    return load_dataset_csv(run.dataset, net.input_dim, net.output_dim, net.fmt)


def cmd_train(args) -> int:
    run = load_run_config(args.config)
    cfg = run.network
    data = _dataset_for(run)
    batch = min(run.batch_size, data.n)
    state = init_network(cfg)
    onet = OracleNet.from_config(cfg) if run.oracle_compare else None
    header = ["epoch", "mean_loss", "accuracy", "cycles"]
    if onet is not None:
        header += ["oracle_loss", "oracle_accuracy"]
    rows = []
    for epoch in range(run.epochs):
        order = epoch_order(cfg, data.n, epoch)
        state, stats = train_epoch(state, cfg, data, batch, order)
        row = [epoch + 1, f"{stats.mean_loss:.9g}", f"{stats.accuracy:.9g}", stats.cycles]
        if onet is not None:
            o_loss, o_acc = oracle_train_epoch(onet, data.real_features(), data.labels, cfg.gamma.real, batch, order)
            row += [f"{o_loss:.9g}", f"{o_acc:.9g}"]
        rows.append(row)
        log.info("epoch %d loss %.6f acc %.4f", epoch + 1, stats.mean_loss, stats.accuracy)
    save_model(run.out_model, state.weights, cfg.fmt, cfg.activation)
    with open(run.out_metrics, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    last = rows[-1]
    print(f"epochs: {run.epochs}  final loss: {last[1]}  final accuracy: {last[2]}")
    print(f"model: {run.out_model}")
    print(f"metrics: {run.out_metrics}")
    return 0


def _model_network(model, bank_width: int) -> NetworkConfig:
    dims = model.dims
    return NetworkConfig(
        input_dim=dims[0],
        hidden_dims=dims[1:-1],
        output_dim=dims[-1],
        activation=model.activation,
        fmt=model.fmt,
        bank_width=bank_width,
    )


def cmd_eval(args) -> int:
    model = load_model(args.model)
    cfg = _model_network(model, args.bank_width)
    state = state_from_weights(cfg, model.weights)
    data = load_dataset_csv(args.data, cfg.input_dim, cfg.output_dim, cfg.fmt)
    accuracy, loss = evaluate(state, cfg, data)
    print(f"accuracy: {accuracy:.6f}")
    print(f"mean_loss: {loss:.6f}")
    return 0


def _fmt_vec(v: SignalVector) -> str:
    return " ".join(f"{x:.8f}" for x in v.real())


def cmd_trace(args) -> int:
    run = load_run_config(args.config)
    cfg = run.network
    if args.model:
        model = load_model(args.model)
        state = state_from_weights(cfg, model.weights)
    else:
        state = init_network(cfg)
    data = _dataset_for(run)
    if not 0 <= args.sample < data.n:
        raise GnnFpgaError(f"sample {args.sample} outside [0, {data.n})")
    x = SignalVector(data.features[args.sample], cfg.fmt)
    trace = forward(state, cfg, x)
    print(f"sample: {args.sample}")
    print(f"label: {int(data.labels[args.sample])}")
    print(f"x: {_fmt_vec(trace.x)}")
    for i, (s, m) in enumerate(zip(trace.pre, trace.post), start=1):
        print(f"L{i}.S: {_fmt_vec(s)}")
        print(f"L{i}.M: {_fmt_vec(m)}")
    print(f"z: {_fmt_vec(trace.z)}")
    print(f"yhat: {_fmt_vec(trace.yhat)}")
    return 0


def cmd_estimate(args) -> int:
    run = load_run_config(args.config)
    cfg = run.network
    n = run.batch_size
    if run.dataset is not None and Path(run.dataset).exists():
        n = _dataset_for(run).n
    cycles = schedule_epoch(cfg, n, min(run.batch_size, n))
    resources = estimate_resources(cfg)
    sys.stdout.write(report_text(cycles, resources))
    status = 0
    if not resources.dsp_fits:
        print(f"DSP budget exceeded: {resources.dsp_used} > {resources.dsp_budget}", file=sys.stderr)
        status = 1
    if not resources.bram_fits:
        print(
            f"BRAM budget exceeded: {resources.bram_bits_used} > {resources.bram_budget_bits} bits",
            file=sys.stderr,
        )
        status = 1
    return status


def _pair(text: str, conv):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    try:
        return conv(parts[0]), conv(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_gen_lut(args) -> int:
    total, frac = args.bits
    lo, hi = args.range
    table = build_lut(args.kind, QFormat(total, frac), lo, hi, args.n)
    save_lut(args.out, table)
    print(f"wrote {table.kind.value} LUT, {table.n} entries, {table.fmt}, [{lo}, {hi}) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gnnfpga", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a network from a run config")
    t.add_argument("--config", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="accuracy and loss of a saved model on a CSV dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--bank-width", type=int, default=16)
    e.set_defaults(func=cmd_eval)

    tr = sub.add_parser("trace", help="dump every intermediate of one forward pass")
    tr.add_argument("--config", required=True)
    tr.add_argument("--sample", type=int, required=True)
    tr.add_argument("--model", help="use these weights instead of the seeded initialisation")
    tr.set_defaults(func=cmd_trace)

    es = sub.add_parser("estimate", help="cycle and resource report; exit 1 if over budget")
    es.add_argument("--config", required=True)
    es.set_defaults(func=cmd_estimate)

    g = sub.add_parser("gen-lut", help="write a LUT1 table dump")
    g.add_argument("--kind", required=True, choices=[k.value for k in LutKind])
    g.add_argument("--bits", required=True, type=lambda s: _pair(s, int), help="total,frac")
    g.add_argument("--range", required=True, type=lambda s: _pair(s, float), help="lo,hi")
    g.add_argument("--n", type=int, default=1024)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_lut)
    return p


def _join_range(argv: list) -> list:
    # "--range -8,8" would otherwise read "-8,8" as an option flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--range":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--range={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_range(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (GnnFpgaError, OSError) as exc:
        print(f"gnnfpga: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
