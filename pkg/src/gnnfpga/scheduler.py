"""Control-unit timing model and FPGA resource estimate.

The schedule_* functions predict, in closed form, the stage list that the
simulator's :class:`~gnnfpga.datapath.CycleLog` records while running, stage
for stage and in the same order.  Every stage is charged ``fill`` pipeline
cycles on top of its compute cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .datapath import PIPELINE_FILL, StageEntry
from .network import ACCU, MULT, MULT_ADD_BANK, SOFTMAX, TANH_BANK, NetworkConfig

DSP_BUDGET = 2520
BRAM_BUDGET_BITS = 32 * 2**20
LUT_TABLES = 3  # activation, its derivative, exp


def _ceil(a: int, b: int) -> int:
    return -(-a // b)


@dataclass
class CycleReport:
    entries: list = field(default_factory=list)
    total_forward: int = 0
    total_backward: int = 0
    total_epoch: int = 0

    def stage(self, name: str) -> StageEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"{e.name}\t{e.unit}\t{e.cycles}" for e in self.entries]
        lines += [
            f"TOTAL_FORWARD\t{self.total_forward}",
            f"TOTAL_BACKWARD\t{self.total_backward}",
            f"TOTAL_EPOCH\t{self.total_epoch}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResourceReport:
    dsp_used: int
    bram_bits_used: int
    weight_bits: int = 0
    activation_bits: int = 0
    lut_bits: int = 0
    dsp_budget: int = DSP_BUDGET
    bram_budget_bits: int = BRAM_BUDGET_BITS

    @property
    def dsp_fits(self) -> bool:
        return self.dsp_used <= self.dsp_budget

    @property
    def bram_fits(self) -> bool:
        return self.bram_bits_used <= self.bram_budget_bits

    @property
    def fits(self) -> bool:
        return self.dsp_fits and self.bram_fits

    def to_text(self) -> str:
        return (
            f"DSP_USED/{self.dsp_budget}\t{self.dsp_used}\n"
            f"BRAM_BITS_USED/{self.bram_budget_bits}\t{self.bram_bits_used}\n"
        )


def _forward_stages(cfg: NetworkConfig, fill: int) -> list:
    B = cfg.bank_width
    shapes = cfg.layer_shapes
    out = []
    for i, (d_out, d_in) in enumerate(shapes):
        out.append(StageEntry(f"L{i + 1}.matvec", MULT_ADD_BANK, _ceil(d_out, B) * d_in + fill, "forward"))
        if i < len(shapes) - 1:
            out.append(StageEntry(f"L{i + 1}.act", TANH_BANK, _ceil(d_out, B) + fill, "forward"))
    k = _ceil(cfg.output_dim, B) + fill
    for phase in ("exp", "sum", "div"):
        out.append(StageEntry(f"softmax.{phase}", SOFTMAX, k, "forward"))
    return out


def _backward_stages(cfg: NetworkConfig, fill: int) -> list:
    B = cfg.bank_width
    shapes = cfg.layer_shapes
    out = [StageEntry("delta_out", ACCU, _ceil(cfg.output_dim, B) + fill, "backward")]
    for i in reversed(range(len(shapes))):
        d_out, d_in = shapes[i]
        out.append(StageEntry(f"L{i + 1}.outer", MULT, _ceil(d_out * d_in, B) + fill, "backward"))
        if i == 0:
            break
        # transposed weights: d_in outputs, d_out accumulation steps each
        out.append(StageEntry(f"L{i + 1}.matvec_t", MULT_ADD_BANK, _ceil(d_in, B) * d_out + fill, "backward"))
        out.append(StageEntry(f"L{i}.deriv", TANH_BANK, _ceil(d_in, B) + fill, "backward"))
        out.append(StageEntry(f"L{i}.hadamard", MULT, _ceil(d_in, B) + fill, "backward"))
    for i, (d_out, d_in) in enumerate(shapes):
        out.append(StageEntry(f"L{i + 1}.grad_acc", ACCU, _ceil(d_out * d_in, B) + fill, "backward"))
    return out


def _update_stages(cfg: NetworkConfig, fill: int) -> list:
    B = cfg.bank_width
    return [
        StageEntry(f"L{i + 1}.update", ACCU, _ceil(d_out * d_in, B) + fill, "update")
        for i, (d_out, d_in) in enumerate(cfg.layer_shapes)
    ]


def _report(entries: list) -> CycleReport:
    fwd = sum(e.cycles for e in entries if e.phase == "forward")
    bwd = sum(e.cycles for e in entries if e.phase == "backward")
    return CycleReport(entries, fwd, bwd, sum(e.cycles for e in entries))


def schedule_forward(cfg: NetworkConfig, fill: int = PIPELINE_FILL) -> CycleReport:
    """Stages of one forward pass for one sample."""
    return _report(_forward_stages(cfg, fill))


def schedule_backward(cfg: NetworkConfig, fill: int = PIPELINE_FILL) -> CycleReport:
    """Stages of one backward pass, including folding the gradient into the batch sum."""
    return _report(_backward_stages(cfg, fill))


def schedule_update(cfg: NetworkConfig, fill: int = PIPELINE_FILL) -> CycleReport:
    return _report(_update_stages(cfg, fill))


def schedule_epoch(cfg: NetworkConfig, n_samples: int, batch: int, fill: int = PIPELINE_FILL) -> CycleReport:
    """Per-sample forward/backward stages and per-batch update stages of one epoch.

    ``total_epoch = n * (forward + backward) + ceil(n / batch) * update``;
    ``total_forward`` and ``total_backward`` stay per-sample.
    """
    if n_samples < 1 or not 1 <= batch <= n_samples:
        raise ValueError(f"need 1 <= batch <= n_samples, got batch={batch}, n={n_samples}")
    fwd = _forward_stages(cfg, fill)
    bwd = _backward_stages(cfg, fill)
    upd = _update_stages(cfg, fill)
    report = _report(fwd + bwd + upd)
    per_sample = report.total_forward + report.total_backward
    report.total_epoch = n_samples * per_sample + _ceil(n_samples, batch) * sum(e.cycles for e in upd)
    return report


def estimate_resources(cfg: NetworkConfig, n_tables: int = LUT_TABLES) -> ResourceReport:
    """DSP and on-chip memory use of ``cfg``.

    One DSP per MAC unit in the forward bank plus one per backward mult/accu
    lane.  Memory counts weights, the live activation RAMs (input, S and M
    per hidden layer, z and yhat) and the LUT contents.
    """
    bits = cfg.fmt.total_bits
    weight_bits = sum(r * c for r, c in cfg.layer_shapes) * bits
    act_words = cfg.input_dim + sum(2 * h for h in cfg.hidden_dims) + 2 * cfg.output_dim
    act_bits = act_words * bits
    lut_bits = n_tables * cfg.lut_size * bits
    return ResourceReport(
        dsp_used=2 * cfg.bank_width,
        bram_bits_used=weight_bits + act_bits + lut_bits,
        weight_bits=weight_bits,
        activation_bits=act_bits,
        lut_bits=lut_bits,
    )


def report_text(cycles: CycleReport, resources: ResourceReport) -> str:
    return cycles.to_text() + resources.to_text()


def parse_report_text(text: str) -> tuple:
    """Inverse of :func:`report_text`: (stage rows, summary dict)."""
    rows, summary = [], {}
    for line in text.splitlines():
        parts = line.split("\t")
        if len(parts) == 3:
            rows.append((parts[0], parts[1], int(parts[2])))
        elif len(parts) == 2:
            summary[parts[0]] = int(parts[1])
        elif line.strip():
            raise ValueError(f"malformed report line: {line!r}")
    return rows, summary
