"""Feed-forward network trained entirely inside the fixed-point datapath.

Layer ``l`` holds a ``d_{l+1} x d_l`` weight matrix (no biases).  Hidden
layers run mult-add bank -> activation LUT; the output layer runs mult-add
bank -> hardware softmax.  The backward pass starts from ``yhat - y`` (softmax
with cross-entropy) and walks the layers in reverse using transposed weights
and derivative LUTs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .datapath import (
    PIPELINE_FILL,
    CycleLog,
    GradientSum,
    MacBankConfig,
    SignalVector,
    WeightMatrix,
    accumulate_update,
    grad_accumulate,
    hadamard,
    mac_bank_matvec,
    outer_product,
    vector_sub,
)
from .errors import DatasetError, GnnFpgaError, ShapeError
from .fxp import DEFAULT_ACC_BITS, FxpValue, QFormat, Q2_14, quantize, quantize_array
from .lut import (
    ACTIVATIONS,
    DEFAULT_LUT_RANGE,
    DEFAULT_LUT_SIZE,
    DEFAULT_SOFTMAX_LIMIT,
    DERIVATIVE,
    LutKind,
    LutTable,
    build_lut,
    lut_bank_eval,
    softmax_bank,
    softmax_exp_table,
)

MULT_ADD_BANK = "mult-add bank"
TANH_BANK = "tanh bank"
SOFTMAX = "softmax"
MULT = "mult"
ACCU = "accu"


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    hidden_dims: tuple
    output_dim: int
    activation: LutKind = LutKind.TANH
    fmt: QFormat = Q2_14
    bank_width: int = 16
    softmax_limit: int = DEFAULT_SOFTMAX_LIMIT
    gamma: FxpValue = None
    seed: int = 0
    lut_size: int = DEFAULT_LUT_SIZE
    acc_bits: int = DEFAULT_ACC_BITS

    def __post_init__(self):
        hidden = tuple(int(h) for h in self.hidden_dims)
        object.__setattr__(self, "hidden_dims", hidden)
        activation = LutKind(self.activation)
        if activation not in ACTIVATIONS:
            raise GnnFpgaError(f"{activation.value} is not a hidden-layer activation")
        object.__setattr__(self, "activation", activation)
        gamma = self.gamma
        if gamma is None:
            gamma = 0.125
        if not isinstance(gamma, FxpValue):
            gamma = quantize(gamma, self.fmt)
        object.__setattr__(self, "gamma", gamma)

        if not hidden:
            raise GnnFpgaError("at least one hidden layer is required")
        if min(self.input_dim, self.output_dim, *hidden) < 1:
            raise GnnFpgaError("all layer dimensions must be >= 1")
        if gamma.fmt != self.fmt or gamma.raw <= 0:
            raise GnnFpgaError("gamma must be a positive value in the network format")
        if self.softmax_limit < 1:
            raise GnnFpgaError("softmax_limit must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise GnnFpgaError("seed must be a 64-bit unsigned integer")
        # validates bank_width and acc_bits
        MacBankConfig(self.bank_width, self.fmt, self.acc_bits)

    @property
    def dims(self) -> tuple:
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    @property
    def layer_shapes(self) -> list:
        """(out, in) per weight matrix."""
        d = self.dims
        return [(d[i + 1], d[i]) for i in range(len(d) - 1)]

    @property
    def bank(self) -> MacBankConfig:
        return MacBankConfig(self.bank_width, self.fmt, self.acc_bits)


@dataclass(frozen=True)
class NetworkState:
    weights: tuple
    act_lut: LutTable
    deriv_lut: LutTable
    exp_lut: LutTable

    @property
    def luts(self) -> tuple:
        return (self.act_lut, self.deriv_lut, self.exp_lut)

    def __eq__(self, other):
        if not isinstance(other, NetworkState):
            return NotImplemented
        return len(self.weights) == len(other.weights) and all(
            a == b for a, b in zip(self.weights, other.weights)
        ) and self.luts == other.luts


@dataclass(frozen=True)
class ForwardTrace:
    x: SignalVector
    pre: list  # S per hidden layer
    post: list  # M per hidden layer
    z: SignalVector
    yhat: SignalVector


@dataclass(frozen=True)
class EpochStats:
    mean_loss: float
    accuracy: float
    cycles: int


def build_luts(cfg: NetworkConfig) -> tuple:
    lo, hi = DEFAULT_LUT_RANGE
    act = build_lut(cfg.activation, cfg.fmt, lo, hi, cfg.lut_size)
    deriv = build_lut(DERIVATIVE[cfg.activation], cfg.fmt, lo, hi, cfg.lut_size)
    return act, deriv, softmax_exp_table(cfg.fmt, cfg.lut_size)


def init_radius(cfg: NetworkConfig, fan_out: int, fan_in: int) -> float:
    return min(math.sqrt(6.0 / (fan_in + fan_out)), cfg.fmt.max_real)


def initial_weights_real(cfg: NetworkConfig) -> list:
    """Seeded uniform(-r, r) draws, r = sqrt(6 / (fan_in + fan_out)), before quantization."""
    rng = np.random.default_rng(cfg.seed)
    out = []
    for rows, cols in cfg.layer_shapes:
        r = init_radius(cfg, rows, cols)
        out.append(rng.uniform(-r, r, size=(rows, cols)))
    return out


def state_from_weights(cfg: NetworkConfig, weights) -> NetworkState:
    weights = tuple(weights)
    shapes = [w.shape for w in weights]
    if shapes != [tuple(s) for s in cfg.layer_shapes]:
        raise ShapeError(f"weight shapes {shapes} do not chain as {cfg.layer_shapes}")
    return NetworkState(weights, *build_luts(cfg))


def init_network(cfg: NetworkConfig) -> NetworkState:
    weights = [WeightMatrix(quantize_array(w, cfg.fmt), cfg.fmt) for w in initial_weights_real(cfg)]
    return state_from_weights(cfg, weights)


def _log(log, name, unit, cycles, phase):
    if log is not None:
        log.record(name, unit, cycles, phase)


def forward(state: NetworkState, cfg: NetworkConfig, x: SignalVector, log: CycleLog = None) -> ForwardTrace:
    if x.dim != cfg.input_dim:
        raise ShapeError(f"input has {x.dim} features, network expects {cfg.input_dim}")
    bank = cfg.bank
    B = cfg.bank_width
    pre, post = [], []
    h = x
    n_hidden = len(state.weights) - 1
    for i in range(n_hidden):
        s, c = mac_bank_matvec(bank, state.weights[i], h)
        _log(log, f"L{i + 1}.matvec", MULT_ADD_BANK, c, "forward")
        m, c = lut_bank_eval(state.act_lut, s, B)
        _log(log, f"L{i + 1}.act", TANH_BANK, c, "forward")
        pre.append(s)
        post.append(m)
        h = m
    z, c = mac_bank_matvec(bank, state.weights[-1], h)
    _log(log, f"L{n_hidden + 1}.matvec", MULT_ADD_BANK, c, "forward")
    yhat, (c_exp, c_sum, c_div) = softmax_bank(z, state.exp_lut, cfg.softmax_limit, B)
    _log(log, "softmax.exp", SOFTMAX, c_exp, "forward")
    _log(log, "softmax.sum", SOFTMAX, c_sum, "forward")
    _log(log, "softmax.div", SOFTMAX, c_div, "forward")
    return ForwardTrace(x, pre, post, z, yhat)


def one_hot(label: int, k: int, fmt: QFormat = Q2_14) -> SignalVector:
    if not 0 <= label < k:
        raise GnnFpgaError(f"label {label} outside [0, {k})")
    data = np.zeros(k, dtype=np.int64)
    data[label] = fmt.saturate(fmt.scale)
    return SignalVector(data, fmt)


def _label_of(y: SignalVector) -> int:
    nz = np.flatnonzero(y.data)
    if len(nz) != 1 or y.data[nz[0]] != y.fmt.saturate(y.fmt.scale):
        raise GnnFpgaError("label vector is not one-hot")
    return int(nz[0])


def cross_entropy(yhat: SignalVector, y: SignalVector) -> float:
    """``-ln(max(yhat[label], ulp))`` in double precision, for reporting only."""
    if yhat.dim != y.dim:
        raise ShapeError(f"prediction has {yhat.dim} classes, label has {y.dim}")
    label = _label_of(y)
    p = max(yhat.data[label] / yhat.fmt.scale, yhat.fmt.ulp)
    return -math.log(p)


def backward(
    state: NetworkState,
    cfg: NetworkConfig,
    trace: ForwardTrace,
    y: SignalVector,
    log: CycleLog = None,
) -> list:
    """Per-layer weight gradients for one sample, output layer first in the walk."""
    if y.dim != cfg.output_dim or trace.yhat.dim != cfg.output_dim:
        raise ShapeError("label / prediction size does not match the output layer")
    if len(trace.post) != len(state.weights) - 1:
        raise ShapeError("trace does not belong to this network")
    bank = cfg.bank
    B = cfg.bank_width
    n_layers = len(state.weights)
    grads = [None] * n_layers
    delta, c = vector_sub(bank, trace.yhat, y)
    _log(log, "delta_out", ACCU, c, "backward")
    for i in reversed(range(n_layers)):
        layer_in = trace.post[i - 1] if i > 0 else trace.x
        g, c = outer_product(bank, delta, layer_in)
        _log(log, f"L{i + 1}.outer", MULT, c, "backward")
        grads[i] = g
        if i == 0:
            break
        err, c = mac_bank_matvec(bank, state.weights[i].T, delta)
        _log(log, f"L{i + 1}.matvec_t", MULT_ADD_BANK, c, "backward")
        d, c = lut_bank_eval(state.deriv_lut, trace.pre[i - 1], B)
        _log(log, f"L{i}.deriv", TANH_BANK, c, "backward")
        delta, c = hadamard(bank, err, d)
        _log(log, f"L{i}.hadamard", MULT, c, "backward")
    return grads


def zero_gradients(cfg: NetworkConfig) -> list:
    return [GradientSum.zeros(r, c, cfg.bank) for r, c in cfg.layer_shapes]


def accumulate(cfg: NetworkConfig, sums: list, grads: list, log: CycleLog = None) -> list:
    out = []
    for i, (total, g) in enumerate(zip(sums, grads)):
        total, c = grad_accumulate(cfg.bank, total, g)
        _log(log, f"L{i + 1}.grad_acc", ACCU, c, "backward")
        out.append(total)
    return out


def apply_gradients(state: NetworkState, cfg: NetworkConfig, gradients, log: CycleLog = None) -> NetworkState:
    if len(gradients) != len(state.weights):
        raise ShapeError("one gradient per weight matrix is required")
    new = []
    for i, (w, g) in enumerate(zip(state.weights, gradients)):
        w2, c = accumulate_update(cfg.bank, w, g, cfg.gamma)
        _log(log, f"L{i + 1}.update", ACCU, c, "update")
        new.append(w2)
    return replace(state, weights=tuple(new))


def predict(yhat: SignalVector) -> int:
    # ties resolve to the lowest index, like a strict greater-than comparator chain
    return int(np.argmax(yhat.data))


def train_epoch(
    state: NetworkState,
    cfg: NetworkConfig,
    dataset,
    batch: int,
    order=None,
    fill: int = PIPELINE_FILL,
    log: CycleLog = None,
) -> tuple:
    """One pass over ``dataset`` in ``order`` (default: file order).

    Gradients of each mini-batch of ``batch`` samples are summed at
    accumulator width, then applied once.  Loss and accuracy are measured on
    the forward pass that produced each gradient.
    """
    n = len(dataset.labels)
    if n == 0:
        raise DatasetError("empty dataset")
    if not 1 <= batch <= n:
        raise GnnFpgaError(f"batch size must be in [1, {n}], got {batch}")
    if dataset.features.shape[1] != cfg.input_dim:
        raise ShapeError(f"dataset has {dataset.features.shape[1]} features, network expects {cfg.input_dim}")
    order = np.arange(n) if order is None else np.asarray(order)
    if log is None:
        log = CycleLog(fill)
    start_cycles = log.total
    loss_sum = 0.0
    correct = 0
    for b0 in range(0, n, batch):
        sums = zero_gradients(cfg)
        for idx in order[b0:b0 + batch]:
            x = SignalVector(dataset.features[idx], cfg.fmt)
            label = int(dataset.labels[idx])
            y = one_hot(label, cfg.output_dim, cfg.fmt)
            trace = forward(state, cfg, x, log)
            loss_sum += cross_entropy(trace.yhat, y)
            correct += predict(trace.yhat) == label
            grads = backward(state, cfg, trace, y, log)
            sums = accumulate(cfg, sums, grads, log)
        state = apply_gradients(state, cfg, sums, log)
    return state, EpochStats(loss_sum / n, correct / n, log.total - start_cycles)


def epoch_order(cfg: NetworkConfig, n: int, epoch: int, shuffle: bool = True) -> np.ndarray:
    """Sample order for ``epoch``: file order first, then seeded reshuffles."""
    if not shuffle or epoch == 0:
        return np.arange(n)
    return np.random.default_rng([cfg.seed, epoch]).permutation(n)


def train(
    cfg: NetworkConfig,
    dataset,
    epochs: int,
    batch: int,
    state: NetworkState = None,
    shuffle: bool = True,
    fill: int = PIPELINE_FILL,
    until_accuracy: float = None,
):
    """Run ``epochs`` epochs; returns the final state and per-epoch stats.

    With ``until_accuracy`` set, stops after the first epoch reaching it.
    """
    if epochs < 1:
        raise GnnFpgaError("epochs must be >= 1")
    state = init_network(cfg) if state is None else state
    history = []
    n = len(dataset.labels)
    for epoch in range(epochs):
        state, stats = train_epoch(state, cfg, dataset, batch, epoch_order(cfg, n, epoch, shuffle), fill)
        history.append(stats)
        if until_accuracy is not None and stats.accuracy >= until_accuracy:
            break
    return state, history


def evaluate(state: NetworkState, cfg: NetworkConfig, dataset) -> tuple:
    """(accuracy, mean loss) of a forward-only pass."""
    n = len(dataset.labels)
    if n == 0:
        raise DatasetError("empty dataset")
    loss_sum = 0.0
    correct = 0
    for feats, label in zip(dataset.features, dataset.labels):
        trace = forward(state, cfg, SignalVector(feats, cfg.fmt))
        loss_sum += cross_entropy(trace.yhat, one_hot(int(label), cfg.output_dim, cfg.fmt))
        correct += predict(trace.yhat) == int(label)
    return correct / n, loss_sum / n
