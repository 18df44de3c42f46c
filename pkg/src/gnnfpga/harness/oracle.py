"""Double-precision reference network.

Mirrors the simulated network layer for layer (no biases, same weight
shapes) with exact activations, exact softmax and cross-entropy.  It is the
ground truth every fidelity tolerance is measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lut import LutKind
from ..network import NetworkConfig, NetworkState, initial_weights_real


def _act(kind: LutKind, s):
    if kind == LutKind.TANH:
        return np.tanh(s)
    if kind == LutKind.SIGMOID:
        return 1.0 / (1.0 + np.exp(-s))
    if kind == LutKind.RELU:
        return np.maximum(s, 0.0)
    raise ValueError(f"unsupported activation {kind}")


def _act_grad(kind: LutKind, s, m):
    if kind == LutKind.TANH:
        return 1.0 - m * m
    if kind == LutKind.SIGMOID:
        return m * (1.0 - m)
    if kind == LutKind.RELU:
        return (s > 0).astype(np.float64)
    raise ValueError(f"unsupported activation {kind}")


def softmax(z):
    e = np.exp(z - np.max(z))
    return e / e.sum()


@dataclass
class OracleNet:
    weights: list  # float arrays, (out x in)
    activation: LutKind = LutKind.TANH

    @classmethod
    def from_config(cls, cfg: NetworkConfig) -> OracleNet:
        """Same seed-derived initial weights as ``init_network``, before quantization."""
        return cls(initial_weights_real(cfg), cfg.activation)

    @classmethod
    def from_state(cls, state: NetworkState, activation=None) -> OracleNet:
        kind = activation if activation is not None else state.act_lut.kind
        return cls([w.real() for w in state.weights], LutKind(kind))

    def copy(self) -> OracleNet:
        return OracleNet([w.copy() for w in self.weights], self.activation)


def oracle_trace(onet: OracleNet, x) -> tuple:
    """(pre-activations, post-activations, z, yhat)."""
    h = np.asarray(x, dtype=np.float64)
    pre, post = [], []
    for w in onet.weights[:-1]:
        s = w @ h
        h = _act(onet.activation, s)
        pre.append(s)
        post.append(h)
    z = onet.weights[-1] @ h
    return pre, post, z, softmax(z)


def oracle_forward(onet: OracleNet, x) -> np.ndarray:
    return oracle_trace(onet, x)[3]


def oracle_loss(onet: OracleNet, x, label: int) -> float:
    return float(-np.log(oracle_forward(onet, x)[label]))


def oracle_backward(onet: OracleNet, x, y) -> list:
    """Gradient of the cross-entropy loss w.r.t. every weight matrix.

    ``y`` is a one-hot vector or an integer label.
    """
    x = np.asarray(x, dtype=np.float64)
    pre, post, _, yhat = oracle_trace(onet, x)
    if np.ndim(y) == 0:
        target = np.zeros_like(yhat)
        target[int(y)] = 1.0
    else:
        target = np.asarray(y, dtype=np.float64)
    delta = yhat - target
    grads = [None] * len(onet.weights)
    for i in reversed(range(len(onet.weights))):
        layer_in = post[i - 1] if i > 0 else x
        grads[i] = np.outer(delta, layer_in)
        if i > 0:
            delta = (onet.weights[i].T @ delta) * _act_grad(onet.activation, pre[i - 1], post[i - 1])
    return grads


def finite_difference_gradients(onet: OracleNet, x, label: int, h: float = 1e-5) -> list:
    """Central differences of :func:`oracle_loss`, one weight at a time."""
    out = []
    for w in onet.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(*w.shape):
            orig = w[idx]
            w[idx] = orig + h
            up = oracle_loss(onet, x, label)
            w[idx] = orig - h
            down = oracle_loss(onet, x, label)
            w[idx] = orig
            g[idx] = (up - down) / (2 * h)
        out.append(g)
    return out


def oracle_train_epoch(onet: OracleNet, features, labels, gamma: float, batch: int, order=None) -> tuple:
    """Float twin of ``train_epoch``: batch-summed gradients, one step per batch.

    Returns (mean loss, accuracy) measured on the pre-update forward passes.
    """
    n = len(labels)
    order = np.arange(n) if order is None else np.asarray(order)
    loss_sum, correct = 0.0, 0
    for b0 in range(0, n, batch):
        sums = [np.zeros_like(w) for w in onet.weights]
        for idx in order[b0:b0 + batch]:
            x, label = features[idx], int(labels[idx])
            yhat = oracle_forward(onet, x)
            loss_sum += -np.log(max(yhat[label], 1e-300))
            correct += int(np.argmax(yhat)) == label
            for s, g in zip(sums, oracle_backward(onet, x, label)):
                s += g
        for w, s in zip(onet.weights, sums):
            w -= gamma * s
    return loss_sum / n, correct / n
