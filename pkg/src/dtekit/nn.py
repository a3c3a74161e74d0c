"""Minimal dense network engine with an optional monotone multi-output head.

Plain numpy throughout: fully connected layers, ReLU or sigmoid hidden
activations, binary cross-entropy, exact reverse-mode gradients, and Adam.

Two output heads are supported. The plain head applies a sigmoid to each of
the final-layer outputs independently. The monotone head maps the final
linear layer z through a positive transform g, accumulates prefix sums
s_j = sum_{m <= j} g(z_m), and squashes with an increasing f from [0, inf)
into [0, 1]. Prefix sums of non-negative terms cannot decrease, so the M
outputs of one input are non-decreasing by construction, not approximately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NonFiniteGradient, ShapeMismatch

__all__ = [
    "LayerSpec",
    "TrainConfig",
    "NetworkState",
    "Gradients",
    "init_network",
    "forward",
    "bce_loss",
    "backward",
    "adam_step",
    "train",
]

_HIDDEN_ACTIVATIONS = ("relu", "sigmoid")
_HEADS = ("sigmoid", "monotone")
_TRANSFORMS = ("exp", "softplus")
_SQUASHES = ("arctan", "tanh-half")

DEFAULT_CLIP_EPS = 1e-7


@dataclass(frozen=True)
class LayerSpec:
    """Architecture of one network.

    ``widths`` lists every layer width from the input dimension to the number
    of outputs, so ``len(widths) - 1`` weight matrices are created. The head
    acts on the final linear layer: "sigmoid" squashes each output on its
    own, "monotone" applies ``transform`` (g), prefix sums, then ``squash``
    (f). ``transform`` and ``squash`` are ignored by the sigmoid head.
    """

    widths: tuple[int, ...]
    hidden_activation: str = "relu"
    head: str = "sigmoid"
    transform: str = "exp"
    squash: str = "arctan"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("widths must at least contain input and output sizes")
        if any(w < 1 for w in self.widths):
            raise ValueError(f"layer widths must be positive, got {self.widths}")
        if self.hidden_activation not in _HIDDEN_ACTIVATIONS:
            raise ValueError(f"hidden_activation must be one of {_HIDDEN_ACTIVATIONS}")
        if self.head not in _HEADS:
            raise ValueError(f"head must be one of {_HEADS}")
        if self.transform not in _TRANSFORMS:
            raise ValueError(f"transform must be one of {_TRANSFORMS}")
        if self.squash not in _SQUASHES:
            raise ValueError(f"squash must be one of {_SQUASHES}")

    @property
    def n_inputs(self) -> int:
        return self.widths[0]

    @property
    def n_outputs(self) -> int:
        return self.widths[-1]


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop settings for :func:`train`."""

    learning_rate: float = 0.01
    batch_size: int = 16
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_eps: float = DEFAULT_CLIP_EPS
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning_rate must be positive and finite")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not (0.0 < self.clip_eps < 0.5):
            raise ValueError("clip_eps must lie in (0, 0.5)")


@dataclass(frozen=True)
class NetworkState:
    """Parameters plus Adam moment estimates; treated as immutable.

    ``step`` counts completed Adam updates and drives bias correction.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    m_weights: tuple[np.ndarray, ...]
    v_weights: tuple[np.ndarray, ...]
    m_biases: tuple[np.ndarray, ...]
    v_biases: tuple[np.ndarray, ...]
    step: int = 0

    def __post_init__(self):
        for name in ("weights", "biases", "m_weights", "v_weights", "m_biases", "v_biases"):
            arrays = tuple(np.asarray(a, dtype=float) for a in getattr(self, name))
            for a in arrays:
                a.setflags(write=False)
            object.__setattr__(self, name, arrays)

    @classmethod
    def zeros(cls, spec: LayerSpec) -> "NetworkState":
        """All-zero parameters and moments; handy for fixed-point checks."""
        shapes = list(zip(spec.widths[:-1], spec.widths[1:]))
        w = tuple(np.zeros(s) for s in shapes)
        b = tuple(np.zeros(s[1]) for s in shapes)
        return cls(w, b, tuple(np.zeros(s) for s in shapes), tuple(np.zeros(s) for s in shapes),
                   tuple(np.zeros(s[1]) for s in shapes), tuple(np.zeros(s[1]) for s in shapes))


@dataclass
class Gradients:
    """Loss gradients mirroring the parameter layout of a NetworkState."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]


def init_network(spec: LayerSpec, seed: int = 0) -> NetworkState:
    """Glorot-uniform weights, zero biases, zero Adam moments."""
    rng = np.random.default_rng(seed)
    return _init_params(spec, rng)


def _init_params(spec: LayerSpec, rng: np.random.Generator) -> NetworkState:
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    zeros_w = tuple(np.zeros_like(w) for w in weights)
    zeros_b = tuple(np.zeros_like(b) for b in biases)
    return NetworkState(tuple(weights), tuple(biases), zeros_w, zeros_w, zeros_b, zeros_b)


def _hidden(spec: LayerSpec, z: np.ndarray) -> np.ndarray:
    if spec.hidden_activation == "relu":
        return np.maximum(z, 0.0)
    return expit(z)


def _hidden_grad(spec: LayerSpec, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if spec.hidden_activation == "relu":
        return (z > 0.0).astype(float)
    return a * (1.0 - a)


def _transform(spec: LayerSpec, z: np.ndarray) -> np.ndarray:
    if spec.transform == "exp":
        return np.exp(z)
    return np.logaddexp(0.0, z)


def _transform_grad(spec: LayerSpec, z: np.ndarray, g: np.ndarray) -> np.ndarray:
    if spec.transform == "exp":
        return g
    return expit(z)


def _squash(spec: LayerSpec, s: np.ndarray) -> np.ndarray:
    if spec.squash == "arctan":
        return np.arctan(s) * (2.0 / np.pi)
    # (1 - e^-s) / (1 + e^-s), written in its stable hyperbolic form
    return np.tanh(0.5 * s)


def _squash_grad(spec: LayerSpec, s: np.ndarray, out: np.ndarray) -> np.ndarray:
    if spec.squash == "arctan":
        return (2.0 / np.pi) / (1.0 + s * s)
    return 0.5 * (1.0 - out * out)


def _forward_cached(state: NetworkState, spec: LayerSpec, x: np.ndarray):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.n_inputs:
        raise ShapeMismatch(
            f"input must be (batch, {spec.n_inputs}), got {x.shape}"
        )
    n_layers = len(state.weights)
    inputs = [x]          # input to each linear layer
    pre_acts = []         # hidden pre-activations
    a = x
    for layer in range(n_layers - 1):
        z = a @ state.weights[layer] + state.biases[layer]
        a = _hidden(spec, z)
        pre_acts.append(z)
        inputs.append(a)
    z_last = a @ state.weights[-1] + state.biases[-1]
    if spec.head == "sigmoid":
        out = expit(z_last)
        head_cache = (z_last, None, None)
    else:
        g = _transform(spec, z_last)
        s = np.cumsum(g, axis=1)
        out = _squash(spec, s)
        head_cache = (z_last, g, s)
    return out, inputs, pre_acts, head_cache


def forward(state: NetworkState, spec: LayerSpec, x: np.ndarray) -> np.ndarray:
    """Network outputs for a batch, one row per input row."""
    out, _, _, _ = _forward_cached(state, spec, x)
    return out


def bce_loss(pred: np.ndarray, target: np.ndarray, clip_eps: float = DEFAULT_CLIP_EPS) -> float:
    """Mean binary cross-entropy over every prediction entry.

    Predictions are clamped to [clip_eps, 1 - clip_eps] inside the loss only.
    """
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred shape {pred.shape} != target shape {target.shape}")
    p = np.clip(pred, clip_eps, 1.0 - clip_eps)
    return float(-np.mean(target * np.log(p) + (1.0 - target) * np.log1p(-p)))


def backward(
    state: NetworkState,
    spec: LayerSpec,
    x: np.ndarray,
    target: np.ndarray,
    clip_eps: float = DEFAULT_CLIP_EPS,
) -> Gradients:
    """Exact gradients of bce_loss(forward(x), target) for every parameter."""
    out, inputs, pre_acts, (z_last, g, s) = _forward_cached(state, spec, x)
    target = np.asarray(target, dtype=float)
    if target.shape != out.shape:
        raise ShapeMismatch(f"target shape {target.shape} != output shape {out.shape}")
    scale = 1.0 / out.size
    # the loss clamps, so its gradient vanishes wherever the clamp is active
    interior = (out > clip_eps) & (out < 1.0 - clip_eps)
    if spec.head == "sigmoid":
        # d loss / d z through the sigmoid collapses to (p - t)
        dz = np.where(interior, out - target, 0.0) * scale
    else:
        p = np.clip(out, clip_eps, 1.0 - clip_eps)
        dp = np.where(interior, (p - target) / (p * (1.0 - p)), 0.0) * scale
        ds = dp * _squash_grad(spec, s, out)
        # s_j collects every g(z_m) with m <= j, so z_m hears from all j >= m
        ds_tail = np.flip(np.cumsum(np.flip(ds, axis=1), axis=1), axis=1)
        dz = ds_tail * _transform_grad(spec, z_last, g)

    n_layers = len(state.weights)
    grad_w: list[np.ndarray] = [None] * n_layers
    grad_b: list[np.ndarray] = [None] * n_layers
    for layer in range(n_layers - 1, -1, -1):
        grad_w[layer] = inputs[layer].T @ dz
        grad_b[layer] = dz.sum(axis=0)
        if layer > 0:
            da = dz @ state.weights[layer].T
            dz = da * _hidden_grad(spec, pre_acts[layer - 1], inputs[layer])
    return Gradients(tuple(grad_w), tuple(grad_b))


def adam_step(state: NetworkState, grads: Gradients, config: TrainConfig) -> NetworkState:
    """One Adam update with bias correction; returns a new state."""
    for g in (*grads.weights, *grads.biases):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains NaN or infinite entries")
    t = state.step + 1
    b1, b2 = config.beta1, config.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    lr, eps = config.learning_rate, config.adam_eps

    def update(params, moments_m, moments_v, gs):
        new_p, new_m, new_v = [], [], []
        for p, m, v, g in zip(params, moments_m, moments_v, gs):
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * g * g
            p = p - lr * (m / corr1) / (np.sqrt(v / corr2) + eps)
            new_p.append(p)
            new_m.append(m)
            new_v.append(v)
        return tuple(new_p), tuple(new_m), tuple(new_v)

    w, mw, vw = update(state.weights, state.m_weights, state.v_weights, grads.weights)
    b, mb, vb = update(state.biases, state.m_biases, state.v_biases, grads.biases)
    return NetworkState(w, b, mw, vw, mb, vb, step=t)


def train(x: np.ndarray, labels: np.ndarray, spec: LayerSpec, config: TrainConfig) -> NetworkState:
    """Mini-batch Adam training from a fresh Glorot init.

    The shuffle order and the initialization both derive from ``config.seed``,
    so identical inputs and configuration reproduce the returned parameters
    bit for bit.
    """
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.n_inputs:
        raise ShapeMismatch(f"x must be (n, {spec.n_inputs}), got {x.shape}")
    if labels.shape != (x.shape[0], spec.n_outputs):
        raise ShapeMismatch(
            f"labels must be ({x.shape[0]}, {spec.n_outputs}), got {labels.shape}"
        )
    n = x.shape[0]
    if n < 1:
        raise ShapeMismatch("training needs at least one example")
    rng = np.random.default_rng(config.seed)
    state = _init_params(spec, rng)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            grads = backward(state, spec, x[idx], labels[idx], config.clip_eps)
            state = adam_step(state, grads, config)
    return state
