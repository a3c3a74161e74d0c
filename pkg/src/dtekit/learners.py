"""Outcome-CDF learners used inside cross-fitting.

Every learner maps covariates to per-location conditional probabilities
P(Y <= y_j | X). Four kinds are available:

- "linear": one ridge solve shared by all locations (multivariate ordinary
  least squares when the penalty is zero); predictions are raw affine values
  and are deliberately not clipped to [0, 1].
- "nn-single": one width-1 sigmoid network per location.
- "nn-multi": one shared-trunk network with M sigmoid outputs.
- "nn-multi-monotone": the shared trunk with the cumulative head, so each
  prediction row is non-decreasing across locations by construction.

Covariates are z-scored with statistics of the training split; the fitted
statistics travel with the learner and are re-applied at prediction time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import derive_seed
from .errors import NonFiniteValue, ShapeMismatch, SingularDesign, TooFewUnits
from .nn import LayerSpec, NetworkState, TrainConfig, forward, train

__all__ = [
    "LEARNER_KINDS",
    "LearnerKind",
    "FittedLearner",
    "BenchmarkRow",
    "fit",
    "predict",
    "benchmark_training_cost",
]

LEARNER_KINDS = ("linear", "nn-single", "nn-multi", "nn-multi-monotone")

DEFAULT_RIDGE = 1e-8
DEFAULT_HIDDEN = (128, 64)


@dataclass(frozen=True)
class LearnerKind:
    """A learner family plus its hyperparameters.

    ``hidden`` lists the trunk widths shared by all network kinds; the final
    layer width is set by the number of label columns at fit time (1 per net
    for "nn-single"). ``ridge`` only affects "linear", ``train`` only the
    network kinds.
    """

    kind: str
    hidden: tuple[int, ...] = DEFAULT_HIDDEN
    hidden_activation: str = "relu"
    transform: str = "exp"
    squash: str = "arctan"
    ridge: float = DEFAULT_RIDGE
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValueError(f"kind must be one of {LEARNER_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.kind != "linear" and any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be positive")
        if self.ridge < 0:
            raise ValueError("ridge penalty must be non-negative")

    def with_seed(self, seed: int) -> "LearnerKind":
        return replace(self, train=replace(self.train, seed=int(seed)))

    def layer_spec(self, n_inputs: int, n_outputs: int) -> LayerSpec:
        head = "monotone" if self.kind == "nn-multi-monotone" else "sigmoid"
        return LayerSpec(
            widths=(n_inputs, *self.hidden, n_outputs),
            hidden_activation=self.hidden_activation,
            head=head,
            transform=self.transform,
            squash=self.squash,
        )


@dataclass(frozen=True)
class FittedLearner:
    """A trained learner: parameters plus the training-split scaling."""

    kind: LearnerKind
    n_inputs: int
    n_outputs: int
    x_mean: np.ndarray
    x_scale: np.ndarray
    coef: np.ndarray | None = None
    states: tuple[NetworkState, ...] = ()


def _standardize_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    return mean, scale


def _check_training_inputs(x: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if x.ndim != 2:
        raise ShapeMismatch(f"x must be 2-dimensional, got shape {x.shape}")
    if labels.ndim != 2:
        raise ShapeMismatch(f"labels must be 2-dimensional, got shape {labels.shape}")
    if x.shape[0] != labels.shape[0]:
        raise ShapeMismatch(
            f"x has {x.shape[0]} rows but labels has {labels.shape[0]}"
        )
    if x.shape[0] < 2:
        raise TooFewUnits(f"need at least 2 training units, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("training covariates contain non-finite values")
    if not np.all(np.isfinite(labels)):
        raise NonFiniteValue("training labels contain non-finite values")
    return x, labels


def _solve_ridge(design: np.ndarray, labels: np.ndarray, ridge: float) -> np.ndarray:
    gram = design.T @ design
    if ridge > 0.0:
        gram = gram + ridge * np.eye(gram.shape[0])
    else:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularDesign("design matrix is singular; use a positive ridge penalty")
    try:
        factor = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond check fires first
        raise SingularDesign(str(exc)) from exc
    return cho_solve(factor, design.T @ labels)


def fit(kind: LearnerKind, x: np.ndarray, labels: np.ndarray) -> FittedLearner:
    """Train one learner on (covariates, per-location binary labels)."""
    x, labels = _check_training_inputs(x, labels)
    n_outputs = labels.shape[1]
    mean, scale = _standardize_stats(x)
    xs = (x - mean) / scale
    if kind.kind == "linear":
        design = np.hstack([xs, np.ones((xs.shape[0], 1))])
        coef = _solve_ridge(design, labels, kind.ridge)
        return FittedLearner(kind, x.shape[1], n_outputs, mean, scale, coef=coef)
    if kind.kind == "nn-single":
        states = []
        seeds = np.random.SeedSequence(kind.train.seed).generate_state(n_outputs)
        for j in range(n_outputs):
            spec = kind.layer_spec(x.shape[1], 1)
            cfg = replace(kind.train, seed=int(seeds[j]))
            states.append(train(xs, labels[:, j:j + 1], spec, cfg))
        return FittedLearner(kind, x.shape[1], n_outputs, mean, scale, states=tuple(states))
    spec = kind.layer_spec(x.shape[1], n_outputs)
    state = train(xs, labels, spec, kind.train)
    return FittedLearner(kind, x.shape[1], n_outputs, mean, scale, states=(state,))


def predict(fitted: FittedLearner, x: np.ndarray) -> np.ndarray:
    """Conditional CDF predictions, one row per input row, one column per location."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != fitted.n_inputs:
        raise ShapeMismatch(f"x must be (m, {fitted.n_inputs}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("prediction covariates contain non-finite values")
    xs = (x - fitted.x_mean) / fitted.x_scale
    kind = fitted.kind
    if kind.kind == "linear":
        design = np.hstack([xs, np.ones((xs.shape[0], 1))])
        return design @ fitted.coef
    if kind.kind == "nn-single":
        columns = [
            forward(state, kind.layer_spec(fitted.n_inputs, 1), xs)
            for state in fitted.states
        ]
        return np.hstack(columns)
    spec = kind.layer_spec(fitted.n_inputs, fitted.n_outputs)
    return forward(fitted.states[0], spec, xs)


@dataclass(frozen=True)
class BenchmarkRow:
    """Joint fit cost at one output count against the looped one-output baseline."""

    n_outputs: int
    fit_seconds: float
    baseline_seconds: float
    ratio: float


def _synthetic_problem(n_units: int, n_covariates: int, n_outputs: int, seed: int):
    rng = np.random.default_rng(seed)
    x = rng.random((n_units, n_covariates))
    y = x.sum(axis=1) + rng.standard_normal(n_units)
    probs = np.linspace(0.2, 0.8, n_outputs) if n_outputs > 1 else np.array([0.5])
    cuts = np.quantile(y, probs)
    labels = (y[:, None] <= cuts[None, :]).astype(float)
    return x, labels


def _timed_fit(kind: LearnerKind, x: np.ndarray, labels: np.ndarray, repeats: int) -> float:
    best = np.inf
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fit(kind, x, labels)
        best = min(best, time.perf_counter() - t0)
    return best


def benchmark_training_cost(
    kind: LearnerKind,
    n_units: int,
    n_covariates: int,
    output_sizes: tuple[int, ...],
    repeats: int = 1,
    seed: int = 0,
) -> list[BenchmarkRow]:
    """Compare one joint fit with M outputs against M separate one-output fits.

    The baseline time is measured once on a single-output problem and scaled
    by M, mirroring the per-location loop it stands in for. The row at M = 1
    reuses that measurement, so its ratio is exactly 1.
    """
    x1, labels1 = _synthetic_problem(n_units, n_covariates, 1, seed)
    single_seconds = _timed_fit(kind, x1, labels1, repeats)
    rows = []
    for m in output_sizes:
        if m < 1:
            raise ValueError("output sizes must be positive")
        if m == 1:
            joint = single_seconds
        else:
            x, labels = _synthetic_problem(n_units, n_covariates, m, seed)
            joint = _timed_fit(kind, x, labels, repeats)
        baseline = m * single_seconds
        rows.append(BenchmarkRow(int(m), joint, baseline, joint / baseline))
    return rows
