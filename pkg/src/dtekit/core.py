"""Core data model: experiment containers, evaluation grids, and estimate types.

Arms are integer labels 1..K. Evaluation locations are a strictly increasing
grid of outcome values; all CDF-like quantities are matrices with one row per
arm and one column per location.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyArm,
    NonFiniteValue,
    ShapeMismatch,
    TooFewUnits,
    UnsortedGrid,
)

__all__ = [
    "ExperimentData",
    "ArmStats",
    "LocationGrid",
    "CdfEstimate",
    "ConditionalCdfMatrix",
    "EffectBand",
    "validate_experiment",
    "indicator_labels",
    "derive_seed",
]


def _frozen_array(values, dtype=float, ndim: int | None = None, name: str = "array") -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def derive_seed(*keys: int) -> int:
    """Deterministically derive a child seed from an ordered tuple of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentData:
    """A completed randomized experiment.

    Attributes
    ----------
    covariates : (n, d) float array
    arms : (n,) int array with labels in 1..n_arms
    outcomes : (n,) float array
    n_arms : number of declared arms K; inferred as max(arms) when omitted
    """

    covariates: np.ndarray
    arms: np.ndarray
    outcomes: np.ndarray
    n_arms: int = 0

    def __post_init__(self):
        x = _frozen_array(self.covariates, ndim=2, name="covariates")
        w = _frozen_array(self.arms, dtype=int, ndim=1, name="arms")
        y = _frozen_array(self.outcomes, ndim=1, name="outcomes")
        if not (x.shape[0] == w.shape[0] == y.shape[0]):
            raise ShapeMismatch(
                f"covariates ({x.shape[0]}), arms ({w.shape[0]}) and outcomes "
                f"({y.shape[0]}) must share the unit dimension"
            )
        k = int(self.n_arms) if self.n_arms else (int(w.max()) if w.size else 0)
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "arms", w)
        object.__setattr__(self, "outcomes", y)
        object.__setattr__(self, "n_arms", k)

    @property
    def n_units(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]


@dataclass(frozen=True)
class ArmStats:
    """Per-arm unit counts and sample shares, in arm order 1..K."""

    counts: np.ndarray
    shares: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "counts", _frozen_array(self.counts, dtype=int, ndim=1, name="counts"))
        object.__setattr__(self, "shares", _frozen_array(self.shares, ndim=1, name="shares"))


@dataclass(frozen=True)
class LocationGrid:
    """Strictly increasing outcome locations at which distributions are evaluated."""

    locations: np.ndarray

    def __post_init__(self):
        y = _frozen_array(self.locations, ndim=1, name="locations")
        if y.size == 0:
            raise ShapeMismatch("grid must contain at least one location")
        if not np.all(np.isfinite(y)):
            raise NonFiniteValue("grid locations must be finite")
        if np.any(np.diff(y) <= 0):
            raise UnsortedGrid("grid locations must be strictly increasing")
        object.__setattr__(self, "locations", y)

    @property
    def n_locations(self) -> int:
        return self.locations.shape[0]


@dataclass(frozen=True)
class CdfEstimate:
    """Arm-by-location matrix of estimated outcome CDF values.

    ``method`` records how the values were produced ("empirical" or one of the
    adjusted learner tags). Only empirical values are guaranteed to lie in
    [0, 1] with non-decreasing rows; the regression-adjusted estimator is left
    exactly as computed, without range or monotonicity correction.
    """

    values: np.ndarray
    method: str

    def __post_init__(self):
        v = _frozen_array(self.values, ndim=2, name="values")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("CDF estimates must be finite")
        if self.method == "empirical":
            if np.any(v < 0.0) or np.any(v > 1.0):
                raise ShapeMismatch("empirical CDF values must lie in [0, 1]")
            if np.any(np.diff(v, axis=1) < 0.0):
                raise UnsortedGrid("empirical CDF rows must be non-decreasing")
        object.__setattr__(self, "values", v)

    @property
    def n_arms(self) -> int:
        return self.values.shape[0]

    @property
    def n_locations(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ConditionalCdfMatrix:
    """Cross-fitted conditional CDF predictions.

    ``predictions[w - 1, i, j]`` is the held-out prediction of
    P(Y(w) <= grid[j] | X_i), produced by a model that never saw unit i.
    ``fold_assignment`` holds the fold id (1..L) of every unit.
    """

    predictions: np.ndarray
    fold_assignment: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.predictions, ndim=3, name="predictions")
        f = _frozen_array(self.fold_assignment, dtype=int, ndim=1, name="fold_assignment")
        if p.shape[1] != f.shape[0]:
            raise ShapeMismatch(
                f"predictions cover {p.shape[1]} units but fold assignment covers {f.shape[0]}"
            )
        if not np.all(np.isfinite(p)):
            raise NonFiniteValue("conditional CDF predictions must be finite")
        object.__setattr__(self, "predictions", p)
        object.__setattr__(self, "fold_assignment", f)


@dataclass(frozen=True)
class EffectBand:
    """A pointwise confidence band around a distributional effect curve.

    ``kind`` is "cdf", "dte", or "pte". ``arm_pair`` is (w, w') for contrasts
    and (w, w) for a single-arm CDF band. ``locations`` are the outcome values
    the band is evaluated at (interval upper endpoints for PTE).
    """

    kind: str
    arm_pair: tuple[int, int]
    locations: np.ndarray
    point: np.ndarray
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    alpha: float
    n_draws: int = 0
    seed: int = 0

    def __post_init__(self):
        loc = _frozen_array(self.locations, ndim=1, name="locations")
        point = _frozen_array(self.point, ndim=1, name="point")
        se = _frozen_array(self.se, ndim=1, name="se")
        lo = _frozen_array(self.ci_lower, ndim=1, name="ci_lower")
        hi = _frozen_array(self.ci_upper, ndim=1, name="ci_upper")
        m = point.shape[0]
        if not (loc.shape[0] == se.shape[0] == lo.shape[0] == hi.shape[0] == m):
            raise ShapeMismatch("band components must share one length")
        if np.any(se < 0.0):
            raise ShapeMismatch("standard errors must be non-negative")
        if np.any(lo > point) or np.any(point > hi):
            raise ShapeMismatch("band must bracket the point estimate")
        for name, arr in ("locations", loc), ("point", point), ("se", se), ("ci_lower", lo), ("ci_upper", hi):
            object.__setattr__(self, name, arr)


def validate_experiment(data: ExperimentData, grid: LocationGrid | None = None) -> ArmStats:
    """Check experiment invariants and return per-arm counts and shares.

    Raises TooFewUnits, NonFiniteValue, or EmptyArm on violation; grid
    problems surface from the LocationGrid itself.
    """
    n = data.n_units
    if n < 2:
        raise TooFewUnits(f"need at least 2 units, got {n}")
    if not np.all(np.isfinite(data.covariates)):
        raise NonFiniteValue("covariates contain non-finite values")
    if not np.all(np.isfinite(data.outcomes)):
        raise NonFiniteValue("outcomes contain non-finite values")
    k = data.n_arms
    if k < 1:
        raise EmptyArm("experiment declares no arms")
    if data.arms.min() < 1 or data.arms.max() > k:
        raise EmptyArm(f"arm labels must lie in 1..{k}")
    counts = np.bincount(data.arms, minlength=k + 1)[1:]
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise EmptyArm(f"arm {missing[0] + 1} has no units")
    if grid is not None:
        # construction already enforced order and finiteness; re-assert cheaply
        if np.any(np.diff(grid.locations) <= 0):
            raise UnsortedGrid("grid locations must be strictly increasing")
    return ArmStats(counts=counts, shares=counts / float(n))


def indicator_labels(data: ExperimentData, grid: LocationGrid) -> np.ndarray:
    """Binary matrix 1{Y_i <= y_j}, one row per unit, one column per location."""
    y = data.outcomes
    labels = (y[:, None] <= grid.locations[None, :]).astype(float)
    return labels
