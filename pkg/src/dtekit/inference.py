"""Multiplier-bootstrap inference for CDF-level estimates.

The influence value of unit i for arm w at location y is

    psi = 1{W_i = w} (1{Y_i <= y} - gamma_w(X_i, y)) / pihat_w
          + gamma_w(X_i, y) - theta_w(y)

with pihat_w the sample share of arm w. Bootstrap repetition b perturbs the
estimate along the influence directions with i.i.d. mean-zero, variance-one
multipliers xi_i = m1_i / sqrt(2) + (m2_i^2 - 1) / 2 built from two standard
normals, then re-applies the functional of interest (a CDF row, a DTE, or a
PTE). Pointwise standard errors are the square root of the sample variance
across repetitions, and bands are point +/- z * SE.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .core import (
    CdfEstimate,
    ConditionalCdfMatrix,
    EffectBand,
    ExperimentData,
    LocationGrid,
    indicator_labels,
    validate_experiment,
)
from .errors import DegenerateDraws, SameArm, ShapeMismatch, ZeroBaselineSE
from .estimation import AdjustedEstimate

__all__ = [
    "InfluenceMatrix",
    "BootstrapDraws",
    "influence",
    "multiplier_transform",
    "multipliers",
    "bootstrap_draws",
    "bootstrap_band",
    "se_reduction",
]

_DRAW_BLOCK = 256


@dataclass(frozen=True)
class InfluenceMatrix:
    """Influence values, indexed (arm, unit, location)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 3:
            raise ShapeMismatch(f"influence values must be 3-dimensional, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class BootstrapDraws:
    """Bootstrap repetitions of the CDF matrix, indexed (repetition, arm, location)."""

    draws: np.ndarray
    seed: int

    def __post_init__(self):
        d = np.array(self.draws, dtype=float, copy=True)
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]


def influence(
    data: ExperimentData,
    grid: LocationGrid,
    theta: CdfEstimate,
    gamma: ConditionalCdfMatrix | None = None,
) -> InfluenceMatrix:
    """Influence values of every unit for every (arm, location) estimate.

    ``gamma=None`` means the zero adjustment, which is the empirical path.
    When ``theta`` is the adjusted estimate built from the same ``gamma``,
    every per-(arm, location) sample mean is zero up to rounding.
    """
    stats = validate_experiment(data, grid)
    k, n, m = data.n_arms, data.n_units, grid.n_locations
    if theta.values.shape != (k, m):
        raise ShapeMismatch(f"theta shape {theta.values.shape} != ({k}, {m})")
    if gamma is None:
        preds = np.zeros((k, n, m))
    else:
        preds = gamma.predictions
        if preds.shape != (k, n, m):
            raise ShapeMismatch(f"gamma shape {preds.shape} != ({k}, {n}, {m})")
    labels = indicator_labels(data, grid)
    values = np.empty((k, n, m))
    for w in range(1, k + 1):
        own = (data.arms == w).astype(float)[:, None]
        share = stats.shares[w - 1]
        values[w - 1] = (
            own * (labels - preds[w - 1]) / share
            + preds[w - 1]
            - theta.values[w - 1][None, :]
        )
    return InfluenceMatrix(values=values)


def multiplier_transform(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Combine two standard normal draws into one mean-zero variance-one multiplier."""
    return m1 / np.sqrt(2.0) + (np.square(m2) - 1.0) / 2.0


def multipliers(n_units: int, seed: int) -> np.ndarray:
    """One multiplier per unit from a fresh seeded stream."""
    rng = np.random.default_rng(seed)
    return multiplier_transform(rng.standard_normal(n_units), rng.standard_normal(n_units))


def bootstrap_draws(theta: CdfEstimate, psi: InfluenceMatrix, n_draws: int, seed: int) -> BootstrapDraws:
    """Perturbed copies of the CDF matrix, one per bootstrap repetition.

    Repetition b uses its own generator stream spawned from ``seed``, so the
    result is reproducible and independent of internal batching.
    """
    if n_draws < 2:
        raise ValueError(f"need at least 2 bootstrap repetitions, got {n_draws}")
    k, n, m = psi.values.shape
    if theta.values.shape != (k, m):
        raise ShapeMismatch(f"theta shape {theta.values.shape} != ({k}, {m})")
    flat_psi = psi.values.transpose(1, 0, 2).reshape(n, k * m)
    children = np.random.SeedSequence(seed).spawn(n_draws)
    draws = np.empty((n_draws, k * m))
    for start in range(0, n_draws, _DRAW_BLOCK):
        stop = min(start + _DRAW_BLOCK, n_draws)
        block = np.empty((stop - start, n))
        for b in range(start, stop):
            rng = np.random.default_rng(children[b])
            block[b - start] = multiplier_transform(
                rng.standard_normal(n), rng.standard_normal(n)
            )
        draws[start:stop] = block @ flat_psi / n
    draws += theta.values.reshape(1, k * m)
    return BootstrapDraws(draws=draws.reshape(n_draws, k, m), seed=seed)


def _apply_functional(values: np.ndarray, kind: str, arm: int, other_arm: int) -> np.ndarray:
    """Map a (..., arm, location) CDF array to the requested curve."""
    row = values[..., arm - 1, :]
    if kind == "cdf":
        return row
    other = values[..., other_arm - 1, :]
    if kind == "dte":
        return row - other
    if kind == "pte":
        return np.diff(row, axis=-1) - np.diff(other, axis=-1)
    raise ValueError(f"functional must be cdf, dte, or pte, got {kind!r}")


def bootstrap_band(
    data: ExperimentData,
    grid: LocationGrid,
    estimate: CdfEstimate | AdjustedEstimate,
    kind: str = "dte",
    arm_pair: tuple[int, int] = (2, 1),
    n_draws: int = 5000,
    alpha: float = 0.05,
    seed: int = 0,
    literal_upper_quantile: bool = False,
) -> EffectBand:
    """Pointwise multiplier-bootstrap confidence band for a CDF functional.

    ``estimate`` is either an empirical CdfEstimate (zero adjustment) or an
    AdjustedEstimate carrying its cross-fitted predictions. By default the
    band half-width uses the two-sided normal quantile z_{1 - alpha/2};
    ``literal_upper_quantile`` switches to z_{1 - alpha}.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if isinstance(estimate, AdjustedEstimate):
        theta, gamma = estimate.estimate, estimate.gamma
    else:
        theta, gamma = estimate, None
    arm, other_arm = int(arm_pair[0]), int(arm_pair[1])
    k = theta.n_arms
    if not (1 <= arm <= k and 1 <= other_arm <= k):
        raise ShapeMismatch(f"arm pair ({arm}, {other_arm}) out of range 1..{k}")
    if kind != "cdf" and arm == other_arm:
        raise SameArm(f"cannot contrast arm {arm} with itself")
    if kind == "pte" and grid.n_locations < 2:
        raise ShapeMismatch("interval probabilities need at least 2 locations")

    psi = influence(data, grid, theta, gamma)
    draws = bootstrap_draws(theta, psi, n_draws, seed)
    curves = _apply_functional(draws.draws, kind, arm, other_arm)
    point = _apply_functional(theta.values, kind, arm, other_arm)

    degenerate = np.all(psi.values == 0.0)
    if not degenerate and bool(np.all(curves == curves[0])):
        raise DegenerateDraws("bootstrap repetitions collapsed to one curve")
    se = curves.std(axis=0, ddof=1)

    q = 1.0 - alpha if literal_upper_quantile else 1.0 - alpha / 2.0
    z = NormalDist().inv_cdf(q)
    locations = grid.locations if kind != "pte" else grid.locations[1:]
    return EffectBand(
        kind=kind,
        arm_pair=(arm, other_arm),
        locations=locations,
        point=point,
        se=se,
        ci_lower=point - z * se,
        ci_upper=point + z * se,
        alpha=alpha,
        n_draws=n_draws,
        seed=seed,
    )


def se_reduction(baseline: EffectBand, adjusted: EffectBand) -> np.ndarray:
    """Percent reduction of pointwise SEs relative to a baseline band."""
    if baseline.kind != adjusted.kind or baseline.arm_pair != adjusted.arm_pair:
        raise ShapeMismatch("bands compare different functionals")
    if baseline.se.shape != adjusted.se.shape or not np.array_equal(
        baseline.locations, adjusted.locations
    ):
        raise ShapeMismatch("bands are evaluated on different grids")
    if np.any(baseline.se == 0.0):
        raise ZeroBaselineSE("baseline band has a zero standard error")
    return 100.0 * (1.0 - adjusted.se / baseline.se)
