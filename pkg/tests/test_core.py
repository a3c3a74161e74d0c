import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_array_equal

from dtekit.core import (
    ExperimentData,
    LocationGrid,
    derive_seed,
    indicator_labels,
    validate_experiment,
)
from dtekit.errors import (
    EmptyArm,
    NonFiniteValue,
    ShapeMismatch,
    TooFewUnits,
    UnsortedGrid,
)

from conftest import grid_of, make_experiment


def small_data(arms, outcomes=None, n_arms=0):
    arms = np.asarray(arms, dtype=np.int64)
    n = arms.shape[0]
    if outcomes is None:
        outcomes = np.arange(n, dtype=float)
    return ExperimentData(
        covariates=np.zeros((n, 2)),
        arms=arms,
        outcomes=np.asarray(outcomes, dtype=float),
        n_arms=n_arms,
    )


class TestValidateExperiment:
    def test_counts_and_shares(self):
        stats = validate_experiment(small_data([1, 1, 2, 2]))
        assert_array_equal(stats.counts, [2, 2])
        assert_array_equal(stats.shares, [0.5, 0.5])

    def test_counts_sum_to_n(self):
        stats = validate_experiment(small_data([1, 2, 2, 2, 1]))
        assert stats.counts.sum() == 5
        assert stats.shares.sum() == pytest.approx(1.0)

    def test_declared_arm_missing(self):
        with pytest.raises(EmptyArm):
            validate_experiment(small_data([1, 1, 1], n_arms=2))

    def test_label_outside_declared_range(self):
        with pytest.raises(EmptyArm):
            validate_experiment(small_data([1, 3], n_arms=2))

    def test_single_unit(self):
        with pytest.raises(TooFewUnits):
            validate_experiment(small_data([1]))

    def test_nonfinite_outcome(self):
        with pytest.raises(NonFiniteValue):
            validate_experiment(small_data([1, 2], outcomes=[0.0, np.nan]))

    def test_nonfinite_covariate(self):
        data = ExperimentData(
            covariates=np.array([[0.0, np.inf], [1.0, 2.0]]),
            arms=np.array([1, 2]),
            outcomes=np.array([0.0, 1.0]),
        )
        with pytest.raises(NonFiniteValue):
            validate_experiment(data)

    def test_grid_checked_against_data(self):
        data = small_data([1, 2, 1, 2])
        stats = validate_experiment(data, grid_of(0.5, 1.5))
        assert stats.counts.tolist() == [2, 2]

    def test_mismatched_lengths(self):
        with pytest.raises(ShapeMismatch):
            ExperimentData(
                covariates=np.zeros((3, 2)),
                arms=np.array([1, 2]),
                outcomes=np.zeros(3),
            )

    def test_arrays_frozen(self):
        data = small_data([1, 2])
        with pytest.raises(ValueError):
            data.outcomes[0] = 99.0


class TestLocationGrid:
    def test_unsorted_rejected(self):
        with pytest.raises(UnsortedGrid):
            grid_of(3.0, 1.0, 2.0)

    def test_duplicates_rejected(self):
        with pytest.raises(UnsortedGrid):
            grid_of(1.0, 1.0, 2.0)

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteValue):
            grid_of(1.0, np.inf)

    def test_two_dimensional_rejected(self):
        with pytest.raises(ShapeMismatch):
            LocationGrid(locations=np.zeros((2, 2)))

    def test_n_locations(self):
        assert grid_of(1.0, 2.0, 5.0).n_locations == 3


class TestIndicatorLabels:
    def test_single_outcome(self):
        data = small_data([1, 2], outcomes=[5.0, 5.0])
        labels = indicator_labels(data, grid_of(4.0, 5.0, 6.0))
        assert_array_equal(labels, [[0.0, 1.0, 1.0], [0.0, 1.0, 1.0]])

    def test_boundary_is_closed(self):
        data = small_data([1, 1, 2], outcomes=[1.0, 2.0, 3.0])
        labels = indicator_labels(data, grid_of(2.0))
        assert_array_equal(labels[:, 0], [1.0, 1.0, 0.0])

    def test_below_grid_minimum_gives_all_ones(self):
        data = small_data([1, 2], outcomes=[0.0, 0.0])
        labels = indicator_labels(data, grid_of(1.0, 2.0, 3.0))
        assert_array_equal(labels, np.ones((2, 3)))


finite_floats = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)


@settings(max_examples=50, deadline=None)
@given(
    outcomes=st.lists(finite_floats, min_size=2, max_size=40),
    locations=st.lists(finite_floats, min_size=1, max_size=10, unique=True),
)
def test_indicator_rows_nondecreasing(outcomes, locations):
    data = small_data(np.ones(len(outcomes), dtype=np.int64), outcomes=outcomes)
    grid = LocationGrid(locations=np.sort(np.asarray(locations, dtype=float)))
    labels = indicator_labels(data, grid)
    assert np.all(np.diff(labels, axis=1) >= 0.0)
    assert set(np.unique(labels)) <= {0.0, 1.0}


@settings(max_examples=50, deadline=None)
@given(
    arms=st.lists(st.integers(min_value=1, max_value=4), min_size=2, max_size=60).filter(
        lambda a: len(set(a)) == max(a)
    )
)
def test_shares_sum_to_one(arms):
    stats = validate_experiment(small_data(arms))
    assert stats.shares.sum() == pytest.approx(1.0, abs=1e-12)
    assert stats.counts.sum() == len(arms)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(3, 1, 4) == derive_seed(3, 1, 4)

    def test_order_sensitive(self):
        assert derive_seed(1, 2) != derive_seed(2, 1)

    def test_fits_in_uint32(self):
        assert 0 <= derive_seed(12345, 6, 7) < 2**32


def test_make_experiment_helper_shape():
    data = make_experiment(seed=1, n=30)
    assert data.n_units == 30
    assert data.n_covariates == 3
    assert validate_experiment(data).counts.sum() == 30
