import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from dtekit.errors import NonFiniteGradient, ShapeMismatch
from dtekit.nn import (
    Gradients,
    LayerSpec,
    NetworkState,
    TrainConfig,
    adam_step,
    backward,
    bce_loss,
    forward,
    init_network,
    train,
)

# arctan(2) / (pi / 2) and tanh-half values at the all-zero parameter point
ZERO_STATE_EXP_ARCTAN = (0.5, 0.7048327646991335)
ZERO_STATE_SOFTPLUS_TANH = (1.0 / 3.0, 0.6)
LN2 = 0.6931471805599453


def spec_of(widths, head="sigmoid", **kwargs):
    return LayerSpec(widths=tuple(widths), head=head, **kwargs)


class TestLayerSpec:
    def test_input_output_widths(self):
        spec = spec_of((4, 8, 3))
        assert spec.n_inputs == 4
        assert spec.n_outputs == 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"widths": (4,)},
            {"widths": (4, 0, 2)},
            {"widths": (4, 2), "hidden_activation": "gelu"},
            {"widths": (4, 2), "head": "softmax"},
            {"widths": (4, 2), "transform": "square"},
            {"widths": (4, 2), "squash": "logistic"},
        ],
    )
    def test_invalid_spec_rejected(self, kwargs):
        with pytest.raises(ValueError):
            LayerSpec(**kwargs)


class TestTrainConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"epochs": 0},
            {"batch_size": 0},
            {"learning_rate": 0.0},
            {"learning_rate": np.inf},
            {"beta1": 1.0},
            {"clip_eps": 0.6},
        ],
    )
    def test_invalid_config_rejected(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestForward:
    def test_zero_state_sigmoid_head_is_half(self):
        spec = spec_of((3, 4, 2))
        out = forward(NetworkState.zeros(spec), spec, np.random.default_rng(0).random((5, 3)))
        assert_array_equal(out, np.full((5, 2), 0.5))

    def test_zero_state_monotone_exp_arctan(self):
        spec = spec_of((3, 2), head="monotone", transform="exp", squash="arctan")
        out = forward(NetworkState.zeros(spec), spec, np.zeros((1, 3)))
        assert_allclose(out[0], ZERO_STATE_EXP_ARCTAN, rtol=1e-15)

    def test_zero_state_monotone_softplus_tanh(self):
        spec = spec_of((3, 2), head="monotone", transform="softplus", squash="tanh-half")
        out = forward(NetworkState.zeros(spec), spec, np.zeros((1, 3)))
        assert_allclose(out[0], ZERO_STATE_SOFTPLUS_TANH, rtol=1e-14)

    def test_monotone_rows_nondecreasing(self):
        spec = spec_of((4, 6, 5), head="monotone")
        state = init_network(spec, seed=3)
        out = forward(state, spec, np.random.default_rng(1).standard_normal((40, 4)) * 3.0)
        assert np.all(np.diff(out, axis=1) >= 0.0)
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_wrong_input_width(self):
        spec = spec_of((3, 2))
        with pytest.raises(ShapeMismatch):
            forward(NetworkState.zeros(spec), spec, np.zeros((2, 4)))


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    x_seed=st.integers(min_value=0, max_value=2**32 - 1),
    transform=st.sampled_from(["exp", "softplus"]),
    squash=st.sampled_from(["arctan", "tanh-half"]),
)
def test_monotone_head_property(seed, x_seed, transform, squash):
    spec = spec_of((3, 5, 4), head="monotone", transform=transform, squash=squash)
    state = init_network(spec, seed=seed)
    x = np.random.default_rng(x_seed).standard_normal((20, 3)) * 4.0
    out = forward(state, spec, x)
    assert np.all(np.diff(out, axis=1) >= 0.0)


class TestBceLoss:
    def test_half_prediction_gives_ln_two(self):
        assert bce_loss(np.full((4, 2), 0.5), np.array([[0, 1], [1, 0], [1, 1], [0, 0]], dtype=float)) == pytest.approx(LN2, rel=1e-15)

    def test_single_entry_anchor(self):
        # -log(0.8)
        assert bce_loss(np.array([[0.8]]), np.array([[1.0]])) == pytest.approx(
            0.2231435513142097, rel=1e-15
        )

    def test_perfect_prediction_costs_about_clip(self):
        loss = bce_loss(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]))
        assert 0.0 < loss < 1e-6

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            bce_loss(np.zeros((2, 2)), np.zeros((2, 3)))


def _with_param(state, which, layer, index, delta):
    ws = [w.copy() for w in state.weights]
    bs = [b.copy() for b in state.biases]
    target = ws if which == "w" else bs
    target[layer][index] += delta
    return NetworkState(
        tuple(ws), tuple(bs),
        state.m_weights, state.v_weights, state.m_biases, state.v_biases,
        step=state.step,
    )


def finite_difference_grads(state, spec, x, target, h=1e-6):
    """Central-difference loss gradients, the oracle for backward()."""

    def loss_at(st_):
        return bce_loss(forward(st_, spec, x), target)

    grad_w, grad_b = [], []
    for layer, w in enumerate(state.weights):
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            up = loss_at(_with_param(state, "w", layer, idx, h))
            down = loss_at(_with_param(state, "w", layer, idx, -h))
            g[idx] = (up - down) / (2.0 * h)
        grad_w.append(g)
    for layer, b in enumerate(state.biases):
        g = np.zeros_like(b)
        for idx in np.ndindex(b.shape):
            up = loss_at(_with_param(state, "b", layer, idx, h))
            down = loss_at(_with_param(state, "b", layer, idx, -h))
            g[idx] = (up - down) / (2.0 * h)
        grad_b.append(g)
    return Gradients(tuple(grad_w), tuple(grad_b))


def max_grad_mismatch(exact, approx):
    worst = 0.0
    for ga, gb in zip(
        (*exact.weights, *exact.biases), (*approx.weights, *approx.biases)
    ):
        denom = np.maximum(np.maximum(np.abs(ga), np.abs(gb)), 1e-6)
        worst = max(worst, float(np.max(np.abs(ga - gb) / denom)))
    return worst


class TestBackward:
    def test_single_sample_sigmoid_gradient(self):
        # no hidden layer: dL/dw = (p - t) x with p = 0.5 at the zero state
        spec = spec_of((3, 1))
        state = NetworkState.zeros(spec)
        x = np.array([[0.2, -1.0, 3.0]])
        grads = backward(state, spec, x, np.array([[1.0]]))
        assert_allclose(grads.weights[0][:, 0], -0.5 * x[0], rtol=1e-15)
        assert_allclose(grads.biases[0], [-0.5], rtol=1e-15)

    @pytest.mark.parametrize("hidden_activation", ["relu", "sigmoid"])
    def test_sigmoid_head_matches_finite_differences(self, hidden_activation):
        spec = spec_of((3, 5, 2), hidden_activation=hidden_activation)
        state = init_network(spec, seed=11)
        rng = np.random.default_rng(5)
        x = rng.standard_normal((7, 3))
        target = rng.integers(0, 2, size=(7, 2)).astype(float)
        exact = backward(state, spec, x, target)
        approx = finite_difference_grads(state, spec, x, target)
        assert max_grad_mismatch(exact, approx) < 1e-4

    @pytest.mark.parametrize("transform", ["exp", "softplus"])
    @pytest.mark.parametrize("squash", ["arctan", "tanh-half"])
    def test_monotone_head_matches_finite_differences(self, transform, squash):
        spec = spec_of(
            (2, 4, 3), head="monotone", transform=transform, squash=squash,
            hidden_activation="sigmoid",
        )
        state = init_network(spec, seed=7)
        rng = np.random.default_rng(9)
        x = rng.standard_normal((6, 2))
        target = (rng.random((6, 3)) < 0.5).astype(float)
        exact = backward(state, spec, x, target)
        approx = finite_difference_grads(state, spec, x, target)
        assert max_grad_mismatch(exact, approx) < 1e-4

    def test_saturated_outputs_get_zero_gradient(self):
        spec = spec_of((2, 1))
        ws = NetworkState.zeros(spec)
        state = NetworkState(
            ws.weights, (np.array([40.0]),),
            ws.m_weights, ws.v_weights, ws.m_biases, ws.v_biases,
        )
        grads = backward(state, spec, np.ones((3, 2)), np.zeros((3, 1)))
        assert_array_equal(grads.weights[0], np.zeros((2, 1)))
        assert_array_equal(grads.biases[0], np.zeros(1))

    def test_target_shape_mismatch(self):
        spec = spec_of((2, 1))
        with pytest.raises(ShapeMismatch):
            backward(NetworkState.zeros(spec), spec, np.zeros((3, 2)), np.zeros((3, 2)))


class TestAdamStep:
    def test_zero_gradient_leaves_parameters_unchanged(self):
        spec = spec_of((2, 3, 1))
        state = init_network(spec, seed=0)
        grads = Gradients(
            tuple(np.zeros_like(w) for w in state.weights),
            tuple(np.zeros_like(b) for b in state.biases),
        )
        updated = adam_step(state, grads, TrainConfig())
        assert updated.step == 1
        for before, after in zip(state.weights, updated.weights):
            assert_array_equal(before, after)

    def test_first_step_is_signed_learning_rate(self):
        # with constant gradient g the bias-corrected first update is
        # lr * g / (|g| + adam_eps), which is lr * sign(g) for |g| >> eps
        spec = spec_of((1, 1))
        state = NetworkState.zeros(spec)
        config = TrainConfig(learning_rate=0.01)
        grads = Gradients((np.array([[0.25]]),), (np.array([-0.75]),))
        updated = adam_step(state, grads, config)
        assert updated.weights[0][0, 0] == pytest.approx(-0.01, rel=1e-6)
        assert updated.biases[0][0] == pytest.approx(0.01, rel=1e-6)

    def test_constant_gradient_trajectory_matches_scalar_simulation(self):
        spec = spec_of((1, 1))
        state = NetworkState.zeros(spec)
        config = TrainConfig(learning_rate=0.05)
        g = 0.3
        grads = Gradients((np.array([[g]]),), (np.array([0.0]),))

        p = m = v = 0.0
        for t in range(1, 8):
            state = adam_step(state, grads, config)
            m = config.beta1 * m + (1.0 - config.beta1) * g
            v = config.beta2 * v + (1.0 - config.beta2) * g * g
            m_hat = m / (1.0 - config.beta1 ** t)
            v_hat = v / (1.0 - config.beta2 ** t)
            p = p - config.learning_rate * m_hat / (math.sqrt(v_hat) + config.adam_eps)
            assert state.weights[0][0, 0] == pytest.approx(p, rel=1e-12)
        assert state.step == 7

    def test_nonfinite_gradient_rejected(self):
        spec = spec_of((1, 1))
        grads = Gradients((np.array([[np.nan]]),), (np.array([0.0]),))
        with pytest.raises(NonFiniteGradient):
            adam_step(NetworkState.zeros(spec), grads, TrainConfig())


class TestTrain:
    def setup_method(self):
        rng = np.random.default_rng(17)
        self.x = rng.standard_normal((120, 3))
        score = self.x.sum(axis=1)
        self.labels = (score > 0.0).astype(float)[:, None]

    def test_loss_decreases_from_initialization(self):
        spec = spec_of((3, 8, 1))
        config = TrainConfig(epochs=15, seed=4)
        initial = init_network(spec, seed=config.seed)
        trained = train(self.x, self.labels, spec, config)
        loss_before = bce_loss(forward(initial, spec, self.x), self.labels)
        loss_after = bce_loss(forward(trained, spec, self.x), self.labels)
        assert loss_after < loss_before
        assert loss_after < 0.35

    def test_training_is_deterministic(self):
        spec = spec_of((3, 6, 1))
        config = TrainConfig(epochs=3, seed=9)
        first = train(self.x, self.labels, spec, config)
        second = train(self.x, self.labels, spec, config)
        for a, b in zip(first.weights, second.weights):
            assert_array_equal(a, b)
        for a, b in zip(first.biases, second.biases):
            assert_array_equal(a, b)

    def test_monotone_outputs_survive_training(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((90, 3))
        cuts = np.quantile(x.sum(axis=1), [0.25, 0.5, 0.75])
        labels = (x.sum(axis=1)[:, None] <= cuts[None, :]).astype(float)
        spec = spec_of((3, 8, 3), head="monotone")
        state = train(x, labels, spec, TrainConfig(epochs=10, seed=1))
        out = forward(state, spec, x)
        assert np.all(np.diff(out, axis=1) >= 0.0)

    def test_label_shape_mismatch(self):
        spec = spec_of((3, 2))
        with pytest.raises(ShapeMismatch):
            train(self.x, self.labels, spec, TrainConfig(epochs=1))
