"""Forward-pass contracts and analytic-vs-finite-difference gradients."""

import numpy as np
import pytest

from mi_audit.errors import NumericalError
from mi_audit.indicators import phi
from mi_audit.nn import (
    Dense,
    Flatten,
    MaxPool,
    ModelSpec,
    Relu,
    SoftmaxOutput,
    forward,
    grad_params,
    init_params,
    phi_objective,
    phi_value_and_input_grad,
    spec_from_string,
)
from oracle_utils import (
    assert_rel_close,
    fd_input_grad,
    fd_param_grads,
    phi_of_model,
    random_tiny_model,
)


def _mlp(d_in=3, hidden=4, m=3, seed=0):
    spec = ModelSpec((d_in,), (Dense(d_in, hidden), Relu(), Dense(hidden, m), SoftmaxOutput(m)))
    return init_params(spec, seed)


class TestForward:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        for seed in range(5):
            params, batch, _ = random_tiny_model(rng)
            probs = forward(params, batch)
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
            assert np.all(probs >= 0)

    def test_zero_weights_give_uniform(self):
        spec = ModelSpec((3,), (Dense(3, 4), SoftmaxOutput(4)))
        params = init_params(spec, 0)
        params.weights[0] = (np.zeros((3, 4)), np.zeros(4))
        probs = forward(params, np.array([[0.2, 0.9, 0.1]]))
        np.testing.assert_array_equal(probs, np.full((1, 4), 0.25))

    def test_hand_evaluated_softmax(self):
        # dense(2,2), identity weights, zero bias, input (1, 0):
        # logits (1, 0) -> probs (e/(e+1), 1/(e+1))
        spec = ModelSpec((2,), (Dense(2, 2), SoftmaxOutput(2)))
        params = init_params(spec, 0)
        params.weights[0] = (np.eye(2), np.zeros(2))
        probs = forward(params, np.array([[1.0, 0.0]]))
        e = np.e
        np.testing.assert_allclose(probs[0], [e / (e + 1), 1 / (e + 1)], atol=1e-12)

    def test_shape_mismatch_rejected(self):
        params = _mlp(d_in=3)
        with pytest.raises(ValueError, match="does not match"):
            forward(params, np.zeros((2, 4)))

    def test_extreme_logits_stay_normalized(self):
        spec = ModelSpec((2,), (Dense(2, 2), SoftmaxOutput(2)))
        params = init_params(spec, 0)
        params.weights[0] = (np.array([[800.0, -800.0], [0.0, 0.0]]), np.zeros(2))
        probs = forward(params, np.array([[1.0, 0.0]]))
        assert np.all(np.isfinite(probs))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_conv_pipeline_shapes(self):
        spec = spec_from_string((6, 6, 1), "conv:2:3, relu, maxpool:2, flatten, dense:3, softmax")
        params = init_params(spec, 1)
        probs = forward(params, np.random.default_rng(0).uniform(size=(5, 6, 6, 1)))
        assert probs.shape == (5, 3)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


class TestSpecValidation:
    def test_requires_final_softmax(self):
        with pytest.raises(ValueError, match="softmax"):
            ModelSpec((3,), (Dense(3, 2),))

    def test_requires_trainable_layer(self):
        with pytest.raises(ValueError, match="trainable"):
            ModelSpec((3,), (Relu(), SoftmaxOutput(3)))

    def test_rejects_bad_composition(self):
        with pytest.raises(ValueError):
            ModelSpec((3,), (Dense(4, 2), SoftmaxOutput(2)))
        with pytest.raises(ValueError):
            ModelSpec((3,), (Dense(3, 2), SoftmaxOutput(5)))

    def test_maxpool_divisibility(self):
        with pytest.raises(ValueError, match="divide"):
            ModelSpec(
                (5, 5, 1),
                (MaxPool(2), Flatten(), Dense(4, 2), SoftmaxOutput(2)),
            )

    def test_spec_from_string_round_trips_shapes(self):
        spec = spec_from_string((8,), "dense:16, relu, dense:4, softmax")
        assert spec.layers == (Dense(8, 16), Relu(), Dense(16, 4), SoftmaxOutput(4))
        assert spec.num_classes == 4


class TestParamGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(123)
        for _ in range(8):
            params, batch, labels = random_tiny_model(rng)
            l2 = float(rng.choice([0.0, 0.05]))
            analytic, _ = grad_params(params, batch, labels, l2)
            reference = fd_param_grads(params, batch, labels, l2)
            for a, r in zip(analytic, reference):
                if a is None:
                    continue
                assert_rel_close(a[0], r[0])
                assert_rel_close(a[1], r[1])

    def test_soft_targets_match_finite_differences(self):
        rng = np.random.default_rng(5)
        params, batch, labels = random_tiny_model(rng)
        m = params.spec.num_classes
        rows = rng.dirichlet(np.ones(m), size=len(batch))
        analytic, _ = grad_params(params, batch, rows, 0.0)
        reference = fd_param_grads(params, batch, rows, 0.0)
        for a, r in zip(analytic, reference):
            if a is not None:
                assert_rel_close(a[0], r[0])
                assert_rel_close(a[1], r[1])

    def test_gradient_vanishes_at_confident_correct_prediction(self):
        spec = ModelSpec((2,), (Dense(2, 2), SoftmaxOutput(2)))
        params = init_params(spec, 0)
        params.weights[0] = (np.array([[60.0, -60.0], [0.0, 0.0]]), np.zeros(2))
        grads, loss = grad_params(params, np.array([[1.0, 0.0]]), np.array([0]), 0.0)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.max(np.abs(grads[0][0])) < 1e-12

    def test_l2_term_isolated(self):
        # at a zero-CE-gradient point the weight gradient is exactly l2 * W
        spec = ModelSpec((2,), (Dense(2, 2), SoftmaxOutput(2)))
        params = init_params(spec, 3)
        batch = np.array([[0.3, 0.7]])
        probs = forward(params, batch)
        grads, _ = grad_params(params, batch, probs, l2_lambda=0.1)
        # soft target equal to the prediction kills the CE term entirely
        np.testing.assert_allclose(grads[0][0], 0.1 * params.weights[0][0], atol=1e-15)

    def test_l2_zero_reproduces_plain_gradient(self):
        # subtracting the closed-form L2 term from the regularized gradient
        # recovers the unregularized one exactly
        rng = np.random.default_rng(9)
        params, batch, labels = random_tiny_model(rng)
        plain, _ = grad_params(params, batch, labels, 0.0)
        reg, _ = grad_params(params, batch, labels, 0.2)
        for p, r, w in zip(plain, reg, params.weights):
            if p is not None:
                np.testing.assert_array_equal(r[0], p[0] + 0.2 * w[0])
                np.testing.assert_array_equal(r[1], p[1])  # biases unregularized

    def test_nonfinite_input_raises_numerical_error(self):
        params = _mlp()
        bad = np.full((1, 3), np.nan)
        with pytest.raises(NumericalError):
            grad_params(params, bad, np.array([0]), 0.0)


class TestInputGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(321)
        for _ in range(8):
            params, batch, labels = random_tiny_model(rng)
            x, y = batch[0], int(labels[0])
            _, analytic = phi_value_and_input_grad(params, x, y)
            assert_rel_close(analytic, fd_input_grad(params, x, y))

    def test_value_matches_direct_phi(self):
        rng = np.random.default_rng(31)
        params, batch, labels = random_tiny_model(rng)
        value, _ = phi_value_and_input_grad(params, batch[0], int(labels[0]))
        assert value == pytest.approx(phi_of_model(params, batch[0], int(labels[0])), abs=1e-12)

    def test_constant_model_gives_zero_gradient(self):
        spec = ModelSpec((3,), (Dense(3, 2), SoftmaxOutput(2)))
        params = init_params(spec, 0)
        params.weights[0] = (np.zeros((3, 2)), np.array([0.4, -0.4]))
        _, grad = phi_value_and_input_grad(params, np.array([0.2, 0.5, 0.8]), 0)
        np.testing.assert_array_equal(grad, np.zeros(3))

    def test_identical_models_cancel_in_objective(self):
        params = _mlp(seed=7)
        x = np.array([0.1, 0.6, 0.3])
        terms = [(1.0, params), (-1.0, params)]
        value, grad = phi_objective(terms, x, 1)
        assert value == 0.0
        np.testing.assert_array_equal(grad, np.zeros_like(x))

    def test_clamped_saturation_stays_finite(self):
        # huge weights give probability ~1 (clamped); gradient must be
        # finite (and exactly zero under the saturated clamp)
        spec = ModelSpec((2,), (Dense(2, 2), SoftmaxOutput(2)))
        params = init_params(spec, 0)
        params.weights[0] = (np.array([[100.0, -100.0], [0.0, 0.0]]), np.zeros(2))
        value, grad = phi_value_and_input_grad(params, np.array([1.0, 0.0]), 0)
        assert np.isfinite(value)
        assert np.all(np.isfinite(grad))
        np.testing.assert_array_equal(grad, np.zeros(2))

    def test_signed_sum_across_models(self):
        rng = np.random.default_rng(77)
        a = _mlp(seed=1)
        b = _mlp(seed=2)
        x = rng.uniform(0.1, 0.9, size=3)
        value, grad = phi_objective([(0.5, a), (-0.25, b)], x, 0)
        va, ga = phi_value_and_input_grad(a, x, 0)
        vb, gb = phi_value_and_input_grad(b, x, 0)
        assert value == pytest.approx(0.5 * va - 0.25 * vb, abs=1e-12)
        np.testing.assert_allclose(grad, 0.5 * ga - 0.25 * gb, atol=1e-12)
