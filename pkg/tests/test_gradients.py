import math

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from exceptions import NumericError, UsageError
from neural.architectures import CaeModel, CnnModel, MlpModel
from neural.gradcheck import check_gradients
from neural.losses import BCE_EPSILON, bce_gradient, bce_loss, mse_loss, per_item_mse
from neural.training import backward, batch_gradients, forward, loss_and_gradients
from states import LossName


class TestLosses:

    def test_bce_half(self):
        assert math.isclose(bce_loss([0.5], [1]), math.log(2))
        assert math.isclose(bce_loss([0.5, 0.5], [0, 1]), math.log(2))

    def test_bce_confident_prediction_is_clamped(self):
        assert bce_loss([1.0], [1]) < 1e-6
        assert math.isclose(bce_loss([1.0], [0]), -math.log(BCE_EPSILON), rel_tol=1e-6)

    def test_bce_gradient_vanishes_where_clamped(self):
        assert np.all(bce_gradient(np.array([0.0, 1.0]), [1, 0]) == 0)

    def test_bce_length_mismatch(self):
        with pytest.raises(UsageError):
            bce_loss([0.5, 0.5], [1])

    def test_mse_identical_is_zero(self):
        x = np.random.default_rng(0).random((2, 4, 4))
        assert mse_loss(x, x) == 0

    def test_mse_shape_mismatch(self):
        with pytest.raises(UsageError):
            mse_loss(np.zeros((2, 3)), np.zeros((3, 2)))

    def test_per_item_mse(self):
        x = np.zeros((2, 2, 2))
        y = np.stack([np.zeros((2, 2)), np.ones((2, 2))])
        assert list(per_item_mse(x, y)) == [0.0, 1.0]

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=30))
    @hypothesis_settings(max_examples=50, deadline=None)
    def test_losses_are_non_negative(self, values):
        p = np.array(values)
        assert bce_loss(p, np.round(p)) >= 0
        assert mse_loss(p, 1 - p) >= 0


class TestBackward:

    def test_zero_weights_output_bias_gradient(self):
        model = CnnModel(8, dtype=np.float64)
        model.zero_weights()
        x = np.random.default_rng(0).random((1, 8, 8, 1))
        assert np.allclose(forward(model, x), 0.5)
        grads = backward(model, x, np.array([[0.0]]))
        assert math.isclose(float(grads["dense2.bias"][0]), 0.5)
        assert np.all(grads["dense1.weight"] == 0)

    def test_cae_reconstructing_its_output_has_zero_gradient(self):
        model = CaeModel(8, dtype=np.float64)
        x = np.random.default_rng(1).random((2, 8, 8, 1))
        grads = backward(model, x, forward(model, x))
        assert all(np.all(value == 0) for value in grads.values())

    def test_gradient_shapes_match_parameters(self):
        model = CnnModel(8)
        grads = backward(model, np.zeros((2, 8, 8, 1)), np.array([[0.0], [1.0]]))
        assert {name: value.shape for name, value in model.parameters()} == \
               {name: value.shape for name, value in grads.items()}

    def test_non_finite_input(self):
        x = np.zeros((1, 8, 8, 1))
        x[0, 3, 3, 0] = np.inf
        with pytest.raises(NumericError):
            loss_and_gradients(CnnModel(8), x, np.array([[1.0]]))

    def test_chunked_gradients_match_full_batch(self):
        model = MlpModel(2, hidden=(8, 8), rng_seed=3)
        rng = np.random.default_rng(3)
        x, y = rng.standard_normal((10, 2)), rng.integers(0, 2, (10, 1)).astype(float)
        full_loss, full = loss_and_gradients(model, x, y, LossName.BCE)
        chunk_loss, chunked = batch_gradients(model, x, y, LossName.BCE, chunk_size=3)
        assert math.isclose(full_loss, chunk_loss, rel_tol=1e-12)
        for name in full:
            assert np.allclose(full[name], chunked[name], rtol=1e-10, atol=1e-14)


class TestGradientCheck:

    def test_cnn_matches_finite_differences(self):
        model = CnnModel(8, rng_seed=0, dtype=np.float64)
        rng = np.random.default_rng(5)
        x = rng.random((4, 8, 8, 1))
        result = check_gradients(model, x, np.array([[0.0], [1.0], [0.0], [1.0]]), n_params=2000)
        assert len(result.names) == 2000
        assert (~result.kinks).mean() > 0.5
        assert result.worst_smooth_error() <= 1e-4

    def test_cae_matches_finite_differences(self):
        model = CaeModel(8, rng_seed=0, dtype=np.float64)
        x = np.random.default_rng(6).random((3, 8, 8, 1))
        result = check_gradients(model, x, x, n_params=2000)
        assert (~result.kinks).mean() > 0.5
        assert result.worst_smooth_error() <= 1e-4

    def test_mlp_matches_finite_differences(self):
        model = MlpModel(2, hidden=(16, 16), rng_seed=1)
        x = np.random.default_rng(7).standard_normal((16, 2))
        y = (np.linalg.norm(x, axis=1) > 1).astype(float)[:, None]
        result = check_gradients(model, x, y, n_params=200, loss=LossName.MSE)
        assert result.worst_smooth_error() <= 1e-4


@given(st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=20),
       st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=20))
@hypothesis_settings(max_examples=50, deadline=None)
def test_mse_is_symmetric(first, second):
    size = min(len(first), len(second))
    x, y = np.array(first[:size]), np.array(second[:size])
    assert mse_loss(x, y) == mse_loss(y, x)
