import numpy as np
import pytest

from exceptions import ConfigurationError, ShapeError
from neural.architectures import CAE_REFERENCE_COUNTS, CaeModel, CnnModel, MlpModel, build_model
from neural.layers import Conv2D, ConvTranspose2D, same_padding
from states import Architecture


def naive_conv(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Свёртка "same" четырьмя вложенными циклами."""
    n, h, w, _ = x.shape
    k = weight.shape[0]
    oh, top, bottom = same_padding(h, k, stride)
    ow, left, right = same_padding(w, k, stride)
    padded = np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0)))
    y = np.zeros((n, oh, ow, weight.shape[3]))
    for b in range(n):
        for i in range(oh):
            for j in range(ow):
                patch = padded[b, i * stride:i * stride + k, j * stride:j * stride + k, :]
                y[b, i, j] = np.tensordot(patch, weight, axes=3) + bias
    return y


def naive_conv_transpose(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Транспонированная свёртка как явное рассеяние каждого входного пикселя."""
    n, h, w, _ = x.shape
    k = weight.shape[0]
    out_h, out_w = h * stride, w * stride
    top = same_padding(out_h, k, stride)[1]
    left = same_padding(out_w, k, stride)[1]
    canvas = np.zeros((n, out_h + k + top, out_w + k + left, weight.shape[3]))
    for b in range(n):
        for i in range(h):
            for j in range(w):
                for ki in range(k):
                    for kj in range(k):
                        canvas[b, i * stride + ki, j * stride + kj] += x[b, i, j] @ weight[ki, kj]
    return canvas[:, top:top + out_h, left:left + out_w] + bias


class TestParameterCounts:

    def test_cnn_total(self):
        model = CnnModel(128)
        assert model.parameter_count() == 281313
        assert model.layer_parameter_counts() == {"conv1": 640, "conv2": 18464, "dense1": 262176, "dense2": 33}

    def test_cae_layers(self):
        model = CaeModel(128)
        assert model.layer_parameter_counts() == CAE_REFERENCE_COUNTS
        assert model.layer_parameter_counts()["dec_conv"] == 577

    def test_cnn_shapes(self):
        shapes = dict(CnnModel(128).layer_output_shapes())
        assert shapes["conv1"] == (1, 64, 64, 64)
        assert shapes["pool"] == (1, 32, 32, 64)
        assert shapes["conv2"] == (1, 16, 16, 32)
        assert shapes["flatten"] == (1, 8192)
        assert shapes["dense1"] == (1, 32)
        assert shapes["output"] == (1, 1)

    def test_cae_shapes(self):
        shapes = dict(CaeModel(128).layer_output_shapes())
        assert shapes["enc_conv1"] == (1, 64, 64, 64)
        assert shapes["enc_conv2"] == (1, 32, 32, 32)
        assert shapes["enc_dense"] == (1, 32)
        assert shapes["dec_reshape"] == (1, 32, 32, 32)
        assert shapes["dec_convT1"] == (1, 64, 64, 32)
        assert shapes["dec_convT2"] == (1, 128, 128, 64)
        assert shapes["output"] == (1, 128, 128, 1)

    @pytest.mark.parametrize("resolution", [12, 30])
    def test_cnn_rejects_resolution(self, resolution):
        with pytest.raises(ConfigurationError):
            CnnModel(resolution)

    def test_build_model_by_tag(self):
        assert isinstance(build_model(Architecture.CAE, 16), CaeModel)
        assert isinstance(build_model(Architecture.MLP, 2), MlpModel)


class TestForward:

    def test_zero_weights_give_half(self):
        model = CnnModel(128)
        model.zero_weights()
        output = model.forward(np.random.default_rng(0).integers(0, 2, (2, 128, 128)).astype(np.float32))
        assert output.shape == (2, 1)
        assert np.allclose(output, 0.5)

    def test_cae_output_shape_and_range(self):
        model = CaeModel(32)
        output = model.forward(np.random.default_rng(0).random((3, 32, 32, 1)))
        assert output.shape == (3, 32, 32, 1)
        assert np.all((output >= 0) & (output <= 1))

    def test_forward_does_not_touch_parameters(self):
        model = CnnModel(16)
        before = model.snapshot()
        model.forward(np.ones((2, 16, 16, 1)))
        assert all(np.array_equal(a, b) for a, b in zip(before, model.snapshot()))

    def test_wrong_resolution(self):
        with pytest.raises(ShapeError):
            CnnModel(16).forward(np.zeros((1, 32, 32, 1)))


class TestConvOracle:

    @pytest.mark.parametrize("stride", [1, 2])
    def test_conv_matches_loops(self, stride):
        rng = np.random.default_rng(stride)
        layer = Conv2D("conv", 3, 4, 3, stride, rng, np.float64)
        layer.bias[:] = rng.standard_normal(4)
        x = rng.standard_normal((2, 4, 4, 3))
        assert np.allclose(layer.forward(x)[0], naive_conv(x, layer.weight, layer.bias, stride))

    def test_conv_transpose_matches_loops(self):
        rng = np.random.default_rng(7)
        layer = ConvTranspose2D("convT", 2, 3, 3, 2, rng, np.float64)
        layer.bias[:] = rng.standard_normal(3)
        x = rng.standard_normal((2, 2, 2, 2))
        y = layer.forward(x)[0]
        assert y.shape == (2, 4, 4, 3)
        assert np.allclose(y, naive_conv_transpose(x, layer.weight, layer.bias, 2))

    def test_conv_transpose_is_adjoint_of_conv(self):
        rng = np.random.default_rng(9)
        conv = Conv2D("conv", 2, 3, 3, 2, rng, np.float64)
        transpose = ConvTranspose2D("convT", 3, 2, 3, 2, rng, np.float64)
        transpose.weight[...] = conv.weight.transpose(0, 1, 3, 2)
        x = rng.standard_normal((1, 4, 4, 2))
        z = rng.standard_normal((1, 2, 2, 3))
        assert np.isclose(np.sum(conv.forward(x)[0] * z), np.sum(x * transpose.forward(z)[0]))

    def test_cae_at_four_pixels_matches_loops(self):
        model = CaeModel(4, rng_seed=1, dtype=np.float64)
        x = np.random.default_rng(2).random((2, 4, 4, 1))
        layers = {layer.name: layer for layer in model.layers}
        relu = lambda v: np.maximum(v, 0)

        h = relu(naive_conv(x, layers["enc_conv1"].weight, layers["enc_conv1"].bias, 2))
        h = relu(naive_conv(h, layers["enc_conv2"].weight, layers["enc_conv2"].bias, 2))
        h = relu(h.reshape(2, -1) @ layers["enc_dense"].weight + layers["enc_dense"].bias)
        h = relu(h @ layers["dec_dense"].weight + layers["dec_dense"].bias).reshape(2, 1, 1, 32)
        h = relu(naive_conv_transpose(h, layers["dec_convT1"].weight, layers["dec_convT1"].bias, 2))
        h = relu(naive_conv_transpose(h, layers["dec_convT2"].weight, layers["dec_convT2"].bias, 2))
        expected = 1 / (1 + np.exp(-naive_conv(h, layers["dec_conv"].weight, layers["dec_conv"].bias, 1)))

        assert np.allclose(model.forward(x), expected)
