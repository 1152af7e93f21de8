"""
Слои нейронной сети с явным обратным распространением.

Тензоры изображений хранятся в порядке (batch, height, width, channels). Каждый слой
реализует forward(x) -> (y, cache) и backward(dy, cache) -> (dx, grads); параметры
хранятся в слое и в прямом проходе не изменяются.
"""
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from exceptions import ShapeError


def same_padding(size: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """
    Паддинг "same": выход ceil(size / stride).

    :return: (размер выхода, паддинг до, паддинг после).
    """
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


def he_normal(rng: np.random.Generator, shape: tuple, fan_in: int, dtype) -> np.ndarray:
    return (rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)).astype(dtype)


class Layer:
    """Базовый слой без параметров."""

    def __init__(self, name: str):
        self.name = name

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def output_shape(self, input_shape: tuple) -> tuple:
        return input_shape

    def forward(self, x: np.ndarray):
        raise NotImplementedError

    def backward(self, dy: np.ndarray, cache):
        raise NotImplementedError

    def _expect_channels(self, x: np.ndarray, channels: int):
        if x.ndim != 4 or x.shape[-1] != channels:
            raise ShapeError(self.name, f"ожидался вход (b, h, w, {channels}), получено {x.shape}")


class Conv2D(Layer):
    """Свёртка k×k с шагом stride и паддингом "same". Ядро (k, k, C_in, C_out)."""

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel: int = 3, stride: int = 1,
                 rng: np.random.Generator | None = None, dtype=np.float32):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel, self.stride = kernel, stride
        self.weight = he_normal(rng, (kernel, kernel, in_channels, out_channels), kernel * kernel * in_channels, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def output_shape(self, input_shape):
        b, h, w, _ = input_shape
        return b, same_padding(h, self.kernel, self.stride)[0], same_padding(w, self.kernel, self.stride)[0], \
            self.out_channels

    def forward(self, x):
        self._expect_channels(x, self.in_channels)
        n, h, w, _ = x.shape
        k, s = self.kernel, self.stride
        oh, top, bottom = same_padding(h, k, s)
        ow, left, right = same_padding(w, k, s)
        padded = np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0)))
        windows = sliding_window_view(padded, (k, k), axis=(1, 2))[:, :s * (oh - 1) + 1:s, :s * (ow - 1) + 1:s]
        cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(n * oh * ow, k * k * self.in_channels)
        y = cols @ self.weight.reshape(-1, self.out_channels) + self.bias
        return y.reshape(n, oh, ow, self.out_channels), (x.shape, padded.shape, (top, left), cols)

    def backward(self, dy, cache):
        x_shape, padded_shape, (top, left), cols = cache
        n, h, w, _ = x_shape
        _, oh, ow, _ = dy.shape
        k, s = self.kernel, self.stride
        dy2 = dy.reshape(-1, self.out_channels)
        grads = {
            "weight": (cols.T @ dy2).reshape(self.weight.shape),
            "bias": dy2.sum(axis=0),
        }
        dcols = (dy2 @ self.weight.reshape(-1, self.out_channels).T).reshape(n, oh, ow, k, k, self.in_channels)
        dpadded = np.zeros(padded_shape, dtype=dy.dtype)
        for ki in range(k):
            for kj in range(k):
                dpadded[:, ki:ki + s * (oh - 1) + 1:s, kj:kj + s * (ow - 1) + 1:s, :] += dcols[:, :, :, ki, kj, :]
        return dpadded[:, top:top + h, left:left + w, :], grads


class ConvTranspose2D(Layer):
    """
    Транспонированная свёртка k×k с шагом stride: выход (h·stride, w·stride).

    Прямой проход — рассеяние вкладов каждого входного пикселя по окну k×k (сопряжение
    свёртки со "same"-паддингом, отображающей h·stride в h). Ядро (k, k, C_in, C_out).
    """

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel: int = 3, stride: int = 2,
                 rng: np.random.Generator | None = None, dtype=np.float32):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel, self.stride = kernel, stride
        self.weight = he_normal(rng, (kernel, kernel, in_channels, out_channels), kernel * kernel * in_channels, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def output_shape(self, input_shape):
        b, h, w, _ = input_shape
        return b, h * self.stride, w * self.stride, self.out_channels

    def _geometry(self, h: int, w: int):
        k, s = self.kernel, self.stride
        out_h, out_w = h * s, w * s
        top = same_padding(out_h, k, s)[1]
        left = same_padding(out_w, k, s)[1]
        canvas = (max((h - 1) * s + k, top + out_h), max((w - 1) * s + k, left + out_w))
        return out_h, out_w, top, left, canvas

    def _flat_weight(self) -> np.ndarray:
        return self.weight.transpose(2, 0, 1, 3).reshape(self.in_channels, -1)

    def forward(self, x):
        self._expect_channels(x, self.in_channels)
        n, h, w, _ = x.shape
        k, s = self.kernel, self.stride
        out_h, out_w, top, left, (canvas_h, canvas_w) = self._geometry(h, w)
        x2 = x.reshape(-1, self.in_channels)
        contrib = (x2 @ self._flat_weight()).reshape(n, h, w, k, k, self.out_channels)
        canvas = np.zeros((n, canvas_h, canvas_w, self.out_channels), dtype=contrib.dtype)
        for ki in range(k):
            for kj in range(k):
                canvas[:, ki:ki + s * (h - 1) + 1:s, kj:kj + s * (w - 1) + 1:s, :] += contrib[:, :, :, ki, kj, :]
        y = canvas[:, top:top + out_h, left:left + out_w, :] + self.bias
        return y, (x.shape, x2)

    def backward(self, dy, cache):
        x_shape, x2 = cache
        n, h, w, _ = x_shape
        k, s = self.kernel, self.stride
        out_h, out_w, top, left, (canvas_h, canvas_w) = self._geometry(h, w)
        dcanvas = np.zeros((n, canvas_h, canvas_w, self.out_channels), dtype=dy.dtype)
        dcanvas[:, top:top + out_h, left:left + out_w, :] = dy
        dcontrib = np.empty((n, h, w, k, k, self.out_channels), dtype=dy.dtype)
        for ki in range(k):
            for kj in range(k):
                dcontrib[:, :, :, ki, kj, :] = dcanvas[:, ki:ki + s * (h - 1) + 1:s, kj:kj + s * (w - 1) + 1:s, :]
        dcontrib2 = dcontrib.reshape(n * h * w, -1)
        dflat = x2.T @ dcontrib2
        grads = {
            "weight": dflat.reshape(self.in_channels, k, k, self.out_channels).transpose(1, 2, 0, 3),
            "bias": dy.sum(axis=(0, 1, 2)),
        }
        dx = (dcontrib2 @ self._flat_weight().T).reshape(x_shape)
        return dx, grads


class AvgPool2D(Layer):
    """Усредняющий пулинг 2×2 с шагом 2."""

    def __init__(self, name: str, size: int = 2):
        super().__init__(name)
        self.size = size

    def output_shape(self, input_shape):
        b, h, w, c = input_shape
        return b, h // self.size, w // self.size, c

    def forward(self, x):
        n, h, w, c = x.shape
        p = self.size
        if h % p or w % p:
            raise ShapeError(self.name, f"размеры {h}x{w} не делятся на {p}")
        y = x.reshape(n, h // p, p, w // p, p, c).mean(axis=(2, 4))
        return y, x.shape

    def backward(self, dy, cache):
        p = self.size
        dx = np.repeat(np.repeat(dy, p, axis=1), p, axis=2) / (p * p)
        return dx.reshape(cache), {}


class Dense(Layer):
    """Полносвязный слой: y = x W + b, W формы (in, out)."""

    def __init__(self, name: str, in_features: int, out_features: int,
                 rng: np.random.Generator | None = None, dtype=np.float32):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        self.in_features, self.out_features = in_features, out_features
        self.weight = he_normal(rng, (in_features, out_features), in_features, dtype)
        self.bias = np.zeros(out_features, dtype=dtype)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def output_shape(self, input_shape):
        return input_shape[0], self.out_features

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(self.name, f"ожидался вход (b, {self.in_features}), получено {x.shape}")
        return x @ self.weight + self.bias, x

    def backward(self, dy, cache):
        grads = {"weight": cache.T @ dy, "bias": dy.sum(axis=0)}
        return dy @ self.weight.T, grads


class Flatten(Layer):
    def output_shape(self, input_shape):
        return input_shape[0], int(np.prod(input_shape[1:]))

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, cache):
        return dy.reshape(cache), {}


class Reshape(Layer):
    def __init__(self, name: str, target: tuple):
        super().__init__(name)
        self.target = tuple(target)

    def output_shape(self, input_shape):
        return (input_shape[0],) + self.target

    def forward(self, x):
        if int(np.prod(x.shape[1:])) != int(np.prod(self.target)):
            raise ShapeError(self.name, f"нельзя преобразовать {x.shape[1:]} в {self.target}")
        return x.reshape((x.shape[0],) + self.target), x.shape

    def backward(self, dy, cache):
        return dy.reshape(cache), {}


class ReLU(Layer):
    def forward(self, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, dy, cache):
        return dy * cache, {}


class Sigmoid(Layer):
    def forward(self, x):
        y = expit(x)
        return y, y

    def backward(self, dy, cache):
        return dy * cache * (1.0 - cache), {}
