import logging

import numpy as np

from config import DEFAULT_RESOLUTION
from exceptions import ConfigurationError, NumericError, ShapeError
from neural.layers import AvgPool2D, Conv2D, ConvTranspose2D, Dense, Flatten, Layer, ReLU, Reshape, Sigmoid
from states import Architecture, LossName

# Число параметров по слоям для разрешения 128×128
CNN_REFERENCE_COUNTS = {"conv1": 640, "conv2": 18464, "dense1": 262176, "dense2": 33}
CNN_REFERENCE_TOTAL = 281313
CAE_REFERENCE_COUNTS = {"enc_conv1": 640, "enc_conv2": 18464, "enc_dense": 1048608,
                    "dec_dense": 1081344, "dec_convT1": 9248, "dec_convT2": 18496, "dec_conv": 577}


class SequentialModel:
    """
    Последовательность слоёв с общим прямым и обратным проходом.

    Параметры перечисляются в порядке объявления слоёв: так они пишутся в чекпоинт.
    """

    architecture: Architecture
    default_loss: LossName

    def __init__(self, layers: list[Layer], input_shape: tuple, resolution: int, dtype=np.float32):
        self.layers = layers
        self.input_shape = tuple(input_shape)  # Без размерности пакета
        self.resolution = resolution
        self.dtype = np.dtype(dtype)

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [(f"{layer.name}.{key}", value) for layer in self.layers for key, value in layer.params().items()]

    def parameter_count(self) -> int:
        return int(sum(value.size for _, value in self.parameters()))

    def layer_parameter_counts(self) -> dict[str, int]:
        return {layer.name: int(sum(v.size for v in layer.params().values()))
                for layer in self.layers if layer.params()}

    def layer_output_shapes(self, batch: int = 1) -> list[tuple[str, tuple]]:
        shapes, shape = [], (batch,) + self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
            shapes.append((layer.name, tuple(shape)))
        return shapes

    def zero_weights(self):
        """Обнуляет все параметры (используется для проверки выхода sigmoid(0) = 0.5)."""
        for _, value in self.parameters():
            value[...] = 0

    def load_parameters(self, blobs: list[np.ndarray]):
        """Загружает параметры в порядке объявления, проверяя формы."""
        own = self.parameters()
        if len(blobs) != len(own):
            raise ShapeError("checkpoint", f"ожидалось {len(own)} блоков параметров, получено {len(blobs)}")
        for (name, value), blob in zip(own, blobs):
            if value.shape != blob.shape:
                raise ShapeError(name, f"форма {blob.shape} не совпадает с {value.shape}")
            value[...] = blob

    def snapshot(self) -> list[np.ndarray]:
        return [value.copy() for _, value in self.parameters()]

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        if len(self.input_shape) == 3 and x.ndim == 3:
            x = x[..., None]  # Пакет битмапов (b, h, w) без оси каналов
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError("input", f"ожидался вход (b, {', '.join(map(str, self.input_shape))}), "
                                      f"получено {x.shape}")
        return np.asarray(x, dtype=self.dtype)

    def forward_with_caches(self, x: np.ndarray):
        """
        Прямой проход с сохранением промежуточных кэшей для обратного прохода.

        :raises NumericError: если выход слоя содержит NaN/inf.
        """
        x = self._check_input(x)
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            if not np.all(np.isfinite(x)):
                raise NumericError(layer.name, "нечисловые значения в выходе слоя")
            caches.append(cache)
        return x, caches

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_with_caches(x)[0]

    def backward(self, dy: np.ndarray, caches: list) -> dict[str, np.ndarray]:
        """
        Обратный проход от градиента по выходу модели.

        :return: Градиенты по всем параметрам, ключи как в parameters().
        :raises NumericError: если градиент содержит NaN/inf.
        """
        grads = {}
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            dy, layer_grads = layer.backward(dy, cache)
            for key, value in layer_grads.items():
                if not np.all(np.isfinite(value)):
                    raise NumericError(layer.name, f"нечисловой градиент по {key}")
                grads[f"{layer.name}.{key}"] = value
        return grads

    def activation_pattern(self, x: np.ndarray) -> np.ndarray:
        """Конкатенация масок всех ReLU: смена маски означает пересечение точки излома."""
        _, caches = self.forward_with_caches(x)
        masks = [cache.ravel() for layer, cache in zip(self.layers, caches) if isinstance(layer, ReLU)]
        return np.concatenate(masks) if masks else np.zeros(0, dtype=bool)


def _check_resolution(resolution: int, divisor: int, kind: str):
    if resolution < divisor or resolution % divisor:
        raise ConfigurationError(f"Разрешение {kind} должно делиться на {divisor}, получено {resolution}")


class CnnModel(SequentialModel):
    """
    Двухклассовый CNN: conv 3×3/2 (64) → avg pool 2×2 → conv 3×3/2 (32) → dense 32 → dense 1 (sigmoid).
    """

    architecture = Architecture.CNN
    default_loss = LossName.BCE

    def __init__(self, resolution: int = DEFAULT_RESOLUTION, rng_seed: int = 0, dtype=np.float32):
        _check_resolution(resolution, 8, "CNN")
        rng = np.random.default_rng(rng_seed)
        side = resolution // 8
        layers = [
            Conv2D("conv1", 1, 64, 3, 2, rng, dtype), ReLU("relu1"),
            AvgPool2D("pool"),
            Conv2D("conv2", 64, 32, 3, 2, rng, dtype), ReLU("relu2"),
            Flatten("flatten"),
            Dense("dense1", side * side * 32, 32, rng, dtype), ReLU("relu3"),
            Dense("dense2", 32, 1, rng, dtype), Sigmoid("output"),
        ]
        super().__init__(layers, (resolution, resolution, 1), resolution, dtype)
        counts = self.layer_parameter_counts()
        if resolution == 128 and (counts != CNN_REFERENCE_COUNTS or self.parameter_count() != CNN_REFERENCE_TOTAL):
            raise ConfigurationError(f"Число параметров CNN {counts} не совпадает с эталоном {CNN_REFERENCE_COUNTS}")
        logging.debug(f"CNN {resolution}x{resolution}: {self.parameter_count()} параметров")


class CaeModel(SequentialModel):
    """
    Свёрточный автокодировщик: кодер conv/2 (64) → conv/2 (32) → dense 32,
    декодер dense → reshape → convT/2 (32) → convT/2 (64) → conv 3×3 (1, sigmoid).
    """

    architecture = Architecture.CAE
    default_loss = LossName.MSE

    def __init__(self, resolution: int = DEFAULT_RESOLUTION, rng_seed: int = 0, dtype=np.float32):
        _check_resolution(resolution, 4, "CAE")
        rng = np.random.default_rng(rng_seed)
        side = resolution // 4
        flat = side * side * 32
        layers = [
            Conv2D("enc_conv1", 1, 64, 3, 2, rng, dtype), ReLU("enc_relu1"),
            Conv2D("enc_conv2", 64, 32, 3, 2, rng, dtype), ReLU("enc_relu2"),
            Flatten("enc_flatten"),
            Dense("enc_dense", flat, 32, rng, dtype), ReLU("latent_relu"),
            Dense("dec_dense", 32, flat, rng, dtype), ReLU("dec_relu0"),
            Reshape("dec_reshape", (side, side, 32)),
            ConvTranspose2D("dec_convT1", 32, 32, 3, 2, rng, dtype), ReLU("dec_relu1"),
            ConvTranspose2D("dec_convT2", 32, 64, 3, 2, rng, dtype), ReLU("dec_relu2"),
            Conv2D("dec_conv", 64, 1, 3, 1, rng, dtype), Sigmoid("output"),
        ]
        super().__init__(layers, (resolution, resolution, 1), resolution, dtype)
        if resolution == 128 and self.layer_parameter_counts() != CAE_REFERENCE_COUNTS:
            raise ConfigurationError(f"Число параметров CAE {self.layer_parameter_counts()} "
                                     f"не совпадает с эталоном {CAE_REFERENCE_COUNTS}")
        logging.debug(f"CAE {resolution}x{resolution}: {self.parameter_count()} параметров")


class MlpModel(SequentialModel):
    """Небольшой MLP для проверки эквивалентности NN и GLRT на низкоразмерных плотностях."""

    architecture = Architecture.MLP
    default_loss = LossName.MSE

    def __init__(self, input_dim: int = 2, hidden: tuple = (32, 32), rng_seed: int = 0, dtype=np.float64):
        rng = np.random.default_rng(rng_seed)
        layers, width = [], input_dim
        for i, units in enumerate(hidden, start=1):
            layers += [Dense(f"dense{i}", width, units, rng, dtype), ReLU(f"relu{i}")]
            width = units
        layers += [Dense("head", width, 1, rng, dtype), Sigmoid("output")]
        super().__init__(layers, (input_dim,), input_dim, dtype)
        self.hidden = tuple(hidden)


def build_model(architecture: Architecture, resolution: int, rng_seed: int = 0, dtype=np.float32) -> SequentialModel:
    """
    Создаёт модель по тегу архитектуры.

    :param architecture: CNN, CAE или MLP.
    :param resolution: Сторона входного битмапа (для MLP — размерность входа).
    """
    architecture = Architecture(architecture)
    if architecture is Architecture.CNN:
        return CnnModel(resolution, rng_seed, dtype)
    if architecture is Architecture.CAE:
        return CaeModel(resolution, rng_seed, dtype)
    return MlpModel(resolution, rng_seed=rng_seed, dtype=dtype)
