import logging
import math
from typing import Callable, Optional

import numpy as np
from tqdm import tqdm

from config import settings
from exceptions import NumericError, ShapeError, UsageError
from models import LabeledDataset, RasterSpec, TrainConfig, TrainHistory
from neural.architectures import SequentialModel
from neural.losses import loss_gradient, loss_value
from neural.optim import Adam
from states import Architecture, Label, LossName, Split
from utils.parallel import run_ordered


def forward(model: SequentialModel, batch: np.ndarray) -> np.ndarray:
    """Прямой проход без изменения параметров. CNN/MLP → (b, 1), CAE → (b, H, W, 1)."""
    return model.forward(batch)


def backward(model: SequentialModel, batch: np.ndarray, targets: np.ndarray,
             loss: Optional[LossName] = None) -> dict[str, np.ndarray]:
    """
    Градиенты применимой функции потерь по всем параметрам модели.

    :param model: Модель.
    :param batch: Входной пакет.
    :param targets: Метки (CNN, MLP) или целевые изображения (CAE).
    :param loss: Функция потерь; по умолчанию — функция архитектуры.
    :return: Словарь градиентов той же формы, что и параметры.
    """
    return loss_and_gradients(model, batch, targets, loss)[1]


def loss_and_gradients(model: SequentialModel, batch: np.ndarray, targets: np.ndarray,
                       loss: Optional[LossName] = None) -> tuple[float, dict[str, np.ndarray]]:
    loss = LossName(loss or model.default_loss)
    output, caches = model.forward_with_caches(batch)
    targets = np.asarray(targets).reshape(output.shape)
    value = loss_value(loss, output, targets)
    if not math.isfinite(value):
        raise NumericError("loss", f"нечисловое значение функции потерь: {value}")
    return value, model.backward(loss_gradient(loss, output, targets), caches)


def batch_gradients(model: SequentialModel, batch: np.ndarray, targets: np.ndarray, loss: LossName,
                    chunk_size: int) -> tuple[float, dict[str, np.ndarray]]:
    """
    Градиенты пакета как взвешенная сумма градиентов микропакетов.

    Вес микропакета равен его доле в пакете, суммирование идёт в фиксированном порядке.
    """
    size = batch.shape[0]
    jobs = [(model, batch[i:i + chunk_size], targets[i:i + chunk_size], loss) for i in range(0, size, chunk_size)]
    results = run_ordered(loss_and_gradients, jobs)
    total_loss, total = 0.0, {}
    for (_, chunk, _, _), (value, grads) in zip(jobs, results):
        weight = chunk.shape[0] / size
        total_loss += weight * value
        for name, grad in grads.items():
            total[name] = total[name] + weight * grad if name in total else weight * grad
    return total_loss, total


def predict(model: SequentialModel, x: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Пакетный прямой проход по всему массиву с параллельной обработкой пакетов."""
    jobs = [(x[i:i + batch_size],) for i in range(0, x.shape[0], batch_size)]
    return np.concatenate(run_ordered(model.forward, jobs), axis=0)


def evaluate_loss(model: SequentialModel, x: np.ndarray, y: np.ndarray, loss: LossName, batch_size: int = 64) -> float:
    """Средняя функция потерь по всему набору (взвешенная по размеру пакетов)."""
    outputs = predict(model, x, batch_size)
    return loss_value(loss, outputs, np.asarray(y).reshape(outputs.shape))


def check_resolution(model: SequentialModel, spec: RasterSpec):
    """
    :raises ShapeError: если разрешение набора не совпадает с моделью.
    """
    if (spec.height, spec.width) != (model.resolution, model.resolution):
        raise ShapeError("input", f"разрешение набора {spec.height}x{spec.width} "
                                  f"не совпадает с моделью {model.resolution}x{model.resolution}")


def training_arrays(model: SequentialModel, dataset: LabeledDataset) -> tuple[np.ndarray, ...]:
    """
    Выбирает слои набора для обучения модели.

    CNN: Train/Val из D0 и D1* с метками. CAE: только D0, цели совпадают со входами.

    :return: (x_train, y_train, x_val, y_val).
    :raises ShapeError: если разрешение набора не совпадает с моделью.
    :raises UsageError: если нужная часть выборки пуста.
    """
    check_resolution(model, dataset.spec)
    one_class = model.architecture is Architecture.CAE
    label = int(Label.LEGITIMATE) if one_class else None
    arrays = []
    for split in (Split.TRAIN, Split.VAL):
        selected = dataset.mask(split=split, label=label)
        if not selected.any():
            raise UsageError(f"Часть выборки {split.name} пуста для модели {model.architecture.name}")
        x = dataset.pixels[selected][..., None]
        y = x if one_class else dataset.labels[selected].astype(np.float64)[:, None]
        arrays += [x, y]
    return tuple(arrays)


def fit(model: SequentialModel, x_train: np.ndarray, y_train: np.ndarray, x_val: np.ndarray, y_val: np.ndarray,
        cfg: TrainConfig, evaluate: Optional[Callable[[SequentialModel, int], float]] = None):
    """
    Обучение Adam с ранней остановкой по функции потерь на валидации.

    :param model: Модель; по окончании содержит параметры лучшей по валидации эпохи.
    :param cfg: Параметры обучения.
    :param evaluate: Необязательная замена оценки валидации: evaluate(model, epoch) -> loss.
    :return: (model, TrainHistory).
    """
    cfg.validate_invariants()
    if x_train.shape[0] == 0 or x_val.shape[0] == 0:
        raise UsageError("Пустая обучающая или валидационная выборка")
    loss = LossName(cfg.loss or model.default_loss)
    rng = np.random.default_rng(cfg.rng_seed)
    optimizer = Adam(cfg.learning_rate)
    history = TrainHistory()
    best_loss, best_params, wait = math.inf, model.snapshot(), 0

    epochs = tqdm(range(1, cfg.max_epochs + 1), desc=f"train {model.architecture.name}",
                  disable=not settings.progress)
    for epoch in epochs:
        order = rng.permutation(x_train.shape[0])
        running = 0.0
        for start in range(0, order.size, cfg.batch_size):
            index = order[start:start + cfg.batch_size]
            value, grads = batch_gradients(model, x_train[index], y_train[index], loss, cfg.chunk_size)
            optimizer.step(model.parameters(), grads)
            running += value * index.size
        train_loss = running / order.size
        val_loss = evaluate(model, epoch) if evaluate else evaluate_loss(model, x_val, y_val, loss)
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise NumericError("train", f"нечисловые потери на эпохе {epoch}: {train_loss}, {val_loss}")
        history.train_loss.append(float(train_loss))
        history.val_loss.append(float(val_loss))
        history.stopped_epoch = epoch
        logging.info(f"Эпоха {epoch}: train={train_loss:.6g}, val={val_loss:.6g}")

        if val_loss < best_loss:
            best_loss, best_params, wait = val_loss, model.snapshot(), 0
            history.best_epoch = epoch
        else:
            wait += 1
            if wait >= cfg.patience:
                logging.info(f"Ранняя остановка на эпохе {epoch}, лучшая эпоха {history.best_epoch}")
                break

    model.load_parameters(best_params)
    return model, history


def train(model: SequentialModel, dataset: LabeledDataset, cfg: TrainConfig):
    """
    Обучает модель на слоях набора, подходящих её архитектуре.

    :return: (обученная модель, TrainHistory).
    """
    x_train, y_train, x_val, y_val = training_arrays(model, dataset)
    logging.info(f"Обучение {model.architecture.name}: train={x_train.shape[0]}, val={x_val.shape[0]}")
    return fit(model, x_train, y_train, x_val, y_val, cfg)
