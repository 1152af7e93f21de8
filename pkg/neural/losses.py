import numpy as np

from exceptions import UsageError
from states import LossName

BCE_EPSILON = 1e-7


def _flat_pair(predictions, labels) -> tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if predictions.shape != labels.shape:
        raise UsageError(f"Длины предсказаний и меток различаются: {predictions.size} и {labels.size}")
    if predictions.size == 0:
        raise UsageError("Пустой пакет")
    return predictions, labels


def bce_loss(predictions, labels) -> float:
    """
    Бинарная кросс-энтропия L = -(1/N) Σ y·log(ỹ) + (1-y)·log(1-ỹ).

    Предсказания ограничиваются отрезком [ε, 1-ε], ε = 1e-7.

    :param predictions: Выходы sigmoid в (0, 1).
    :param labels: Метки {0, 1}.
    :return: Неотрицательное значение потерь.
    """
    p, y = _flat_pair(predictions, labels)
    p = np.clip(p, BCE_EPSILON, 1.0 - BCE_EPSILON)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_gradient(predictions: np.ndarray, labels) -> np.ndarray:
    """Градиент BCE по предсказаниям; там, где сработало ограничение, градиент равен нулю."""
    shape = np.shape(predictions)
    p, y = _flat_pair(predictions, labels)
    inside = (p > BCE_EPSILON) & (p < 1.0 - BCE_EPSILON)
    pc = np.clip(p, BCE_EPSILON, 1.0 - BCE_EPSILON)
    grad = (pc - y) / (pc * (1.0 - pc)) / p.size * inside
    return grad.reshape(shape)


def mse_loss(x, y) -> float:
    """
    Средняя по пакету поэлементная квадратичная ошибка Λ(X) = ||X - Y||^2 / (число пикселей).

    :raises UsageError: если формы различаются.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise UsageError(f"Формы различаются: {x.shape} и {y.shape}")
    if x.size == 0:
        raise UsageError("Пустой пакет")
    return float(np.mean((x - y) ** 2))


def mse_gradient(predictions: np.ndarray, targets) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.float64).reshape(np.shape(predictions))
    return 2.0 * (predictions - targets) / predictions.size


def per_item_mse(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Λ(X) для каждого элемента пакета, нормированная на число пикселей."""
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return np.mean(diff.reshape(diff.shape[0], -1) ** 2, axis=1)


def loss_value(name: LossName, predictions, targets) -> float:
    return bce_loss(predictions, targets) if LossName(name) is LossName.BCE else mse_loss(predictions, targets)


def loss_gradient(name: LossName, predictions, targets) -> np.ndarray:
    if LossName(name) is LossName.BCE:
        return bce_gradient(predictions, targets)
    return mse_gradient(predictions, targets)
