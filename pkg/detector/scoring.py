import logging
from typing import Optional

import numpy as np

from config import CAE_SCORE_HEADROOM
from exceptions import UsageError
from models import LabeledDataset, ScoreSet
from neural.architectures import SequentialModel
from neural.losses import per_item_mse
from neural.training import check_resolution, predict
from states import Architecture, Hypothesis, Label, ScoreSource, Split


def _check_architecture(model: SequentialModel, expected: Architecture):
    if model.architecture is not expected:
        raise UsageError(f"Ожидалась модель {expected.name}, получена {model.architecture.name}")


def _as_labels(labels, count: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.uint8).ravel()
    if labels.size != count:
        raise UsageError(f"Число меток {labels.size} не совпадает с числом битмапов {count}")
    return labels


def score_cnn(model: SequentialModel, bitmaps: np.ndarray, labels, cases: Optional[np.ndarray] = None) -> ScoreSet:
    """
    Оценки CNN: выходы sigmoid, сразу лежат в [0, 1].

    :param model: Обученный CNN.
    :param bitmaps: Пакет (b, H, W) или (b, H, W, 1).
    :param labels: Истинные метки для построения кривых.
    :raises ShapeError: если разрешение не совпадает с моделью.
    """
    _check_architecture(model, Architecture.CNN)
    scores = predict(model, bitmaps).astype(np.float64).ravel()
    return ScoreSet(scores=np.clip(scores, 0.0, 1.0), labels=_as_labels(labels, scores.size),
                    source=ScoreSource.CNN, cases=cases)


def reconstruction_errors(model: SequentialModel, bitmaps: np.ndarray) -> np.ndarray:
    """Λ(X) каждого битмапа: средний квадрат ошибки восстановления по пикселям."""
    _check_architecture(model, Architecture.CAE)
    if bitmaps.ndim == 3:
        bitmaps = bitmaps[..., None]
    return per_item_mse(predict(model, bitmaps), bitmaps)


def cae_calibration(model: SequentialModel, dataset: LabeledDataset) -> np.ndarray:
    """Ошибки восстановления на обучающей части D0: опорный диапазон нормировки оценок CAE."""
    selected = dataset.mask(split=Split.TRAIN, label=int(Label.LEGITIMATE))
    if not selected.any():
        raise UsageError("В наборе нет обучающих битмапов D0 для калибровки CAE")
    return reconstruction_errors(model, dataset.pixels[selected])


def normalize_errors(errors: np.ndarray, calibration: np.ndarray, headroom: float = CAE_SCORE_HEADROOM) -> np.ndarray:
    """
    Монотонное отображение Λ в [0, 1]: (Λ - min) / (max·κ - min) с ограничением.

    :raises UsageError: если калибровочный набор пуст.
    """
    calibration = np.asarray(calibration, dtype=np.float64)
    if calibration.size == 0:
        raise UsageError("Пустой калибровочный набор CAE")
    low, high = float(calibration.min()), float(calibration.max()) * headroom
    span = high - low
    if span <= 0:
        logging.warning(f"Вырожденный диапазон калибровки CAE: [{low}, {high}]")
        return (np.asarray(errors) > low).astype(np.float64)
    return np.clip((np.asarray(errors, dtype=np.float64) - low) / span, 0.0, 1.0)


def score_cae(model: SequentialModel, bitmaps: np.ndarray, labels, calibration: np.ndarray,
              cases: Optional[np.ndarray] = None, headroom: float = CAE_SCORE_HEADROOM) -> ScoreSet:
    """
    Оценки CAE: нормированная ошибка восстановления, большие значения указывают на подавление.

    :param calibration: Ошибки Λ на обучающей части D0 (см. cae_calibration).
    :param headroom: Запас κ над максимумом калибровки.
    """
    errors = reconstruction_errors(model, bitmaps)
    scores = normalize_errors(errors, calibration, headroom)
    return ScoreSet(scores=scores, labels=_as_labels(labels, scores.size), source=ScoreSource.CAE, cases=cases)


def score_dataset(model: SequentialModel, dataset: LabeledDataset, selected: np.ndarray,
                  calibration: Optional[np.ndarray] = None) -> ScoreSet:
    """Оценивает выбранные элементы набора моделью любой из двух архитектур."""
    check_resolution(model, dataset.spec)
    bitmaps, labels, cases = dataset.pixels[selected], dataset.labels[selected], dataset.cases[selected]
    if model.architecture is Architecture.CNN:
        return score_cnn(model, bitmaps, labels, cases)
    if calibration is None:
        calibration = cae_calibration(model, dataset)
    return score_cae(model, bitmaps, labels, calibration, cases)


def classify(score: float, tau: float) -> Hypothesis:
    """Решающее правило: H1, если Γ(X) ≥ τ, иначе H0."""
    return Hypothesis.H1 if score >= tau else Hypothesis.H0
