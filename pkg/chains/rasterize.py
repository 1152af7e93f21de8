import logging

import numpy as np

from exceptions import UsageError
from models import Bitmap, IQRecording, RasterSpec
from states import RasterMode


def pixel_counts(window: np.ndarray, spec: RasterSpec) -> tuple[np.ndarray, int]:
    """
    Гистограмма попаданий отсчётов в пиксели сетки H×W.

    Столбец = floor((I - axis_min) / (axis_max - axis_min) * W), строка = floor((axis_max - Q) / ... * H),
    так что строка 0 соответствует Q = axis_max. Отсчёты вне [axis_min, axis_max] (и нечисловые)
    отбрасываются, отсчёты ровно на границе попадают в крайний индекс.

    :param window: Комплексные отсчёты окна.
    :param spec: Параметры растеризации.
    :return: Массив счётчиков int64 (H, W) и число отброшенных отсчётов.
    """
    window = np.asarray(window).ravel()
    i_coord = window.real.astype(np.float64)
    q_coord = window.imag.astype(np.float64)
    inside = (i_coord >= spec.axis_min) & (i_coord <= spec.axis_max) & \
             (q_coord >= spec.axis_min) & (q_coord <= spec.axis_max)
    span = spec.axis_max - spec.axis_min

    cols = np.floor((i_coord[inside] - spec.axis_min) / span * spec.width).astype(np.int64)
    rows = np.floor((spec.axis_max - q_coord[inside]) / span * spec.height).astype(np.int64)
    cols = np.clip(cols, 0, spec.width - 1)
    rows = np.clip(rows, 0, spec.height - 1)

    counts = np.bincount(rows * spec.width + cols, minlength=spec.height * spec.width)
    return counts.reshape(spec.height, spec.width), int(window.size - np.count_nonzero(inside))


def rasterize(window, spec: RasterSpec) -> Bitmap:
    """
    Преобразует окно IQ-отсчётов в битмап созвездия.

    :param window: Непустая последовательность комплексных отсчётов.
    :param spec: Параметры растеризации.
    :return: Битмап со значениями пикселей в [0, 1].
    :raises UsageError: если окно пустое.
    """
    window = np.asarray(window)
    if window.size == 0:
        raise UsageError("Нельзя растеризовать пустое окно")
    spec.validate_invariants()

    counts, n_dropped = pixel_counts(window, spec)
    if spec.mode is RasterMode.BINARY:
        pixels = (counts > 0).astype(np.float32)
    else:
        peak = counts.max()
        pixels = (counts / peak).astype(np.float32) if peak > 0 else np.zeros(counts.shape, dtype=np.float32)
    return Bitmap(pixels=pixels, n_source_samples=int(window.size), n_dropped=n_dropped)


def window_stream(recording: IQRecording, n: int, spec: RasterSpec) -> list[Bitmap]:
    """
    Разбивает запись на непересекающиеся окна по n отсчётов и растеризует каждое.

    Хвост короче n отбрасывается.

    :param recording: Запись IQ.
    :param n: Длина окна в отсчётах.
    :param spec: Параметры растеризации.
    :return: Список битмапов.
    :raises UsageError: если запись короче n.
    """
    if n <= 0:
        raise UsageError(f"Длина окна должна быть > 0, получено {n}")
    if len(recording) < n:
        raise UsageError(f"Запись из {len(recording)} отсчётов короче окна n={n}")
    n_windows = len(recording) // n
    remainder = len(recording) - n_windows * n
    if remainder:
        logging.debug(f"Отброшен хвост записи: {remainder} отсчётов")
    windows = recording.samples[:n_windows * n].reshape(n_windows, n)
    return [rasterize(window, spec) for window in windows]
