import logging
from pathlib import Path

import numpy as np

from exceptions import ArtifactIOError, CorruptDatasetError
from models import Bitmap

PGM_MAXVAL = 255


def quantize(pixels: np.ndarray) -> np.ndarray:
    """Квантование интенсивностей [0, 1] в уровни 0..255: round(255 * intensity)."""
    return np.rint(np.clip(pixels, 0.0, 1.0) * PGM_MAXVAL).astype(np.int64)


def export_pgm(bitmap: Bitmap, path) -> None:
    """
    Сохраняет битмап в текстовый PGM (P2) для визуального осмотра.

    Args:
        bitmap (Bitmap): Битмап для экспорта.
        path (str | Path): Путь к файлу.

    Raises:
        ArtifactIOError: Ошибка записи файла.
    """
    levels = quantize(bitmap.pixels)
    height, width = levels.shape
    body = "\n".join(" ".join(str(v) for v in row) for row in levels)
    try:
        Path(path).write_text(f"P2\n{width} {height}\n{PGM_MAXVAL}\n{body}\n", encoding="ascii")
    except OSError as e:
        logging.error(f"Ошибка при записи PGM: {e}")
        raise ArtifactIOError(path, "Не удалось записать PGM")
    logging.info(f"Битмап {height}x{width} сохранён в {path}")


def read_pgm(path) -> np.ndarray:
    """
    Читает текстовый PGM (P2) и возвращает сетку уровней.

    Args:
        path (str | Path): Путь к файлу.

    Returns:
        np.ndarray: Уровни int64 формы (H, W).
    """
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as e:
        raise ArtifactIOError(path, f"Не удалось прочитать PGM ({e})")
    tokens = [t for line in text.splitlines() if not line.startswith("#") for t in line.split()]
    if len(tokens) < 4 or tokens[0] != "P2":
        raise CorruptDatasetError(f"Файл {path} не является PGM P2")
    width, height = int(tokens[1]), int(tokens[2])
    values = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if values.size != width * height:
        raise CorruptDatasetError(f"В PGM {path} ожидалось {width * height} значений, найдено {values.size}")
    return values.reshape(height, width)
