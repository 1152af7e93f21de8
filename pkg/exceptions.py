class JamwatchError(Exception):
    """Базовое исключение конвейера обнаружения глушения."""


class ConfigurationError(JamwatchError):
    """Недопустимые параметры конфигурации (мощности, границы рамки, масштаб выборки)."""


class UsageError(JamwatchError):
    """Нарушено предусловие операции (пустое окно, одноклассовый набор и т.п.)."""


class ShapeError(JamwatchError):
    """Несовпадение формы тензора. Содержит имя слоя, на котором оно обнаружено."""

    def __init__(self, layer: str, message: str):
        self.layer = layer
        super().__init__(f"[{layer}] {message}")


class NumericError(JamwatchError):
    """Нечисловые значения (NaN/inf) в активациях, градиентах или функции потерь."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"[{where}] {message}")


class CorruptDatasetError(JamwatchError):
    """Файл набора данных или чекпоинта повреждён: магия, версия, длина или контрольная сумма."""


class ArtifactIOError(JamwatchError, OSError):
    """Ошибка ввода-вывода при работе с артефактом. Хранит путь к файлу."""

    def __init__(self, path, message: str):
        self.path = str(path)
        super().__init__(f"{message}: {self.path}")
