from enum import Enum, IntEnum

# Перечисления состояний и категорий, общие для всех модулей конвейера


class Scenario(IntEnum):
    """Сценарий записи IQ. Значение используется как тег u8 в бинарных файлах."""
    EMPTY_CHANNEL = 0  # Пустой канал: gNB передаёт только маяки
    TRANSMITTING = 1  # Передача данных в режиме TDD
    JAMMER_UNIFORM = 2  # Глушитель: равномерный шум по квадрату
    JAMMER_GAUSSIAN = 3  # Глушитель: комплексный гауссов шум
    JAMMER_FRAME = 4  # Глушитель: равномерный шум по рамке
    ARTIFICIAL_UNIFORM_2D = 5  # Искусственная атака: равномерно по всей плоскости
    ARTIFICIAL_FRAME = 6  # Искусственная атака: равномерно по рамке

    @property
    def is_legitimate(self) -> bool:
        return self in (Scenario.EMPTY_CHANNEL, Scenario.TRANSMITTING)

    @property
    def is_real_jamming(self) -> bool:
        return self in (Scenario.JAMMER_UNIFORM, Scenario.JAMMER_GAUSSIAN, Scenario.JAMMER_FRAME)

    @property
    def is_artificial(self) -> bool:
        return self in (Scenario.ARTIFICIAL_UNIFORM_2D, Scenario.ARTIFICIAL_FRAME)


class JammerKind(str, Enum):
    """Тип реального глушителя."""
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    FRAME = "frame"

    @property
    def scenario(self) -> Scenario:
        return {
            JammerKind.UNIFORM: Scenario.JAMMER_UNIFORM,
            JammerKind.GAUSSIAN: Scenario.JAMMER_GAUSSIAN,
            JammerKind.FRAME: Scenario.JAMMER_FRAME,
        }[self]


class ArtificialKind(str, Enum):
    """Тип искусственных данных атаки для обучения."""
    UNIFORM_2D = "uniform2d"
    FRAME = "frame"

    @property
    def scenario(self) -> Scenario:
        return Scenario.ARTIFICIAL_UNIFORM_2D if self is ArtificialKind.UNIFORM_2D else Scenario.ARTIFICIAL_FRAME


class RasterMode(IntEnum):
    """Режим растеризации: наличие точки или нормированный счётчик попаданий."""
    BINARY = 0
    COUNT_NORMALIZED = 1


class Split(IntEnum):
    """Часть выборки."""
    TRAIN = 0
    VAL = 1
    TEST = 2


class Label(IntEnum):
    """Метка класса."""
    LEGITIMATE = 0  # H0
    ATTACK = 1  # H1 (реальная или искусственная атака)


class Hypothesis(str, Enum):
    """Решение детектора."""
    H0 = "H0"
    H1 = "H1"


class ScoreSource(str, Enum):
    """Источник оценок детектора."""
    CNN = "cnn"
    CAE = "cae"
    GLRT_ORACLE = "glrt"
    MLP = "mlp"


class Architecture(IntEnum):
    """Архитектура модели. Значение используется как тег в файле чекпоинта."""
    CNN = 0
    CAE = 1
    MLP = 2


class ModelChoice(str, Enum):
    """Модели, доступные из командной строки."""
    CNN = "cnn"
    CAE = "cae"


class ToyDensity(str, Enum):
    """Игрушечные распределения H0 для проверки эквивалентности NN и GLRT."""
    GAUSS = "gauss"
    GAUSS_MIXTURE = "gaussmixture"
    RING = "ring"


class LossName(str, Enum):
    """Функция потерь для обучения."""
    BCE = "bce"
    MSE = "mse"
