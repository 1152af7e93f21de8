import math
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import AXIS_MAX, AXIS_MIN, DEFAULT_RESOLUTION, TARGET_RATE, TOOL_VERSION
from exceptions import ConfigurationError, UsageError
from states import LossName, RasterMode, Scenario, ScoreSource, Split, ToyDensity


class SimConfig(BaseModel):
    """Параметры симулятора IQ-записей (замена лабораторного стенда SDR)."""
    model_config = ConfigDict(frozen=True)

    carrier_freq_hz: float = 3.75e9  # Только метаданные
    bandwidth_hz: float = 20e6  # Только метаданные
    n_samples_per_window: int = 256
    noise_floor_power: float = 0.01
    snr_db: float = 15.0  # float('inf') отключает шум на активных слотах
    tdd_idle_fraction: float = 0.5
    tdd_slot_samples: int = 128
    qam_amplitude: float = 0.6  # Номинальная амплитуда q символов 4-QAM (±q, ±q)
    gain_min: float = 0.5
    gain_max: float = 1.2
    channel_amplitude: Optional[float] = None  # Фиксирует |h| вместо случайного выбора
    channel_phase: Optional[float] = None  # Фиксирует arg(h) вместо случайного выбора
    beacon_fraction: float = 0.03
    beacon_amplitude: float = 0.3
    jammer_power: float = 0.5
    jammer_residual_fraction: float = 0.02
    frame_inner: float = 0.8
    frame_outer: float = 1.2
    rng_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check(self):
        self.validate_invariants()
        return self

    def validate_invariants(self):
        """
        Проверяет согласованность параметров.

        :raises ConfigurationError: если хотя бы один параметр вне допустимой области.
        """
        if self.n_samples_per_window <= 0:
            raise ConfigurationError(f"n_samples_per_window должно быть > 0, получено {self.n_samples_per_window}")
        if self.noise_floor_power < 0 or math.isnan(self.noise_floor_power):
            raise ConfigurationError(f"Недопустимая мощность шума: {self.noise_floor_power}")
        if self.jammer_power < 0 or math.isnan(self.jammer_power):
            raise ConfigurationError(f"Недопустимая мощность глушителя: {self.jammer_power}")
        if math.isnan(self.snr_db):
            raise ConfigurationError("snr_db не может быть NaN")
        if not 0.0 <= self.tdd_idle_fraction <= 1.0:
            raise ConfigurationError(f"tdd_idle_fraction вне [0, 1]: {self.tdd_idle_fraction}")
        if self.tdd_slot_samples < 1:
            raise ConfigurationError(f"tdd_slot_samples должно быть >= 1: {self.tdd_slot_samples}")
        if not 0.0 < self.frame_inner < self.frame_outer <= AXIS_MAX:
            raise ConfigurationError(
                f"Нарушено 0 < frame_inner < frame_outer <= {AXIS_MAX}: {self.frame_inner}, {self.frame_outer}")
        if self.qam_amplitude <= 0 or self.beacon_amplitude < 0:
            raise ConfigurationError("Амплитуды символов должны быть положительными")
        if not 0.0 < self.gain_min <= self.gain_max:
            raise ConfigurationError(f"Нарушено 0 < gain_min <= gain_max: {self.gain_min}, {self.gain_max}")
        if self.channel_amplitude is not None and self.channel_amplitude < 0:
            raise ConfigurationError(f"channel_amplitude < 0: {self.channel_amplitude}")
        if not 0.0 <= self.beacon_fraction <= 0.05:
            raise ConfigurationError(f"beacon_fraction вне [0, 0.05]: {self.beacon_fraction}")
        if not 0.0 <= self.jammer_residual_fraction <= 0.02:
            raise ConfigurationError(f"jammer_residual_fraction вне [0, 0.02]: {self.jammer_residual_fraction}")


class IQRecording(BaseModel):
    """Конечная последовательность комплексных отсчётов с тегом сценария."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray  # complex128, форма (count,)
    scenario: Scenario
    seed_used: int

    def __len__(self) -> int:
        return int(self.samples.shape[0])


class RasterSpec(BaseModel):
    """Параметры растеризации IQ-окна в битмап."""
    model_config = ConfigDict(frozen=True)

    height: int = DEFAULT_RESOLUTION
    width: int = DEFAULT_RESOLUTION
    axis_min: float = AXIS_MIN
    axis_max: float = AXIS_MAX
    mode: RasterMode = RasterMode.BINARY

    @model_validator(mode="after")
    def _check(self):
        self.validate_invariants()
        return self

    def validate_invariants(self):
        if not self.axis_min < self.axis_max:
            raise ConfigurationError(f"axis_min должно быть меньше axis_max: {self.axis_min}, {self.axis_max}")
        if self.height < 2 or self.width < 2:
            raise ConfigurationError(f"Разрешение должно быть не меньше 2x2: {self.height}x{self.width}")


class Bitmap(BaseModel):
    """Битмап созвездия H×W со значениями в [0, 1] — вход X детектора."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pixels: np.ndarray  # float32, форма (H, W)
    n_source_samples: int
    n_dropped: int


class LabeledItem(BaseModel):
    """Один элемент размеченного набора данных."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    bitmap: Bitmap
    label: int
    case: Scenario
    split: Split


class LabeledDataset(BaseModel):
    """
    Размеченный набор D0 ∪ D1 ∪ D1*, хранимый по столбцам.

    Элемент i описывается pixels[i], labels[i], cases[i], splits[i], n_source[i], n_dropped[i].
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    pixels: np.ndarray  # float32, (N, H, W)
    labels: np.ndarray  # uint8, (N,)
    cases: np.ndarray  # uint8, (N,)
    splits: np.ndarray  # uint8, (N,)
    n_source: np.ndarray  # uint32, (N,)
    n_dropped: np.ndarray  # uint32, (N,)
    spec: RasterSpec
    n_per_bitmap: int

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def mask(self, split: Optional[Split] = None, cases=None, label: Optional[int] = None) -> np.ndarray:
        """
        Булева маска элементов по части выборки, сценариям и метке.

        :param split: Часть выборки или None для всех.
        :param cases: Итерируемое сценариев или None для всех.
        :param label: Метка класса или None для всех.
        :return: Маска формы (N,).
        """
        selected = np.ones(len(self), dtype=bool)
        if split is not None:
            selected &= self.splits == int(split)
        if cases is not None:
            selected &= np.isin(self.cases, [int(c) for c in cases])
        if label is not None:
            selected &= self.labels == int(label)
        return selected

    def subset(self, selected: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(
            pixels=self.pixels[selected],
            labels=self.labels[selected],
            cases=self.cases[selected],
            splits=self.splits[selected],
            n_source=self.n_source[selected],
            n_dropped=self.n_dropped[selected],
            spec=self.spec,
            n_per_bitmap=self.n_per_bitmap,
        )

    def items(self) -> Iterator[LabeledItem]:
        for i in range(len(self)):
            yield LabeledItem(
                bitmap=Bitmap(pixels=self.pixels[i], n_source_samples=int(self.n_source[i]),
                              n_dropped=int(self.n_dropped[i])),
                label=int(self.labels[i]),
                case=Scenario(int(self.cases[i])),
                split=Split(int(self.splits[i])),
            )

    def stratum_counts(self) -> dict:
        """Количество элементов по парам (часть выборки, сценарий)."""
        counts = {}
        for split in Split:
            for case in Scenario:
                count = int(np.count_nonzero((self.splits == int(split)) & (self.cases == int(case))))
                if count:
                    counts[(split, case)] = count
        return counts

    def validate_invariants(self):
        """
        Проверяет гигиену разбиения и согласованность столбцов.

        :raises UsageError: если реальное глушение попало в Train/Val или искусственные данные — в Test.
        """
        n = len(self)
        for name in ("cases", "splits", "n_source", "n_dropped"):
            if getattr(self, name).shape != (n,):
                raise UsageError(f"Столбец {name} имеет форму {getattr(self, name).shape}, ожидалось ({n},)")
        if self.pixels.shape != (n, self.spec.height, self.spec.width):
            raise UsageError(f"Форма битмапов {self.pixels.shape} не совпадает с RasterSpec")
        real = np.isin(self.cases, [int(s) for s in Scenario if s.is_real_jamming])
        artificial = np.isin(self.cases, [int(s) for s in Scenario if s.is_artificial])
        if np.any(real & (self.splits != int(Split.TEST))):
            raise UsageError("Битмапы реального глушения (D1) обнаружены в Train/Val")
        if np.any(artificial & (self.splits == int(Split.TEST))):
            raise UsageError("Искусственные битмапы (D1*) обнаружены в Test")
        legit = np.isin(self.cases, [int(s) for s in Scenario if s.is_legitimate])
        if np.any(self.labels[legit] != 0) or np.any(self.labels[~legit] != 1):
            raise UsageError("Метки не соответствуют сценариям")
        if np.any(self.n_dropped > self.n_source):
            raise UsageError("n_dropped превышает n_source_samples")


class TrainConfig(BaseModel):
    """Параметры обучения: Adam, размер пакета, ранняя остановка."""
    model_config = ConfigDict(frozen=True)

    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 4
    rng_seed: int = Field(default=0, ge=0)
    chunk_size: int = 8  # Размер микропакета для суммирования градиентов
    loss: Optional[LossName] = None  # None: функция потерь архитектуры по умолчанию

    @model_validator(mode="after")
    def _check(self):
        self.validate_invariants()
        return self

    def validate_invariants(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate должно быть > 0: {self.learning_rate}")
        if self.batch_size < 1 or self.max_epochs < 1 or self.chunk_size < 1:
            raise ConfigurationError("batch_size, max_epochs и chunk_size должны быть положительными")
        if self.patience < 1:
            raise ConfigurationError(f"patience должно быть >= 1: {self.patience}")


class TrainHistory(BaseModel):
    """История обучения по эпохам."""

    train_loss: list[float] = []
    val_loss: list[float] = []
    best_epoch: int = 0  # Нумерация эпох с 1
    stopped_epoch: int = 0

    def best_so_far(self) -> list[float]:
        return list(np.minimum.accumulate(self.val_loss)) if self.val_loss else []


class ScoreSet(BaseModel):
    """Оценки детектора Γ(X) в [0, 1] с истинными метками."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    scores: np.ndarray
    labels: np.ndarray
    source: ScoreSource
    cases: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _check(self):
        if self.scores.shape != self.labels.shape:
            raise UsageError(f"Длины оценок и меток различаются: {self.scores.shape} и {self.labels.shape}")
        if self.cases is not None and self.cases.shape != self.labels.shape:
            raise UsageError("Длина тегов сценариев не совпадает с числом оценок")
        if self.scores.size and (np.any(~np.isfinite(self.scores)) or self.scores.min() < 0 or self.scores.max() > 1):
            raise UsageError("Оценки должны лежать в [0, 1]")
        return self

    def restrict(self, selected: np.ndarray) -> "ScoreSet":
        return ScoreSet(
            scores=self.scores[selected],
            labels=self.labels[selected],
            source=self.source,
            cases=None if self.cases is None else self.cases[selected],
        )


class DetectionReport(BaseModel):
    """Кривые FA/MD по сетке порогов и сводная статистика разнесения порогов."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    thresholds: np.ndarray
    fa_curve: np.ndarray
    md_curve: np.ndarray
    tau_fa: float
    tau_md: float
    separation: float
    target_rate: float = TARGET_RATE
    auc: float
    source: ScoreSource


class EquivalenceReport(BaseModel):
    """Результат эмпирической проверки эквивалентности NN и GLRT на игрушечной плотности."""

    toy: ToyDensity
    n_train: int
    spearman: float  # NaN, если ранговая корреляция не определена
    auc_nn: float
    auc_glrt: float
    auc_gap: float
    auc_lr: float
    auc_kde: float
    final_train_loss: float = float("nan")
    final_val_loss: float = float("nan")
    passed: bool
    reason: str = ""


class RunManifest(BaseModel):
    """Паспорт запуска команды: параметры, сиды, пути артефактов, длительность."""

    command: str
    config: dict[str, str] = {}
    seeds: dict[str, int] = {}
    artifacts: list[str] = []
    tool_version: str = TOOL_VERSION
    duration_s: float = 0.0
