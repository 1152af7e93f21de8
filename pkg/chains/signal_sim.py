import logging
import math

import numpy as np

from config import AXIS_MAX, AXIS_MIN
from exceptions import ConfigurationError, UsageError
from models import IQRecording, SimConfig
from states import ArtificialKind, JammerKind, Scenario


def _check_count(count: int):
    if count <= 0:
        raise UsageError(f"Число отсчётов должно быть > 0, получено {count}")


def complex_gaussian(rng: np.random.Generator, power: float, count: int) -> np.ndarray:
    """
    Циркулярно-симметричный комплексный гауссов шум CN(0, power).

    :param rng: Генератор случайных чисел.
    :param power: Средняя мощность E|s|^2.
    :param count: Число отсчётов.
    :return: Массив complex128 длины count.
    """
    scale = math.sqrt(power / 2.0)
    return scale * (rng.standard_normal(count) + 1j * rng.standard_normal(count))


def qam4_symbols(rng: np.random.Generator, count: int, amplitude: float) -> np.ndarray:
    """Случайные символы 4-QAM (±q ± jq)."""
    bits = rng.integers(0, 2, size=(count, 2))
    return amplitude * ((2 * bits[:, 0] - 1) + 1j * (2 * bits[:, 1] - 1))


def beacon_burst(rng: np.random.Generator, count: int, fraction: float, amplitude: float) -> np.ndarray:
    """
    Короткая непрерывная пачка маяков 4-QAM малой амплитуды.

    Пачка занимает floor(fraction * count) отсчётов начиная со случайной позиции,
    остальные отсчёты равны нулю.
    """
    burst = np.zeros(count, dtype=np.complex128)
    length = int(math.floor(fraction * count))
    start = int(rng.integers(0, count - length + 1))
    if length > 0:
        burst[start:start + length] = qam4_symbols(rng, length, amplitude)
    return burst


def uniform_square(rng: np.random.Generator, count: int, half_width: float) -> np.ndarray:
    """Отсчёты, равномерно распределённые по квадрату [-w, w]^2."""
    iq = rng.uniform(-half_width, half_width, size=(count, 2))
    return iq[:, 0] + 1j * iq[:, 1]


def uniform_square_ring(rng: np.random.Generator, count: int, inner: float, outer: float) -> np.ndarray:
    """
    Отсчёты, равномерно распределённые по квадратной рамке inner <= max(|I|, |Q|) <= outer.

    Чебышёвский радиус r имеет плотность, пропорциональную периметру 8r, затем точка
    выбирается равномерно на периметре квадрата полуширины r.
    """
    radius = np.sqrt(inner ** 2 + rng.uniform(0.0, 1.0, count) * (outer ** 2 - inner ** 2))
    position = rng.uniform(0.0, 8.0, count)
    side = np.minimum(np.floor(position / 2.0).astype(int), 3)
    along = (position - 2.0 * side) - 1.0  # Положение вдоль стороны в [-1, 1)

    i_coord = np.choose(side, [radius, -along * radius, -radius, along * radius])
    q_coord = np.choose(side, [along * radius, radius, -along * radius, -radius])
    return i_coord + 1j * q_coord


def tdd_busy_mask(rng: np.random.Generator, count: int, idle_fraction: float, slot_samples: int) -> np.ndarray:
    """
    Маска активных отсчётов TDD: ровно round((1 - idle_fraction) * count) отсчётов активны.

    Слоты длины slot_samples занимаются в случайном порядке, последний занятый слот может быть неполным.
    """
    n_busy = int(round((1.0 - idle_fraction) * count))
    n_slots = -(-count // slot_samples)
    slot_rank = np.empty(n_slots, dtype=np.int64)
    slot_rank[rng.permutation(n_slots)] = np.arange(n_slots)
    index = np.arange(count)
    key = slot_rank[index // slot_samples] * slot_samples + index % slot_samples
    mask = np.zeros(count, dtype=bool)
    mask[np.argsort(key, kind="stable")[:n_busy]] = True
    return mask


def gen_empty_channel(cfg: SimConfig, count: int) -> IQRecording:
    """
    Случай 1: пустой канал, gNB передаёт только маяки.

    :param cfg: Конфигурация симулятора.
    :param count: Число отсчётов.
    :return: Запись со сценарием EMPTY_CHANNEL.
    """
    cfg.validate_invariants()
    _check_count(count)
    rng = np.random.default_rng(cfg.rng_seed)
    samples = complex_gaussian(rng, cfg.noise_floor_power, count)
    samples = samples + beacon_burst(rng, count, cfg.beacon_fraction, cfg.beacon_amplitude)
    logging.debug(f"Сгенерирован пустой канал: {count} отсчётов, seed={cfg.rng_seed}")
    return IQRecording(samples=samples, scenario=Scenario.EMPTY_CHANNEL, seed_used=cfg.rng_seed)


def draw_channel_gain(rng: np.random.Generator, cfg: SimConfig) -> complex:
    """Один комплексный коэффициент канала h = a·e^{jθ} на запись (некомпенсированное созвездие)."""
    amplitude = rng.uniform(cfg.gain_min, cfg.gain_max)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    if cfg.channel_amplitude is not None:
        amplitude = cfg.channel_amplitude
    if cfg.channel_phase is not None:
        phase = cfg.channel_phase
    return complex(amplitude * math.cos(phase), amplitude * math.sin(phase))


def gen_transmitting(cfg: SimConfig, count: int) -> IQRecording:
    """
    Случай 2: передача данных в режиме TDD.

    Доля (1 - tdd_idle_fraction) отсчётов — символы 4-QAM, умноженные на h, плюс АБГШ при snr_db;
    остальные отсчёты — только шум (паузы TDD).

    :param cfg: Конфигурация симулятора.
    :param count: Число отсчётов.
    :return: Запись со сценарием TRANSMITTING.
    """
    cfg.validate_invariants()
    _check_count(count)
    rng = np.random.default_rng(cfg.rng_seed)
    gain = draw_channel_gain(rng, cfg)
    busy = tdd_busy_mask(rng, count, cfg.tdd_idle_fraction, cfg.tdd_slot_samples)
    n_busy = int(busy.sum())

    samples = complex_gaussian(rng, cfg.noise_floor_power, count)
    symbols = gain * qam4_symbols(rng, n_busy, cfg.qam_amplitude)
    if math.isinf(cfg.snr_db) and cfg.snr_db > 0:
        busy_noise = np.zeros(n_busy, dtype=np.complex128)
    else:
        signal_power = abs(gain) ** 2 * 2.0 * cfg.qam_amplitude ** 2
        busy_noise = complex_gaussian(rng, signal_power * 10.0 ** (-cfg.snr_db / 10.0), n_busy)
    samples[busy] = symbols + busy_noise
    logging.debug(f"Сгенерирована передача TDD: {n_busy}/{count} активных отсчётов, |h|={abs(gain):.3f}")
    return IQRecording(samples=samples, scenario=Scenario.TRANSMITTING, seed_used=cfg.rng_seed)


def uniform_square_half_width(cfg: SimConfig) -> float:
    """Полуширина квадрата равномерного глушителя: мощность квадрата полуширины w равна 2w^2/3."""
    return math.sqrt(1.5 * cfg.jammer_power)


def gen_jammer(cfg: SimConfig, count: int, kind) -> IQRecording:
    """
    Случай 3: глушитель включён, устройства лишь изредка передают маяки.

    :param cfg: Конфигурация симулятора.
    :param count: Число отсчётов.
    :param kind: JammerKind или его строковое значение (uniform, gaussian, frame).
    :return: Запись со сценарием JAMMER_*.
    :raises UsageError: неизвестный тип глушителя.
    """
    try:
        kind = JammerKind(kind)
    except ValueError:
        raise UsageError(f"Неизвестный тип глушителя: {kind}")
    cfg.validate_invariants()
    _check_count(count)
    rng = np.random.default_rng(cfg.rng_seed)

    if kind is JammerKind.UNIFORM:
        samples = uniform_square(rng, count, uniform_square_half_width(cfg))
    elif kind is JammerKind.GAUSSIAN:
        samples = complex_gaussian(rng, cfg.jammer_power, count)
    else:
        samples = uniform_square_ring(rng, count, cfg.frame_inner, cfg.frame_outer)

    samples = samples + beacon_burst(rng, count, cfg.jammer_residual_fraction, cfg.beacon_amplitude)
    logging.debug(f"Сгенерирован глушитель {kind.value}: {count} отсчётов, seed={cfg.rng_seed}")
    return IQRecording(samples=samples, scenario=kind.scenario, seed_used=cfg.rng_seed)


def gen_artificial(cfg: SimConfig, count: int, kind) -> IQRecording:
    """
    Случай 4: искусственные данные атаки D1* без легитимной составляющей.

    :param cfg: Конфигурация симулятора.
    :param count: Число отсчётов.
    :param kind: ArtificialKind или его строковое значение (uniform2d, frame).
    :return: Запись со сценарием ARTIFICIAL_*.
    """
    try:
        kind = ArtificialKind(kind)
    except ValueError:
        raise UsageError(f"Неизвестный тип искусственных данных: {kind}")
    if not 0.0 < cfg.frame_inner < cfg.frame_outer <= AXIS_MAX:
        raise ConfigurationError(f"Недопустимые границы рамки: {cfg.frame_inner}, {cfg.frame_outer}")
    cfg.validate_invariants()
    _check_count(count)
    rng = np.random.default_rng(cfg.rng_seed)

    if kind is ArtificialKind.UNIFORM_2D:
        iq = rng.uniform(AXIS_MIN, AXIS_MAX, size=(count, 2))
        samples = iq[:, 0] + 1j * iq[:, 1]
    else:
        samples = uniform_square_ring(rng, count, cfg.frame_inner, cfg.frame_outer)
    return IQRecording(samples=samples, scenario=kind.scenario, seed_used=cfg.rng_seed)


def generate(cfg: SimConfig, count: int, scenario: Scenario) -> IQRecording:
    """
    Диспетчер генераторов по тегу сценария.

    :param cfg: Конфигурация симулятора.
    :param count: Число отсчётов.
    :param scenario: Сценарий записи.
    :return: Запись, тег которой совпадает со сценарием.
    """
    scenario = Scenario(scenario)
    if scenario is Scenario.EMPTY_CHANNEL:
        return gen_empty_channel(cfg, count)
    if scenario is Scenario.TRANSMITTING:
        return gen_transmitting(cfg, count)
    if scenario.is_real_jamming:
        kind = next(k for k in JammerKind if k.scenario is scenario)
        return gen_jammer(cfg, count, kind)
    kind = next(k for k in ArtificialKind if k.scenario is scenario)
    return gen_artificial(cfg, count, kind)
