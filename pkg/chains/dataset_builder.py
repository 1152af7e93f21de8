import logging

import numpy as np
from tqdm import tqdm

from chains.rasterize import rasterize
from chains.signal_sim import generate
from config import FULL_TEST_TOTAL, FULL_TRAIN_PER_CLASS, FULL_VAL_TOTAL, settings
from exceptions import ConfigurationError
from models import LabeledDataset, RasterSpec, SimConfig
from states import Label, Scenario, Split
from utils.parallel import run_ordered


def split_evenly(total: int, parts: int) -> list[int]:
    """Делит total на parts почти равных частей, первые части больше на единицу."""
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def split_strata(scale: float) -> list[tuple[Split, Scenario, int]]:
    """
    Состав выборок при заданном масштабе.

    Train: round(scale*4000) из D0 (пополам пустой/занятый канал) и столько же из D1* (пополам
    Uniform2D/Frame). Val: round(scale*600) в тех же пропорциях. Test: round(scale*800), половина D0,
    половина D1 поровну между тремя типами глушителя.

    :param scale: Масштаб в (0, 1].
    :return: Список (часть выборки, сценарий, число битмапов).
    :raises ConfigurationError: если масштаб вне (0, 1] или какой-либо слой пуст.
    """
    if not 0.0 < scale <= 1.0:
        raise ConfigurationError(f"scale должен лежать в (0, 1], получено {scale}")
    train_per_class = int(round(scale * FULL_TRAIN_PER_CLASS))
    val_d0, val_d1 = split_evenly(int(round(scale * FULL_VAL_TOTAL)), 2)
    test_d0, test_d1 = split_evenly(int(round(scale * FULL_TEST_TOTAL)), 2)

    legit = (Scenario.EMPTY_CHANNEL, Scenario.TRANSMITTING)
    artificial = (Scenario.ARTIFICIAL_UNIFORM_2D, Scenario.ARTIFICIAL_FRAME)
    jammers = (Scenario.JAMMER_UNIFORM, Scenario.JAMMER_GAUSSIAN, Scenario.JAMMER_FRAME)

    strata = []
    for split, d0_total, d1_total in ((Split.TRAIN, train_per_class, train_per_class), (Split.VAL, val_d0, val_d1)):
        strata += [(split, case, n) for case, n in zip(legit, split_evenly(d0_total, 2))]
        strata += [(split, case, n) for case, n in zip(artificial, split_evenly(d1_total, 2))]
    strata += [(Split.TEST, case, n) for case, n in zip(legit, split_evenly(test_d0, 2))]
    strata += [(Split.TEST, case, n) for case, n in zip(jammers, split_evenly(test_d1, 3))]

    empty = [(split.name, case.name) for split, case, n in strata if n == 0]
    if empty:
        raise ConfigurationError(f"Масштаб {scale} даёт пустые слои: {empty}")
    return strata


def item_seed(base_seed: int, split: Split, case: Scenario, index: int) -> int:
    """Детерминированный сид отдельной записи, независимый от порядка построения слоёв."""
    return int(np.random.SeedSequence([base_seed, int(split), int(case), index]).generate_state(1)[0])


def build_stratum(cfg: SimConfig, spec: RasterSpec, split: Split, case: Scenario, count: int) -> dict:
    """
    Строит один слой: count независимых записей по n отсчётов, каждая растеризуется в один битмап.

    У каждой записи свой сид, поэтому у каждой занятой записи свой коэффициент канала h.
    """
    n = cfg.n_samples_per_window
    pixels = np.empty((count, spec.height, spec.width), dtype=np.float32)
    dropped = np.empty(count, dtype=np.uint32)
    for i in range(count):
        item_cfg = cfg.model_copy(update={"rng_seed": item_seed(cfg.rng_seed, split, case, i)})
        bitmap = rasterize(generate(item_cfg, n, case).samples, spec)
        pixels[i] = bitmap.pixels
        dropped[i] = bitmap.n_dropped
    label = Label.LEGITIMATE if case.is_legitimate else Label.ATTACK
    return {
        "pixels": pixels,
        "labels": np.full(count, int(label), dtype=np.uint8),
        "cases": np.full(count, int(case), dtype=np.uint8),
        "splits": np.full(count, int(split), dtype=np.uint8),
        "n_source": np.full(count, n, dtype=np.uint32),
        "n_dropped": dropped,
    }


def build_paper_splits(cfg: SimConfig, spec: RasterSpec, scale: float) -> LabeledDataset:
    """
    Собирает наборы D0, D1 и D1* с разбиением train/val/test по протоколу обучения.

    :param cfg: Конфигурация симулятора (n и базовый сид).
    :param spec: Параметры растеризации.
    :param scale: Масштаб в (0, 1]; при scale=1 получается 4000+4000 / 600 / 800 битмапов.
    :return: Размеченный набор с проверенной гигиеной разбиения.
    """
    cfg.validate_invariants()
    spec.validate_invariants()
    strata = split_strata(scale)
    logging.info(f"Построение набора: scale={scale}, n={cfg.n_samples_per_window}, "
                 f"{spec.height}x{spec.width}, seed={cfg.rng_seed}, слоёв {len(strata)}")

    jobs = [(cfg, spec, split, case, count) for split, case, count in strata]
    parts = run_ordered(build_stratum, tqdm(jobs, desc="strata", disable=not settings.progress))

    dataset = LabeledDataset(
        pixels=np.concatenate([p["pixels"] for p in parts]),
        labels=np.concatenate([p["labels"] for p in parts]),
        cases=np.concatenate([p["cases"] for p in parts]),
        splits=np.concatenate([p["splits"] for p in parts]),
        n_source=np.concatenate([p["n_source"] for p in parts]),
        n_dropped=np.concatenate([p["n_dropped"] for p in parts]),
        spec=spec,
        n_per_bitmap=cfg.n_samples_per_window,
    )
    dataset.validate_invariants()
    for (split, case), count in dataset.stratum_counts().items():
        logging.info(f"Слой {split.name}/{case.name}: {count} битмапов")
    return dataset
