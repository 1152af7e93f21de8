import logging
from typing import Optional

import numpy as np
from sklearn.metrics import auc

from config import TARGET_RATE, THRESHOLD_GRID_POINTS
from exceptions import UsageError
from models import DetectionReport, ScoreSet


def threshold_grid(points: int = THRESHOLD_GRID_POINTS) -> np.ndarray:
    """Равномерная сетка порогов на [0, 1]."""
    if points < 2:
        raise UsageError(f"Сетка порогов должна содержать не меньше 2 точек, получено {points}")
    return np.linspace(0.0, 1.0, points)


def error_rates(scores: ScoreSet, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Доли ложных тревог и пропусков на каждом пороге.

    FA(τ) — доля элементов с меткой 0 и оценкой ≥ τ, MD(τ) — доля элементов с меткой 1 и оценкой < τ.

    :raises UsageError: если в наборе представлен только один класс.
    """
    legit = np.sort(scores.scores[scores.labels == 0])
    attack = np.sort(scores.scores[scores.labels == 1])
    if legit.size == 0 or attack.size == 0:
        raise UsageError("Для кривых FA/MD нужны элементы обоих классов")
    # searchsorted(..., "left") даёт число оценок строго меньше τ
    fa = 1.0 - np.searchsorted(legit, grid, side="left") / legit.size
    md = np.searchsorted(attack, grid, side="left") / attack.size
    return fa, md


def trapezoid_auc(fa: np.ndarray, md: np.ndarray) -> float:
    """Площадь под ROC (FA, 1 - MD) по трапециям; кривая замыкается точками (0, 0) и (1, 1)."""
    x = np.concatenate([[0.0], fa, [1.0]])
    y = np.concatenate([[0.0], 1.0 - md, [1.0]])
    # При равных FA точки идут по возрастанию TPR
    order = np.lexsort((y, x))
    return float(auc(x[order], y[order]))


def fa_md_curves(scores: ScoreSet, grid: Optional[np.ndarray] = None, target_rate: float = TARGET_RATE) -> DetectionReport:
    """
    Кривые FA/MD, пороги достижения целевой частоты ошибок и их разнесение.

    tau_fa — наименьший порог сетки с FA ≤ target_rate, tau_md — наибольший с MD ≤ target_rate,
    separation = tau_md - tau_fa.

    :param scores: Оценки с метками обоих классов.
    :param grid: Возрастающая последовательность порогов; по умолчанию 1001 точка на [0, 1].
    :param target_rate: Целевая частота ошибок.
    :return: DetectionReport.
    """
    grid = threshold_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) < 0):
        raise UsageError("Сетка порогов должна быть непустой и неубывающей")
    if not 0.0 <= target_rate <= 1.0:
        raise UsageError(f"Целевая частота ошибок вне [0, 1]: {target_rate}")
    fa, md = error_rates(scores, grid)

    reach_fa = np.flatnonzero(fa <= target_rate)
    if reach_fa.size:
        tau_fa = float(grid[reach_fa[0]])
    else:
        tau_fa = 1.0
        logging.warning(f"{scores.source.value}: ни один порог не даёт FA ≤ {target_rate}, tau_fa принят равным 1")
    reach_md = np.flatnonzero(md <= target_rate)
    if reach_md.size:
        tau_md = float(grid[reach_md[-1]])
    else:
        tau_md = 0.0
        logging.warning(f"{scores.source.value}: ни один порог не даёт MD ≤ {target_rate}, tau_md принят равным 0")

    return DetectionReport(
        thresholds=grid,
        fa_curve=fa,
        md_curve=md,
        tau_fa=tau_fa,
        tau_md=tau_md,
        separation=float(np.clip(tau_md - tau_fa, -1.0, 1.0)),
        target_rate=target_rate,
        auc=trapezoid_auc(fa, md),
        source=scores.source,
    )


def relative_gain(separation_cnn: float, separation_cae: float) -> float:
    """Относительный выигрыш (sep_cnn - sep_cae) / sep_cae; NaN при нулевом разнесении CAE."""
    if separation_cae == 0:
        return float("nan")
    return (separation_cnn - separation_cae) / separation_cae
