import logging
import math
import warnings
from typing import Callable

import numpy as np
from scipy.stats import spearmanr
from sklearn.metrics import roc_auc_score

from detector.glrt import (TOY_BOX, attack_sample, evaluation_grid, glrt_oracle_fit, glrt_scores,
                           likelihood_ratio_scores, toy_log_pdf, toy_sample)
from exceptions import UsageError
from models import EquivalenceReport, TrainConfig
from neural.architectures import MlpModel
from neural.training import fit, predict
from states import LossName, ToyDensity

MIN_TRAIN = 1000
SPEARMAN_MIN = 0.9
AUC_GAP_MAX = 0.03
KDE_BANDWIDTH = 0.2
TEST_PER_CLASS = 2000


def labeled_toy_set(toy: ToyDensity, rng: np.random.Generator, per_class: int) -> tuple[np.ndarray, np.ndarray]:
    """Перемешанная выборка: H0 из игрушечной плотности (метка 0) и H1* равномерно на квадрате (метка 1)."""
    x = np.concatenate([toy_sample(toy, rng, per_class), attack_sample(rng, per_class)])
    y = np.concatenate([np.zeros(per_class), np.ones(per_class)])
    order = rng.permutation(y.size)
    return x[order], y[order]


def compare_to_glrt(toy: ToyDensity, score_fn: Callable[[np.ndarray], np.ndarray], test_x: np.ndarray,
                    test_y: np.ndarray, n_train: int = 0) -> EquivalenceReport:
    """
    Сравнивает детектор с аналитическим GLRT.

    На сетке считается ранговая корреляция Спирмена между score_fn(x) и -log p(x|H0),
    на тестовой выборке — разность AUC детектора и GLRT.

    :param score_fn: Отображение точек (N, 2) в оценки, большие значения означают атаку.
    :return: EquivalenceReport без полей обучения и KDE.
    """
    grid = evaluation_grid()
    with warnings.catch_warnings():
        # Постоянная оценка даёт неопределённую корреляцию, это отражается в отчёте
        warnings.simplefilter("ignore")
        rho = spearmanr(score_fn(grid), -toy_log_pdf(toy, grid)).statistic
    spearman = float(rho) if rho is not None and np.isfinite(rho) else float("nan")

    auc_nn = float(roc_auc_score(test_y, score_fn(test_x)))
    auc_glrt = float(roc_auc_score(test_y, glrt_scores(toy_log_pdf(toy, test_x))))
    auc_lr = float(roc_auc_score(test_y, likelihood_ratio_scores(toy, test_x, TOY_BOX)))
    gap = abs(auc_nn - auc_glrt)

    if math.isnan(spearman):
        passed, reason = False, "ранговая корреляция не определена (постоянная оценка)"
        logging.warning(f"{toy.value}: {reason}")
    elif spearman < SPEARMAN_MIN:
        passed, reason = False, f"spearman {spearman:.4f} < {SPEARMAN_MIN}"
    elif gap > AUC_GAP_MAX:
        passed, reason = False, f"разность AUC {gap:.4f} > {AUC_GAP_MAX}"
    else:
        passed, reason = True, ""
    return EquivalenceReport(toy=toy, n_train=n_train, spearman=spearman, auc_nn=auc_nn, auc_glrt=auc_glrt,
                             auc_gap=gap, auc_lr=auc_lr, auc_kde=float("nan"), passed=passed, reason=reason)


def theorem1_check(toy: ToyDensity, n_train: int, cfg: TrainConfig, self_test: bool = False,
                   hidden: tuple = (32, 32), kde_bandwidth: float = KDE_BANDWIDTH) -> EquivalenceReport:
    """
    Эмпирическая проверка: MLP, обученный отличать H0 от равномерной атаки с MSE, ранжирует точки как GLRT.

    :param toy: Игрушечная плотность H0.
    :param n_train: Число обучающих точек каждого класса (≥ 1000).
    :param cfg: Параметры обучения MLP; функция потерь по умолчанию MSE.
    :param self_test: Сравнить GLRT с самим собой вместо MLP.
    :raises UsageError: если n_train < 1000.
    :raises NumericError: если обучение расходится.
    """
    toy = ToyDensity(toy)
    cfg.validate_invariants()
    if n_train < MIN_TRAIN:
        raise UsageError(f"n_train должно быть не меньше {MIN_TRAIN}, получено {n_train}")
    rng = np.random.default_rng(cfg.rng_seed)
    train_x, train_y = labeled_toy_set(toy, rng, n_train)
    val_x, val_y = labeled_toy_set(toy, rng, max(n_train // 5, 200))
    test_x, test_y = labeled_toy_set(toy, rng, TEST_PER_CLASS)

    train_loss = val_loss = float("nan")
    if self_test:
        def score_fn(x):
            return glrt_scores(toy_log_pdf(toy, x))
    else:
        train_cfg = cfg.model_copy(update={"loss": cfg.loss or LossName.MSE, "chunk_size": cfg.batch_size})
        model = MlpModel(input_dim=2, hidden=hidden, rng_seed=cfg.rng_seed)
        model, history = fit(model, train_x, train_y[:, None], val_x, val_y[:, None], train_cfg)
        train_loss = history.train_loss[history.best_epoch - 1]
        val_loss = history.val_loss[history.best_epoch - 1]

        def score_fn(x):
            return predict(model, x, batch_size=4096).ravel()

    report = compare_to_glrt(toy, score_fn, test_x, test_y, n_train)
    kde = glrt_oracle_fit(train_x[train_y == 0], kde_bandwidth)
    auc_kde = float(roc_auc_score(test_y, glrt_scores(kde.log_density(test_x))))
    report = report.model_copy(update={"auc_kde": auc_kde, "final_train_loss": train_loss,
                                       "final_val_loss": val_loss})
    logging.info(f"Проверка эквивалентности {toy.value}: spearman={report.spearman:.4f}, "
                 f"AUC nn={report.auc_nn:.4f}, glrt={report.auc_glrt:.4f}, kde={auc_kde:.4f}, "
                 f"пройдена={report.passed}")
    return report
