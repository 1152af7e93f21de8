import logging
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from config import TARGET_RATE, THRESHOLD_GRID_POINTS, settings
from db import load_checkpoint, load_dataset, write_comparison_csv, write_report_csv
from detector.curves import fa_md_curves, relative_gain, threshold_grid
from detector.scoring import cae_calibration, score_dataset
from exceptions import UsageError
from models import DetectionReport, LabeledDataset
from neural.architectures import SequentialModel
from states import Architecture, JammerKind, Label, ModelChoice, Split
from utils.cli_utils import command_scope, finish_run

# Инициализация роутера
router = typer.Typer()

POOLED = "pooled"
KINDS = [kind.value for kind in JammerKind] + [POOLED]


def report_name(model: ModelChoice, kind: str) -> str:
    return f"report-{model.value}-{kind}.csv"


def evaluation_mask(dataset: LabeledDataset, kind: str) -> np.ndarray:
    """Тестовые элементы D0 и D1 выбранного типа глушителя (pooled — все типы)."""
    legit = dataset.mask(split=Split.TEST, label=int(Label.LEGITIMATE))
    if kind == POOLED:
        jammed = dataset.mask(split=Split.TEST, label=int(Label.ATTACK))
    else:
        jammed = dataset.mask(split=Split.TEST, cases=[JammerKind(kind).scenario])
    return legit | jammed


def evaluate_model(model: SequentialModel, dataset: LabeledDataset, grid: np.ndarray,
                   target_rate: float) -> dict[str, DetectionReport]:
    """
    Строит DetectionReport модели по каждому типу глушителя и по объединённому тесту.

    Args:
        model (SequentialModel): Обученный CNN или CAE.
        dataset (LabeledDataset): Набор с тестовой частью.
        grid (np.ndarray): Сетка порогов.
        target_rate (float): Целевая частота FA/MD.

    Returns:
        dict[str, DetectionReport]: Отчёты по ключам uniform, gaussian, frame, pooled.
    """
    if not dataset.mask(split=Split.TEST).any():
        raise UsageError("В наборе нет тестовой части")
    calibration = cae_calibration(model, dataset) if model.architecture is Architecture.CAE else None
    pooled = evaluation_mask(dataset, POOLED)
    scores = score_dataset(model, dataset, pooled, calibration)
    reports = {}
    for kind in KINDS:
        selected = evaluation_mask(dataset, kind)[pooled]
        if not np.any(scores.labels[selected] == int(Label.ATTACK)):
            logging.warning(f"В тесте нет битмапов глушителя {kind}, отчёт пропущен")
            continue
        reports[kind] = fa_md_curves(scores.restrict(selected), grid, target_rate)
        logging.info(f"{model.architecture.name}/{kind}: separation={reports[kind].separation:.4f}, "
                     f"auc={reports[kind].auc:.4f}")
    return reports


def comparison_rows(results: dict[ModelChoice, dict[str, DetectionReport]]) -> list[list]:
    """Строки сводки: разнесение порогов и AUC каждой модели и относительный выигрыш CNN над CAE."""
    rows = []
    for model, reports in results.items():
        for kind, report in reports.items():
            rows.append([model.value, kind, report.separation, report.auc, report.tau_fa, report.tau_md, None])
    if ModelChoice.CNN in results and ModelChoice.CAE in results:
        for kind in KINDS:
            cnn, cae = results[ModelChoice.CNN].get(kind), results[ModelChoice.CAE].get(kind)
            if cnn and cae:
                rows.append(["cnn_vs_cae", kind, None, None, None, None,
                             relative_gain(cnn.separation, cae.separation)])
    return rows


def evaluate_and_save(checkpoints: dict[ModelChoice, Path], dataset: LabeledDataset, out_dir: Path,
                      target_rate: float = TARGET_RATE, grid_points: int = THRESHOLD_GRID_POINTS):
    """
    Оценивает чекпоинты на тестовой части и пишет отчёты и сводку сравнения.

    Returns:
        tuple: Отчёты по моделям и список записанных файлов.
    """
    grid = threshold_grid(grid_points)
    results, artifacts = {}, []
    for model_choice, path in checkpoints.items():
        model = load_checkpoint(path)
        if model.architecture is not Architecture[model_choice.name]:
            raise UsageError(f"Чекпоинт {path} содержит {model.architecture.name}, ожидался {model_choice.name}")
        results[model_choice] = evaluate_model(model, dataset, grid, target_rate)
        for kind, report in results[model_choice].items():
            artifacts.append(write_report_csv(report, Path(out_dir) / report_name(model_choice, kind)))
    artifacts.append(write_comparison_csv(comparison_rows(results), Path(out_dir) / "comparison.csv"))
    return results, artifacts


@router.command("eval")
def eval_handler(
        dataset: Path = typer.Option(..., "--dataset", exists=True, dir_okay=False, help="Файл набора данных."),
        cnn: Optional[Path] = typer.Option(None, "--cnn", exists=True, dir_okay=False, help="Чекпоинт CNN."),
        cae: Optional[Path] = typer.Option(None, "--cae", exists=True, dir_okay=False, help="Чекпоинт CAE."),
        split: str = typer.Option("test", "--split", help="Часть выборки для оценки (только test)."),
        target_rate: float = typer.Option(TARGET_RATE, "--target-rate", min=0.0, max=1.0),
        grid_points: int = typer.Option(THRESHOLD_GRID_POINTS, "--grid-points", min=2),
        out: Path = typer.Option(Path(settings.artifacts_dir), "--out", help="Каталог результатов."),
):
    """Считает кривые FA/MD по типам глушителя и сводку сравнения моделей на тестовой части."""
    if split.lower() != "test":
        raise typer.BadParameter("оценка выполняется только на тестовой части", param_hint="'--split'")
    checkpoints = {choice: path for choice, path in ((ModelChoice.CNN, cnn), (ModelChoice.CAE, cae)) if path}
    if not checkpoints:
        raise typer.BadParameter("нужен хотя бы один чекпоинт", param_hint="'--cnn' / '--cae'")
    with command_scope("eval") as started:
        data = load_dataset(dataset)
        _, artifacts = evaluate_and_save(checkpoints, data, out, target_rate, grid_points)
        finish_run(out, "eval", started,
                   {"dataset": dataset, "target_rate": target_rate, "grid_points": grid_points,
                    **{f"checkpoint_{k.value}": v for k, v in checkpoints.items()}}, {}, artifacts)
