import logging
from pathlib import Path
from typing import Optional

import typer

from config import STUDY_WINDOW_LENGTHS, settings
from db import write_csv
from detector.curves import relative_gain
from handlers.eval_handlers import KINDS, evaluate_and_save
from handlers.generate_handlers import generate_dataset
from handlers.train_handlers import checkpoint_name, train_and_save, train_config_from
from models import RasterSpec
from states import ModelChoice
from utils.cli_utils import command_scope, finish_run, load_config_file, pick, sim_config_from

# Инициализация роутера
router = typer.Typer()

SWEEP_HEADER = ["n", "kind", "separation_cnn", "separation_cae", "gain", "auc_cnn", "auc_cae"]


@router.command("sweep")
def sweep_handler(
        n: list[int] = typer.Option(list(STUDY_WINDOW_LENGTHS), "--n", min=1, help="Длины окна (можно повторять)."),
        scale: Optional[float] = typer.Option(None, "--scale", min=0.0, max=1.0, help="Масштаб выборки (0.1)."),
        resolution: Optional[int] = typer.Option(None, "--resolution", min=8, help="Сторона битмапа (32)."),
        seed: int = typer.Option(0, "--seed", min=0),
        max_epochs: Optional[int] = typer.Option(None, "--max-epochs", min=1),
        patience: Optional[int] = typer.Option(None, "--patience", min=1),
        out: Path = typer.Option(Path(settings.artifacts_dir) / "sweep", "--out", help="Каталог результатов."),
        config: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False,
                                              help="Файл конфигурации key=value."),
):
    """Прогоняет generate → train (CNN и CAE) → eval для каждой длины окна и пишет общую сводку."""
    with command_scope("sweep") as started:
        values = load_config_file(config)
        cfg = train_config_from(values, max_epochs=max_epochs, patience=patience, rng_seed=seed)
        scale = pick(scale, values, "scale", 0.1, float)
        resolution = pick(resolution, values, "resolution", 32, int)
        artifacts, rows = [], []
        for window in n:
            run_dir = Path(out) / f"n{window}"
            logging.info(f"Сценарий sweep: n={window}, каталог {run_dir}")
            sim = sim_config_from(values, n_samples_per_window=window, rng_seed=seed)
            dataset, files = generate_dataset(sim, RasterSpec(height=resolution, width=resolution), scale, run_dir)
            artifacts += files
            for model in ModelChoice:
                artifacts += train_and_save(model, dataset, cfg, run_dir)[2]
            checkpoints = {model: run_dir / checkpoint_name(model) for model in ModelChoice}
            results, files = evaluate_and_save(checkpoints, dataset, run_dir)
            artifacts += files
            for kind in KINDS:
                cnn, cae = results[ModelChoice.CNN].get(kind), results[ModelChoice.CAE].get(kind)
                if cnn and cae:
                    rows.append([window, kind, cnn.separation, cae.separation,
                                 relative_gain(cnn.separation, cae.separation), cnn.auc, cae.auc])
        artifacts.append(write_csv(Path(out) / "sweep-summary.csv", SWEEP_HEADER, rows))
        finish_run(out, "sweep", started, {"n": ",".join(map(str, n)), "scale": scale, "resolution": resolution,
                                           "max_epochs": cfg.max_epochs, "patience": cfg.patience},
                   {"sim": seed, "train": cfg.rng_seed}, artifacts)
