from pathlib import Path
from typing import Optional

import typer

from config import settings
from db import write_equivalence_csv
from detector.equivalence import MIN_TRAIN, theorem1_check
from handlers.train_handlers import train_config_from
from states import ToyDensity
from utils.cli_utils import command_scope, finish_run, load_config_file

# Инициализация роутера
router = typer.Typer()


@router.command("theorem1")
def theorem1_handler(
        toy: ToyDensity = typer.Option(ToyDensity.GAUSS, "--toy", help="Игрушечная плотность H0."),
        n_train: int = typer.Option(10000, "--n-train", min=MIN_TRAIN, help="Обучающих точек на класс."),
        glrt_vs_glrt: bool = typer.Option(False, "--glrt-vs-glrt", help="Сравнить GLRT с самим собой."),
        learning_rate: Optional[float] = typer.Option(None, "--learning-rate", min=0.0),
        batch_size: Optional[int] = typer.Option(None, "--batch-size", min=1),
        max_epochs: Optional[int] = typer.Option(None, "--max-epochs", min=1),
        patience: Optional[int] = typer.Option(None, "--patience", min=1),
        seed: Optional[int] = typer.Option(None, "--seed", min=0),
        out: Path = typer.Option(Path(settings.artifacts_dir), "--out", help="Каталог результатов."),
        config: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False,
                                              help="Файл конфигурации key=value."),
):
    """Проверяет эквивалентность MLP-классификатора и GLRT на игрушечной плотности."""
    with command_scope("theorem1") as started:
        values = load_config_file(config)
        cfg = train_config_from(values, learning_rate=learning_rate, batch_size=batch_size, max_epochs=max_epochs,
                                patience=patience, rng_seed=seed)
        report = theorem1_check(toy, n_train, cfg, self_test=glrt_vs_glrt)
        path = write_equivalence_csv(report, Path(out) / f"equivalence-{toy.value}.csv")
        typer.echo(f"spearman={report.spearman:.4f} auc_gap={report.auc_gap:.4f} passed={report.passed}")
        finish_run(out, f"theorem1-{toy.value}", started,
                   {"toy": toy.value, "n_train": n_train, "glrt_vs_glrt": glrt_vs_glrt,
                    **cfg.model_dump(exclude={"rng_seed", "loss"})}, {"train": cfg.rng_seed}, [path])
