import logging
from pathlib import Path
from typing import Optional

import typer

from config import settings
from db import load_dataset, save_checkpoint, write_history_csv
from models import LabeledDataset, TrainConfig, TrainHistory
from neural.architectures import SequentialModel, build_model
from neural.training import train
from states import Architecture, ModelChoice
from utils.cli_utils import command_scope, finish_run, load_config_file, pick

# Инициализация роутера
router = typer.Typer()

ARCHITECTURES = {ModelChoice.CNN: Architecture.CNN, ModelChoice.CAE: Architecture.CAE}


def checkpoint_name(model: ModelChoice) -> str:
    return f"{model.value}.ckpt"


def history_name(model: ModelChoice) -> str:
    return f"{model.value}-history.csv"


def train_config_from(values: dict[str, str], **flags) -> TrainConfig:
    """Собирает TrainConfig по приоритету флаг > файл конфигурации > умолчание."""
    defaults = TrainConfig()
    casts = {"learning_rate": float, "batch_size": int, "max_epochs": int, "patience": int, "rng_seed": int,
             "chunk_size": int}
    fields = {name: pick(flags.get(name), values, name, getattr(defaults, name), cast) for name, cast in casts.items()}
    return TrainConfig(**fields)


def train_and_save(model_choice: ModelChoice, dataset: LabeledDataset, cfg: TrainConfig, out_dir: Path,
                   resolution: Optional[int] = None) -> tuple[SequentialModel, TrainHistory, list[Path]]:
    """
    Обучает модель на подходящих ей слоях набора и сохраняет чекпоинт и историю.

    Args:
        model_choice (ModelChoice): cnn или cae.
        dataset (LabeledDataset): Набор данных.
        cfg (TrainConfig): Параметры обучения.
        out_dir (Path): Каталог результатов.
        resolution (int, optional): Разрешение модели; по умолчанию берётся из набора.

    Returns:
        tuple: Модель, история обучения и список записанных файлов.
    """
    resolution = resolution or dataset.spec.height
    model = build_model(ARCHITECTURES[model_choice], resolution, rng_seed=cfg.rng_seed)
    logging.info(f"Модель {model_choice.value}: {model.parameter_count()} параметров, {resolution}x{resolution}")
    model, history = train(model, dataset, cfg)
    artifacts = [save_checkpoint(model, Path(out_dir) / checkpoint_name(model_choice)),
                 write_history_csv(history, Path(out_dir) / history_name(model_choice))]
    logging.info(f"Лучшая эпоха {history.best_epoch} из {history.stopped_epoch}")
    return model, history, artifacts


@router.command("train")
def train_handler(
        dataset: Path = typer.Option(..., "--dataset", exists=True, dir_okay=False, help="Файл набора данных."),
        model: ModelChoice = typer.Option(..., "--model", help="Архитектура: cnn или cae."),
        resolution: Optional[int] = typer.Option(None, "--resolution", min=2,
                                                 help="Разрешение модели (по умолчанию как у набора)."),
        learning_rate: Optional[float] = typer.Option(None, "--learning-rate", min=0.0),
        batch_size: Optional[int] = typer.Option(None, "--batch-size", min=1),
        max_epochs: Optional[int] = typer.Option(None, "--max-epochs", min=1),
        patience: Optional[int] = typer.Option(None, "--patience", min=1),
        chunk_size: Optional[int] = typer.Option(None, "--chunk-size", min=1,
                                                 help="Размер микропакета при суммировании градиентов."),
        seed: Optional[int] = typer.Option(None, "--seed", min=0),
        out: Path = typer.Option(Path(settings.artifacts_dir), "--out", help="Каталог результатов."),
        config: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False,
                                              help="Файл конфигурации key=value."),
):
    """Обучает CNN (D0 + D1*) или CAE (только D0) и пишет чекпоинт и историю потерь."""
    with command_scope("train") as started:
        values = load_config_file(config)
        cfg = train_config_from(values, learning_rate=learning_rate, batch_size=batch_size, max_epochs=max_epochs,
                                patience=patience, chunk_size=chunk_size, rng_seed=seed)
        resolution = pick(resolution, values, "resolution", None, int)
        data = load_dataset(dataset)
        _, _, artifacts = train_and_save(model, data, cfg, out, resolution)
        finish_run(out, f"train-{model.value}", started,
                   {"dataset": dataset, "model": model.value, **cfg.model_dump(exclude={"rng_seed", "loss"})},
                   {"train": cfg.rng_seed}, artifacts)
