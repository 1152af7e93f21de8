import logging
from pathlib import Path
from typing import Optional

import click
import typer

from chains.dataset_builder import build_paper_splits
from config import DEFAULT_RESOLUTION, settings
from db import save_dataset, write_dataset_manifest
from exceptions import ConfigurationError
from models import LabeledDataset, RasterSpec, SimConfig
from states import RasterMode
from utils.cli_utils import command_scope, finish_run, load_config_file, pick, sim_config_from

# Инициализация роутера
router = typer.Typer()

DATASET_FILE = "dataset.jwd"
DATASET_META_FILE = "dataset-meta.txt"
RASTER_MODES = {"binary": RasterMode.BINARY, "count": RasterMode.COUNT_NORMALIZED}


def generate_dataset(cfg: SimConfig, spec: RasterSpec, scale: float, out_dir: Path) -> tuple[LabeledDataset, list[Path]]:
    """
    Строит набор по протоколу обучения и сохраняет его вместе с файлом провенанса.

    Args:
        cfg (SimConfig): Конфигурация симулятора.
        spec (RasterSpec): Параметры растеризации.
        scale (float): Масштаб выборки.
        out_dir (Path): Каталог результатов.

    Returns:
        tuple: Набор данных и список записанных файлов.
    """
    dataset = build_paper_splits(cfg, spec, scale)
    dataset_path = save_dataset(dataset, Path(out_dir) / DATASET_FILE)
    meta_path = write_dataset_manifest(dataset, cfg, scale, Path(out_dir) / DATASET_META_FILE)
    return dataset, [dataset_path, meta_path]


@router.command("generate")
def generate_handler(
        n: Optional[int] = typer.Option(None, "--n", min=1, help="Число отсчётов IQ на битмап."),
        resolution: Optional[int] = typer.Option(None, "--resolution", min=2, help="Сторона битмапа в пикселях."),
        scale: Optional[float] = typer.Option(None, "--scale", min=0.0, max=1.0, help="Масштаб выборки в (0, 1]."),
        seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Базовый сид симулятора."),
        mode: Optional[str] = typer.Option(None, "--mode", click_type=click.Choice(list(RASTER_MODES)),
                                           help="Режим растеризации: binary или count."),
        out: Path = typer.Option(Path(settings.artifacts_dir), "--out", help="Каталог результатов."),
        config: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False,
                                              help="Файл конфигурации key=value."),
):
    """Генерирует набор D0/D1/D1* и пишет его в бинарном формате с манифестом."""
    with command_scope("generate") as started:
        values = load_config_file(config)
        n = pick(n, values, "n", 256, int)
        resolution = pick(resolution, values, "resolution", DEFAULT_RESOLUTION, int)
        scale = pick(scale, values, "scale", 0.1, float)
        seed = pick(seed, values, "seed", 0, int)
        mode_name = pick(mode, values, "mode", "binary")
        if mode_name not in RASTER_MODES:
            raise ConfigurationError(f"Неизвестный режим растеризации: {mode_name}")
        mode = RASTER_MODES[mode_name]

        cfg = sim_config_from(values, n_samples_per_window=n, rng_seed=seed)
        spec = RasterSpec(height=resolution, width=resolution, mode=mode)
        dataset, artifacts = generate_dataset(cfg, spec, scale, out)
        logging.info(f"Набор из {len(dataset)} битмапов сохранён в {out}")
        finish_run(out, "generate", started,
                   {"n": n, "resolution": resolution, "scale": scale, "mode": int(mode)}, {"sim": seed}, artifacts)
