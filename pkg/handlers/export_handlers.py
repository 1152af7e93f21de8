import logging
from pathlib import Path
from typing import Optional

import typer

from chains.rasterize import window_stream
from chains.signal_sim import generate
from config import DEFAULT_RESOLUTION, settings
from db import load_dataset, load_recording, save_recording
from exceptions import UsageError
from models import Bitmap, RasterSpec
from states import Scenario
from utils.cli_utils import command_scope, finish_run, load_config_file, sim_config_from
from utils.pgm_utils import export_pgm

# Инициализация роутера
router = typer.Typer()

SCENARIOS = {scenario.name.lower(): scenario for scenario in Scenario}


def _select(count: int, indices: list[int], what: str) -> list[int]:
    chosen = indices or [0]
    for index in chosen:
        if not 0 <= index < count:
            raise UsageError(f"Индекс {index} вне диапазона {what} (всего {count})")
    return chosen


@router.command("export-pgm")
def export_pgm_handler(
        dataset: Optional[Path] = typer.Option(None, "--dataset", exists=True, dir_okay=False,
                                               help="Файл набора данных."),
        recording: Optional[Path] = typer.Option(None, "--recording", exists=True, dir_okay=False,
                                                 help="Файл записи IQ."),
        index: list[int] = typer.Option([], "--index", help="Номера элементов или окон (можно повторять)."),
        n: int = typer.Option(256, "--n", min=1, help="Длина окна для записи."),
        resolution: int = typer.Option(DEFAULT_RESOLUTION, "--resolution", min=2, help="Разрешение для записи."),
        out: Path = typer.Option(Path(settings.artifacts_dir), "--out", help="Каталог результатов."),
):
    """Экспортирует битмапы набора или окна записи в PGM для визуального осмотра."""
    if (dataset is None) == (recording is None):
        raise typer.BadParameter("укажите ровно один из --dataset и --recording", param_hint="'--dataset'")
    with command_scope("export-pgm") as started:
        Path(out).mkdir(parents=True, exist_ok=True)
        artifacts = []
        if dataset is not None:
            data = load_dataset(dataset)
            for i in _select(len(data), index, "набора"):
                bitmap = Bitmap(pixels=data.pixels[i], n_source_samples=int(data.n_source[i]),
                                n_dropped=int(data.n_dropped[i]))
                path = Path(out) / f"item-{i}.pgm"
                export_pgm(bitmap, path)
                artifacts.append(path)
        else:
            bitmaps = window_stream(load_recording(recording), n, RasterSpec(height=resolution, width=resolution))
            for i in _select(len(bitmaps), index, "окон"):
                path = Path(out) / f"window-{i}.pgm"
                export_pgm(bitmaps[i], path)
                artifacts.append(path)
        finish_run(out, "export-pgm", started, {"source": dataset or recording, "n": n, "resolution": resolution},
                   {}, artifacts)


@router.command("generate-recording")
def generate_recording_handler(
        scenario: str = typer.Option(..., "--scenario", help=f"Сценарий: {', '.join(SCENARIOS)}."),
        count: int = typer.Option(2048, "--count", min=1, help="Число отсчётов IQ."),
        seed: int = typer.Option(0, "--seed", min=0),
        out: Path = typer.Option(Path(settings.artifacts_dir) / "recording.jwr", "--out", help="Файл записи."),
        config: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False,
                                              help="Файл конфигурации key=value."),
):
    """Генерирует одну запись IQ выбранного сценария в бинарном формате."""
    if scenario.lower() not in SCENARIOS:
        raise typer.BadParameter(f"неизвестный сценарий {scenario}", param_hint="'--scenario'")
    with command_scope("generate-recording") as started:
        cfg = sim_config_from(load_config_file(config), rng_seed=seed)
        recording = generate(cfg, count, SCENARIOS[scenario.lower()])
        path = save_recording(recording, out)
        logging.info(f"Запись {recording.scenario.name} из {len(recording)} отсчётов сохранена в {path}")
        finish_run(Path(out).parent, "generate-recording", started,
                   {"scenario": recording.scenario.name.lower(), "count": count}, {"sim": seed}, [path])
