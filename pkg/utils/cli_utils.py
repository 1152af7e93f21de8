import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Optional

import click
import typer
from pydantic import ValidationError

from db import read_manifest, write_manifest
from exceptions import ConfigurationError, JamwatchError
from models import RunManifest, SimConfig

# Коды завершения команд
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def load_config_file(path: Optional[Path]) -> dict[str, str]:
    """
    Читает файл конфигурации key=value.

    Args:
        path (Path | None): Путь к файлу или None.

    Returns:
        dict[str, str]: Значения из файла (пустой словарь, если файл не задан).
    """
    if path is None:
        return {}
    values = read_manifest(path)
    logging.info(f"Загружена конфигурация {path}: {sorted(values)}")
    return values


def pick(flag, values: dict[str, str], key: str, default, cast: Callable = str):
    """Значение параметра по приоритету: флаг командной строки, затем файл конфигурации, затем умолчание."""
    if flag is not None:
        return flag
    if key in values and values[key] != "":
        try:
            return cast(values[key])
        except ValueError as e:
            raise ConfigurationError(f"Некорректное значение {key}={values[key]!r} в файле конфигурации") from e
    return default


def sim_config_from(values: dict[str, str], **overrides) -> SimConfig:
    """
    Собирает SimConfig из файла конфигурации (ключи sim.<поле> или <поле>) и явных значений.

    :raises ConfigurationError: при нарушении инвариантов.
    """
    fields = {}
    for name in SimConfig.model_fields:
        raw = values.get(f"sim.{name}", values.get(name))
        if raw not in (None, ""):
            fields[name] = raw
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return SimConfig(**fields)


def command_line() -> str:
    ctx = click.get_current_context(silent=True)
    if ctx is None:
        return ""
    params = " ".join(f"--{name.replace('_', '-')}={value}" for name, value in ctx.params.items() if value is not None)
    return f"{ctx.command_path} {params}".strip()


@contextmanager
def command_scope(name: str):
    """
    Оборачивает тело команды: отображает исключения в коды завершения и замеряет длительность.

    ConfigurationError и ошибки валидации pydantic дают код 2, остальные ошибки конвейера и ввода-вывода — код 1.
    """
    started = time.perf_counter()
    logging.info(f"Команда {name} запущена")
    try:
        yield started
    except (ConfigurationError, ValidationError) as e:
        logging.error(f"{name}: ошибка конфигурации: {e}")
        typer.echo(f"Ошибка конфигурации: {e}", err=True)
        raise typer.Exit(EXIT_USAGE)
    except (JamwatchError, OSError) as e:
        logging.error(f"{name}: {type(e).__name__}: {e}")
        typer.echo(f"Ошибка: {e}", err=True)
        raise typer.Exit(EXIT_RUNTIME)
    logging.info(f"Команда {name} завершена за {time.perf_counter() - started:.2f} с")


def finish_run(out_dir: Path, name: str, started: float, config: dict, seeds: dict, artifacts: list) -> Path:
    """Пишет паспорт запуска manifest-<name>.txt со списком всех созданных файлов."""
    manifest = RunManifest(
        command=command_line() or name,
        config={key: str(value) for key, value in config.items()},
        seeds={key: int(value) for key, value in seeds.items()},
        artifacts=[str(path) for path in artifacts],
        duration_s=time.perf_counter() - started,
    )
    return write_manifest(manifest, Path(out_dir) / f"manifest-{name}.txt")
