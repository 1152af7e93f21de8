import logging

import typer

from config import TOOL_VERSION, settings
from handlers.eval_handlers import router as eval_router
from handlers.export_handlers import router as export_router
from handlers.generate_handlers import router as generate_router
from handlers.sweep_handlers import router as sweep_router
from handlers.theorem_handlers import router as theorem_router
from handlers.train_handlers import router as train_router

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="jamwatch",
    help="Обнаружение глушения по битмапам созвездий IQ: генерация данных, обучение CNN/CAE, оценка FA/MD.",
    no_args_is_help=True,
    add_completion=False,
)


def include_router(root: typer.Typer, router: typer.Typer):
    """Добавляет команды роутера в корневое приложение на верхний уровень."""
    root.registered_commands.extend(router.registered_commands)


# Включение маршрутов для различных функциональных частей приложения
include_router(app, generate_router)
include_router(app, train_router)
include_router(app, eval_router)
include_router(app, theorem_router)
include_router(app, export_router)
include_router(app, sweep_router)


def show_version(value: bool):
    if value:
        typer.echo(TOOL_VERSION)
        raise typer.Exit()


@app.callback()
def on_startup(
        version: bool = typer.Option(False, "--version", callback=show_version, is_eager=True,
                                     help="Показать версию и выйти."),
):
    """Функция, которая выполняется перед любой командой."""
    logger.debug(f"jamwatch {TOOL_VERSION}, потоков: {settings.threads}")


if __name__ == '__main__':
    app()
