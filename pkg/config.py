import os
import logging
from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict


LOG_FORMAT = "%(levelname)s %(asctime)s - %(message)s"
# Настройка логирования только для консоли
console_handler = logging.StreamHandler()
console_handler.setLevel(logging.INFO)
console_handler.setFormatter(logging.Formatter(LOG_FORMAT))

logging.basicConfig(
    level=logging.INFO,
    format=LOG_FORMAT,
    handlers=[console_handler]
)

logger = logging.getLogger()

# Загрузка переменных окружения из файла .env
load_dotenv()

TOOL_VERSION = "0.3.0"

# Сигнатуры бинарных файлов: 14 байт магии + u16 версия = 16 байт
RECORDING_MAGIC = b"JAMWATCH-IQREC"
DATASET_MAGIC = b"JAMWATCH-DATAS"
CHECKPOINT_MAGIC = b"JAMWATCH-MODEL"
FORMAT_VERSION = 1

# Окно IQ-плоскости и разрешение битмапов по умолчанию
AXIS_MIN = -1.5
AXIS_MAX = 1.5
DEFAULT_RESOLUTION = 128
STUDY_WINDOW_LENGTHS = (256, 1024, 2048)

# Объёмы выборок при scale=1
FULL_TRAIN_PER_CLASS = 4000
FULL_VAL_TOTAL = 600
FULL_TEST_TOTAL = 800

# Сетка порогов и целевой уровень FA/MD
THRESHOLD_GRID_POINTS = 1001
TARGET_RATE = 1e-2
CAE_SCORE_HEADROOM = 10.0


class Settings(BaseSettings):
    """Глобальная конфигурация приложения на основе Pydantic BaseSettings."""

    model_config = SettingsConfigDict(env_prefix="JAMWATCH_", extra="ignore")

    threads: int = os.cpu_count() or 1  # Ограничение числа рабочих потоков (JAMWATCH_THREADS)
    log_level: str = "INFO"
    artifacts_dir: str = "artifacts"  # Каталог артефактов по умолчанию
    progress: bool = True  # Показывать ли прогресс-бары tqdm


settings = Settings()
logger.setLevel(settings.log_level.upper())
