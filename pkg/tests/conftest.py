import numpy as np
import pytest

from chains.dataset_builder import build_paper_splits
from config import settings
from models import RasterSpec, SimConfig

# Прогресс-бары tqdm в тестах только засоряют вывод
settings.progress = False

TINY_RESOLUTION = 8


@pytest.fixture(scope="session")
def tiny_spec() -> RasterSpec:
    return RasterSpec(height=TINY_RESOLUTION, width=TINY_RESOLUTION)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_spec):
    """Маленький набор 8×8: 40+40 train, 6 val, 8 test."""
    return build_paper_splits(SimConfig(n_samples_per_window=64, rng_seed=3), tiny_spec, 0.01)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
