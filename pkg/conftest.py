import logging

import numpy as np
import pytest

from src.data.dataset import Dataset
from src.data.simulation import make_sim_dataset


@pytest.fixture(autouse=True)
def isolated_logging(tmp_path, monkeypatch):
    """Лог-файл во временном каталоге; обработчики корневого логгера сбрасываются после теста."""
    monkeypatch.setenv("NDT_SELECT_LOG_FILE", str(tmp_path / "logs" / "test.log"))
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()


@pytest.fixture
def small_sim() -> Dataset:
    return make_sim_dataset(n=120, d=2, seed=3)


@pytest.fixture
def three_class_dataset() -> Dataset:
    rng = np.random.default_rng(11)
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    labels = np.repeat(np.arange(3), 30)
    features = centers[labels] + rng.standard_normal((90, 2))
    return Dataset(features, labels, ("a", "b"), 3, name="blobs3")
