"""Сквозные проверки на синтетических данных (pytest -m slow)."""
import numpy as np
import pytest

from src.data.simulation import make_sim_dataset
from src.models.cart import select_depth_cv
from src.selection.model import SelectionConfig
from src.selection.selector import run_selection

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def sim_report():
    dataset = make_sim_dataset(n=1000, d=3, seed=0)
    return run_selection(dataset, config=SelectionConfig(n_iterations=10, master_seed=0), jobs=None)


def test_relaxed_tree_beats_crisp_tree(sim_report):
    assert sim_report.improvement
    assert sim_report.gamma_star <= 20
    assert sim_report.performance_at_star - sim_report.dt_mean >= 0.03
    assert sim_report.agreement_at_star >= 0.6
    assert sim_report.verdict.kind == "flexible"


def test_high_gamma_stays_close_to_tree(sim_report):
    point = sim_report.curve_point(900.0)
    pooled = np.sqrt((point.sd_performance ** 2 + sim_report.dt_sd ** 2) / 2)
    assert abs(point.mean_performance - sim_report.dt_mean) <= 3 * pooled + 1e-12


def test_sim_depth_from_cross_validation():
    dataset = make_sim_dataset(n=1000, d=3, seed=0)
    depth, _ = select_depth_cv(dataset.features, dataset.labels, list(range(1, 9)), folds=5, seed=0)
    assert 3 <= depth <= 5
