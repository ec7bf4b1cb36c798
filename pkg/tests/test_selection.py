from types import SimpleNamespace

import numpy as np
import pytest

from src.data.dataset import Dataset
from src.errors import SelectionError
from src.models.cart import tree_from_dict
from src.models.ndt import params_from_dict
from src.models.trainer import TrainConfig
from src.selection.interpretation import interpret
from src.selection.model import (
    InterpretationThresholds,
    RunRecord,
    SelectionConfig,
    SelectionReport,
    default_gamma_grid,
    make_gamma_grid,
)
from src.selection.selector import aggregate, argmax_gamma, derive_seed, run_selection


def _record(iteration, gamma_index, grid, perf, agreement=0.5, dt=0.7, failed=False):
    return RunRecord(
        iteration=iteration,
        gamma_index=gamma_index,
        gamma=grid[gamma_index],
        gamma2=1.0,
        ndt_performance=None if failed else perf,
        agreement=None if failed else agreement,
        dt_performance=dt,
        failed=failed,
        error="CompileError: boom" if failed else None,
    )


def _quick_config(**overrides):
    values = dict(
        n_iterations=3,
        master_seed=1,
        depth=2,
        train=TrainConfig(epochs=3, patience=2, lr=0.01),
    )
    values.update(overrides)
    return SelectionConfig(**values)


# --- grid ---

def test_default_grid():
    grid = default_gamma_grid()
    assert len(grid) == 36
    assert grid[0] == 900.0 and grid[-1] == 0.1
    assert grid[9] == 90.0 and grid[27] == 0.9
    assert all(a > b for a, b in zip(grid, list(grid)[1:]))


def test_make_gamma_grid_sorts_and_validates():
    assert list(make_gamma_grid([1, 900, 9])) == [900.0, 9.0, 1.0]
    with pytest.raises(SelectionError):
        make_gamma_grid([9, 9])
    with pytest.raises(SelectionError):
        make_gamma_grid([9, -1])
    with pytest.raises(SelectionError):
        make_gamma_grid([])


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert len({derive_seed(0, i) for i in range(50)}) == 50
    assert derive_seed(0, 1, 2) != derive_seed(0, 1)


# --- aggregate ---

def test_aggregate_mean_and_sample_sd():
    grid = make_gamma_grid([9, 1])
    records = [
        _record(0, 0, grid, 0.8, dt=0.6), _record(0, 1, grid, 0.5, dt=0.6),
        _record(1, 0, grid, 1.0, dt=0.8), _record(1, 1, grid, 0.5, dt=0.8),
    ]
    result = aggregate(records, grid)
    first = result.curve[0]
    assert first.mean_performance == pytest.approx(0.9)
    assert first.sd_performance == pytest.approx(np.sqrt(0.02), abs=1e-12)
    assert first.n_runs == 2
    assert result.curve[1].sd_performance == 0.0
    assert result.dt_mean == pytest.approx(0.7)
    assert result.n_dt == 2
    assert not result.single_iteration


def test_aggregate_single_run_has_zero_sd_and_flag():
    grid = make_gamma_grid([9])
    result = aggregate([_record(0, 0, grid, 0.8)], grid)
    assert result.curve[0].sd_performance == 0.0
    assert result.single_iteration


def test_aggregate_skips_failed_runs():
    grid = make_gamma_grid([9, 1])
    records = [
        _record(0, 0, grid, 0.8), _record(0, 1, grid, 0.4),
        _record(1, 0, grid, 0.0, failed=True), _record(1, 1, grid, 0.6),
    ]
    result = aggregate(records, grid)
    assert result.curve[0].n_runs == 1
    assert result.curve[0].mean_performance == 0.8
    assert result.curve[1].mean_performance == pytest.approx(0.5)


def test_aggregate_without_valid_run_for_gamma_fails():
    grid = make_gamma_grid([9, 1])
    records = [_record(0, 0, grid, 0.8), _record(0, 1, grid, 0.0, failed=True)]
    with pytest.raises(SelectionError, match="1.0"):
        aggregate(records, grid)


# --- argmax ---

def test_argmax_tie_prefers_largest_gamma():
    grid = make_gamma_grid([900, 9, 1])
    assert argmax_gamma([0.8, 0.8, 0.7], grid) == 900.0
    assert argmax_gamma([0.7, 0.8, 0.8], grid) == 9.0


def test_argmax_monotone_curves():
    grid = make_gamma_grid([900, 90, 9, 0.9])
    assert argmax_gamma([0.9, 0.8, 0.7, 0.6], grid) == 900.0
    assert argmax_gamma([0.6, 0.7, 0.8, 0.9], grid) == 0.9


def test_argmax_peak_and_scale_invariance():
    grid = make_gamma_grid([900, 90, 9, 0.9])
    curve = np.array([0.70, 0.75, 0.83, 0.74])
    assert argmax_gamma(curve, grid) == 9.0
    assert argmax_gamma(curve * 4.0, grid) == 9.0
    assert argmax_gamma(curve / 8.0, grid) == 9.0


def test_argmax_length_mismatch():
    with pytest.raises(SelectionError):
        argmax_gamma([0.1, 0.2], make_gamma_grid([1.0]))


# --- interpret ---

def _summary(gamma_star, improvement, agreement, diff=0.0):
    return SimpleNamespace(
        gamma_star=gamma_star,
        improvement=improvement,
        agreement_at_star=agreement,
        performance_diff=diff,
        thresholds=InterpretationThresholds(),
    )


def test_interpret_flexible_with_high_agreement_note():
    verdict = interpret(_summary(7.0, True, 0.87, diff=-0.04))
    assert verdict.kind == "flexible"
    assert verdict.note is not None


def test_interpret_flexible_without_note():
    verdict = interpret(_summary(2.0, True, 0.3, diff=-0.02))
    assert verdict.kind == "flexible"
    assert verdict.note is None


def test_interpret_rigid_when_relaxation_loses():
    verdict = interpret(_summary(900.0, False, 0.55, diff=0.01))
    assert verdict.kind == "rigid"


def test_interpret_equivalent_cases():
    assert interpret(_summary(0.1, False, 0.99)).kind == "equivalent"
    assert interpret(_summary(300.0, True, 0.5, diff=-0.001)).kind == "equivalent"


def test_interpret_uses_custom_thresholds():
    strict = InterpretationThresholds(high_gamma=5.0, high_agreement=0.95)
    assert interpret(_summary(7.0, True, 0.87), strict).kind == "equivalent"


# --- run_selection ---

def test_run_selection_record_count_and_means(small_sim):
    grid = make_gamma_grid([900, 9, 1])
    report = run_selection(small_sim, grid, _quick_config())
    assert len(report.records) == 9
    assert [(r.iteration, r.gamma_index) for r in report.records] == [(i, j) for i in range(3) for j in range(3)]
    assert report.failed_runs == 0
    assert len(report.split_seeds) == 3
    for j, point in enumerate(report.curve):
        perf = [r.ndt_performance for r in report.records if r.gamma_index == j]
        agree = [r.agreement for r in report.records if r.gamma_index == j]
        assert point.mean_performance == pytest.approx(np.mean(perf), abs=1e-12)
        assert point.mean_agreement == pytest.approx(np.mean(agree), abs=1e-12)
        assert point.sd_performance == pytest.approx(np.std(perf, ddof=1), abs=1e-12)
    dt = [report.records[3 * i].dt_performance for i in range(3)]
    assert report.dt_mean == pytest.approx(np.mean(dt), abs=1e-12)
    assert report.gamma_star == argmax_gamma([p.mean_performance for p in report.curve], grid)
    assert report.improvement == (report.performance_at_star > report.dt_mean)
    assert report.verdict is not None


def test_run_selection_is_deterministic(small_sim):
    grid = make_gamma_grid([9, 1])
    first = run_selection(small_sim, grid, _quick_config(n_iterations=2))
    second = run_selection(small_sim, grid, _quick_config(n_iterations=2))
    assert first.model_dump() == second.model_dump()


def test_run_selection_worker_count_does_not_change_results(small_sim):
    grid = make_gamma_grid([9, 1])
    inline = run_selection(small_sim, grid, _quick_config(n_iterations=2), jobs=1)
    pooled = run_selection(small_sim, grid, _quick_config(n_iterations=2), jobs=2)
    assert inline.records == pooled.records


def test_single_iteration_single_gamma(small_sim):
    grid = make_gamma_grid([900])
    report = run_selection(small_sim, grid, _quick_config(n_iterations=1))
    assert len(report.records) == 1
    assert report.gamma_star == 900.0
    assert report.single_iteration
    assert report.curve[0].sd_performance == 0.0


def test_depth_chosen_by_cross_validation(small_sim):
    report = run_selection(
        small_sim, make_gamma_grid([9]),
        _quick_config(n_iterations=1, depth=None, depth_grid=[1, 2, 3]),
    )
    assert report.depth_from_cv
    assert report.depth in (1, 2, 3)
    assert set(report.cv_scores) == {1, 2, 3}


def test_degenerate_trees_make_every_run_fail():
    ds = Dataset(np.zeros((40, 1)), np.array([0, 1] * 20), ("x",), 2, name="flat")
    with pytest.raises(SelectionError, match="успешного запуска"):
        run_selection(ds, make_gamma_grid([9, 1]), _quick_config(n_iterations=2))


def test_report_json_round_trip(small_sim):
    report = run_selection(small_sim, make_gamma_grid([9, 1]), _quick_config(n_iterations=2))
    restored = SelectionReport.model_validate_json(report.model_dump_json())
    assert restored == report


def test_full_default_grid_gives_all_records(small_sim):
    grid = default_gamma_grid()
    report = run_selection(small_sim, grid, _quick_config(train=TrainConfig(epochs=1, patience=1, lr=0.01)))
    assert len(report.records) == 3 * 36 == 108
    assert report.failed_runs == 0
    assert [p.gamma for p in report.curve] == list(grid)
    for j, point in enumerate(report.curve):
        perf = [r.ndt_performance for r in report.records if r.gamma_index == j]
        agree = [r.agreement for r in report.records if r.gamma_index == j]
        assert point.n_runs == 3
        assert point.mean_performance == pytest.approx(np.mean(perf), abs=1e-12)
        assert point.mean_agreement == pytest.approx(np.mean(agree), abs=1e-12)


def test_trees_are_kept_per_iteration(small_sim):
    report = run_selection(small_sim, make_gamma_grid([9, 1]), _quick_config(n_iterations=2))
    assert len(report.trees) == 2
    for tree in map(tree_from_dict, report.trees):
        assert tree.depth <= 2
        assert tree.training_size == 60


def test_run_details_are_kept_only_on_request(small_sim):
    grid = make_gamma_grid([9, 1])
    plain = run_selection(small_sim, grid, _quick_config(n_iterations=2))
    detailed = run_selection(small_sim, grid, _quick_config(n_iterations=2, keep_run_details=True))
    assert all(r.train_losses is None and r.params is None for r in plain.records)
    for record in detailed.records:
        assert len(record.train_losses) == len(record.val_losses) == record.stopped_epoch
        params = params_from_dict(record.params)
        assert params.gamma1 == record.gamma
        assert params.gamma2 == record.gamma2
    assert [p.mean_performance for p in detailed.curve] == [p.mean_performance for p in plain.curve]
