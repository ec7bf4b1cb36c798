# src/selection/selector.py
"""
Выбор семейства моделей: повторные стратифицированные разбиения × перебор γ.

Для каждой итерации i обучается дерево DT_i, для каждого γ из сетки из него
компилируется и дообучается NDT; по тестовой части считаются точность NDT и
его согласие (каппа Коэна) с DT_i. Средние по итерациям дают кривые M̄[γ], Ā[γ]
и γ* = argmax M̄.
"""
import concurrent.futures
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.data.data_preparation import DataSplit, stratified_split
from src.data.dataset import Dataset
from src.errors import NdtSelectError, SelectionError
from src.models.cart import DecisionTree, fit_tree, predict_tree_batch, select_depth_cv, tree_to_dict
from src.models.metrics import accuracy, cohens_kappa
from src.models.ndt import compile_tree, gamma_link, params_to_dict, predict
from src.models.trainer import TrainConfig, train_ndt
from src.selection.interpretation import interpret
from src.selection.model import (
    Aggregates,
    CurvePoint,
    DatasetSummary,
    GammaGrid,
    InterpretationThresholds,
    RUN_DETAIL_FIELDS,
    RunRecord,
    SelectionConfig,
    SelectionReport,
    default_gamma_grid,
)

# Данные датасета в процессе-воркере (заполняются инициализатором пула)
_WORKER_DATA: Dict[str, np.ndarray] = {}


def derive_seed(*entropy: int) -> int:
    """Детерминированное 32-битное зерно из (master_seed, i[, j])."""
    return int(np.random.SeedSequence([int(e) for e in entropy]).generate_state(1)[0])


@dataclass(frozen=True)
class SweepTask:
    iteration: int
    gamma_index: int
    gamma: float
    gamma2: float
    tree: DecisionTree
    split: DataSplit
    dt_test_pred: np.ndarray
    dt_performance: float
    train_config: TrainConfig
    paper_literal_output: bool
    keep_details: bool = False


def _init_worker(features: np.ndarray, labels: np.ndarray) -> None:
    _WORKER_DATA["features"] = features
    _WORKER_DATA["labels"] = labels


def _run_task_in_worker(task: SweepTask) -> RunRecord:
    return run_task(task, _WORKER_DATA["features"], _WORKER_DATA["labels"])


def run_task(task: SweepTask, features: np.ndarray, labels: np.ndarray) -> RunRecord:
    """Одна пара (i, γ): компиляция, обучение, оценка на тесте. Ошибки не пробрасываются."""
    base = dict(
        iteration=task.iteration,
        gamma_index=task.gamma_index,
        gamma=task.gamma,
        gamma2=task.gamma2,
        dt_performance=task.dt_performance,
    )
    split = task.split
    try:
        params = compile_tree(task.tree, task.gamma, task.gamma2, task.paper_literal_output)
        params, log = train_ndt(
            params,
            features[split.train_idx], labels[split.train_idx],
            features[split.val_idx], labels[split.val_idx],
            task.train_config,
        )
        ndt_pred = predict(params, features[split.test_idx])
        details = {}
        if task.keep_details:
            details = dict(train_losses=log.train_losses, val_losses=log.val_losses, params=params_to_dict(params))
        return RunRecord(
            **base,
            **details,
            ndt_performance=accuracy(ndt_pred, labels[split.test_idx]),
            agreement=cohens_kappa(ndt_pred, task.dt_test_pred, task.tree.n_classes),
            best_epoch=log.best_epoch,
            stopped_epoch=log.stopped_epoch,
        )
    except NdtSelectError as e:
        logging.warning(f"[run_task] Запуск (i={task.iteration}, γ={task.gamma:g}) исключён: {e}")
        return RunRecord(**base, failed=True, error=f"{type(e).__name__}: {e}")


def resolve_jobs(jobs: Optional[int]) -> int:
    if jobs is not None and jobs >= 1:
        return int(jobs)
    return os.cpu_count() or 1


def _execute(tasks: List[SweepTask], dataset: Dataset, jobs: int, show_progress: bool) -> List[RunRecord]:
    records: List[RunRecord] = []
    with tqdm(total=len(tasks), desc="γ sweep", unit="run", disable=not show_progress) as progress:
        if jobs == 1:
            for task in tasks:
                records.append(run_task(task, dataset.features, dataset.labels))
                progress.update(1)
        else:
            with concurrent.futures.ProcessPoolExecutor(
                max_workers=jobs,
                initializer=_init_worker,
                initargs=(dataset.features, dataset.labels),
            ) as executor:
                futures = [executor.submit(_run_task_in_worker, task) for task in tasks]
                for future in concurrent.futures.as_completed(futures):
                    records.append(future.result())
                    progress.update(1)
    return sorted(records, key=lambda r: (r.iteration, r.gamma_index))


def _choose_depth(dataset: Dataset, config: SelectionConfig) -> Tuple[int, Dict[int, float], bool]:
    if config.depth is not None:
        logging.info(f"[run_selection] Глубина задана явно: {config.depth}")
        return config.depth, {}, False
    folds = config.cv_folds
    smallest = int(dataset.class_counts().min())
    if smallest < folds:
        if smallest < 2:
            raise SelectionError(f"Слишком мало объектов в классе ({smallest}) для кросс-валидации глубины")
        logging.warning(f"[run_selection] Число фолдов уменьшено с {folds} до {smallest} (размер малого класса)")
        folds = smallest
    depth, scores = select_depth_cv(
        dataset.features, dataset.labels, config.depth_grid,
        folds=folds, seed=config.master_seed, n_classes=dataset.class_count, min_leaf=config.min_leaf,
    )
    return depth, scores, True


def run_selection(dataset: Dataset,
                  grid: Optional[GammaGrid] = None,
                  config: Optional[SelectionConfig] = None,
                  thresholds: Optional[InterpretationThresholds] = None,
                  jobs: Optional[int] = 1,
                  show_progress: bool = False,
                  extra: Optional[dict] = None) -> SelectionReport:
    """
    Полный перебор: глубина -> n_iterations разбиений -> сетка γ -> агрегирование.

    Parameters:
    -----------
    dataset : Dataset
        Датасет для классификации
    grid : GammaGrid
        Сетка γ (по умолчанию 36 значений от 900 до 0.1)
    config : SelectionConfig
        Число итераций, зерно, глубина, связь γ2 и параметры обучения
    thresholds : InterpretationThresholds
        Пороги для вердикта
    jobs : int, optional
        Число процессов; 1 - выполнение в текущем процессе, None - по числу CPU
    show_progress : bool
        Показывать ли прогресс-бар tqdm
    extra : dict, optional
        Произвольные данные для эха в отчёте (манифест, параметры генератора)

    Returns:
    --------
    SelectionReport
        Кривые, γ*, M̄_DT, все записи запусков и эхо конфигурации; детерминирован при заданном master_seed
    """
    grid = grid or default_gamma_grid()
    config = config or SelectionConfig()
    thresholds = thresholds or InterpretationThresholds.from_config()
    jobs = resolve_jobs(jobs)

    depth, cv_scores, depth_from_cv = _choose_depth(dataset, config)
    gamma2 = [gamma_link(g, config.link) for g in grid]
    logging.info(
        f"[run_selection] Датасет '{dataset.name}': {config.n_iterations} итераций × {len(grid)} значений γ, "
        f"глубина {depth}, связь {config.link}, процессов {jobs}"
    )

    tasks: List[SweepTask] = []
    split_seeds: List[int] = []
    trees: List[dict] = []
    degenerate = 0
    for i in range(config.n_iterations):
        split_seed = derive_seed(config.master_seed, i)
        split_seeds.append(split_seed)
        split = stratified_split(dataset, config.split_ratios, seed=split_seed)
        tree = fit_tree(
            *dataset.subset(split.train_idx),
            dataset.class_count, depth, config.min_leaf,
        )
        trees.append(tree_to_dict(tree))
        if tree.is_degenerate:
            degenerate += 1
        dt_pred, _ = predict_tree_batch(tree, dataset.features[split.test_idx])
        dt_performance = accuracy(dt_pred, dataset.labels[split.test_idx])
        logging.info(f"[run_selection] Итерация {i}: K={tree.n_leaves}, P(DT)={dt_performance:.4f}")
        for j, gamma in enumerate(grid):
            train_config = config.train.model_copy(update={"shuffle_seed": derive_seed(config.master_seed, i, j)})
            tasks.append(SweepTask(
                iteration=i,
                gamma_index=j,
                gamma=gamma,
                gamma2=gamma2[j],
                tree=tree,
                split=split,
                dt_test_pred=dt_pred,
                dt_performance=dt_performance,
                train_config=train_config,
                paper_literal_output=config.paper_literal_output,
                keep_details=config.keep_run_details,
            ))

    records = _execute(tasks, dataset, jobs, show_progress)
    failed = sum(r.failed for r in records)
    if failed:
        logging.warning(f"[run_selection] Исключено неудачных запусков: {failed} из {len(records)}")

    aggregates = aggregate(records, grid)
    mean_perf = aggregates.mean_performance
    gamma_star = argmax_gamma(mean_perf, grid)
    star = aggregates.curve[grid.index(gamma_star)]

    report = SelectionReport(
        dataset=DatasetSummary(
            name=dataset.name,
            n_samples=dataset.n_samples,
            n_features=dataset.n_features,
            class_count=dataset.class_count,
            feature_names=list(dataset.feature_names),
            label_values=list(dataset.label_values),
            class_counts=dataset.class_counts().tolist(),
        ),
        depth=depth,
        depth_from_cv=depth_from_cv,
        cv_scores=cv_scores,
        grid=list(grid),
        gamma2=gamma2,
        curve=aggregates.curve,
        dt_mean=aggregates.dt_mean,
        dt_sd=aggregates.dt_sd,
        single_iteration=aggregates.single_iteration,
        gamma_star=gamma_star,
        performance_at_star=star.mean_performance,
        agreement_at_star=star.mean_agreement,
        performance_diff=aggregates.dt_mean - star.mean_performance,
        improvement=bool(star.mean_performance > aggregates.dt_mean),
        failed_runs=int(failed),
        degenerate_trees=degenerate,
        split_seeds=split_seeds,
        records=records,
        trees=trees,
        config=config,
        thresholds=thresholds,
        extra=extra or {},
    )
    report.verdict = interpret(report, thresholds)
    logging.info(
        f"[run_selection] γ*={gamma_star:g}, P(DT)={report.dt_mean:.4f}, P(NDT)={report.performance_at_star:.4f}, "
        f"вердикт: {report.verdict.kind}"
    )
    return report


def aggregate(records: Sequence[RunRecord], grid: GammaGrid) -> Aggregates:
    """
    Средние и выборочные SD (ddof=1) по каждому γ и M̄_DT по итерациям.

    Неудачные запуски не учитываются в кривых; если для какого-то γ не осталось
    ни одного запуска - SelectionError.
    """
    if not records:
        raise SelectionError("Нет ни одной записи запуска для агрегирования")
    df = pd.DataFrame([r.model_dump(exclude=RUN_DETAIL_FIELDS) for r in records])
    valid = df[~df["failed"]].astype({"ndt_performance": float, "agreement": float})
    present = set(valid["gamma_index"].tolist())
    missing = [grid[j] for j in range(len(grid)) if j not in present]
    if missing:
        raise SelectionError(f"Нет ни одного успешного запуска для γ = {missing}")

    stats = valid.groupby("gamma_index").agg(
        mean_performance=("ndt_performance", "mean"),
        sd_performance=("ndt_performance", "std"),
        mean_agreement=("agreement", "mean"),
        sd_agreement=("agreement", "std"),
        n_runs=("ndt_performance", "size"),
        gamma2=("gamma2", "first"),
    )
    single = bool((stats["n_runs"] == 1).any())
    stats[["sd_performance", "sd_agreement"]] = stats[["sd_performance", "sd_agreement"]].fillna(0.0)

    curve = [
        CurvePoint(
            gamma=grid[j],
            gamma2=float(stats.at[j, "gamma2"]),
            mean_performance=float(stats.at[j, "mean_performance"]),
            sd_performance=float(stats.at[j, "sd_performance"]),
            mean_agreement=float(stats.at[j, "mean_agreement"]),
            sd_agreement=float(stats.at[j, "sd_agreement"]),
            n_runs=int(stats.at[j, "n_runs"]),
        )
        for j in range(len(grid))
    ]

    dt = df.drop_duplicates("iteration")["dt_performance"]
    dt_sd = float(dt.std()) if len(dt) > 1 else 0.0
    return Aggregates(
        curve=curve,
        dt_mean=float(dt.mean()),
        dt_sd=dt_sd,
        n_dt=int(len(dt)),
        single_iteration=single or len(dt) == 1,
    )


def argmax_gamma(mean_performance: Sequence[float], grid: GammaGrid) -> float:
    """γ с максимальным M̄; при равенстве - наибольший γ (ближайший к дереву)."""
    values = np.asarray(mean_performance, dtype=np.float64)
    if values.shape[0] != len(grid):
        raise SelectionError(f"Длина кривой {values.shape[0]} != размеру сетки {len(grid)}")
    # сетка убывает, поэтому первый максимум соответствует наибольшему γ
    return grid[int(np.argmax(values))]
