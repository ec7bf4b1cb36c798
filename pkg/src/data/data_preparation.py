# src/data/data_preparation.py
import logging
from collections import deque
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from src.data.dataset import Dataset
from src.errors import SplitError

DEFAULT_RATIOS: Tuple[float, float, float] = (0.5, 0.25, 0.25)
MIN_CLASS_SIZE = 4


@dataclass(frozen=True, eq=False)
class DataSplit:
    """Индексы train/val/test (отсортированы) и seed, которым они получены."""
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    seed: int

    def __post_init__(self):
        for attr in ("train_idx", "val_idx", "test_idx"):
            idx = np.sort(np.asarray(getattr(self, attr), dtype=np.int64))
            idx.setflags(write=False)
            object.__setattr__(self, attr, idx)

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train_idx), len(self.val_idx), len(self.test_idx)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DataSplit):
            return NotImplemented
        return (
            np.array_equal(self.train_idx, other.train_idx)
            and np.array_equal(self.val_idx, other.val_idx)
            and np.array_equal(self.test_idx, other.test_idx)
        )

    __hash__ = None


def _largest_remainder(quotas: np.ndarray) -> np.ndarray:
    """Округляет вектор квот до целых с сохранением (округлённой) суммы."""
    base = np.floor(quotas).astype(np.int64)
    remaining = int(round(float(quotas.sum()))) - int(base.sum())
    order = np.argsort(-(quotas - base), kind="stable")
    base[order[:remaining]] += 1
    return base


def _max_flow_fill(row_need: np.ndarray, col_need: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    """
    Ставит по одной единице в разрешённые клетки матрицы так, чтобы суммы по строкам
    равнялись row_need, а по столбцам - col_need (Эдмондс-Карп на двудольном графе).
    """
    n_rows, n_cols = allowed.shape
    source, sink = 0, n_rows + n_cols + 1
    size = n_rows + n_cols + 2
    capacity = np.zeros((size, size), dtype=np.int64)
    capacity[source, 1:n_rows + 1] = row_need
    for r in range(n_rows):
        for c in range(n_cols):
            if allowed[r, c]:
                capacity[1 + r, 1 + n_rows + c] = 1
    capacity[1 + n_rows:1 + n_rows + n_cols, sink] = col_need
    flow = np.zeros_like(capacity)

    while True:
        parent = np.full(size, -1)
        parent[source] = source
        queue = deque([source])
        while queue and parent[sink] == -1:
            u = queue.popleft()
            for v in np.flatnonzero(capacity[u] - flow[u] > 0):
                if parent[v] == -1:
                    parent[v] = u
                    queue.append(v)
        if parent[sink] == -1:
            break
        v = sink
        while v != source:
            u = parent[v]
            flow[u, v] += 1
            flow[v, u] -= 1
            v = u

    if flow[source].sum() != row_need.sum():
        raise SplitError("Не удалось согласовать стратификацию с размерами частей")
    return flow[1:n_rows + 1, 1 + n_rows:1 + n_rows + n_cols].clip(min=0)


def allocate_counts(class_sizes: Sequence[int], ratios: Sequence[float] = DEFAULT_RATIOS) -> np.ndarray:
    """
    Число объектов каждого класса в каждой части разбиения (матрица C×3).

    Каждая клетка отличается от своей квоты ratio·n_c меньше чем на 1,
    размер каждой части - от ratio·N тоже меньше чем на 1.
    """
    class_sizes = np.asarray(class_sizes, dtype=np.int64)
    ratios = np.asarray(ratios, dtype=np.float64)
    quotas = np.round(np.outer(class_sizes, ratios), 9)
    base = np.floor(quotas).astype(np.int64)
    row_need = class_sizes - base.sum(axis=1)
    totals = _largest_remainder(np.round(ratios * class_sizes.sum(), 9))
    col_need = totals - base.sum(axis=0)
    if (col_need < 0).any():
        raise SplitError("Некорректные пропорции разбиения")
    extra = _max_flow_fill(row_need, col_need, (quotas - base) > 0)
    return base + extra


def stratified_split(dataset: Dataset,
                     ratios: Sequence[float] = DEFAULT_RATIOS,
                     seed: int = 0) -> DataSplit:
    """
    Стратифицированное случайное разбиение на train/val/test.

    Parameters:
    -----------
    dataset : Dataset
        Исходный датасет
    ratios : tuple of 3 floats
        Доли train/val/test (по умолчанию 50/25/25)
    seed : int
        Зерно генератора; одинаковый seed даёт одинаковое разбиение

    Returns:
    --------
    DataSplit
        Непересекающиеся индексы, в объединении дающие 0..N-1
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"Ожидаются три положительные доли с суммой 1, получено {ratios}")

    class_sizes = dataset.class_counts()
    too_small = np.flatnonzero(class_sizes < MIN_CLASS_SIZE)
    if too_small.size:
        raise SplitError(
            f"Классы {too_small.tolist()} слишком малы (< {MIN_CLASS_SIZE} объектов), "
            f"чтобы попасть в каждую часть разбиения"
        )

    counts = allocate_counts(class_sizes, ratios)
    if (counts < 1).any():
        raise SplitError("При заданных долях некоторые классы не попадают во все части разбиения")

    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for cls in range(dataset.class_count):
        idx = rng.permutation(np.flatnonzero(dataset.labels == cls))
        bounds = np.cumsum(counts[cls])
        for part, chunk in zip(parts, np.split(idx, bounds[:-1])):
            part.append(chunk)

    split = DataSplit(
        train_idx=np.concatenate(parts[0]),
        val_idx=np.concatenate(parts[1]),
        test_idx=np.concatenate(parts[2]),
        seed=int(seed),
    )
    logging.debug(f"[stratified_split] seed={seed}, размеры частей: {split.sizes}")
    return split
