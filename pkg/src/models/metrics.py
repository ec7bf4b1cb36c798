# src/models/metrics.py
"""Метрики качества (accuracy) и согласия (каппа Коэна) двух классификаторов."""
from dataclasses import dataclass

import numpy as np

from src.errors import NdtSelectError


def _as_label_pair(a, b):
    a = np.asarray(a, dtype=np.int64).ravel()
    b = np.asarray(b, dtype=np.int64).ravel()
    if a.shape[0] != b.shape[0]:
        raise NdtSelectError(f"Длины векторов меток не совпадают: {a.shape[0]} != {b.shape[0]}")
    if a.shape[0] == 0:
        raise NdtSelectError("Пустые векторы меток")
    if min(a.min(), b.min()) < 0:
        raise NdtSelectError("Метки классов должны быть неотрицательными")
    return a, b


def accuracy(pred, truth) -> float:
    """Доля точных совпадений предсказаний с истинными метками."""
    pred, truth = _as_label_pair(pred, truth)
    return float(np.mean(pred == truth))


@dataclass(frozen=True, eq=False)
class AgreementTable:
    """Таблица сопряжённости C×C между метками двух классификаторов."""
    counts: np.ndarray
    total: int

    @property
    def observed(self) -> float:
        """Наблюдаемая доля согласия p_o."""
        return float(np.trace(self.counts)) / self.total

    @property
    def expected(self) -> float:
        """Доля согласия, ожидаемая случайно (p_e), из маргиналов."""
        rows = self.counts.sum(axis=1) / self.total
        cols = self.counts.sum(axis=0) / self.total
        return float(np.dot(rows, cols))


def agreement_table(a, b, n_classes: int | None = None) -> AgreementTable:
    a, b = _as_label_pair(a, b)
    size = int(max(a.max(), b.max())) + 1
    if n_classes is not None:
        if n_classes < size:
            raise NdtSelectError(f"Метка {size - 1} вне диапазона для {n_classes} классов")
        size = n_classes
    counts = np.zeros((size, size), dtype=np.int64)
    np.add.at(counts, (a, b), 1)
    return AgreementTable(counts=counts, total=int(a.shape[0]))


def cohens_kappa(a, b, n_classes: int | None = None) -> float:
    """
    Каппа Коэна между двумя векторами меток.

                 p_o - p_e
        kappa = -----------
                  1 - p_e

    Если p_e = 1 (оба классификатора выдают одну и ту же константу),
    возвращается 1.0.
    """
    table = agreement_table(a, b, n_classes)
    p_o = table.observed
    p_e = table.expected
    if np.isclose(p_e, 1.0, rtol=0.0, atol=1e-15):
        return 1.0
    return float((p_o - p_e) / (1.0 - p_e))
