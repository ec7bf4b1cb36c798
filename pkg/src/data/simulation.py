# src/data/simulation.py
import logging
from typing import Any, Dict, Literal

import numpy as np

from src.config import get_config
from src.data.dataset import Dataset
from src.errors import DatasetError

Layout = Literal["diagonal", "axis"]


def simulation_parameters(n: int, d: int, seed: int,
                          separation: float, layout: Layout) -> Dict[str, Any]:
    """Параметры генератора в виде словаря (попадают в отчёт)."""
    return {
        "generator": "gaussian_flanks",
        "n": int(n),
        "d": int(d),
        "seed": int(seed),
        "separation": float(separation),
        "layout": layout,
        "class0": "N(0, I)",
        "class1": "0.5*N(+separation*u, I) + 0.5*N(-separation*u, I)",
    }


def make_sim_dataset(n: int = None,
                     d: int = None,
                     seed: int = 0,
                     separation: float = None,
                     layout: Layout = None) -> Dataset:
    """
    Генерирует синтетический двухклассовый датасет, не разделимый гиперплоскостью.

    Класс 0 - гауссиана в нуле, класс 1 - равная смесь двух гауссиан в точках
    +separation·u и -separation·u, т.е. класс 1 окружает класс 0 с двух сторон.

    Parameters:
    -----------
    n : int
        Число объектов (класс 0 получает ceil(n/2))
    d : int
        Число признаков
    seed : int
        Зерно генератора
    separation : float
        Расстояние от начала координат до центров компонент класса 1
    layout : {"diagonal", "axis"}
        Направление u: нормированная диагональ (1,...,1)/sqrt(d) или первая ось

    Returns:
    --------
    Dataset
        Сбалансированный датасет с именем sim_<n>_<d>
    """
    n = int(n if n is not None else get_config("simulation.n", 1000))
    d = int(d if d is not None else get_config("simulation.d", 3))
    separation = float(separation if separation is not None else get_config("simulation.separation", 4.0))
    layout = layout or get_config("simulation.layout", "diagonal")
    # по 4 объекта на класс, иначе стратифицированное разбиение 50/25/25 невозможно
    if n < 8:
        raise DatasetError(f"Нужно n >= 8 (не меньше 4 объектов на каждый из 2 классов), получено n={n}")
    if d < 1:
        raise DatasetError(f"Нужно d >= 1, получено d={d}")
    if layout not in ("diagonal", "axis"):
        raise DatasetError(f"Неизвестное расположение центров: {layout}")

    direction = np.zeros(d)
    if layout == "axis":
        direction[0] = 1.0
    else:
        direction[:] = 1.0 / np.sqrt(d)

    rng = np.random.default_rng(seed)
    n0 = (n + 1) // 2
    n1 = n - n0
    class0 = rng.standard_normal((n0, d))
    class1 = rng.standard_normal((n1, d))
    # первая половина класса 1 - в +u, вторая - в -u
    n_plus = (n1 + 1) // 2
    class1[:n_plus] += separation * direction
    class1[n_plus:] -= separation * direction

    features = np.vstack([class0, class1])
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    order = rng.permutation(n)

    logging.info(
        f"[make_sim_dataset] n={n}, d={d}, seed={seed}, separation={separation}, layout={layout}"
    )
    return Dataset(
        features=features[order],
        labels=labels[order],
        feature_names=tuple(f"x{i}" for i in range(d)),
        class_count=2,
        name=f"sim_{n}_{d}",
        label_values=(0, 1),
    )
