# src/models/ndt.py
"""
Нейронное дерево решений (NDT): компиляция дерева CART в четырёхслойную сеть
с активациями tanh(γ·z) и прямой проход.

    h1 = tanh(γ1 · (W1ᵀx + b1))      K-1 нейронов, по одному на разбиение
    h2 = tanh(γ2 · (W2ᵀh1 + b2))     K нейронов, по одному на лист
    scores = W3ᵀh2 + b3              C выходов
    probabilities = softmax(scores)
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Literal, Tuple

import numpy as np
from scipy.special import softmax

from src.errors import CompileError, DimensionError, NdtSelectError
from src.models.cart import DecisionTree, Direction, enumerate_paths, tree_fingerprint

LinkForm = Literal["identity", "sqrt", "g", "h"]
LINK_FORMS: Tuple[str, ...] = ("identity", "sqrt", "g", "h")
PARAM_NAMES: Tuple[str, ...] = ("W1", "b1", "W2", "b2", "W3", "b3")

# Нижняя граница γ2 (в десятичных логарифмах): g(0) = GAMMA2_FLOOR
GAMMA2_FLOOR = 0.05
_FLOOR_SCALE = 10.0 ** -GAMMA2_FLOOR
TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class NdtParams:
    """Веса и смещения NDT; γ1 и γ2 фиксированы и не обучаются."""
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray
    gamma1: float
    gamma2: float
    seed_tree_id: str = ""

    def __post_init__(self):
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise CompileError(f"γ1 и γ2 должны быть положительными: {self.gamma1}, {self.gamma2}")
        for name in PARAM_NAMES:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        d, k1 = self.W1.shape
        if (self.b1.shape != (k1,) or self.W2.shape[0] != k1
                or self.b2.shape != (self.W2.shape[1],) or self.W3.shape[0] != self.W2.shape[1]
                or self.b3.shape != (self.W3.shape[1],)):
            raise DimensionError(
                "Несогласованные размеры параметров NDT: "
                + ", ".join(f"{n}{getattr(self, n).shape}" for n in PARAM_NAMES)
            )

    @property
    def n_features(self) -> int:
        return self.W1.shape[0]

    @property
    def n_leaves(self) -> int:
        return self.W2.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W3.shape[1]

    def arrays(self) -> Dict[str, np.ndarray]:
        """Обучаемые массивы по именам (копии не создаются)."""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def with_arrays(self, arrays: Dict[str, np.ndarray]) -> "NdtParams":
        """Новый экземпляр с заменёнными массивами; γ и seed_tree_id сохраняются."""
        return replace(self, **{name: arrays[name] for name in PARAM_NAMES})

    def copy(self) -> "NdtParams":
        return self.with_arrays({name: arr.copy() for name, arr in self.arrays().items()})


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    h1: np.ndarray
    h2: np.ndarray
    scores: np.ndarray
    probabilities: np.ndarray
    # предактивации нужны для обратного прохода
    z1: np.ndarray = field(repr=False, default=None)
    z2: np.ndarray = field(repr=False, default=None)


def compile_tree(tree: DecisionTree, gamma1: float, gamma2: float,
                 paper_literal_output: bool = False) -> NdtParams:
    """
    Строит NDT, воспроизводящую дерево в пределе больших γ.

    Parameters:
    -----------
    tree : DecisionTree
        Обученное дерево с K >= 2 листьями
    gamma1, gamma2 : float
        Крутизна активаций первого и второго скрытых слоёв (> 0)
    paper_literal_output : bool
        Если True, выходной слой инициализируется как W3[k][majority(k)] = N_k/N, b3 = 0
        (в пределе не воспроизводит голосование листа; оставлено для сравнения)

    Returns:
    --------
    NdtParams
        W1 - one-hot признака каждого узла, b1 = -порог,
        W2[j][k] = +1 (правая ветвь) / -1 (левая) / 0 (узел вне пути листа k),
        b2[k] = -l(k) + 1/2, W3[k][c] = N_kc/N, b3[c] = Σ_k W3[k][c]
    """
    if tree.n_leaves < 2:
        raise CompileError("degenerate tree: nothing to relax")

    d, n_nodes, k, c = tree.n_features, tree.n_internal, tree.n_leaves, tree.n_classes
    W1 = np.zeros((d, n_nodes))
    b1 = np.zeros(n_nodes)
    for node in tree.nodes:
        W1[node.feature_index, node.node_id] = 1.0
        b1[node.node_id] = -node.threshold

    W2 = np.zeros((n_nodes, k))
    b2 = np.zeros(k)
    for path in enumerate_paths(tree):
        for node_id, direction in path.steps:
            W2[node_id, path.leaf_id] = 1.0 if direction is Direction.RIGHT else -1.0
        b2[path.leaf_id] = -len(path.steps) + 0.5

    counts = np.array([leaf.class_counts for leaf in tree.leaves], dtype=np.float64)
    total = float(tree.training_size)
    if paper_literal_output:
        W3 = np.zeros((k, c))
        W3[np.arange(k), tree.leaf_majority] = counts.sum(axis=1) / total
        b3 = np.zeros(c)
    else:
        W3 = counts / total
        b3 = W3.sum(axis=0)

    params = NdtParams(W1, b1, W2, b2, W3, b3, float(gamma1), float(gamma2),
                       seed_tree_id=tree_fingerprint(tree))
    logging.debug(
        f"[compile_tree] K={k}, d={d}, C={c}, γ1={gamma1:g}, γ2={gamma2:g}, literal={paper_literal_output}"
    )
    return params


def log_link(x):
    """g(x) = log10(10^0.05 + x) через log1p: g(0) равно 0.05 точно."""
    return GAMMA2_FLOOR + np.log1p(x * _FLOOR_SCALE) / np.log(10.0)


def gamma_link(gamma1: float, form: LinkForm = "h") -> float:
    """
    Связь γ2 = f(γ1).

    g(x) = log10(10^0.05 + x), так что g(0) = 0.05; h(x) = g(g(x)).
    """
    if not np.isfinite(gamma1) or gamma1 <= 0:
        raise NdtSelectError(f"γ1 должен быть положительным, получено {gamma1}")
    if form == "identity":
        return float(gamma1)
    if form == "sqrt":
        return float(np.sqrt(gamma1))
    if form == "g":
        return float(log_link(gamma1))
    if form == "h":
        return float(log_link(log_link(gamma1)))
    raise NdtSelectError(f"Неизвестная форма связи γ2: {form}. Допустимые: {', '.join(LINK_FORMS)}")


def _check_input(params: NdtParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.n_features:
        raise DimensionError(f"Ожидалась матрица с {params.n_features} признаками, получено {X.shape}")
    if not np.isfinite(X).all():
        raise NdtSelectError("Входные данные содержат NaN или бесконечности")
    return X


def forward_batch(params: NdtParams, X: np.ndarray) -> ForwardTrace:
    """Прямой проход для матрицы объектов (строки - объекты)."""
    X = _check_input(params, X)
    z1 = X @ params.W1 + params.b1
    h1 = np.tanh(params.gamma1 * z1)
    z2 = h1 @ params.W2 + params.b2
    h2 = np.tanh(params.gamma2 * z2)
    scores = h2 @ params.W3 + params.b3
    probabilities = softmax(scores, axis=1)
    return ForwardTrace(h1=h1, h2=h2, scores=scores, probabilities=probabilities, z1=z1, z2=z2)


def forward(params: NdtParams, x: np.ndarray) -> ForwardTrace:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"Ожидался вектор признаков, получено {x.shape}")
    trace = forward_batch(params, x[None, :])
    return ForwardTrace(
        h1=trace.h1[0], h2=trace.h2[0], scores=trace.scores[0],
        probabilities=trace.probabilities[0], z1=trace.z1[0], z2=trace.z2[0],
    )


def predict(params: NdtParams, X: np.ndarray) -> np.ndarray:
    """
    Argmax выходов; при равенстве побеждает класс с меньшим индексом.

    Выходы в пределах TIE_RTOL (относительно) от максимума считаются равными ему.
    """
    scores = forward_batch(params, X).scores
    best = scores.max(axis=1, keepdims=True)
    near_best = scores >= best - TIE_RTOL * np.maximum(np.abs(best), 1.0)
    return np.argmax(near_best, axis=1).astype(np.int64)


def params_to_dict(params: NdtParams) -> Dict[str, Any]:
    data: Dict[str, Any] = {name: arr.tolist() for name, arr in params.arrays().items()}
    data.update(gamma1=params.gamma1, gamma2=params.gamma2, seed_tree_id=params.seed_tree_id)
    return data


def params_from_dict(data: Dict[str, Any]) -> NdtParams:
    try:
        arrays = {name: np.asarray(data[name], dtype=np.float64) for name in PARAM_NAMES}
        # пустые списки теряют вторую размерность
        return NdtParams(
            W1=arrays["W1"].reshape(-1, arrays["b1"].shape[0]),
            b1=arrays["b1"],
            W2=arrays["W2"].reshape(arrays["b1"].shape[0], arrays["b2"].shape[0]),
            b2=arrays["b2"],
            W3=arrays["W3"].reshape(arrays["b2"].shape[0], arrays["b3"].shape[0]),
            b3=arrays["b3"],
            gamma1=float(data["gamma1"]),
            gamma2=float(data["gamma2"]),
            seed_tree_id=str(data.get("seed_tree_id", "")),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CompileError(f"Некорректное описание параметров NDT: {e}")
