# src/models/cart.py
import hashlib
import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.model_selection import StratifiedKFold

from src.errors import DimensionError, TreeError
from src.models.metrics import accuracy

# Порог, ниже которого уменьшение примеси считается шумом округления
_IMPURITY_TOL = 1e-12


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"


def leaf_ref(leaf_id: int) -> int:
    """Ссылка на лист в полях left/right узла: ~leaf_id (всегда < 0)."""
    return ~leaf_id


def is_leaf_ref(ref: int) -> bool:
    return ref < 0


@dataclass(frozen=True)
class SplitNode:
    node_id: int
    feature_index: int
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class Leaf:
    leaf_id: int
    class_counts: Tuple[int, ...]
    path_length: int
    majority_class: int

    @property
    def n_samples(self) -> int:
        return int(sum(self.class_counts))


@dataclass(frozen=True)
class LeafPath:
    leaf_id: int
    steps: Tuple[Tuple[int, Direction], ...]


@dataclass(frozen=True)
class DecisionTree:
    """
    Полное бинарное дерево с осевыми разбиениями.

    Правило маршрутизации: x[feature] <= threshold -> left, иначе right.
    Узлы пронумерованы в прямом порядке обхода (корень = 0), листья - слева направо.
    """
    nodes: Tuple[SplitNode, ...]
    leaves: Tuple[Leaf, ...]
    root: int
    training_size: int
    n_features: int
    n_classes: int

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def n_internal(self) -> int:
        return len(self.nodes)

    @property
    def is_degenerate(self) -> bool:
        return self.n_leaves == 1

    @property
    def depth(self) -> int:
        return max(leaf.path_length for leaf in self.leaves)

    @cached_property
    def _arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        features = np.array([n.feature_index for n in self.nodes], dtype=np.int64)
        thresholds = np.array([n.threshold for n in self.nodes], dtype=np.float64)
        lefts = np.array([n.left for n in self.nodes], dtype=np.int64)
        rights = np.array([n.right for n in self.nodes], dtype=np.int64)
        return features, thresholds, lefts, rights

    @cached_property
    def leaf_majority(self) -> np.ndarray:
        return np.array([leaf.majority_class for leaf in self.leaves], dtype=np.int64)


def _weighted_gini(class_counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Сумма n·Gini по строкам матрицы счётчиков."""
    with np.errstate(invalid="ignore", divide="ignore"):
        proportions = class_counts / sizes[:, None]
    return sizes * (1.0 - np.sum(proportions * proportions, axis=1))


def _best_split(X: np.ndarray, onehot: np.ndarray, min_leaf: int) -> Optional[Tuple[int, float, float]]:
    """
    Лучшее разбиение по критерию Джини среди середин между соседними
    различными значениями. При равенстве - меньший индекс признака,
    затем меньший порог.
    """
    n = X.shape[0]
    totals = onehot.sum(axis=0)
    parent = float(_weighted_gini(totals[None, :], np.array([float(n)]))[0])
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)

    best: Optional[Tuple[int, float, float]] = None
    best_score = parent - _IMPURITY_TOL
    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        values = X[order, feature]
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]
        right_counts = totals - left_counts
        valid = size_ok & (values[1:] > values[:-1])
        if not valid.any():
            continue
        score = _weighted_gini(left_counts, n_left) + _weighted_gini(right_counts, n_right)
        score[~valid] = np.inf
        pos = int(np.argmin(score))
        if score[pos] < best_score:
            lo, hi = values[pos], values[pos + 1]
            threshold = (lo + hi) / 2.0
            if not lo <= threshold < hi:
                threshold = lo
            best_score = float(score[pos])
            best = (feature, float(threshold), best_score / n)
    return best


class _TreeBuilder:
    def __init__(self, X, y, n_classes, max_depth, min_leaf):
        self.X = X
        self.onehot = np.eye(n_classes)[y]
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.nodes: List[Optional[SplitNode]] = []
        self.leaves: List[Leaf] = []

    def build(self, idx: np.ndarray, depth: int) -> int:
        counts = self.onehot[idx].sum(axis=0).astype(np.int64)
        split = None
        if depth < self.max_depth and idx.size >= 2 * self.min_leaf:
            split = _best_split(self.X[idx], self.onehot[idx], self.min_leaf)
        if split is None:
            leaf_id = len(self.leaves)
            self.leaves.append(Leaf(
                leaf_id=leaf_id,
                class_counts=tuple(int(c) for c in counts),
                path_length=depth,
                majority_class=int(np.argmax(counts)),
            ))
            return leaf_ref(leaf_id)

        feature, threshold, _ = split
        node_id = len(self.nodes)
        self.nodes.append(None)
        goes_left = self.X[idx, feature] <= threshold
        left = self.build(idx[goes_left], depth + 1)
        right = self.build(idx[~goes_left], depth + 1)
        self.nodes[node_id] = SplitNode(node_id, feature, threshold, left, right)
        return node_id


def fit_tree(X: np.ndarray, y: np.ndarray, n_classes: int,
             max_depth: int, min_leaf: int = 1) -> DecisionTree:
    """
    Обучает дерево CART (критерий Джини) жадным построением сверху вниз.

    Parameters:
    -----------
    X : np.ndarray
        Матрица признаков обучающей выборки N×d
    y : np.ndarray
        Метки 0..n_classes-1
    n_classes : int
        Число классов C (счётчики листьев имеют длину C)
    max_depth : int
        Максимальная глубина (>= 1)
    min_leaf : int
        Минимальное число объектов в каждом потомке разбиения

    Returns:
    --------
    DecisionTree
        Дерево; один лист (K=1) - допустимый вырожденный результат
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise TreeError("Обучающая выборка пуста")
    if y.shape[0] != X.shape[0]:
        raise DimensionError(f"Число меток {y.shape[0]} != числу строк {X.shape[0]}")
    if max_depth < 1:
        raise TreeError(f"max_depth должен быть >= 1, получено {max_depth}")
    if min_leaf < 1:
        raise TreeError(f"min_leaf должен быть >= 1, получено {min_leaf}")

    builder = _TreeBuilder(X, y, n_classes, max_depth, min_leaf)
    root = builder.build(np.arange(X.shape[0]), 0)
    tree = DecisionTree(
        nodes=tuple(builder.nodes),
        leaves=tuple(builder.leaves),
        root=root,
        training_size=int(X.shape[0]),
        n_features=int(X.shape[1]),
        n_classes=int(n_classes),
    )
    if tree.is_degenerate:
        logging.info("[fit_tree] Дерево вырождено: один лист (K=1)")
    else:
        logging.debug(f"[fit_tree] Листьев K={tree.n_leaves}, глубина {tree.depth}")
    return tree


def predict_tree_batch(tree: DecisionTree, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Классы и номера листьев для всех строк X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise DimensionError(f"Ожидалась матрица с {tree.n_features} признаками, получено {X.shape}")
    refs = np.full(X.shape[0], tree.root, dtype=np.int64)
    if tree.n_internal:
        features, thresholds, lefts, rights = tree._arrays
        active = np.flatnonzero(refs >= 0)
        while active.size:
            node = refs[active]
            goes_left = X[active, features[node]] <= thresholds[node]
            refs[active] = np.where(goes_left, lefts[node], rights[node])
            active = active[refs[active] >= 0]
    leaf_ids = ~refs
    return tree.leaf_majority[leaf_ids], leaf_ids


def predict_tree(tree: DecisionTree, x: np.ndarray) -> Tuple[int, int]:
    """Класс (мажоритарный в листе) и номер листа для одного объекта."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != tree.n_features:
        raise DimensionError(f"Ожидался вектор длины {tree.n_features}, получено {x.shape}")
    classes, leaves = predict_tree_batch(tree, x[None, :])
    return int(classes[0]), int(leaves[0])


def enumerate_paths(tree: DecisionTree) -> List[LeafPath]:
    """Путь от корня до каждого листа (в порядке номеров листьев)."""
    paths: Dict[int, LeafPath] = {}
    stack: List[Tuple[int, Tuple[Tuple[int, Direction], ...]]] = [(tree.root, ())]
    while stack:
        ref, steps = stack.pop()
        if is_leaf_ref(ref):
            paths[~ref] = LeafPath(leaf_id=~ref, steps=steps)
            continue
        node = tree.nodes[ref]
        stack.append((node.right, steps + ((node.node_id, Direction.RIGHT),)))
        stack.append((node.left, steps + ((node.node_id, Direction.LEFT),)))
    return [paths[k] for k in range(tree.n_leaves)]


def select_depth_cv(X: np.ndarray, y: np.ndarray,
                    depth_grid: Sequence[int],
                    folds: int = 5,
                    seed: int = 0,
                    n_classes: Optional[int] = None,
                    min_leaf: int = 1) -> Tuple[int, Dict[int, float]]:
    """
    Выбор глубины дерева стратифицированной k-fold кросс-валидацией.

    Returns:
    --------
    Tuple[int, Dict[int, float]]
        Лучшая глубина (при равенстве - наименьшая) и средняя accuracy по каждой глубине
    """
    grid = sorted(set(int(d) for d in depth_grid))
    if not grid:
        raise TreeError("Пустая сетка глубин для кросс-валидации")
    if len(grid) == 1:
        return grid[0], {}
    if folds < 2:
        raise TreeError(f"Число фолдов должно быть >= 2, получено {folds}")
    y = np.asarray(y, dtype=np.int64)
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    smallest = np.bincount(y, minlength=n_classes).min()
    if smallest < folds:
        raise TreeError(f"В самом малом классе {smallest} объектов, а фолдов {folds}")

    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    fold_indices = list(splitter.split(X, y))
    scores: Dict[int, float] = {}
    for depth in grid:
        fold_scores = []
        for train_idx, test_idx in fold_indices:
            tree = fit_tree(X[train_idx], y[train_idx], n_classes, depth, min_leaf)
            pred, _ = predict_tree_batch(tree, X[test_idx])
            fold_scores.append(accuracy(pred, y[test_idx]))
        scores[depth] = float(np.mean(fold_scores))
        logging.info(f"[select_depth_cv] depth={depth}: mean accuracy={scores[depth]:.4f}")

    best_depth = grid[0]
    for depth in grid[1:]:
        if scores[depth] > scores[best_depth] + 1e-12:
            best_depth = depth
    logging.info(f"[select_depth_cv] Выбрана глубина {best_depth}")
    return best_depth, scores


def tree_to_dict(tree: DecisionTree) -> Dict[str, Any]:
    """JSON-совместимое представление дерева."""
    return {
        "n_features": tree.n_features,
        "n_classes": tree.n_classes,
        "training_size": tree.training_size,
        "root": tree.root,
        "nodes": [
            {
                "node_id": n.node_id,
                "feature_index": n.feature_index,
                "threshold": n.threshold,
                "left": n.left,
                "right": n.right,
            }
            for n in tree.nodes
        ],
        "leaves": [
            {
                "leaf_id": leaf.leaf_id,
                "class_counts": list(leaf.class_counts),
                "path_length": leaf.path_length,
                "majority_class": leaf.majority_class,
            }
            for leaf in tree.leaves
        ],
    }


def tree_from_dict(data: Dict[str, Any]) -> DecisionTree:
    try:
        nodes = tuple(
            SplitNode(int(n["node_id"]), int(n["feature_index"]), float(n["threshold"]),
                      int(n["left"]), int(n["right"]))
            for n in data["nodes"]
        )
        leaves = tuple(
            Leaf(int(leaf["leaf_id"]), tuple(int(c) for c in leaf["class_counts"]),
                 int(leaf["path_length"]), int(leaf["majority_class"]))
            for leaf in data["leaves"]
        )
        tree = DecisionTree(
            nodes=nodes,
            leaves=leaves,
            root=int(data["root"]),
            training_size=int(data["training_size"]),
            n_features=int(data["n_features"]),
            n_classes=int(data["n_classes"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise TreeError(f"Некорректное описание дерева: {e}")
    if tree.n_leaves != tree.n_internal + 1:
        raise TreeError(f"Дерево не полное: листьев {tree.n_leaves}, узлов {tree.n_internal}")
    return tree


def tree_fingerprint(tree: DecisionTree) -> str:
    """Короткий стабильный идентификатор дерева."""
    payload = json.dumps(tree_to_dict(tree), sort_keys=True).encode("utf-8")
    return hashlib.sha1(payload).hexdigest()[:12]
