# src/models/trainer.py
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import log_softmax

from src.config import get_config
from src.errors import DimensionError, NdtSelectError, TrainingDivergedError
from src.models.ndt import PARAM_NAMES, NdtParams, forward_batch

Grads = Dict[str, np.ndarray]


class TrainConfig(BaseModel):
    epochs: int = Field(100, ge=1, description="Максимальное число эпох.")
    batch_size: Optional[int] = Field(None, ge=1, description="Размер мини-батча. Если None, выбирается по размеру обучающей выборки.")
    patience: int = Field(20, ge=1, description="Сколько эпох без улучшения валидационной ошибки ждать до остановки.")
    lr: float = Field(0.001, ge=0.0, description="Шаг Adam.")
    beta1: float = Field(0.9, ge=0.0, lt=1.0, description="Коэффициент затухания первого момента Adam.")
    beta2: float = Field(0.999, ge=0.0, lt=1.0, description="Коэффициент затухания второго момента Adam.")
    epsilon: float = Field(1e-8, gt=0.0, description="Стабилизирующая добавка в знаменателе Adam.")
    shuffle_seed: int = Field(0, description="Зерно перемешивания мини-батчей.")
    restore_best: bool = Field(True, description="Восстанавливать ли веса эпохи с минимальной валидационной ошибкой.")
    clip_grad_norm: Optional[float] = Field(None, gt=0.0, description="Ограничение нормы градиента каждого массива. Если None, без ограничения.")

    model_config = {"extra": "forbid"}


@dataclass
class TrainLog:
    train_losses: List[float] = field(default_factory=list)
    val_losses: List[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    restored_best: bool = False
    batch_size: int = 0

    def to_jsonl(self) -> str:
        """Одна JSON-строка на эпоху: epoch, train_loss, val_loss."""
        return "".join(
            json.dumps({"epoch": epoch, "train_loss": tr, "val_loss": va}) + "\n"
            for epoch, (tr, va) in enumerate(zip(self.train_losses, self.val_losses), start=1)
        )


@dataclass(frozen=True)
class AdamState:
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: NdtParams) -> "AdamState":
        arrays = params.arrays()
        return cls(
            m={name: np.zeros_like(arr) for name, arr in arrays.items()},
            v={name: np.zeros_like(arr) for name, arr in arrays.items()},
            t=0,
        )


class EarlyStopping:
    """
    Ранняя остановка по валидационной ошибке.

    Эпоха считается улучшением, если ошибка строго меньше лучшей.
    Остановка - когда с лучшей эпохи прошло patience эпох.
    """

    def __init__(self, patience: int = 20):
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.best_params: Optional[NdtParams] = None

    def update(self, epoch: int, val_loss: float, params: NdtParams) -> bool:
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_params = params
            return True
        return False

    def should_stop(self, epoch: int) -> bool:
        return epoch - self.best_epoch >= self.patience


def _check_batch(params: NdtParams, X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1 or y.shape[0] == 0:
        raise NdtSelectError("Пустой батч")
    if np.shape(X)[0] != y.shape[0]:
        raise DimensionError(f"Число меток {y.shape[0]} != числу строк {np.shape(X)[0]}")
    if y.min() < 0 or y.max() >= params.n_classes:
        raise NdtSelectError(f"Метки вне диапазона 0..{params.n_classes - 1}")
    return X, y


def loss(params: NdtParams, X: np.ndarray, y: np.ndarray) -> float:
    """Средняя кросс-энтропия softmax-выходов NDT."""
    X, y = _check_batch(params, X, y)
    scores = forward_batch(params, X).scores
    value = float(-np.mean(log_softmax(scores, axis=1)[np.arange(y.shape[0]), y]))
    if not np.isfinite(value):
        raise TrainingDivergedError(f"Функция потерь не конечна: {value}")
    return value


def grad(params: NdtParams, X: np.ndarray, y: np.ndarray) -> Grads:
    """Аналитический градиент средней кросс-энтропии по W1, b1, W2, b2, W3, b3 (γ не обучаются)."""
    X, y = _check_batch(params, X, y)
    trace = forward_batch(params, X)
    n = y.shape[0]

    d_scores = trace.probabilities.copy()
    d_scores[np.arange(n), y] -= 1.0
    d_scores /= n

    d_z2 = (d_scores @ params.W3.T) * params.gamma2 * (1.0 - trace.h2 ** 2)
    d_z1 = (d_z2 @ params.W2.T) * params.gamma1 * (1.0 - trace.h1 ** 2)

    grads = {
        "W1": np.asarray(X, dtype=np.float64).T @ d_z1,
        "b1": d_z1.sum(axis=0),
        "W2": trace.h1.T @ d_z2,
        "b2": d_z2.sum(axis=0),
        "W3": trace.h2.T @ d_scores,
        "b3": d_scores.sum(axis=0),
    }
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise TrainingDivergedError(f"Градиент {name} содержит NaN или бесконечности")
    return grads


def clip_grads(grads: Grads, max_norm: float) -> Grads:
    """Масштабирует каждый массив градиента так, чтобы его норма не превышала max_norm."""
    clipped = {}
    for name, g in grads.items():
        norm = float(np.linalg.norm(g))
        clipped[name] = g * (max_norm / norm) if norm > max_norm else g
    return clipped


def adam_step(params: NdtParams, grads: Grads, state: AdamState,
              config: TrainConfig) -> Tuple[NdtParams, AdamState]:
    """
    Один шаг Adam с поправкой смещения моментов. Входные объекты не изменяются.

        m = b1·m + (1-b1)·g,  v = b2·v + (1-b2)·g²
        θ = θ - lr/(1-b1^t) · m / (sqrt(v/(1-b2^t)) + eps)
    """
    t = state.t + 1
    bc1 = 1.0 - config.beta1 ** t
    bc2 = 1.0 - config.beta2 ** t
    step_size = config.lr / bc1

    arrays = params.arrays()
    new_arrays, new_m, new_v = {}, {}, {}
    for name in PARAM_NAMES:
        g = grads[name]
        if g.shape != arrays[name].shape:
            raise DimensionError(f"Форма градиента {name}{g.shape} != форме параметра {arrays[name].shape}")
        new_m[name] = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        new_v[name] = config.beta2 * state.v[name] + (1.0 - config.beta2) * (g * g)
        denom = np.sqrt(new_v[name] / bc2) + config.epsilon
        new_arrays[name] = arrays[name] - step_size * new_m[name] / denom
    return params.with_arrays(new_arrays), AdamState(m=new_m, v=new_v, t=t)


def default_batch_size(n_train: int) -> int:
    """clamp(2^round(log2(n/16)), 16, 256), но не больше n_train."""
    if n_train < 1:
        raise NdtSelectError("Пустая обучающая выборка")
    low = int(get_config("training.batch_size_min", 16))
    high = int(get_config("training.batch_size_max", 256))
    size = 2 ** int(round(np.log2(n_train / 16))) if n_train >= 16 else 1
    return int(min(max(size, low), high, n_train))


def train_ndt(params: NdtParams,
              X_train: np.ndarray, y_train: np.ndarray,
              X_val: np.ndarray, y_val: np.ndarray,
              config: Optional[TrainConfig] = None) -> Tuple[NdtParams, TrainLog]:
    """
    Обучает NDT мини-батчами с Adam и ранней остановкой по валидации.

    Parameters:
    -----------
    params : NdtParams
        Начальные параметры (не изменяются)
    X_train, y_train : np.ndarray
        Обучающая выборка
    X_val, y_val : np.ndarray
        Валидационная выборка для ранней остановки
    config : TrainConfig
        Гиперпараметры обучения

    Returns:
    --------
    Tuple[NdtParams, TrainLog]
        Параметры лучшей эпохи (если restore_best) и журнал обучения
    """
    config = config or TrainConfig()
    X_train = np.asarray(X_train, dtype=np.float64)
    X_val = np.asarray(X_val, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    n_train = y_train.shape[0]
    if n_train == 0 or y_val.shape[0] == 0:
        raise NdtSelectError("Обучающая и валидационная выборки должны быть непустыми")

    batch_size = min(config.batch_size or default_batch_size(n_train), n_train)
    rng = np.random.default_rng(config.shuffle_seed)
    state = AdamState.zeros_like(params)
    stopper = EarlyStopping(config.patience)
    log = TrainLog(batch_size=batch_size)

    current = params
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_train)
        weighted_loss = 0.0
        for start in range(0, n_train, batch_size):
            idx = order[start:start + batch_size]
            Xb, yb = X_train[idx], y_train[idx]
            weighted_loss += loss(current, Xb, yb) * idx.size
            grads = grad(current, Xb, yb)
            if config.clip_grad_norm is not None:
                grads = clip_grads(grads, config.clip_grad_norm)
            current, state = adam_step(current, grads, state, config)

        val_loss = loss(current, X_val, y_val)
        log.train_losses.append(weighted_loss / n_train)
        log.val_losses.append(val_loss)
        log.stopped_epoch = epoch
        stopper.update(epoch, val_loss, current)
        if stopper.should_stop(epoch):
            logging.debug(
                f"[train_ndt] Ранняя остановка на эпохе {epoch}, лучшая эпоха {stopper.best_epoch} "
                f"(val_loss={stopper.best_loss:.6f})"
            )
            break

    log.best_epoch = stopper.best_epoch
    if config.restore_best and stopper.best_params is not None:
        current = stopper.best_params
        log.restored_best = True
    return current, log
