# src/selection/model.py
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from src.config import get_config
from src.errors import SelectionError
from src.models.trainer import TrainConfig

SCHEMA_VERSION = str(get_config("output.schema_version", "1.0"))


class GammaGrid(BaseModel):
    """Строго убывающая сетка положительных значений γ."""
    values: Tuple[float, ...]

    model_config = {"frozen": True}

    @field_validator("values")
    @classmethod
    def _check_values(cls, values):
        if not values:
            raise ValueError("Сетка γ пуста")
        arr = np.asarray(values, dtype=np.float64)
        if not np.isfinite(arr).all() or (arr <= 0).any():
            raise ValueError(f"Значения γ должны быть положительными и конечными: {list(values)}")
        if (np.diff(arr) >= 0).any():
            raise ValueError(f"Сетка γ должна строго убывать: {list(values)}")
        return tuple(float(v) for v in values)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, index: int) -> float:
        return self.values[index]

    def index(self, gamma: float) -> int:
        return self.values.index(gamma)


def default_gamma_grid() -> GammaGrid:
    """9·10^p, 8·10^p, ..., 1·10^p для каждой декады из конфигурации (36 значений)."""
    decades = get_config("selection.gamma_grid_decades", [100, 10, 1, 0.1])
    return GammaGrid(values=tuple(round(k * float(decade), 10) for decade in decades for k in range(9, 0, -1)))


def make_gamma_grid(values: Sequence[float]) -> GammaGrid:
    """Сетка из произвольных значений (сортируется по убыванию)."""
    try:
        return GammaGrid(values=tuple(sorted((float(v) for v in values), reverse=True)))
    except ValueError as e:
        raise SelectionError(f"Некорректная сетка γ: {e}")


class InterpretationThresholds(BaseModel):
    high_gamma: float = Field(100.0, gt=0.0, description="γ* не меньше этого значения считается высоким (близким к дереву).")
    high_agreement: float = Field(0.8, ge=-1.0, le=1.0, description="Ā[γ*] не меньше этого значения считается высоким согласием с деревом.")

    model_config = {"extra": "forbid"}

    @classmethod
    def from_config(cls) -> "InterpretationThresholds":
        return cls(
            high_gamma=float(get_config("interpretation.high_gamma", 100.0)),
            high_agreement=float(get_config("interpretation.high_agreement", 0.8)),
        )


class SelectionConfig(BaseModel):
    n_iterations: int = Field(30, ge=1, description="Число повторных разбиений (итераций алгоритма).")
    master_seed: int = Field(0, description="Главное зерно; зёрна разбиений и перемешивания выводятся из него.")
    depth: Optional[int] = Field(None, ge=1, description="Глубина дерева. Если None, выбирается кросс-валидацией.")
    depth_grid: List[int] = Field(default_factory=lambda: list(range(1, 9)), description="Сетка глубин для кросс-валидации.")
    cv_folds: int = Field(5, ge=2, description="Число фолдов кросс-валидации глубины.")
    link: Literal["identity", "sqrt", "g", "h"] = Field("h", description="Форма связи γ2 = f(γ1).")
    paper_literal_output: bool = Field(False, description="Буквальная инициализация выходного слоя (W3 = N_k/N у мажоритарного класса, b3 = 0).")
    split_ratios: Tuple[float, float, float] = Field((0.5, 0.25, 0.25), description="Доли train/val/test.")
    min_leaf: int = Field(1, ge=1, description="Минимальное число объектов в листе дерева.")
    train: TrainConfig = Field(default_factory=TrainConfig, description="Параметры обучения NDT (shuffle_seed задаётся для каждого запуска).")
    keep_run_details: bool = Field(False, description="Сохранять ли в записях запусков кривые ошибок и итоговые параметры NDT.")

    model_config = {"extra": "forbid"}


class RunRecord(BaseModel):
    iteration: int
    gamma_index: int
    gamma: float
    gamma2: float
    ndt_performance: Optional[float] = Field(None, ge=0.0, le=1.0)
    agreement: Optional[float] = Field(None, ge=-1.0, le=1.0)
    dt_performance: float = Field(..., ge=0.0, le=1.0)
    best_epoch: int = 0
    stopped_epoch: int = 0
    failed: bool = False
    error: Optional[str] = None
    # заполняются только при keep_run_details
    train_losses: Optional[List[float]] = None
    val_losses: Optional[List[float]] = None
    params: Optional[Dict[str, Any]] = None


RUN_DETAIL_FIELDS = {"train_losses", "val_losses", "params"}


class CurvePoint(BaseModel):
    gamma: float
    gamma2: float
    mean_performance: float
    sd_performance: float
    mean_agreement: float
    sd_agreement: float
    n_runs: int


class Aggregates(BaseModel):
    curve: List[CurvePoint]
    dt_mean: float
    dt_sd: float
    n_dt: int
    single_iteration: bool = Field(False, description="Хотя бы одно среднее посчитано по одному запуску; SD такой точки = 0.")

    @property
    def mean_performance(self) -> np.ndarray:
        return np.array([p.mean_performance for p in self.curve])

    @property
    def mean_agreement(self) -> np.ndarray:
        return np.array([p.mean_agreement for p in self.curve])


class DatasetSummary(BaseModel):
    name: str
    n_samples: int
    n_features: int
    class_count: int
    feature_names: List[str]
    label_values: List[Any]
    class_counts: List[int]


class Verdict(BaseModel):
    kind: Literal["flexible", "rigid", "equivalent"]
    message: str
    note: Optional[str] = None
    gamma_star: float
    improvement: bool
    agreement_at_star: float
    performance_diff: float
    thresholds: InterpretationThresholds


class SelectionReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    dataset: DatasetSummary
    depth: int
    depth_from_cv: bool
    cv_scores: Dict[int, float] = Field(default_factory=dict)
    grid: List[float]
    gamma2: List[float]
    curve: List[CurvePoint]
    dt_mean: float
    dt_sd: float
    single_iteration: bool
    gamma_star: float
    performance_at_star: float
    agreement_at_star: float
    performance_diff: float = Field(..., description="M̄_DT - M̄[γ*]")
    improvement: bool = Field(..., description="M̄[γ*] > M̄_DT")
    failed_runs: int
    degenerate_trees: int = 0
    split_seeds: List[int]
    records: List[RunRecord]
    trees: List[Dict[str, Any]] = Field(default_factory=list, description="Деревья DT_i по итерациям (tree_to_dict).")
    config: SelectionConfig
    thresholds: InterpretationThresholds = Field(default_factory=InterpretationThresholds)
    verdict: Optional[Verdict] = None
    extra: Dict[str, Any] = Field(default_factory=dict)

    def curve_point(self, gamma: float) -> CurvePoint:
        return self.curve[self.grid.index(gamma)]
