# src/manifest.py
import json
import logging
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from src.config import get_config
from src.errors import ManifestError
from src.models.trainer import TrainConfig
from src.selection.model import SelectionConfig


class SimulationSpec(BaseModel):
    n: int = Field(default_factory=lambda: int(get_config("simulation.n", 1000)), ge=8, description="Число объектов (не меньше 4 на класс).")
    d: int = Field(default_factory=lambda: int(get_config("simulation.d", 3)), ge=1, description="Число признаков.")
    seed: int = Field(0, description="Зерно генератора.")
    separation: float = Field(default_factory=lambda: float(get_config("simulation.separation", 4.0)), gt=0.0, description="Удаление центров класса 1 от начала координат.")
    layout: Literal["diagonal", "axis"] = Field(default_factory=lambda: get_config("simulation.layout", "diagonal"), description="Направление смещения центров класса 1.")

    model_config = {"extra": "forbid"}


class RunManifest(BaseModel):
    """Полное описание запуска select; флаги командной строки переопределяют его ключи."""
    data: Optional[str] = Field(None, description="Путь к CSV-файлу с данными.")
    simulate: Optional[SimulationSpec] = Field(None, description="Параметры синтетического датасета (вместо data).")
    label_column: Union[int, str] = Field(-1, description="Имя или позиция колонки с метками.")
    has_header: bool = Field(True, description="Есть ли в CSV строка заголовка.")
    delimiter: str = Field(default_factory=lambda: get_config("data.delimiter", ","), description="Разделитель CSV.")
    categorical: Literal["drop", "one_hot"] = Field(default_factory=lambda: get_config("data.categorical_policy", "drop"), description="Политика для категориальных колонок.")
    depth: Optional[int] = Field(None, ge=1, description="Глубина дерева; если не задана, выбирается кросс-валидацией.")
    depth_grid: List[int] = Field(default_factory=lambda: list(get_config("cart.depth_grid", list(range(1, 9)))), description="Сетка глубин для кросс-валидации.")
    cv_folds: int = Field(default_factory=lambda: int(get_config("cart.cv_folds", 5)), ge=2, description="Число фолдов кросс-валидации.")
    gamma_grid: Optional[List[float]] = Field(None, description="Сетка γ; если не задана, стандартные 36 значений.")
    link: Literal["identity", "sqrt", "g", "h"] = Field(default_factory=lambda: get_config("ndt.link", "h"), description="Форма связи γ2 = f(γ1).")
    iterations: int = Field(default_factory=lambda: int(get_config("selection.iterations", 30)), ge=1, description="Число итераций (разбиений).")
    epochs: int = Field(default_factory=lambda: int(get_config("training.epochs", 100)), ge=1)
    batch_size: Optional[int] = Field(None, ge=1)
    patience: int = Field(default_factory=lambda: int(get_config("training.patience", 20)), ge=1)
    lr: float = Field(default_factory=lambda: float(get_config("training.lr", 0.001)), ge=0.0)
    clip_grad_norm: Optional[float] = Field(None, gt=0.0, description="Ограничение нормы градиента; если не задано, без ограничения.")
    restore_best: bool = True
    seed: int = Field(0, description="Главное зерно запуска.")
    jobs: Optional[int] = Field(None, ge=1, description="Число процессов; не влияет на результаты.")
    out: str = Field("results", description="Каталог для артефактов.")
    paper_literal_output: bool = False
    excel: bool = False
    plot: bool = Field(False, description="Сохранить график кривых curves.html.")
    save_runs: bool = Field(False, description="Сохранить кривые обучения и параметры каждого NDT в runs/.")

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _one_source(self):
        if (self.data is None) == (self.simulate is None):
            raise ValueError("Нужно указать ровно один источник данных: data или simulate")
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            patience=self.patience,
            lr=self.lr,
            beta1=float(get_config("training.beta1", 0.9)),
            beta2=float(get_config("training.beta2", 0.999)),
            epsilon=float(get_config("training.epsilon", 1e-8)),
            restore_best=self.restore_best,
            clip_grad_norm=self.clip_grad_norm,
        )

    def selection_config(self) -> SelectionConfig:
        return SelectionConfig(
            n_iterations=self.iterations,
            master_seed=self.seed,
            depth=self.depth,
            depth_grid=self.depth_grid,
            cv_folds=self.cv_folds,
            link=self.link,
            paper_literal_output=self.paper_literal_output,
            split_ratios=tuple(get_config("data.split_ratios", [0.5, 0.25, 0.25])),
            min_leaf=int(get_config("cart.min_leaf", 1)),
            train=self.train_config(),
            keep_run_details=self.save_runs,
        )


def format_validation_error(error: ValidationError) -> str:
    """Одна строка: 'ключ: сообщение; ключ: сообщение'."""
    parts = []
    for item in error.errors():
        key = ".".join(str(p) for p in item["loc"]) or "manifest"
        parts.append(f"{key}: {item['msg']}")
    return "; ".join(parts)


def build_manifest(values: dict) -> RunManifest:
    try:
        return RunManifest.model_validate(values)
    except ValidationError as e:
        raise ManifestError(format_validation_error(e))


def load_manifest(path: Union[str, Path]) -> dict:
    """Читает JSON-манифест как словарь (флаги CLI накладываются поверх)."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ManifestError(f"Манифест не найден: {path}")
    except UnicodeDecodeError as e:
        raise ManifestError(f"Манифест {path} не в кодировке UTF-8: байт {e.start}")
    except json.JSONDecodeError as e:
        raise ManifestError(f"Манифест {path} не является JSON: строка {e.lineno}, столбец {e.colno}: {e.msg}")
    if not isinstance(data, dict):
        raise ManifestError("Манифест должен быть JSON-объектом")
    logging.info(f"[load_manifest] Загружен манифест {path}: ключи {sorted(data)}")
    return data
