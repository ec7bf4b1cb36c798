# src/data/dataset.py
from dataclasses import dataclass, field
from typing import Any, Tuple

import numpy as np

from src.errors import DatasetError
from src.validation.data_validation import validate_dataset


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Датасет классификации после предобработки.

    features : матрица N×d конечных вещественных чисел
    labels : вектор N индексов классов 0..C-1
    label_values : исходное значение метки для каждого индекса класса
    """
    features: np.ndarray
    labels: np.ndarray
    feature_names: Tuple[str, ...]
    class_count: int
    name: str = "dataset"
    label_values: Tuple[Any, ...] = field(default=())

    def __post_init__(self):
        features = _readonly(np.asarray(self.features, dtype=np.float64))
        labels = _readonly(np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))
        object.__setattr__(self, "class_count", int(self.class_count))
        if not self.label_values:
            object.__setattr__(self, "label_values", tuple(range(self.class_count)))
        else:
            object.__setattr__(self, "label_values", tuple(self.label_values))

        validation = validate_dataset(features, labels, self.class_count, self.feature_names)
        if not validation["is_valid"]:
            raise DatasetError(f"Датасет '{self.name}' некорректен: " + "; ".join(validation["errors"]))
        if len(self.label_values) != self.class_count:
            raise DatasetError(
                f"Исходных значений меток {len(self.label_values)}, а классов {self.class_count}"
            )

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Возвращает (X, y) для переданных индексов."""
        return self.features[idx], self.labels[idx]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.class_count == other.class_count
            and self.feature_names == other.feature_names
            and self.label_values == other.label_values
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None
