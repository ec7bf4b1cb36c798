# src/validation/data_validation.py
import logging
from typing import Any, Dict

import numpy as np


def validate_dataset(features: np.ndarray,
                     labels: np.ndarray,
                     class_count: int,
                     feature_names=None) -> Dict[str, Any]:
    """
    Проверяет датасет классификации на корректность и возвращает словарь с результатами валидации.

    Parameters:
    -----------
    features : np.ndarray
        Матрица признаков N×d
    labels : np.ndarray
        Вектор меток классов длины N
    class_count : int
        Число классов C
    feature_names : sequence, optional
        Названия признаков (длина d)

    Returns:
    --------
    Dict[str, Any]
        - is_valid (bool)
        - errors (List[str])
        - warnings (List[str])
        - stats (Dict): n_samples, n_features, class_counts
    """
    result = {
        "is_valid": True,
        "errors": [],
        "warnings": [],
        "stats": {}
    }

    if features.ndim != 2:
        result["is_valid"] = False
        result["errors"].append(f"Матрица признаков должна быть двумерной, получено ndim={features.ndim}")
        return result
    if labels.ndim != 1:
        result["is_valid"] = False
        result["errors"].append(f"Метки должны быть вектором, получено ndim={labels.ndim}")
        return result

    n_samples, n_features = features.shape
    result["stats"]["n_samples"] = int(n_samples)
    result["stats"]["n_features"] = int(n_features)

    if labels.shape[0] != n_samples:
        result["is_valid"] = False
        result["errors"].append(f"Число меток ({labels.shape[0]}) не совпадает с числом строк ({n_samples})")
        return result
    if n_samples == 0:
        result["is_valid"] = False
        result["errors"].append("Датасет пуст: нет ни одной строки")
        return result
    if n_features == 0:
        result["is_valid"] = False
        result["errors"].append("Не осталось ни одного признака")
        return result
    if feature_names is not None and len(feature_names) != n_features:
        result["is_valid"] = False
        result["errors"].append(f"Названий признаков {len(feature_names)}, а признаков {n_features}")

    if not np.all(np.isfinite(features)):
        bad_rows = int((~np.isfinite(features)).any(axis=1).sum())
        result["is_valid"] = False
        result["errors"].append(f"Признаки содержат нечисловые значения в {bad_rows} строках")

    if class_count < 2:
        result["is_valid"] = False
        result["errors"].append("single-class dataset: нужно минимум два класса")
        return result

    if labels.min() < 0 or labels.max() >= class_count:
        result["is_valid"] = False
        result["errors"].append(f"Метки должны лежать в диапазоне 0..{class_count - 1}")
        return result

    class_counts = np.bincount(labels, minlength=class_count)
    result["stats"]["class_counts"] = class_counts.tolist()
    missing = np.flatnonzero(class_counts == 0)
    if missing.size:
        result["is_valid"] = False
        result["errors"].append(f"Классы без единого объекта: {missing.tolist()}")

    # каждая из трёх частей разбиения должна получить хотя бы по объекту каждого класса
    if n_samples < 4 * class_count:
        result["is_valid"] = False
        result["errors"].append(
            f"Слишком мало объектов: N={n_samples} < 4·C={4 * class_count}"
        )

    smallest = int(class_counts.min())
    if 0 < smallest < 4:
        result["warnings"].append(
            f"В самом малочисленном классе {smallest} объект(а); стратифицированное разбиение невозможно"
        )
    ratio = class_counts.max() / max(smallest, 1)
    if ratio > 10:
        result["warnings"].append(f"Сильный дисбаланс классов (соотношение {ratio:.1f})")

    for warning in result["warnings"]:
        logging.debug(f"[validate_dataset] {warning}")
    return result
