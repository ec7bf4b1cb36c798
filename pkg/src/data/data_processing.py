# src/data/data_processing.py
import logging
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import pandas as pd

from src.data.dataset import Dataset
from src.errors import DatasetError
from src.validation.validation_utils import resolve_column

CategoricalPolicy = Literal["drop", "one_hot"]
LABEL_COLUMN = "label"


def load_csv(path: Union[str, Path],
             label_column: Union[str, int] = -1,
             has_header: bool = True,
             delimiter: str = ",",
             categorical_policy: CategoricalPolicy = "drop",
             name: Optional[str] = None) -> Dataset:
    """
    Загружает CSV-файл и возвращает предобработанный Dataset.

    Parameters:
    -----------
    path : str or Path
        Путь к CSV-файлу
    label_column : str or int
        Имя колонки с метками или её позиция (-1 = последняя)
    has_header : bool
        Есть ли в файле строка заголовка
    delimiter : str
        Разделитель полей
    categorical_policy : {"drop", "one_hot"}
        Что делать с категориальными колонками
    name : str, optional
        Имя датасета (по умолчанию имя файла без расширения)

    Returns:
    --------
    Dataset
        Датасет после удаления пропусков и обработки категориальных колонок
    """
    path = Path(path)
    logging.info(f"[load_csv] Загрузка файла: {path}")
    try:
        raw = pd.read_csv(
            path,
            sep=delimiter,
            header=0 if has_header else None,
            skipinitialspace=True,
            float_precision="round_trip",
        )
    except FileNotFoundError:
        raise DatasetError(f"Файл не найден: {path}")
    except UnicodeDecodeError:
        raise DatasetError("Сохраните ваш CSV-файл в кодировке UTF-8 и загрузите заново.")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"Файл пуст или не содержит данных: {path}")
    except pd.errors.ParserError as e:
        raise DatasetError(f"Ошибка чтения файла {path}: {e}")
    except OSError as e:
        raise DatasetError(f"Не удалось прочитать файл {path}: {e}")

    logging.info(f"[load_csv] Прочитано {len(raw)} строк, колонки: {list(raw.columns)}")
    return preprocess(raw, label_column, categorical_policy, name=name or path.stem)


def preprocess(raw_table: pd.DataFrame,
               label_column: Union[str, int] = -1,
               categorical_policy: CategoricalPolicy = "drop",
               name: str = "dataset") -> Dataset:
    """
    Удаляет строки с пропусками, обрабатывает категориальные колонки и
    переводит метки в индексы 0..C-1 (в порядке сортировки исходных значений).
    """
    if categorical_policy not in ("drop", "one_hot"):
        raise DatasetError(f"Неизвестная политика для категориальных колонок: {categorical_policy}")

    label_col = resolve_column(raw_table, label_column)
    before = len(raw_table)
    df = raw_table.dropna(axis=0, how="any")
    dropped = before - len(df)
    if dropped:
        logging.info(f"[preprocess] Удалено строк с пропусками: {dropped}")
    if df.empty:
        raise DatasetError("После удаления строк с пропусками не осталось данных")

    raw_labels = df[label_col]
    feature_df = df.drop(columns=[label_col])

    numeric_cols = [c for c in feature_df.columns if pd.api.types.is_numeric_dtype(feature_df[c])]
    categorical_cols = [c for c in feature_df.columns if c not in numeric_cols]

    parts = [feature_df[numeric_cols].astype(np.float64)]
    if categorical_cols:
        if categorical_policy == "drop":
            logging.info(f"[preprocess] Удалены категориальные колонки: {categorical_cols}")
        else:
            dummies = pd.get_dummies(
                feature_df[categorical_cols].astype(str),
                prefix=[str(c) for c in categorical_cols],
                prefix_sep="=",
                dtype=np.float64,
            )
            logging.info(
                f"[preprocess] One-hot кодирование {len(categorical_cols)} колонок -> {dummies.shape[1]} индикаторов"
            )
            parts.append(dummies)
    features = pd.concat(parts, axis=1)
    if features.shape[1] == 0:
        raise DatasetError("Не осталось ни одного признака после обработки категориальных колонок")

    values = raw_labels.to_numpy()
    if values.dtype == object:
        values = values.astype(str)
    classes = np.unique(values)
    if classes.size < 2:
        raise DatasetError(f"single-class dataset: все строки имеют метку {classes[0]!r}")
    labels = np.searchsorted(classes, values)

    dataset = Dataset(
        features=features.to_numpy(dtype=np.float64),
        labels=labels,
        feature_names=tuple(str(c) for c in features.columns),
        class_count=int(classes.size),
        name=name,
        label_values=tuple(v.item() if hasattr(v, "item") else v for v in classes),
    )
    logging.info(
        f"[preprocess] Датасет '{name}': N={dataset.n_samples}, d={dataset.n_features}, C={dataset.class_count}"
    )
    return dataset


def dataset_to_frame(dataset: Dataset) -> pd.DataFrame:
    """Таблица с признаками и исходными метками в последней колонке."""
    df = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
    label_name = LABEL_COLUMN if LABEL_COLUMN not in df.columns else f"__{LABEL_COLUMN}__"
    df[label_name] = [dataset.label_values[i] for i in dataset.labels]
    return df


def save_csv(dataset: Dataset, path: Union[str, Path], delimiter: str = ",") -> Path:
    """Сохраняет датасет в CSV (метка в последней колонке)."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    try:
        dataset_to_frame(dataset).to_csv(path, sep=delimiter, index=False, lineterminator="\n")
    except OSError as e:
        raise DatasetError(f"Не удалось записать файл {path}: {e}")
    logging.info(f"[save_csv] Датасет '{dataset.name}' сохранён: {path}")
    return path
