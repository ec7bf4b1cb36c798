# src/validation/validation_utils.py
import pandas as pd

from src.errors import DatasetError


def resolve_column(df: pd.DataFrame, column) -> str:
    """
    Находит колонку по имени или по индексу (отрицательный индекс считается с конца).

    Parameters:
    -----------
    df : pandas.DataFrame
        Таблица
    column : str or int
        Имя колонки или её позиция. Строка из цифр трактуется как позиция,
        если колонки с таким именем нет.

    Returns:
    --------
    str
        Имя колонки
    """
    if df is None:
        raise DatasetError("DataFrame не инициализирован (None)")
    columns = list(df.columns)
    if isinstance(column, str) and column in columns:
        return column
    if isinstance(column, str):
        try:
            column = int(column)
        except ValueError:
            raise DatasetError(f"В таблице нет колонки '{column}'. Доступные: {', '.join(map(str, columns))}")
    if isinstance(column, int):
        if column in columns:
            return column
        if -len(columns) <= column < len(columns):
            return columns[column]
        raise DatasetError(f"Индекс колонки {column} вне диапазона (всего колонок {len(columns)})")
    raise DatasetError(f"Неподдерживаемый тип идентификатора колонки: {type(column).__name__}")
