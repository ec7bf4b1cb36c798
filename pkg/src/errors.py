# src/errors.py
"""Исключения пакета. Все наследуются от ValueError."""


class NdtSelectError(ValueError):
    """Базовая ошибка выбора семейства моделей."""


class DatasetError(NdtSelectError):
    """Некорректный или пустой датасет."""


class SplitError(NdtSelectError):
    """Разбиение на train/val/test невозможно."""


class TreeError(NdtSelectError):
    """Ошибка построения или чтения дерева решений."""


class CompileError(NdtSelectError):
    """Дерево нельзя преобразовать в NDT."""


class DimensionError(NdtSelectError):
    """Размерность входа не совпадает с ожидаемой."""


class TrainingDivergedError(NdtSelectError):
    """Функция потерь или градиент стали нечисловыми."""


class SelectionError(NdtSelectError):
    """Ошибка агрегации результатов перебора gamma."""


class ManifestError(NdtSelectError):
    """Некорректный манифест запуска."""


class ReportFormatError(NdtSelectError):
    """Файл отчёта повреждён или не является JSON."""


class ReportVersionError(NdtSelectError):
    """Версия схемы отчёта не поддерживается."""
