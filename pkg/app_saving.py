import json
import logging
import os
from pathlib import Path
from typing import Dict, Optional, Union

from pydantic import ValidationError

from src.config import get_config
from src.errors import ReportFormatError, ReportVersionError
from src.manifest import RunManifest, format_validation_error
from src.models.trainer import TrainLog
from src.selection.model import RUN_DETAIL_FIELDS, SCHEMA_VERSION, SelectionReport
from src.utils.exporter import curves_frame, runs_frame, write_csv, write_excel, write_plot
from app_utils import format_summary_to_df, format_verdict_text

REPORT_FILE = get_config("output.report_file", "report.json")
CURVES_FILE = get_config("output.curves_file", "curves.csv")
RUNS_FILE = get_config("output.runs_file", "runs.csv")
VERDICT_FILE = get_config("output.verdict_file", "verdict.txt")
MANIFEST_FILE = get_config("output.manifest_file", "manifest.json")
EXCEL_FILE = get_config("output.excel_file", "report.xlsx")
PLOT_FILE = get_config("output.plot_file", "curves.html")
TREES_DIR = get_config("output.trees_dir", "trees")
RUNS_DIR = get_config("output.runs_dir", "runs")


def save_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    """
    Сохраняет эхо манифеста (все значения после наложения флагов).
    Повторный запуск select с этим файлом воспроизводит curves.csv.
    """
    path = Path(out_dir) / MANIFEST_FILE
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.model_dump(mode="json"), f, ensure_ascii=False, indent=2)
    return path


def save_trees(report: SelectionReport, out_dir: Union[str, Path]) -> Path:
    """Деревья DT_i в trees/tree_<i>.json (формат tree_to_dict)."""
    trees_dir = Path(out_dir) / TREES_DIR
    os.makedirs(trees_dir, exist_ok=True)
    for i, tree in enumerate(report.trees):
        (trees_dir / f"tree_{i:03d}.json").write_text(json.dumps(tree, indent=2), encoding="utf-8")
    return trees_dir


def save_run_details(report: SelectionReport, out_dir: Union[str, Path]) -> Optional[Path]:
    """
    Кривые обучения (JSON lines: epoch, train_loss, val_loss) и параметры обученных NDT
    в runs/iter_<i>_gamma_<j>.jsonl и runs/iter_<i>_gamma_<j>.params.json.

    Пишется только для запусков, у которых сохранены детали (keep_run_details).
    """
    detailed = [r for r in report.records if r.train_losses is not None]
    if not detailed:
        return None
    runs_dir = Path(out_dir) / RUNS_DIR
    os.makedirs(runs_dir, exist_ok=True)
    for record in detailed:
        stem = f"iter_{record.iteration:03d}_gamma_{record.gamma_index:02d}"
        log = TrainLog(train_losses=record.train_losses, val_losses=record.val_losses)
        (runs_dir / f"{stem}.jsonl").write_text(log.to_jsonl(), encoding="utf-8")
        if record.params is not None:
            (runs_dir / f"{stem}.params.json").write_text(json.dumps(record.params), encoding="utf-8")
    logging.info(f"[save_run_details] Детали {len(detailed)} запусков сохранены в {runs_dir}")
    return runs_dir


def save_artifacts(report: SelectionReport, manifest: RunManifest,
                   out_dir: Union[str, Path], excel: bool = False, plot: bool = False) -> Dict[str, Path]:
    """
    Записывает report.json, curves.csv, runs.csv, verdict.txt, manifest.json, trees/,
    а также runs/ (если есть детали запусков), report.xlsx и curves.html по флагам.
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    paths = {}
    paths["report"] = out_dir / REPORT_FILE
    paths["report"].write_text(
        report.model_dump_json(indent=2, exclude={"records": {"__all__": RUN_DETAIL_FIELDS}}),
        encoding="utf-8",
    )
    paths["curves"] = write_csv(curves_frame(report), out_dir / CURVES_FILE)
    paths["runs"] = write_csv(runs_frame(report), out_dir / RUNS_FILE)
    paths["verdict"] = out_dir / VERDICT_FILE
    paths["verdict"].write_text(format_verdict_text(report), encoding="utf-8")
    paths["manifest"] = save_manifest(manifest, out_dir)
    paths["trees"] = save_trees(report, out_dir)
    run_details = save_run_details(report, out_dir)
    if run_details is not None:
        paths["run_details"] = run_details
    if excel:
        paths["excel"] = write_excel(report, format_summary_to_df(report), out_dir / EXCEL_FILE)
    if plot:
        paths["plot"] = write_plot(report, out_dir / PLOT_FILE)
    logging.info(f"[save_artifacts] Артефакты сохранены в {out_dir}: {sorted(paths)}")
    return paths


def load_report(path: Union[str, Path]) -> SelectionReport:
    """
    Загружает report.json.

    Битый JSON или не UTF-8 -> ReportFormatError с позицией ошибки;
    другая версия схемы -> ReportVersionError.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ReportFormatError(f"Не удалось прочитать отчёт {path}: {e}")
    except UnicodeDecodeError as e:
        raise ReportFormatError(f"Отчёт {path} не в кодировке UTF-8: байт {e.start}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ReportFormatError(
            f"Отчёт {path} не является корректным JSON: строка {e.lineno}, столбец {e.colno} (позиция {e.pos}): {e.msg}"
        )
    if not isinstance(data, dict):
        raise ReportFormatError(f"Отчёт {path} должен быть JSON-объектом")

    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ReportVersionError(
            f"Версия схемы отчёта {version!r} не поддерживается (ожидается {SCHEMA_VERSION!r})"
        )
    try:
        return SelectionReport.model_validate(data)
    except ValidationError as e:
        raise ReportFormatError(f"Отчёт {path} не соответствует схеме: {format_validation_error(e)}")
