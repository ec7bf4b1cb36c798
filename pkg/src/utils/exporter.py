# src/utils/exporter.py
import io
import logging
from pathlib import Path
from typing import Union

import pandas as pd
import plotly.graph_objects as go
from openpyxl.styles import PatternFill
from plotly.subplots import make_subplots

from src.selection.model import SelectionReport


def curves_frame(report: SelectionReport) -> pd.DataFrame:
    """Кривые M̄[γ] и Ā[γ] со стандартными отклонениями, одна строка на γ."""
    return pd.DataFrame(
        {
            "gamma": [p.gamma for p in report.curve],
            "gamma2": [p.gamma2 for p in report.curve],
            "mean_perf": [p.mean_performance for p in report.curve],
            "sd_perf": [p.sd_performance for p in report.curve],
            "mean_agreement": [p.mean_agreement for p in report.curve],
            "sd_agreement": [p.sd_agreement for p in report.curve],
            "n_runs": [p.n_runs for p in report.curve],
        }
    )


def runs_frame(report: SelectionReport) -> pd.DataFrame:
    """Все запуски (i, γ), включая исключённые."""
    return pd.DataFrame(
        {
            "iteration": [r.iteration for r in report.records],
            "gamma": [r.gamma for r in report.records],
            "perf": [r.ndt_performance for r in report.records],
            "agreement": [r.agreement for r in report.records],
            "dt_perf": [r.dt_performance for r in report.records],
            "best_epoch": [r.best_epoch for r in report.records],
            "stopped_epoch": [r.stopped_epoch for r in report.records],
            "failed": [r.failed for r in report.records],
            "error": [r.error or "" for r in report.records],
        }
    )


def write_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    df.to_csv(path, index=False, lineterminator="\n")
    logging.info(f"[write_csv] Сохранено {len(df)} строк: {path}")
    return path


def generate_excel_buffer(report: SelectionReport, summary: pd.DataFrame) -> io.BytesIO:
    """
    Формирует Excel-файл в памяти с листами:
      - Summary
      - Curves с подсветкой строки γ*
      - Runs
    """
    excel_buffer = io.BytesIO()
    curves = curves_frame(report)
    with pd.ExcelWriter(excel_buffer, engine="openpyxl") as writer:
        summary.to_excel(writer, sheet_name="Summary", index=False)
        curves.to_excel(writer, sheet_name="Curves", index=False)
        try:
            sheet = writer.sheets["Curves"]
            fill_green = PatternFill(start_color="C6EFCE", end_color="C6EFCE", fill_type="solid")
            row_excel = report.grid.index(report.gamma_star) + 2  # +2 из-за заголовка
            for col_idx in range(1, curves.shape[1] + 1):
                sheet.cell(row=row_excel, column=col_idx).fill = fill_green
        except (KeyError, ValueError) as e:
            logging.error(f"Ошибка при подсветке γ* на листе Curves: {e}")
        runs_frame(report).to_excel(writer, sheet_name="Runs", index=False)
    return excel_buffer


def write_excel(report: SelectionReport, summary: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(generate_excel_buffer(report, summary).getvalue())
    logging.info(f"[write_excel] Excel-отчёт сохранён: {path}")
    return path


def plot_curves(report: SelectionReport) -> go.Figure:
    """
    Кривые M̄[γ] (±SD, уровень M̄_DT, отметка γ*) и Ā[γ] на общей оси γ.

    Ось γ логарифмическая и развёрнута: слева большие γ (NDT близок к дереву).
    """
    curves = curves_frame(report)
    fig = make_subplots(
        rows=2, cols=1,
        shared_xaxes=True,
        subplot_titles=("Точность NDT M̄[γ]", "Согласие с деревом Ā[γ]"),
        vertical_spacing=0.1
    )
    for row, mean_col, sd_col, name in (
        (1, "mean_perf", "sd_perf", "M̄[γ]"),
        (2, "mean_agreement", "sd_agreement", "Ā[γ]"),
    ):
        fig.add_trace(
            go.Scatter(
                x=curves["gamma"], y=curves[mean_col], name=name, mode="lines+markers",
                error_y=dict(type="data", array=curves[sd_col], visible=True),
            ),
            row=row, col=1
        )
    fig.add_hline(y=report.dt_mean, line_dash="dash", annotation_text="M̄_DT", row=1, col=1)
    fig.add_trace(
        go.Scatter(x=[report.gamma_star], y=[report.performance_at_star], name="γ*", mode="markers",
                   marker=dict(size=12, symbol="star")),
        row=1, col=1
    )
    fig.update_xaxes(type="log", autorange="reversed")
    fig.update_xaxes(title_text="γ", row=2, col=1)
    fig.update_layout(
        height=700,
        title_text=f"Перебор γ для датасета {report.dataset.name}",
        showlegend=False
    )
    return fig


def write_plot(report: SelectionReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    plot_curves(report).write_html(str(path), include_plotlyjs="cdn")
    logging.info(f"[write_plot] График кривых сохранён: {path}")
    return path
