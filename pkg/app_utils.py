import pandas as pd

from src.selection.model import SelectionReport


def format_summary_row(report: SelectionReport) -> str:
    """Строка итогов: γ*, P(DT), P(NDT(γ*)), разница, улучшение, согласие."""
    return (
        f"dataset={report.dataset.name} "
        f"gamma_star={report.gamma_star:g} "
        f"P_DT={report.dt_mean:.4f} "
        f"P_NDT={report.performance_at_star:.4f} "
        f"diff={report.performance_diff:+.4f} "
        f"impr={'yes' if report.improvement else 'no'} "
        f"A={report.agreement_at_star:.4f}"
    )


def format_verdict_text(report: SelectionReport) -> str:
    """Текст verdict.txt."""
    verdict = report.verdict
    lines = [f"verdict: {verdict.kind}", verdict.message]
    if verdict.note:
        lines.append(verdict.note)
    lines += [
        "",
        f"gamma_star: {report.gamma_star:g} (gamma2 = {report.curve_point(report.gamma_star).gamma2:.4f})",
        f"mean DT accuracy: {report.dt_mean:.4f} ± {report.dt_sd:.4f}",
        f"mean NDT accuracy at gamma_star: {report.performance_at_star:.4f}",
        f"performance diff (DT - NDT): {report.performance_diff:+.4f}",
        f"improvement: {'yes' if report.improvement else 'no'}",
        f"agreement (kappa) at gamma_star: {report.agreement_at_star:.4f}",
        f"thresholds: high_gamma={verdict.thresholds.high_gamma:g}, high_agreement={verdict.thresholds.high_agreement:g}",
    ]
    if report.failed_runs:
        lines.append(f"excluded runs: {report.failed_runs}")
    return "\n".join(lines) + "\n"


def format_inspect(report: SelectionReport) -> str:
    """Сводка для команды inspect: вердикт, γ*, экстремумы кривых, эхо конфигурации."""
    perf = [p.mean_performance for p in report.curve]
    agr = [p.mean_agreement for p in report.curve]
    best_j = max(range(len(perf)), key=lambda j: (perf[j], report.grid[j]))
    worst_j = min(range(len(perf)), key=lambda j: perf[j])

    summary_str = f"### Отчёт: {report.dataset.name}\n\n"
    summary_str += f"- **Verdict**: {report.verdict.kind if report.verdict else '<нет>'}\n"
    if report.verdict and report.verdict.note:
        summary_str += f"- **Note**: {report.verdict.note}\n"
    summary_str += f"- **gamma***: {report.gamma_star:g}\n"
    summary_str += f"- **Mean DT accuracy**: {report.dt_mean:.4f} ± {report.dt_sd:.4f}\n"
    summary_str += f"- **Max mean NDT accuracy**: {perf[best_j]:.4f} at gamma={report.grid[best_j]:g}\n"
    summary_str += f"- **Min mean NDT accuracy**: {perf[worst_j]:.4f} at gamma={report.grid[worst_j]:g}\n"
    summary_str += f"- **Agreement range**: {min(agr):.4f} .. {max(agr):.4f}\n"
    summary_str += f"- **Runs**: {len(report.records)} (excluded: {report.failed_runs})\n"
    summary_str += f"- **Depth**: {report.depth} ({'cv' if report.depth_from_cv else 'fixed'})\n"

    summary_str += "\n**Config:**\n"
    for key, value in report.config.model_dump(mode="json").items():
        summary_str += f"  - {key}: {value}\n"
    if report.extra:
        summary_str += "\n**Extra:**\n"
        for key, value in report.extra.items():
            summary_str += f"  - {key}: {value}\n"
    return summary_str


def format_summary_to_df(report: SelectionReport) -> pd.DataFrame:
    """Итоги отчёта как таблица для листа Summary в Excel."""
    data = [
        {"Метрика": "Dataset", "Значение": report.dataset.name},
        {"Метрика": "Verdict", "Значение": report.verdict.kind if report.verdict else ""},
        {"Метрика": "gamma*", "Значение": report.gamma_star},
        {"Метрика": "P(DT)", "Значение": report.dt_mean},
        {"Метрика": "P(NDT(gamma*))", "Значение": report.performance_at_star},
        {"Метрика": "P diff", "Значение": report.performance_diff},
        {"Метрика": "Improvement", "Значение": report.improvement},
        {"Метрика": "Agreement", "Значение": report.agreement_at_star},
        {"Метрика": "Depth", "Значение": report.depth},
        {"Метрика": "Iterations", "Значение": report.config.n_iterations},
        {"Метрика": "Master seed", "Значение": report.config.master_seed},
        {"Метрика": "Link", "Значение": report.config.link},
        {"Метрика": "Excluded runs", "Значение": report.failed_runs},
    ]
    return pd.DataFrame(data)
