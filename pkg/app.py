# app.py
import logging
from pathlib import Path
from typing import List, Optional

import typer

from app_saving import load_report, save_artifacts
from app_utils import format_inspect, format_summary_row
from src.config import get_config, settings
from src.data.data_processing import load_csv, save_csv
from src.data.simulation import make_sim_dataset, simulation_parameters
from src.errors import ManifestError, NdtSelectError
from src.manifest import RunManifest, build_manifest, load_manifest
from src.selection.model import InterpretationThresholds, default_gamma_grid, make_gamma_grid
from src.selection.selector import resolve_jobs, run_selection
from src.utils.utils import setup_logger

app = typer.Typer(add_completion=False, help="Выбор семейства моделей (деревья или нейросети) через NDT.")


def _fail(error: Exception) -> None:
    """Одна строка в stderr и ненулевой код выхода."""
    message = " ".join(str(error).split()) or repr(error)
    typer.echo(f"error={type(error).__name__} message={message}", err=True)
    raise typer.Exit(code=2 if isinstance(error, ManifestError) else 1)


def _parse_list(raw: Optional[str], cast, flag: str) -> Optional[List]:
    if raw is None:
        return None
    try:
        return [cast(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ManifestError(f"{flag}: не удалось разобрать список '{raw}'")


def _merge_flags(values: dict, **flags) -> dict:
    """Флаги командной строки (не None) переопределяют ключи манифеста."""
    merged = dict(values)
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged


def _load_dataset(manifest: RunManifest):
    if manifest.simulate is not None:
        sim = manifest.simulate
        dataset = make_sim_dataset(sim.n, sim.d, sim.seed, sim.separation, sim.layout)
        return dataset, {"simulation": simulation_parameters(sim.n, sim.d, sim.seed, sim.separation, sim.layout)}
    dataset = load_csv(
        manifest.data,
        label_column=manifest.label_column,
        has_header=manifest.has_header,
        delimiter=manifest.delimiter,
        categorical_policy=manifest.categorical,
    )
    return dataset, {"source": manifest.data, "categorical_policy": manifest.categorical}


@app.command()
def select(
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="JSON-манифест запуска."),
    data: Optional[str] = typer.Option(None, "--data", help="CSV-файл с данными."),
    simulate: bool = typer.Option(False, "--simulate", help="Использовать синтетический датасет."),
    label_col: Optional[str] = typer.Option(None, "--label-col", help="Имя или позиция колонки меток."),
    categorical: Optional[str] = typer.Option(None, "--categorical", help="drop или one-hot."),
    depth: Optional[int] = typer.Option(None, "--depth", help="Глубина дерева (иначе кросс-валидация)."),
    depth_grid: Optional[str] = typer.Option(None, "--depth-grid", help="Сетка глубин через запятую."),
    gamma_grid: Optional[str] = typer.Option(None, "--gamma-grid", help="Сетка γ через запятую."),
    link: Optional[str] = typer.Option(None, "--link", help="identity | sqrt | g | h."),
    iterations: Optional[int] = typer.Option(None, "--iterations", help="Число итераций."),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size"),
    patience: Optional[int] = typer.Option(None, "--patience"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Главное зерно."),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Число процессов (иначе NDT_SELECT_JOBS или число CPU)."),
    out: Optional[str] = typer.Option(None, "--out", help="Каталог для артефактов."),
    paper_literal_output: bool = typer.Option(False, "--paper-literal-output", help="Буквальная инициализация выходного слоя."),
    clip_grad: bool = typer.Option(False, "--clip-grad", help="Ограничить норму градиента каждого массива."),
    excel: bool = typer.Option(False, "--excel", help="Дополнительно сохранить report.xlsx."),
    plot: bool = typer.Option(False, "--plot", help="Сохранить график кривых curves.html (plotly)."),
    save_runs: bool = typer.Option(False, "--save-runs", help="Сохранить кривые обучения и параметры каждого NDT в runs/."),
    no_progress: bool = typer.Option(False, "--no-progress", help="Не показывать прогресс-бар."),
    verbose: bool = typer.Option(False, "--verbose", help="Подробное логирование."),
):
    """Перебор γ, кривые M̄[γ] и Ā[γ], γ* и вердикт."""
    setup_logger(level="DEBUG" if verbose else None, console=verbose)
    logging.info("========== select ==========")
    try:
        values = load_manifest(manifest) if manifest else {}
        if data is not None:
            values["data"] = data
            values.pop("simulate", None)
        if simulate:
            values.pop("data", None)
            sim = dict(values.get("simulate") or {})
            if seed is not None:
                sim.setdefault("seed", seed)
            values["simulate"] = sim
        values = _merge_flags(
            values,
            label_column=label_col,
            categorical=categorical.replace("-", "_") if categorical else None,
            depth=depth,
            depth_grid=_parse_list(depth_grid, int, "--depth-grid"),
            gamma_grid=_parse_list(gamma_grid, float, "--gamma-grid"),
            link=link,
            iterations=iterations,
            epochs=epochs,
            batch_size=batch_size,
            patience=patience,
            seed=seed,
            jobs=jobs,
            out=out,
            paper_literal_output=True if paper_literal_output else None,
            clip_grad_norm=float(get_config("training.clip_grad_norm", 1000.0)) if clip_grad else None,
            excel=True if excel else None,
            plot=True if plot else None,
            save_runs=True if save_runs else None,
        )
        run_manifest = build_manifest(values)

        dataset, source_echo = _load_dataset(run_manifest)
        grid = make_gamma_grid(run_manifest.gamma_grid) if run_manifest.gamma_grid else default_gamma_grid()
        n_jobs = resolve_jobs(run_manifest.jobs or settings.JOBS)
        report = run_selection(
            dataset,
            grid=grid,
            config=run_manifest.selection_config(),
            thresholds=InterpretationThresholds.from_config(),
            jobs=n_jobs,
            show_progress=not no_progress,
            extra={"manifest": run_manifest.model_dump(mode="json"), **source_echo},
        )
        save_artifacts(report, run_manifest, run_manifest.out, excel=run_manifest.excel, plot=run_manifest.plot)
    except (NdtSelectError, OSError) as e:
        _fail(e)
    except Exception as e:
        logging.exception("[select] Непредвиденная ошибка")
        _fail(e)

    typer.echo(format_summary_row(report))


@app.command()
def simulate(
    n: int = typer.Option(int(get_config("simulation.n", 1000)), "--n", help="Число объектов."),
    d: int = typer.Option(int(get_config("simulation.d", 3)), "--d", help="Число признаков."),
    seed: int = typer.Option(0, "--seed"),
    separation: float = typer.Option(float(get_config("simulation.separation", 4.0)), "--separation"),
    layout: str = typer.Option(get_config("simulation.layout", "diagonal"), "--layout", help="diagonal или axis."),
    out: Path = typer.Option(Path("sim.csv"), "--out", help="Путь к CSV."),
    verbose: bool = typer.Option(False, "--verbose"),
):
    """Синтетический двухклассовый датасет в CSV (метка в последней колонке)."""
    setup_logger(level="DEBUG" if verbose else None, console=verbose)
    try:
        dataset = make_sim_dataset(n, d, seed, separation, layout)
        path = save_csv(dataset, out)
    except NdtSelectError as e:
        _fail(e)
    except Exception as e:
        logging.exception("[simulate] Непредвиденная ошибка")
        _fail(e)
    typer.echo(str(path))


@app.command()
def inspect(
    report_path: Path = typer.Argument(..., help="Путь к report.json."),
):
    """Вердикт, γ*, экстремумы кривых и эхо конфигурации из сохранённого отчёта."""
    setup_logger(console=False)
    try:
        report = load_report(report_path)
    except NdtSelectError as e:
        _fail(e)
    except Exception as e:
        logging.exception("[inspect] Непредвиденная ошибка")
        _fail(e)
    typer.echo(format_inspect(report))


if __name__ == "__main__":
    app()
