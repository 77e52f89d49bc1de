"""Configuration-driven Monte-Carlo experiments over simulated event data.

One experiment sweeps a list of horizons (or target event counts). Each
replication simulates a path with a seed derived from the master seed, fits
the true order for RMSE bookkeeping, and runs order selection for every
requested criterion, sharing one set of candidate fits. Aggregation is a
sequential reduce over replication indices, so reports are deterministic
given the config, whatever the worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import EventSequence, HawkesModel
from .inference import FitOptions, InsufficientDataError, fit, relative_rmse, rmse
from .mean_intensity import (
    RootMultiplicityError,
    default_grid,
    expected_count,
    mean_intensity_curve,
    stationary_mean_intensity,
    volterra_mean_intensity,
)
from .selection import DEFAULT_AICC_THRESHOLD, fit_orders, selection_from_fits
from .simulate import GENERATOR_ID, mix_seed, simulate_count, simulate_horizon

WORKERS_ENV_VAR = "EXPHAWKES_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte-Carlo experiment."""

    true_model: HawkesModel
    horizons: tuple[float, ...]
    replications: int
    candidate_orders: tuple[int, ...] = (1, 2, 3)
    criteria: tuple[str, ...] = ("aic", "bic", "hq")
    fit_options: FitOptions = field(default_factory=FitOptions)
    master_seed: int = 0
    by_count: bool = False
    aicc_threshold: int | None = DEFAULT_AICC_THRESHOLD
    fit_true_order: bool = True
    emit_figure_data: bool = False
    figure_nodes: int = 50
    label: str = ""

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.horizons:
            raise ValueError("horizons must be non-empty")
        if self.true_model.order < 1:
            raise ValueError("the true model must have at least one kernel term")
        self.true_model.require_stationary()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "true_model": self.true_model.to_dict(),
            "horizons": list(self.horizons),
            "by_count": self.by_count,
            "replications": self.replications,
            "candidate_orders": list(self.candidate_orders),
            "criteria": list(self.criteria),
            "fit_options": self.fit_options.to_dict(),
            "master_seed": self.master_seed,
            "aicc_threshold": self.aicc_threshold,
            "fit_true_order": self.fit_true_order,
            "emit_figure_data": self.emit_figure_data,
            "figure_nodes": self.figure_nodes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        defaults = {
            "label": "",
            "by_count": False,
            "candidate_orders": [1, 2, 3],
            "criteria": ["aic", "bic", "hq"],
            "fit_options": {},
            "master_seed": 0,
            "aicc_threshold": DEFAULT_AICC_THRESHOLD,
            "fit_true_order": True,
            "emit_figure_data": False,
            "figure_nodes": 50,
        }
        merged = {**defaults, **data}
        return cls(
            true_model=HawkesModel.from_dict(merged["true_model"]),
            horizons=tuple(float(h) for h in merged["horizons"]),
            replications=int(merged["replications"]),
            candidate_orders=tuple(int(p) for p in merged["candidate_orders"]),
            criteria=tuple(merged["criteria"]),
            fit_options=FitOptions.from_dict(merged["fit_options"]),
            master_seed=int(merged["master_seed"]),
            by_count=bool(merged["by_count"]),
            aicc_threshold=(
                None if merged["aicc_threshold"] is None else int(merged["aicc_threshold"])
            ),
            fit_true_order=bool(merged["fit_true_order"]),
            emit_figure_data=bool(merged["emit_figure_data"]),
            figure_nodes=int(merged["figure_nodes"]),
            label=str(merged["label"]),
        )


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def replication_seed(config: ExperimentConfig, horizon_index: int, rep_index: int) -> int:
    """Per-replication seed: mix of the master seed and a global index."""
    return mix_seed(config.master_seed, horizon_index * config.replications + rep_index)


def empirical_average_count(paths, grid):
    """Mean and standard error of the counting function across paths."""
    paths = list(paths)
    if not paths:
        raise ValueError("need at least one path")
    grid = np.asarray(grid, dtype=float)
    counts = np.vstack([p.count_at(grid) for p in paths]).astype(float)
    mean = counts.mean(axis=0)
    if len(paths) > 1:
        se = counts.std(axis=0, ddof=1) / np.sqrt(len(paths))
    else:
        se = np.zeros_like(mean)
    return mean, se


def _replication_task(args):
    config, horizon_index, rep_index = args
    horizon = config.horizons[horizon_index]
    seed = replication_seed(config, horizon_index, rep_index)
    if config.by_count:
        events = simulate_count(config.true_model, int(horizon), seed)
    else:
        events = simulate_horizon(config.true_model, horizon, seed)
    record = {
        "n_events": len(events),
        "realized_horizon": events.horizon,
        "theta": None,
        "converged": False,
        "selections": {},
        "selection_error": None,
        "times": events.times.tolist() if config.emit_figure_data else None,
    }
    fits = None
    skipped = ()
    if config.criteria:
        try:
            fits, skipped = fit_orders(events, config.candidate_orders, config.fit_options)
        except InsufficientDataError as exc:
            record["selection_error"] = str(exc)
            fits = {}
        for criterion in config.criteria:
            if fits:
                result = selection_from_fits(
                    fits,
                    criterion,
                    n=len(events),
                    skipped=skipped,
                    aicc_threshold=config.aicc_threshold,
                    k_max=max(1 + 2 * p for p in config.candidate_orders),
                )
                record["selections"][criterion] = result.chosen_order
            else:
                record["selections"][criterion] = None
    if config.fit_true_order:
        true_order = config.true_model.order
        try:
            if fits and true_order in fits:
                true_fit = fits[true_order]
            else:
                true_fit = fit(events, true_order, config.fit_options)
            record["converged"] = true_fit.converged
            if true_fit.converged:
                record["theta"] = true_fit.model.theta.tolist()
        except InsufficientDataError:
            record["converged"] = False
    return record


@dataclass(frozen=True)
class HorizonSummary:
    horizon: float
    n_replications: int
    n_converged: int
    n_failed: int
    average_sample_size: float
    sample_size_se: float
    parameter_names: tuple[str, ...]
    estimates: tuple[tuple[float, ...], ...]
    rmse_abs: tuple[float, ...]
    rmse_rel: tuple[float, ...]
    selection_counts: dict
    selection_percents: dict
    selection_chosen: dict
    selection_failures: dict

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "n_replications": self.n_replications,
            "n_converged": self.n_converged,
            "n_failed": self.n_failed,
            "average_sample_size": self.average_sample_size,
            "sample_size_se": self.sample_size_se,
            "parameter_names": list(self.parameter_names),
            "estimates": [list(row) for row in self.estimates],
            "rmse_abs": list(self.rmse_abs),
            "rmse_rel": list(self.rmse_rel),
            "selection_counts": self.selection_counts,
            "selection_percents": self.selection_percents,
            "selection_chosen": self.selection_chosen,
            "selection_failures": self.selection_failures,
        }


@dataclass(frozen=True)
class FigureData:
    grid: tuple[float, ...]
    empirical_mean: tuple[float, ...]
    empirical_se: tuple[float, ...]
    theoretical_nonstationary: tuple[float, ...]
    theoretical_stationary: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "empirical_mean": list(self.empirical_mean),
            "empirical_se": list(self.empirical_se),
            "theoretical_nonstationary": list(self.theoretical_nonstationary),
            "theoretical_stationary": list(self.theoretical_stationary),
        }


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    horizons: tuple[HorizonSummary, ...]
    figure: FigureData | None
    valid: bool
    issues: tuple[str, ...]
    config_hash: str
    generator: str
    created_at: str

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "horizons": [h.to_dict() for h in self.horizons],
            "figure": self.figure.to_dict() if self.figure else None,
            "valid": self.valid,
            "issues": list(self.issues),
            "config_hash": self.config_hash,
            "generator": self.generator,
            "created_at": self.created_at,
        }


def _theoretical_counts(model: HawkesModel, grid: np.ndarray) -> np.ndarray:
    try:
        return mean_intensity_curve(model).integral(grid)
    except RootMultiplicityError:
        t_max = float(grid[-1])
        fine = default_grid(model, t_max)
        phi = volterra_mean_intensity(model, fine)
        cumulative = np.concatenate(
            ([0.0], np.cumsum(0.5 * (phi[1:] + phi[:-1]) * np.diff(fine)))
        )
        return np.interp(grid, fine, cumulative)


def _summarize_horizon(config, horizon, records):
    true_theta = config.true_model.theta
    names = config.true_model.parameter_names
    sizes = np.array([r["n_events"] for r in records], dtype=float)
    se = float(sizes.std(ddof=1) / np.sqrt(sizes.size)) if sizes.size > 1 else 0.0
    estimates = [tuple(r["theta"]) for r in records if r["theta"] is not None]
    n_converged = sum(1 for r in records if r["converged"])
    n_failed = len(records) - n_converged if config.fit_true_order else 0
    if estimates:
        matrix = np.asarray(estimates)
        rmse_abs = tuple(rmse(true_theta[j], matrix[:, j]) for j in range(len(names)))
        rmse_rel = tuple(relative_rmse(true_theta[j], matrix[:, j]) for j in range(len(names)))
    else:
        rmse_abs = ()
        rmse_rel = ()
    counts: dict[str, dict[str, int]] = {}
    percents: dict[str, dict[str, float]] = {}
    chosen: dict[str, list[int | None]] = {}
    failures: dict[str, int] = {}
    for criterion in config.criteria:
        picks = [r["selections"].get(criterion) for r in records]
        chosen[criterion] = picks
        ok = [p for p in picks if p is not None]
        failures[criterion] = len(picks) - len(ok)
        counts[criterion] = {str(p): ok.count(p) for p in sorted(set(config.candidate_orders))}
        total = len(ok)
        percents[criterion] = {
            key: (100.0 * value / total if total else 0.0)
            for key, value in counts[criterion].items()
        }
    return HorizonSummary(
        horizon=horizon,
        n_replications=len(records),
        n_converged=n_converged,
        n_failed=n_failed,
        average_sample_size=float(sizes.mean()),
        sample_size_se=se,
        parameter_names=names if config.fit_true_order else (),
        estimates=tuple(estimates),
        rmse_abs=rmse_abs,
        rmse_rel=rmse_rel,
        selection_counts=counts,
        selection_percents=percents,
        selection_chosen=chosen,
        selection_failures=failures,
    )


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Execute an experiment; deterministic given the config.

    ``workers`` > 1 runs replications in a process pool (default from the
    ``EXPHAWKES_WORKERS`` environment variable); aggregation order is fixed
    by replication index either way.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    tasks = [
        (config, h_idx, rep)
        for h_idx in range(len(config.horizons))
        for rep in range(config.replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replication_task, tasks, chunksize=max(1, len(tasks) // (workers * 8))))
    else:
        results = [_replication_task(t) for t in tasks]

    summaries = []
    issues: list[str] = []
    reps = config.replications
    for h_idx, horizon in enumerate(config.horizons):
        records = results[h_idx * reps : (h_idx + 1) * reps]
        summary = _summarize_horizon(config, horizon, records)
        if config.fit_true_order and summary.n_failed > 0.2 * reps:
            issues.append(
                f"horizon {horizon:g}: {summary.n_failed}/{reps} fits failed to converge"
            )
        for criterion, n_bad in summary.selection_failures.items():
            if n_bad > 0.2 * reps:
                issues.append(
                    f"horizon {horizon:g}: {criterion} selection failed on {n_bad}/{reps} replications"
                )
        summaries.append(summary)

    figure = None
    if config.emit_figure_data:
        records = results[: config.replications]
        paths = [
            EventSequence(np.asarray(r["times"]), horizon=r["realized_horizon"])
            for r in records
        ]
        t_common = min(p.horizon for p in paths)
        grid = np.linspace(0.0, t_common, config.figure_nodes)
        mean, se = empirical_average_count(paths, grid)
        figure = FigureData(
            grid=tuple(grid),
            empirical_mean=tuple(mean),
            empirical_se=tuple(se),
            theoretical_nonstationary=tuple(_theoretical_counts(config.true_model, grid)),
            theoretical_stationary=tuple(stationary_mean_intensity(config.true_model) * grid),
        )

    return ExperimentReport(
        config=config,
        horizons=tuple(summaries),
        figure=figure,
        valid=not issues,
        issues=tuple(issues),
        config_hash=config_hash(config),
        generator=GENERATOR_ID,
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def write_report(report: ExperimentReport, out_dir) -> dict[str, Path]:
    """Write report.json plus CSV tables; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    report_path = out / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    written["report"] = report_path

    config = report.config
    if config.fit_true_order:
        names = config.true_model.parameter_names
        for kind in ("abs", "rel"):
            lines = ["horizon," + ",".join(names) + ",average_sample_size"]
            for summary in report.horizons:
                values = summary.rmse_abs if kind == "abs" else summary.rmse_rel
                cells = [f"{v:.6g}" for v in values] or ["" for _ in names]
                lines.append(
                    f"{summary.horizon:g},"
                    + ",".join(cells)
                    + f",{summary.average_sample_size:.1f}"
                )
            path = out / f"rmse_{kind}.csv"
            path.write_text("\n".join(lines) + "\n")
            written[f"rmse_{kind}"] = path

    orders = sorted(set(config.candidate_orders))
    for criterion in config.criteria:
        lines = [
            "horizon,"
            + ",".join(f"P={p}" for p in orders)
            + ",average_sample_size"
        ]
        for summary in report.horizons:
            percents = summary.selection_percents[criterion]
            lines.append(
                f"{summary.horizon:g},"
                + ",".join(f"{percents[str(p)]:.1f}" for p in orders)
                + f",{summary.average_sample_size:.1f}"
            )
        path = out / f"selection_{criterion}.csv"
        path.write_text("\n".join(lines) + "\n")
        written[f"selection_{criterion}"] = path

    if report.figure is not None:
        lines = ["t,empirical,theoretical_nonstationary,theoretical_stationary"]
        fig = report.figure
        for row in zip(
            fig.grid, fig.empirical_mean, fig.theoretical_nonstationary, fig.theoretical_stationary
        ):
            lines.append(",".join(f"{v:.10g}" for v in row))
        path = out / "figure1.csv"
        path.write_text("\n".join(lines) + "\n")
        written["figure1"] = path

    manifest = {
        "package_version": __version__,
        "generator": report.generator,
        "numpy_version": np.__version__,
        "config_hash": report.config_hash,
        "config": config.to_dict(),
        "created_at": report.created_at,
        "files": {key: path.name for key, path in written.items()},
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written["manifest"] = manifest_path
    return written


def theoretical_sample_size(config: ExperimentConfig, horizon: float) -> float:
    """Expected event count at a horizon for the config's true model."""
    if config.by_count:
        return float(horizon)
    return expected_count(config.true_model, horizon)
