"""Command-line interface: intensity curves, simulation, fitting, selection,
and full Monte-Carlo experiments."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from .core import EventSequence, HawkesModel
from .harness import ExperimentConfig, load_config, run_experiment, write_report
from .inference import FitOptions, fit
from .mean_intensity import (
    expected_count,
    mean_intensity_curve,
    mean_intensity_general,
    mean_intensity_p1,
    mean_intensity_p2,
    volterra_mean_intensity,
)
from .selection import CRITERIA, select_order
from .simulate import GENERATOR_ID, mix_seed, simulate_count, simulate_horizon

PRESETS = ("set1_p1", "set1_p2", "set1_p3", "set2", "figure1")


def _load_events(args) -> EventSequence:
    horizon = args.horizon
    if horizon is None:
        sidecar = Path(str(args.events) + ".horizon.json")
        if sidecar.exists():
            horizon = json.loads(sidecar.read_text())["horizon"]
    return EventSequence.load_csv(args.events, horizon=horizon)


def _cmd_intensity(args) -> int:
    model = HawkesModel.load(args.model)
    grid = np.linspace(0.0, args.t_max, args.n_points)
    if args.method == "analytic":
        if model.order == 1:
            phi = mean_intensity_p1(model, grid)
        elif model.order == 2:
            phi = mean_intensity_p2(model, grid)
        else:
            raise SystemExit(
                f"no analytic formula for order {model.order}; use --method general"
            )
        counts = [expected_count(model, t) for t in grid]
    elif args.method == "general":
        phi = mean_intensity_general(model, grid)
        counts = mean_intensity_curve(model).integral(grid)
    else:
        n_nodes = max(args.n_points, 2001)
        fine = np.linspace(0.0, args.t_max, n_nodes)
        values = volterra_mean_intensity(model, fine)
        cumulative = np.concatenate(
            ([0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(fine)))
        )
        phi = np.interp(grid, fine, values)
        counts = np.interp(grid, fine, cumulative)
    lines = ["t,phi,expected_count"]
    for t, p, c in zip(grid, phi, counts):
        lines.append(f"{t:.10g},{p:.10g},{c:.10g}")
    _emit(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_simulate(args) -> int:
    model = HawkesModel.load(args.model)
    if (args.horizon is None) == (args.count is None):
        raise SystemExit("exactly one of --horizon or --count is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [mix_seed(args.seed, i) for i in range(args.replications)]
    files = []
    for i, seed in enumerate(seeds):
        if args.horizon is not None:
            events = simulate_horizon(model, args.horizon, seed)
        else:
            events = simulate_count(model, args.count, seed)
        name = f"events_{i:04d}.csv"
        events.save_csv(out / name)
        Path(out / (name + ".horizon.json")).write_text(
            json.dumps({"horizon": events.horizon}) + "\n"
        )
        files.append({"file": name, "seed": seed, "n_events": len(events), "horizon": events.horizon})
    manifest = {
        "model": model.to_dict(),
        "generator": GENERATOR_ID,
        "master_seed": args.seed,
        "mode": "horizon" if args.horizon is not None else "count",
        "paths": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(files)} path(s) to {out}")
    return 0


def _cmd_fit(args) -> int:
    events = _load_events(args)
    options = FitOptions(restarts=args.restarts, seed=args.seed)
    result = fit(events, args.order, options)
    payload = result.to_dict()
    payload["n_events"] = len(events)
    payload["horizon"] = events.horizon
    _emit(args.out, json.dumps(payload, indent=2) + "\n")
    return 0


def _cmd_select(args) -> int:
    events = _load_events(args)
    orders = [int(p) for p in args.orders.split(",")]
    options = FitOptions(restarts=args.restarts, seed=args.seed)
    result = select_order(
        events, orders, args.criterion, options, aicc_threshold=args.aicc_threshold
    )
    payload = result.to_dict()
    payload["n_events"] = len(events)
    _emit(args.out, json.dumps(payload, indent=2) + "\n")
    return 0


def _cmd_experiment(args) -> int:
    if args.preset is not None:
        ref = resources.files("exphawkes").joinpath("configs", args.preset + ".json")
        config = ExperimentConfig.from_dict(json.loads(ref.read_text()))
    else:
        config = load_config(args.config)
    if args.scale is not None:
        config = replace(config, replications=args.scale)
    report = run_experiment(config, workers=args.workers)
    written = write_report(report, args.out)
    for key in sorted(written):
        print(f"{key}: {written[key]}")
    if not report.valid:
        print("report flagged invalid:", "; ".join(report.issues), file=sys.stderr)
        return 1
    return 0


def _emit(out, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="exphawkes",
        description="Exponential-kernel self-exciting point process toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("intensity", help="mean-intensity curve and expected counts")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--n-points", type=int, default=200)
    p.add_argument("--method", choices=("analytic", "general", "volterra"), default="general")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_intensity)

    p = sub.add_parser("simulate", help="simulate event paths by thinning")
    p.add_argument("--model", required=True)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood fit of a fixed order")
    p.add_argument("--events", required=True, help="CSV of event times ('t' header)")
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("select", help="information-criterion order selection")
    p.add_argument("--events", required=True)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--orders", default="1,2,3")
    p.add_argument("--criterion", choices=CRITERIA, default="bic")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aicc-threshold", type=int, default=120)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment config")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="experiment config JSON")
    group.add_argument("--preset", choices=PRESETS, help="shipped config preset")
    p.add_argument("--scale", type=int, default=None, help="override replication count")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_experiment)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
