"""Command-line front end: simulate, analyze, basin, sweep-gain.

Every run writes a manifest.json naming the termination reason, even when the
configuration is rejected.  Exit codes: 0 converged/ok, 2 timeout,
3 diverged, 64 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial
from pathlib import Path
from typing import Any, Iterable, Sequence

from .analysis import (
    FAMILY_APEX,
    K_LOW,
    align_to_pinned_frame,
    classify_gain,
    enumerate_triangle_equilibria,
    match_equilibrium,
)
from .dynamics import (
    CONVERGED,
    DIVERGED,
    TIMEOUT,
    BasinCell,
    BasinResult,
    GridSpec,
    IntegratorConfig,
    probe_points,
    simulate,
)
from .geometry import Position
from .graph import formation_errors
from .scenario import (
    ConfigError,
    InitialSpec,
    config_to_dict,
    load_scenario,
    make_builtin_scenario,
    resolve,
)

EXIT_OK = 0
EXIT_TIMEOUT = 2
EXIT_DIVERGED = 3
EXIT_CONFIG = 64

_REASON_EXIT = {CONVERGED: EXIT_OK, TIMEOUT: EXIT_TIMEOUT, DIVERGED: EXIT_DIVERGED}


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(out_dir: Path, payload: dict[str, Any]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        nx, ny = text.lower().split("x")
        return int(nx), int(ny)
    except ValueError as exc:
        raise ConfigError("--grid", f"expected NXxNY, got {text!r}") from exc


def _parse_k_range(text: str) -> list[float]:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError("--k-range", f"expected START:STOP:STEP, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError("--k-range", f"need step > 0 and stop >= start, got {text!r}")
    out = []
    k = start
    while k <= stop + 1e-12:
        out.append(round(k, 12))
        k += step
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    started = time.perf_counter()
    try:
        config = load_scenario(args.config)
        if args.k is not None:
            config = replace(config, k_gain=args.k)
        integ = config.integrator
        if args.dt is not None:
            integ = replace(integ, dt=args.dt)
        if args.t_max is not None:
            integ = replace(integ, t_max=args.t_max)
        config = replace(config, integrator=integ)
        if args.seed is not None:
            if config.initial.box is None:
                raise ConfigError("--seed", "the scenario has no random box to reseed")
            config = replace(
                config, initial=InitialSpec(seed=args.seed, box=config.initial.box)
            )
        scenario = resolve(config)
    except (ConfigError, ValueError) as exc:
        _write_manifest(
            out_dir,
            {
                "command": "simulate",
                "termination_reason": "config-error",
                "error": str(exc),
                "wall_time_s": time.perf_counter() - started,
            },
        )
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    result = simulate(
        scenario.plan,
        scenario.formation,
        scenario.initial_positions,
        scenario.config.integrator,
        k_gain=scenario.config.k_gain,
        kappa=scenario.config.kappa,
    )
    traj = result.trajectory
    n = scenario.graph.n

    out_dir.mkdir(parents=True, exist_ok=True)
    coord_header = [f"x_{i}" for i in range(1, n + 1)]
    coord_header = [c for pair in zip(coord_header, (f"y_{i}" for i in range(1, n + 1))) for c in pair]
    _write_csv(
        out_dir / "trajectory.csv",
        ["t", *coord_header, "max_dist_err", "max_area_err", "max_u_norm"],
        (
            [float(t), *(float(v) for v in state.reshape(-1)), *(float(m) for m in metric)]
            for t, state, metric in zip(traj.times, traj.states, traj.metrics)
        ),
    )
    _write_csv(
        out_dir / "metrics.csv",
        ["t", "max_dist_err", "max_area_err", "max_u_norm"],
        (
            [float(t), *(float(m) for m in metric)]
            for t, metric in zip(traj.times, traj.metrics)
        ),
    )

    final = traj.final_positions()
    dist_err, area_err = formation_errors(scenario.formation, final)
    manifest: dict[str, Any] = {
        "command": "simulate",
        "config": config_to_dict(scenario.config),
        "termination_reason": result.reason,
        "t_final": result.t_final,
        "steps": result.steps,
        "final_max_dist_err": dist_err,
        "final_max_area_err": area_err,
        "wall_time_s": time.perf_counter() - started,
        "outputs": ["trajectory.csv", "metrics.csv"],
    }
    if result.diverged_at is not None:
        manifest["diverged_at"] = result.diverged_at
    if n == 3 and result.reason == CONVERGED:
        manifest["terminal_equilibrium"] = _terminal_equilibrium(scenario, final)
    _write_manifest(out_dir, manifest)
    print(f"{result.reason}: t={result.t_final:.3f} max_dist_err={dist_err:.3e} max_area_err={area_err:.3e}")
    return _REASON_EXIT[result.reason]


def _terminal_equilibrium(scenario, final: list[Position]) -> dict[str, Any]:
    """Label a converged 3-agent run against the pinned equilibrium catalogue."""
    d = scenario.formation.d_star
    a, pk = align_to_pinned_frame(final[0], final[1], final[2])
    if abs(2.0 * a - d) > 1e-6 * d:
        return {"matched": None, "detail": "base agents did not settle at d_star"}
    eqs = enumerate_triangle_equilibria(0.5 * d, scenario.config.k_gain)
    match = match_equilibrium(eqs, pk)
    if match is None:
        return {"matched": None, "detail": "no equilibrium within 1e-4"}
    return {
        "matched": match.family,
        "stability": match.stability,
        "in_target_set": match.family == FAMILY_APEX,
        "canonical_xy": [pk.x, pk.y],
    }


def cmd_analyze(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    started = time.perf_counter()
    try:
        gains: list[float] = list(args.k or [])
        if args.k_range:
            gains.extend(_parse_k_range(args.k_range))
        if args.exact_boundary:
            gains.append(K_LOW)
        if not gains:
            raise ConfigError("--k", "need at least one gain (--k, --k-range or --exact-boundary)")
        if args.a <= 0:
            raise ConfigError("--a", f"must be positive, got {args.a}")
        catalogue = [(k, classify_gain(k), enumerate_triangle_equilibria(args.a, k)) for k in gains]
    except (ConfigError, ValueError) as exc:
        _write_manifest(
            out_dir,
            {
                "command": "analyze",
                "termination_reason": "config-error",
                "error": str(exc),
                "wall_time_s": time.perf_counter() - started,
            },
        )
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows = []
    summary_rows = []
    for k, regime, eqs in catalogue:
        stable = sum(1 for e in eqs if e.stability == "stable")
        summary_rows.append([k, regime.regime, int(regime.at_boundary), len(eqs), stable])
        for eq in eqs:
            lam2 = eq.eigenvalues[1] if len(eq.eigenvalues) > 1 else None
            rows.append(
                [
                    k,
                    regime.regime,
                    int(regime.at_boundary),
                    eq.family,
                    eq.position.x,
                    eq.position.y,
                    eq.eigenvalues[0],
                    lam2,
                    eq.stability,
                    eq.note,
                ]
            )
        print(f"K={k!r}: regime={regime.regime} equilibria={len(eqs)} stable={stable}")

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "equilibria.csv",
        ["k_gain", "regime", "at_boundary", "family", "x", "y", "lambda1", "lambda2", "stability", "note"],
        rows,
    )
    _write_csv(
        out_dir / "summary.csv",
        ["k_gain", "regime", "at_boundary", "n_equilibria", "n_stable"],
        summary_rows,
    )
    _write_manifest(
        out_dir,
        {
            "command": "analyze",
            "a": args.a,
            "gains": gains,
            "termination_reason": "ok",
            "wall_time_s": time.perf_counter() - started,
            "outputs": ["equilibria.csv", "summary.csv"],
        },
    )
    return EXIT_OK


def _triangle_setup(d_star: float):
    config = make_builtin_scenario("triangle", k_gain=1.0, d_star=d_star)
    scenario = resolve(config)
    return scenario.plan, scenario.formation


def _basin_grid(args: argparse.Namespace) -> GridSpec:
    nx, ny = _parse_grid(args.grid)
    return GridSpec(nx=nx, ny=ny, xmin=args.xmin, xmax=args.xmax, ymin=args.ymin, ymax=args.ymax)


def _run_basin(
    d_star: float, k_gain: float, grid: GridSpec, cfg: IntegratorConfig, jobs: int
) -> BasinResult:
    plan, formation = _triangle_setup(d_star)
    a = 0.5 * d_star
    equilibria = enumerate_triangle_equilibria(a, k_gain)
    points = grid.points()
    if jobs <= 1 or len(points) < 2:
        cells = probe_points(plan, formation, cfg, k_gain, 1.0, equilibria, points)
    else:
        chunk = max(1, (len(points) + jobs - 1) // jobs)
        batches = [points[i : i + chunk] for i in range(0, len(points), chunk)]
        worker = partial(probe_points, plan, formation, cfg, k_gain, 1.0, equilibria)
        cells = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for batch_cells in pool.map(worker, batches):
                cells.extend(batch_cells)
    correct = sum(1 for c in cells if c.label == "correct")
    fraction = correct / len(cells) if cells else float("nan")
    return BasinResult(cells=cells, fraction_correct=fraction, k_gain=k_gain, half_distance=a)


_BASIN_HEADER = ["ix", "iy", "x0", "y0", "label", "reason", "x_final", "y_final", "matched_family"]


def _basin_rows(cells: list[BasinCell]) -> list[list[Any]]:
    return [
        [c.ix, c.iy, c.x0, c.y0, c.label, c.reason, c.x_final, c.y_final, c.matched_family or ""]
        for c in cells
    ]


def cmd_basin(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    started = time.perf_counter()
    try:
        grid = _basin_grid(args)
        cfg = IntegratorConfig(dt=args.dt, t_max=args.t_max)
        if args.k is None or args.k <= 0:
            raise ConfigError("--k", f"need a positive gain, got {args.k}")
        result = _run_basin(args.d_star, args.k, grid, cfg, args.jobs)
    except (ConfigError, ValueError) as exc:
        _write_manifest(
            out_dir,
            {
                "command": "basin",
                "termination_reason": "config-error",
                "error": str(exc),
                "wall_time_s": time.perf_counter() - started,
            },
        )
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "basin.csv", _BASIN_HEADER, _basin_rows(result.cells))
    _write_manifest(
        out_dir,
        {
            "command": "basin",
            "k_gain": args.k,
            "d_star": args.d_star,
            "grid": [grid.nx, grid.ny, grid.xmin, grid.xmax, grid.ymin, grid.ymax],
            "cells": len(result.cells),
            "fraction_correct": result.fraction_correct,
            "termination_reason": "ok",
            "wall_time_s": time.perf_counter() - started,
            "outputs": ["basin.csv"],
        },
    )
    print(f"fraction_correct={result.fraction_correct!r}")
    return EXIT_OK


def cmd_sweep_gain(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    started = time.perf_counter()
    try:
        gains = _parse_k_range(args.k_range)
        grid = _basin_grid(args)
        cfg = IntegratorConfig(dt=args.dt, t_max=args.t_max)
    except (ConfigError, ValueError) as exc:
        _write_manifest(
            out_dir,
            {
                "command": "sweep-gain",
                "termination_reason": "config-error",
                "error": str(exc),
                "wall_time_s": time.perf_counter() - started,
            },
        )
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows = []
    for k in gains:
        regime = classify_gain(k)
        eqs = enumerate_triangle_equilibria(0.5 * args.d_star, k)
        stable = sum(1 for e in eqs if e.stability == "stable")
        basin = _run_basin(args.d_star, k, grid, cfg, args.jobs)
        rows.append([k, regime.regime, len(eqs), stable, basin.fraction_correct])
        print(
            f"K={k!r}: regime={regime.regime} equilibria={len(eqs)} stable={stable} "
            f"fraction_correct={basin.fraction_correct!r}"
        )

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "sweep.csv",
        ["k_gain", "regime", "n_equilibria", "n_stable", "fraction_correct"],
        rows,
    )
    _write_manifest(
        out_dir,
        {
            "command": "sweep-gain",
            "d_star": args.d_star,
            "gains": gains,
            "termination_reason": "ok",
            "wall_time_s": time.perf_counter() - started,
            "outputs": ["sweep.csv"],
        },
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triform",
        description="Formation shape control on triangulated graphs with signed-area flip avoidance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one scenario file")
    sim.add_argument("--config", required=True, help="scenario JSON document")
    sim.add_argument("--out-dir", default="out", help="artifact directory")
    sim.add_argument("--k", type=float, default=None, help="override the area gain")
    sim.add_argument("--dt", type=float, default=None, help="override the time step")
    sim.add_argument("--t-max", type=float, default=None, help="override the time budget")
    sim.add_argument("--seed", type=int, default=None, help="override the random-layout seed")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="closed-form equilibrium report over gains")
    ana.add_argument("--a", type=float, default=1.0, help="half pin distance")
    ana.add_argument("--k", type=float, action="append", help="gain to analyze (repeatable)")
    ana.add_argument("--k-range", default=None, help="START:STOP:STEP sweep of gains")
    ana.add_argument(
        "--exact-boundary",
        action="store_true",
        help="include the stability-exchange gain 2*sqrt(3)-2 exactly",
    )
    ana.add_argument("--out-dir", default="out", help="artifact directory")
    ana.set_defaults(func=cmd_analyze)

    bas = sub.add_parser("basin", help="terminal-equilibrium labels over an initial grid")
    bas.add_argument("--k", type=float, required=True, help="area gain")
    bas.add_argument("--d-star", type=float, default=2.0, help="desired edge length")
    bas.add_argument("--grid", default="9x9", help="grid size NXxNY")
    bas.add_argument("--xmin", type=float, default=-3.0)
    bas.add_argument("--xmax", type=float, default=3.0)
    bas.add_argument("--ymin", type=float, default=-3.0)
    bas.add_argument("--ymax", type=float, default=3.0)
    bas.add_argument("--dt", type=float, default=1e-3)
    bas.add_argument("--t-max", type=float, default=50.0)
    bas.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    bas.add_argument("--out-dir", default="out", help="artifact directory")
    bas.set_defaults(func=cmd_basin)

    swp = sub.add_parser("sweep-gain", help="regime table plus basin fractions over a gain range")
    swp.add_argument("--k-range", required=True, help="START:STOP:STEP sweep of gains")
    swp.add_argument("--d-star", type=float, default=2.0)
    swp.add_argument("--grid", default="5x5")
    swp.add_argument("--xmin", type=float, default=-3.0)
    swp.add_argument("--xmax", type=float, default=3.0)
    swp.add_argument("--ymin", type=float, default=-3.0)
    swp.add_argument("--ymax", type=float, default=3.0)
    swp.add_argument("--dt", type=float, default=1e-3)
    swp.add_argument("--t-max", type=float, default=50.0)
    swp.add_argument("--jobs", type=int, default=1)
    swp.add_argument("--out-dir", default="out", help="artifact directory")
    swp.set_defaults(func=cmd_sweep_gain)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
