"""Fixed-step integration of the formation gradient flow.

The coupled system moves every agent along its own control input.  Runs end
when the largest control norm drops below a tolerance (converged), when the
time budget runs out (timeout), or when any coordinate leaves a large bound
or stops being finite (diverged).  The inner loop works on flat coordinate
lists; trajectories are recorded on a stride and returned as arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analysis import FAMILY_APEX, enumerate_triangle_equilibria
from .geometry import Position
from .graph import DesiredFormation, formation_errors
from .hierarchy import HierarchyPlan, compile_field

CONVERGED = "converged"
TIMEOUT = "timeout"
DIVERGED = "diverged"

LABEL_CORRECT = "correct"
LABEL_INCORRECT = "incorrect"
LABEL_UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings.

    method is "rk4" or "euler".  Convergence is declared on the largest
    per-agent control norm, not on position increments.
    """

    method: str = "rk4"
    dt: float = 1e-3
    t_max: float = 50.0
    grad_norm_tol: float = 1e-9
    record_stride: int = 100
    divergence_bound: float = 1e6

    def __post_init__(self) -> None:
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"method must be 'rk4' or 'euler', got {self.method!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and positive, got {self.dt}")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ValueError(f"t_max must be finite and positive, got {self.t_max}")
        if self.dt >= self.t_max:
            raise ValueError(f"dt={self.dt} must be smaller than t_max={self.t_max}")
        if not (math.isfinite(self.grad_norm_tol) and self.grad_norm_tol > 0):
            raise ValueError(f"grad_norm_tol must be positive, got {self.grad_norm_tol}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")
        if not (math.isfinite(self.divergence_bound) and self.divergence_bound > 0):
            raise ValueError(f"divergence_bound must be positive, got {self.divergence_bound}")


@dataclass
class Trajectory:
    """Recorded samples of one run.

    states[t] holds all agent positions as an (n, 2) array; metrics columns
    are (max distance error, max signed-area error, max control norm).
    """

    times: np.ndarray
    states: np.ndarray
    metrics: np.ndarray

    def final_positions(self) -> list[Position]:
        return [Position(float(x), float(y)) for x, y in self.states[-1]]


@dataclass
class SimulationResult:
    trajectory: Trajectory
    reason: str
    t_final: float
    steps: int
    diverged_at: float | None = None

    @property
    def converged(self) -> bool:
        return self.reason == CONVERGED

    def final_positions(self) -> list[Position]:
        return self.trajectory.final_positions()


def simulate(
    plan: HierarchyPlan,
    df: DesiredFormation,
    init: Sequence[Position | Sequence[float]],
    cfg: IntegratorConfig,
    *,
    k_gain: float,
    kappa: float = 1.0,
) -> SimulationResult:
    """Integrate the coupled gradient flow from ``init``.

    Samples are recorded at step 0, every record_stride steps, and at the
    final state.  Initial conditions lying exactly on an equilibrium report
    immediate convergence to it; nothing is perturbed.
    """
    n = plan.graph.n
    if len(init) != n:
        raise ValueError(f"expected {n} initial positions, got {len(init)}")
    p: list[float] = []
    for q in init:
        if not isinstance(q, Position):
            q = Position(float(q[0]), float(q[1]))  # validates finiteness
        p.extend((q.x, q.y))

    field_eval = compile_field(plan, df, k_gain=k_gain, kappa=kappa)
    size = 2 * n
    u = [0.0] * size
    k2 = [0.0] * size
    k3 = [0.0] * size
    k4 = [0.0] * size
    tmp = [0.0] * size

    dt = cfg.dt
    half = 0.5 * dt
    sixth = dt / 6.0
    tol2 = cfg.grad_norm_tol * cfg.grad_norm_tol
    bound = cfg.divergence_bound
    max_steps = int(math.ceil(cfg.t_max / dt))
    rk4 = cfg.method == "rk4"

    times: list[float] = []
    states: list[list[float]] = []
    metrics: list[tuple[float, float, float]] = []
    last_recorded = -1

    def record(step: int, gmax2: float) -> None:
        nonlocal last_recorded
        snap = [Position(p[2 * m], p[2 * m + 1]) for m in range(n)]
        dist_err, area_err = formation_errors(df, snap)
        times.append(step * dt)
        states.append(list(p))
        metrics.append((dist_err, area_err, math.sqrt(gmax2)))
        last_recorded = step

    reason = TIMEOUT
    diverged_at: float | None = None
    step = 0
    while True:
        field_eval(p, u)
        gmax2 = 0.0
        for m in range(0, size, 2):
            g2 = u[m] * u[m] + u[m + 1] * u[m + 1]
            if g2 > gmax2:
                gmax2 = g2
        if step % cfg.record_stride == 0:
            record(step, gmax2)
        if gmax2 < tol2:
            reason = CONVERGED
            break
        if step >= max_steps:
            reason = TIMEOUT
            break

        if rk4:
            for m in range(size):
                tmp[m] = p[m] + half * u[m]
            field_eval(tmp, k2)
            for m in range(size):
                tmp[m] = p[m] + half * k2[m]
            field_eval(tmp, k3)
            for m in range(size):
                tmp[m] = p[m] + dt * k3[m]
            field_eval(tmp, k4)
            for m in range(size):
                p[m] += sixth * (u[m] + 2.0 * (k2[m] + k3[m]) + k4[m])
        else:
            for m in range(size):
                p[m] += dt * u[m]
        step += 1

        worst = 0.0
        for m in range(size):
            a = abs(p[m])
            if a > worst:
                worst = a
        if not worst <= bound:  # also catches NaN
            reason = DIVERGED
            diverged_at = step * dt
            break

    if last_recorded != step:
        try:
            record(step, gmax2)
        except ValueError:
            # Non-finite coordinates after divergence: keep the last good sample.
            pass

    trajectory = Trajectory(
        times=np.asarray(times),
        states=np.asarray(states).reshape(len(times), n, 2),
        metrics=np.asarray(metrics),
    )
    return SimulationResult(
        trajectory=trajectory,
        reason=reason,
        t_final=step * dt,
        steps=step,
        diverged_at=diverged_at,
    )


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid of initial positions, endpoints included."""

    nx: int
    ny: int
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self) -> None:
        if self.nx < 0 or self.ny < 0:
            raise ValueError(f"grid sizes must be non-negative, got {self.nx}x{self.ny}")
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError("grid bounds are inverted")

    def points(self) -> list[tuple[int, int, float, float]]:
        def axis(lo: float, hi: float, count: int, idx: int) -> float:
            if count == 1:
                return 0.5 * (lo + hi)
            return lo + idx * (hi - lo) / (count - 1)

        return [
            (ix, iy, axis(self.xmin, self.xmax, self.nx, ix), axis(self.ymin, self.ymax, self.ny, iy))
            for iy in range(self.ny)
            for ix in range(self.nx)
        ]


@dataclass(frozen=True)
class BasinCell:
    ix: int
    iy: int
    x0: float
    y0: float
    label: str
    reason: str
    x_final: float
    y_final: float
    matched_family: str | None


@dataclass
class BasinResult:
    cells: list[BasinCell]
    fraction_correct: float
    k_gain: float
    half_distance: float


def probe_points(
    plan: HierarchyPlan,
    df: DesiredFormation,
    cfg: IntegratorConfig,
    k_gain: float,
    kappa: float,
    equilibria: Sequence,
    points: Sequence[tuple[int, int, float, float]],
    match_tol: float = 1e-4,
) -> list[BasinCell]:
    """Run one pinned-triangle probe per point and label the terminal state.

    Each terminal point is matched against ``equilibria``: "correct" for the
    target apex, "incorrect" for any other equilibrium, "unresolved" when
    nothing matches within ``match_tol`` or the run did not converge.  A
    failure in one cell never aborts the sweep.  Distinct points are
    independent, so callers may split them across worker processes.
    """
    if plan.graph.n != 3:
        raise ValueError(f"basin probe needs the pinned 3-agent scenario, got n={plan.graph.n}")
    a = 0.5 * df.d_star
    pins = [Position(-a, 0.0), Position(a, 0.0)]
    cells: list[BasinCell] = []
    for ix, iy, x0, y0 in points:
        result = simulate(plan, df, [*pins, Position(x0, y0)], cfg, k_gain=k_gain, kappa=kappa)
        fx, fy = (float(v) for v in result.trajectory.states[-1][2])
        label = LABEL_UNRESOLVED
        family = None
        if result.converged:
            best = None
            best_d = match_tol
            for eq in equilibria:
                d = math.hypot(fx - eq.position.x, fy - eq.position.y)
                if d <= best_d:
                    best, best_d = eq, d
            if best is not None:
                family = best.family
                label = LABEL_CORRECT if family == FAMILY_APEX else LABEL_INCORRECT
        cells.append(
            BasinCell(
                ix=ix,
                iy=iy,
                x0=x0,
                y0=y0,
                label=label,
                reason=result.reason,
                x_final=fx,
                y_final=fy,
                matched_family=family,
            )
        )
    return cells


def basin_probe(
    plan: HierarchyPlan,
    df: DesiredFormation,
    grid: GridSpec,
    cfg: IntegratorConfig,
    *,
    k_gain: float,
    kappa: float = 1.0,
    match_tol: float = 1e-4,
) -> BasinResult:
    """Classify where the free agent of a pinned triangle ends up per grid cell.

    Agents 1 and 2 start on the pins (-a, 0) and (a, 0) with a = d_star/2 and
    never move; agent 3 starts at the cell point.  Labels are assigned against
    the closed-form equilibrium catalogue for (a, k_gain).
    """
    a = 0.5 * df.d_star
    equilibria = enumerate_triangle_equilibria(a, k_gain)
    cells = probe_points(plan, df, cfg, k_gain, kappa, equilibria, grid.points(), match_tol)
    correct = sum(1 for c in cells if c.label == LABEL_CORRECT)
    fraction = correct / len(cells) if cells else float("nan")
    return BasinResult(cells=cells, fraction_correct=fraction, k_gain=k_gain, half_distance=a)
