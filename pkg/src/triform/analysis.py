"""Equilibria and stability of the pinned one- and two-base subsystems.

For an anchored pair the equilibria are the anchor itself (a repeller) and
the circle at the desired distance (attracting along the line of motion).
For a pinned triangle with pins at (-a, 0) and (a, 0), target apex above, the
equilibrium set depends on the area gain K:

* K > 3/2: the correct apex is the only equilibrium (globally attracting);
* 2*sqrt(3)-2 < K <= 3/2: the apex plus two unstable points on the axis below
  the pins, merging into one double root at K = 3/2;
* 0 < K < 2*sqrt(3)-2: the mirror-side point below the axis is also stable
  (the flip trap) and a saddle pair sits on the unit circle through the pins.

The boundary K = 2*sqrt(3)-2 leaves the lower axis point with a zero Hessian
eigenvalue; it is reported as degenerate rather than forced into a class.
A seeded damped-Newton root finder provides an independent numerical check
of the closed-form catalogue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Position
from .potentials import SQRT3, TrianglePotentialSpec, pinned_triangle_hessian

FAMILY_APEX = "apex-correct"
FAMILY_BELOW = "below-axis"
FAMILY_BETWEEN = "between"
FAMILY_CIRCLE_LEFT = "circle-left"
FAMILY_CIRCLE_RIGHT = "circle-right"
FAMILY_PAIR_ORIGIN = "pair-origin"
FAMILY_PAIR_CORRECT = "pair-correct"

STABLE = "stable"
UNSTABLE = "unstable"
DEGENERATE = "degenerate"

REGIME_GLOBAL = "global"
REGIME_ALMOST_GLOBAL = "almost-global"
REGIME_BISTABLE = "bistable"

# Gain thresholds: below K_LOW the flipped point is stable (and the circle
# saddles exist); above K_HIGH only the correct apex remains.
K_LOW = 2.0 * SQRT3 - 2.0
K_HIGH = 1.5


@dataclass(frozen=True)
class Equilibrium:
    """One critical point in the canonical pinned frame.

    eigenvalues holds the Hessian spectrum in ascending order; pair
    equilibria carry the single eigenvalue of the potential restricted to the
    line of motion.
    """

    position: Position
    family: str
    eigenvalues: tuple[float, ...]
    stability: str
    note: str = ""


@dataclass(frozen=True)
class GainRegime:
    k_gain: float
    regime: str
    boundaries: tuple[float, float] = (K_LOW, K_HIGH)
    at_boundary: bool = False


def _classify(eigenvalues: tuple[float, ...], tol: float) -> str:
    # A clearly negative eigenvalue certifies instability even alongside a
    # zero one (a gradient flow has a growth direction there); degenerate is
    # reserved for spectra that are non-negative but touch zero.
    if any(v < -tol for v in eigenvalues):
        return UNSTABLE
    if all(v > tol for v in eigenvalues):
        return STABLE
    return DEGENERATE


def symmetric_eigenvalues(h: np.ndarray) -> tuple[float, float]:
    """Eigenvalues of a symmetric 2x2 matrix, ascending."""
    mean = 0.5 * float(h[0, 0] + h[1, 1])
    disc = math.hypot(0.5 * float(h[0, 0] - h[1, 1]), float(h[0, 1]))
    return (mean - disc, mean + disc)


def enumerate_pair_equilibria(d_star: float) -> list[Equilibrium]:
    """Equilibria of an agent anchored at the origin, moving on the x axis.

    Motion is radial, so the line through anchor and agent is invariant and
    the scalar potential (x**2 - d_star**2)**2 / 4 governs it; its second
    derivative 3x**2 - d_star**2 classifies the three axis equilibria.
    """
    if not (math.isfinite(d_star) and d_star > 0):
        raise ValueError(f"d_star must be finite and positive, got {d_star}")
    d2 = d_star * d_star
    tol = 1e-9 * d2

    def make(x: float, family: str) -> Equilibrium:
        h = 3.0 * x * x - d2
        return Equilibrium(
            position=Position(x, 0.0),
            family=family,
            eigenvalues=(h,),
            stability=_classify((h,), tol),
        )

    return [make(0.0, FAMILY_PAIR_ORIGIN), make(d_star, FAMILY_PAIR_CORRECT), make(-d_star, FAMILY_PAIR_CORRECT)]


def enumerate_triangle_equilibria(a: float, k_gain: float) -> list[Equilibrium]:
    """Closed-form equilibrium catalogue of the pinned triangle.

    Pins sit at (-a, 0) and (a, 0), target apex at (0, sqrt(3)*a).  At
    K = 3/2 exactly, the two lower axis roots coincide; both records are kept
    (same coordinates, flagged) so the catalogue length still reflects the
    double root.
    """
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"a must be finite and positive, got {a}")
    if not (math.isfinite(k_gain) and k_gain > 0):
        raise ValueError(f"k_gain must be finite and positive, got {k_gain}")
    a2 = a * a
    tol = 1e-9 * a2
    spec = TrianglePotentialSpec(d_star=2.0 * a, z_star=SQRT3 * a2, k_gain=k_gain)

    def make(x: float, y: float, family: str, note: str = "") -> Equilibrium:
        eig = symmetric_eigenvalues(pinned_triangle_hessian(spec, Position(x, y)))
        return Equilibrium(
            position=Position(x, y),
            family=family,
            eigenvalues=eig,
            stability=_classify(eig, tol),
            note=note,
        )

    out = [make(0.0, SQRT3 * a, FAMILY_APEX)]

    disc = 0.75 - 0.5 * k_gain  # roots of 2y^2 + 2*sqrt(3)*a*y + K*a^2 on the axis
    if disc > 0.0:
        r = math.sqrt(disc)
        out.append(make(0.0, (-r - 0.5 * SQRT3) * a, FAMILY_BELOW))
        out.append(make(0.0, (r - 0.5 * SQRT3) * a, FAMILY_BETWEEN))
    elif disc == 0.0:
        y = -0.5 * SQRT3 * a
        note = "double root: lower axis equilibria coincide at this gain"
        out.append(make(0.0, y, FAMILY_BELOW, note))
        out.append(make(0.0, y, FAMILY_BETWEEN, note))

    if 0.0 < k_gain < K_LOW:
        y = SQRT3 * k_gain * a / (k_gain - 4.0)
        x = math.sqrt(a2 - y * y)
        out.append(make(-x, y, FAMILY_CIRCLE_LEFT))
        out.append(make(x, y, FAMILY_CIRCLE_RIGHT))
    return out


def classify_gain(k_gain: float) -> GainRegime:
    """Place an area gain in the global / almost-global / bistable regime.

    The closed upper boundary K = 3/2 belongs to the almost-global regime.
    K = 2*sqrt(3)-2 itself belongs to neither neighbouring open case (the
    lower axis equilibrium is degenerate there); it is reported as
    almost-global with at_boundary set.
    """
    if not (math.isfinite(k_gain) and k_gain > 0):
        raise ValueError(f"k_gain must be finite and positive, got {k_gain}")
    if k_gain > K_HIGH:
        return GainRegime(k_gain=k_gain, regime=REGIME_GLOBAL)
    if k_gain > K_LOW:
        return GainRegime(k_gain=k_gain, regime=REGIME_ALMOST_GLOBAL)
    if k_gain == K_LOW:
        return GainRegime(k_gain=k_gain, regime=REGIME_ALMOST_GLOBAL, at_boundary=True)
    return GainRegime(k_gain=k_gain, regime=REGIME_BISTABLE)


def pinned_field(a: float, k_gain: float, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Velocity of the free agent at (x, y), pins at (-a, 0) and (a, 0).

    Written in the same relative-coordinate form as the analytic gradient,
    vectorised over numpy arrays.
    """
    a2 = a * a
    d2 = 4.0 * a2
    z_star = SQRT3 * a2
    e1x = x + a
    e2x = x - a
    c1 = e1x * e1x + y * y - d2
    c2 = e2x * e2x + y * y - d2
    area = k_gain * (a * y - z_star)
    return -(c1 * e1x + c2 * e2x), -(c1 * y + c2 * y + area * a)


def find_equilibria_numeric(
    a: float,
    k_gain: float,
    seeds: np.ndarray | None = None,
    *,
    grid_points: int = 41,
    max_iter: int = 200,
    residual_tol: float = 1e-10,
    dedup_tol: float = 1e-8,
) -> list[Position]:
    """Roots of the pinned closed-loop field, found numerically.

    Damped Newton (fixed step damping 1/2) runs from every seed of a uniform
    grid spanning [-4a, 4a]^2 by default.  Seeds that escape, hit a singular
    Jacobian, or end with a residual above ``residual_tol`` are dropped; the
    survivors are de-duplicated at ``dedup_tol`` and returned sorted by
    (y, x).  This is the independent check of the closed-form catalogue, so
    it never consults it.
    """
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"a must be finite and positive, got {a}")
    if not (math.isfinite(k_gain) and k_gain > 0):
        raise ValueError(f"k_gain must be finite and positive, got {k_gain}")
    if seeds is None:
        axis = np.linspace(-4.0 * a, 4.0 * a, grid_points)
        gx, gy = np.meshgrid(axis, axis)
        seeds = np.column_stack([gx.ravel(), gy.ravel()])
    x = np.array(seeds[:, 0], dtype=float)
    y = np.array(seeds[:, 1], dtype=float)
    a2 = a * a
    alive = np.ones(len(x), dtype=bool)

    for _ in range(max_iter):
        if not alive.any():
            break
        fx, fy = pinned_field(a, k_gain, x, y)
        # Jacobian of the field is minus the potential's Hessian.
        j11 = -(6.0 * x * x + 2.0 * y * y - 2.0 * a2)
        j12 = -(4.0 * x * y)
        j22 = -(6.0 * y * y + 2.0 * x * x - 6.0 * a2 + k_gain * a2)
        det = j11 * j22 - j12 * j12
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = -(fx * j22 - fy * j12) / det
            dy = -(j11 * fy - j12 * fx) / det
        bad = ~np.isfinite(dx) | ~np.isfinite(dy)
        alive &= ~bad
        step = np.where(alive, 0.5, 0.0)
        x = x + step * np.where(np.isfinite(dx), dx, 0.0)
        y = y + step * np.where(np.isfinite(dy), dy, 0.0)
        alive &= np.hypot(x, y) <= 100.0 * a
        moved = np.hypot(np.where(np.isfinite(dx), dx, 0.0), np.where(np.isfinite(dy), dy, 0.0))
        alive &= moved > 1e-15 * a

    fx, fy = pinned_field(a, k_gain, x, y)
    residual = np.hypot(fx, fy)
    keep = np.isfinite(residual) & (residual < residual_tol) & (np.hypot(x, y) <= 100.0 * a)

    roots: list[tuple[float, float]] = []
    for rx, ry in sorted(zip(x[keep], y[keep]), key=lambda q: (q[1], q[0])):
        if all(math.hypot(rx - ox, ry - oy) > dedup_tol for ox, oy in roots):
            roots.append((float(rx) + 0.0, float(ry) + 0.0))
    return [Position(rx, ry) for rx, ry in roots]


def align_to_pinned_frame(pi: Position, pj: Position, pk: Position) -> tuple[float, Position]:
    """Rigidly map a triangle so its first two agents sit at (-a, 0), (a, 0).

    Returns (a, image of pk).  Only rotation and translation are applied;
    signed areas keep their sign.
    """
    mx = 0.5 * (pi.x + pj.x)
    my = 0.5 * (pi.y + pj.y)
    bx = pj.x - mx
    by = pj.y - my
    a = math.hypot(bx, by)
    if a == 0.0:
        raise ValueError("pins coincide; no canonical frame exists")
    cos_t = bx / a
    sin_t = by / a
    rx = pk.x - mx
    ry = pk.y - my
    return a, Position(cos_t * rx + sin_t * ry, -sin_t * rx + cos_t * ry)


def match_equilibrium(
    equilibria: list[Equilibrium], point: Position, tol: float = 1e-4
) -> Equilibrium | None:
    """Nearest catalogue entry within ``tol`` of ``point``, or None."""
    best = None
    best_d = tol
    for eq in equilibria:
        d = math.hypot(point.x - eq.position.x, point.y - eq.position.y)
        if d <= best_d:
            best, best_d = eq, d
    return best


def residual_norm(a: float, k_gain: float, point: Position) -> float:
    """Norm of the pinned closed-loop field at one point (scalar convenience)."""
    fx, fy = pinned_field(a, k_gain, np.array([point.x]), np.array([point.y]))
    return float(np.hypot(fx, fy)[0])
