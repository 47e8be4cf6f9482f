"""Scenario files: what to simulate, from where, and how to integrate.

A scenario is one JSON document with explicit keys mirroring the config
dataclasses, so a reproduction run can be reviewed at a glance.  Graphs can
be named builtins ("paper-10", "triangle", "pair") or spelled out; initial
conditions can be an explicit position list, a named layout, or a seeded
uniform draw inside a box.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .dynamics import IntegratorConfig
from .geometry import Position
from .graph import DesiredFormation, FormationGraph, build_example_graph
from .hierarchy import HierarchyPlan, build_hierarchy

BUILTIN_GRAPHS = ("paper-10", "triangle", "pair")
LAYOUT_TWO_COLUMNS = "two-columns"


class ConfigError(ValueError):
    """A scenario document that parses but violates its schema."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


@dataclass(frozen=True)
class InitialSpec:
    """Initial positions: exactly one of positions / layout / (seed, box)."""

    positions: tuple[tuple[float, float], ...] | None = None
    layout: str | None = None
    seed: int | None = None
    box: tuple[float, float, float, float] | None = None

    def __post_init__(self) -> None:
        modes = sum((self.positions is not None, self.layout is not None, self.seed is not None))
        if modes != 1:
            raise ConfigError(
                "initial", "specify exactly one of 'positions', 'layout', or 'seed' with 'box'"
            )
        if self.seed is not None and self.box is None:
            raise ConfigError("initial.box", "a seeded random layout needs a bounding box")
        if self.layout is not None and self.layout != LAYOUT_TWO_COLUMNS:
            raise ConfigError("initial.layout", f"unknown layout {self.layout!r}")
        if self.box is not None:
            xmin, xmax, ymin, ymax = self.box
            if not (xmin < xmax and ymin < ymax):
                raise ConfigError("initial.box", f"degenerate box {self.box}")


@dataclass(frozen=True)
class ScenarioConfig:
    graph: str | FormationGraph
    root_edge: tuple[int, int]
    d_star: float
    k_gain: float
    initial: InitialSpec
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    kappa: float = 1.0
    z_star_signs: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if isinstance(self.graph, str) and self.graph not in BUILTIN_GRAPHS:
            raise ConfigError("graph", f"unknown builtin graph {self.graph!r}")
        if not (math.isfinite(self.d_star) and self.d_star > 0):
            raise ConfigError("d_star", f"must be finite and positive, got {self.d_star}")
        if not (math.isfinite(self.k_gain) and self.k_gain > 0):
            raise ConfigError("k_gain", f"must be finite and positive, got {self.k_gain}")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ConfigError("kappa", f"must be finite and positive, got {self.kappa}")


def builtin_graph(name: str) -> FormationGraph:
    if name == "paper-10":
        return build_example_graph()
    if name == "triangle":
        return FormationGraph(3, [(1, 2), (2, 3), (1, 3)], [(1, 2, 3)])
    if name == "pair":
        return FormationGraph(2, [(1, 2)], [])
    raise ConfigError("graph", f"unknown builtin graph {name!r}")


def two_columns_layout(n: int, d_star: float) -> list[Position]:
    """Agents 1..5 top to bottom in a left column, 6..10 likewise on the right.

    Vertical spacing is one unit and the columns sit 3*d_star apart; only the
    qualitative arrangement matters, convergence does not depend on the exact
    numbers.
    """
    if n != 10:
        raise ConfigError("initial.layout", f"layout 'two-columns' needs 10 agents, got {n}")
    gap = 3.0 * d_star
    left = [Position(0.0, float(4 - i)) for i in range(5)]
    right = [Position(gap, float(4 - i)) for i in range(5)]
    return left + right


def random_layout(n: int, seed: int, box: tuple[float, float, float, float]) -> list[Position]:
    """Uniform draw of all agent positions inside the box, fully seeded."""
    rng = random.Random(seed)
    xmin, xmax, ymin, ymax = box
    return [Position(rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)) for _ in range(n)]


@dataclass(frozen=True)
class ResolvedScenario:
    config: ScenarioConfig
    graph: FormationGraph
    formation: DesiredFormation
    plan: HierarchyPlan
    initial_positions: list[Position]


def resolve(config: ScenarioConfig) -> ResolvedScenario:
    """Materialise a config: graph, formation target, hierarchy, initial state."""
    graph = builtin_graph(config.graph) if isinstance(config.graph, str) else config.graph
    signs = config.z_star_signs if config.z_star_signs is not None else ()
    formation = DesiredFormation(graph=graph, d_star=config.d_star, z_star_signs=signs)
    plan = build_hierarchy(graph, config.root_edge)
    init = config.initial
    if init.positions is not None:
        if len(init.positions) != graph.n:
            raise ConfigError(
                "initial.positions", f"expected {graph.n} positions, got {len(init.positions)}"
            )
        positions = [Position(float(x), float(y)) for x, y in init.positions]
    elif init.layout is not None:
        positions = two_columns_layout(graph.n, config.d_star)
    else:
        positions = random_layout(graph.n, init.seed, init.box)
    return ResolvedScenario(
        config=config,
        graph=graph,
        formation=formation,
        plan=plan,
        initial_positions=positions,
    )


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def config_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    if isinstance(config.graph, str):
        graph: Any = config.graph
    else:
        graph = {
            "n": config.graph.n,
            "edges": [list(e) for e in sorted(config.graph.edges)],
            "cliques": [list(c) for c in config.graph.cliques],
        }
    initial: dict[str, Any] = {}
    if config.initial.positions is not None:
        initial["positions"] = [list(p) for p in config.initial.positions]
    elif config.initial.layout is not None:
        initial["layout"] = config.initial.layout
    else:
        initial["seed"] = config.initial.seed
        initial["box"] = list(config.initial.box)
    out: dict[str, Any] = {
        "graph": graph,
        "root_edge": list(config.root_edge),
        "d_star": config.d_star,
        "k_gain": config.k_gain,
        "kappa": config.kappa,
        "initial": initial,
        "integrator": asdict(config.integrator),
    }
    if config.z_star_signs is not None:
        out["z_star_signs"] = list(config.z_star_signs)
    return out


def _require(doc: dict[str, Any], key: str, path: str) -> Any:
    if key not in doc:
        raise ConfigError(f"{path}{key}", "missing required field")
    return doc[key]


def config_from_dict(doc: dict[str, Any]) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", f"expected an object, got {type(doc).__name__}")
    known = {
        "graph", "root_edge", "d_star", "k_gain", "kappa", "initial", "integrator", "z_star_signs",
    }
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown field")

    raw_graph = _require(doc, "graph", "")
    if isinstance(raw_graph, str):
        graph: str | FormationGraph = raw_graph
    elif isinstance(raw_graph, dict):
        try:
            graph = FormationGraph(
                _require(raw_graph, "n", "graph."),
                _require(raw_graph, "edges", "graph."),
                raw_graph.get("cliques", []),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("graph", str(exc)) from exc
    else:
        raise ConfigError("graph", "expected a builtin name or an object")

    root_edge = _require(doc, "root_edge", "")
    if not (isinstance(root_edge, (list, tuple)) and len(root_edge) == 2):
        raise ConfigError("root_edge", f"expected a pair of agent ids, got {root_edge!r}")

    raw_initial = _require(doc, "initial", "")
    if not isinstance(raw_initial, dict):
        raise ConfigError("initial", "expected an object")
    try:
        initial = InitialSpec(
            positions=(
                tuple((float(x), float(y)) for x, y in raw_initial["positions"])
                if "positions" in raw_initial
                else None
            ),
            layout=raw_initial.get("layout"),
            seed=raw_initial.get("seed"),
            box=tuple(raw_initial["box"]) if "box" in raw_initial else None,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("initial", str(exc)) from exc

    raw_integrator = doc.get("integrator", {})
    if not isinstance(raw_integrator, dict):
        raise ConfigError("integrator", "expected an object")
    try:
        integrator = IntegratorConfig(**raw_integrator)
    except TypeError as exc:
        raise ConfigError("integrator", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("integrator", str(exc)) from exc

    signs = doc.get("z_star_signs")
    try:
        return ScenarioConfig(
            graph=graph,
            root_edge=(int(root_edge[0]), int(root_edge[1])),
            d_star=float(_require(doc, "d_star", "")),
            k_gain=float(_require(doc, "k_gain", "")),
            kappa=float(doc.get("kappa", 1.0)),
            initial=initial,
            integrator=integrator,
            z_star_signs=tuple(int(s) for s in signs) if signs is not None else None,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("<root>", str(exc)) from exc


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(doc)


def make_builtin_scenario(
    graph_name: str = "paper-10",
    *,
    k_gain: float = 20.0,
    d_star: float = 2.0,
    kappa: float = 1.0,
    initial: InitialSpec | None = None,
    integrator: IntegratorConfig | None = None,
) -> ScenarioConfig:
    """Convenience constructor for the named benchmark scenarios."""
    if initial is None:
        if graph_name == "paper-10":
            initial = InitialSpec(layout=LAYOUT_TWO_COLUMNS)
        elif graph_name == "triangle":
            initial = InitialSpec(positions=((-0.5 * d_star, 0.0), (0.5 * d_star, 0.0), (0.5, 0.5)))
        else:
            initial = InitialSpec(positions=((0.0, 0.0), (0.3, 0.3)))
    return ScenarioConfig(
        graph=graph_name,
        root_edge=(1, 2),
        d_star=d_star,
        k_gain=k_gain,
        kappa=kappa,
        initial=initial,
        integrator=integrator if integrator is not None else IntegratorConfig(),
    )
