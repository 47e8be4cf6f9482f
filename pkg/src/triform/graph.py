"""Interaction graphs, their triangle cliques, and formation targets.

A formation is specified by an undirected graph whose every edge must reach a
common length d_star and whose every triangle must reach a signed area of
+/- sqrt(3)/4 * d_star**2, the sign fixed per clique by its stored vertex
order.  Graphs suitable for the layered controller are the ones that can be
grown one vertex at a time, each new vertex attaching to two adjacent
existing vertices so that it closes a triangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .geometry import Position, distance, signed_area

SQRT3 = math.sqrt(3.0)

Edge = tuple[int, int]
Clique = tuple[int, int, int]


class GraphSpecError(ValueError):
    """Raised when a graph description violates its structural invariants."""


def _canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class FormationGraph:
    """Undirected interaction graph with an oriented list of its triangles.

    Agents are numbered 1..n.  ``cliques`` must list every triangle of the
    graph exactly once; the stored vertex order of each clique fixes the
    orientation its desired signed area refers to.
    """

    n: int
    edges: frozenset[Edge]
    cliques: tuple[Clique, ...]

    def __init__(self, n: int, edges: Iterable[Sequence[int]], cliques: Iterable[Sequence[int]] = ()):
        object.__setattr__(self, "n", int(n))
        norm_edges = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise GraphSpecError(f"self-loop on agent {u}")
            norm_edges.add(_canonical_edge(u, v))
        object.__setattr__(self, "edges", frozenset(norm_edges))
        object.__setattr__(self, "cliques", tuple(tuple(int(a) for a in c) for c in cliques))
        self._validate()

    def _validate(self) -> None:
        if self.n < 1:
            raise GraphSpecError(f"agent count must be >= 1, got {self.n}")
        for u, v in self.edges:
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise GraphSpecError(f"edge ({u}, {v}) references agents outside 1..{self.n}")
        seen: set[frozenset[int]] = set()
        for c in self.cliques:
            if len(c) != 3 or len(set(c)) != 3:
                raise GraphSpecError(f"clique {c} must have three distinct agents")
            for a in c:
                if not 1 <= a <= self.n:
                    raise GraphSpecError(f"clique {c} references agents outside 1..{self.n}")
            for u, v in combinations(c, 2):
                if _canonical_edge(u, v) not in self.edges:
                    raise GraphSpecError(f"clique {c} misses edge ({u}, {v})")
            key = frozenset(c)
            if key in seen:
                raise GraphSpecError(f"clique {tuple(sorted(c))} listed twice")
            seen.add(key)
        # Re-derive the triangle set from the edges; the stored list must
        # cover it exactly, so scenario typos cannot drop or invent cliques.
        actual = self._triangles()
        if seen != actual:
            missing = sorted(tuple(sorted(t)) for t in actual - seen)
            extra = sorted(tuple(sorted(t)) for t in seen - actual)
            raise GraphSpecError(
                f"clique list does not match the graph's triangles: missing {missing}, extra {extra}"
            )

    def _triangles(self) -> set[frozenset[int]]:
        adj = self.adjacency()
        tris: set[frozenset[int]] = set()
        for u, v in self.edges:
            for w in adj[u] & adj[v]:
                tris.add(frozenset((u, v, w)))
        return tris

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in range(1, self.n + 1)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u: int, v: int) -> bool:
        return _canonical_edge(u, v) in self.edges

    def clique_index(self, agents: Iterable[int]) -> int:
        """Index into ``cliques`` of the triangle with these three agents."""
        key = frozenset(agents)
        for i, c in enumerate(self.cliques):
            if frozenset(c) == key:
                return i
        raise KeyError(f"no clique over agents {tuple(sorted(key))}")


@dataclass(frozen=True)
class DesiredFormation:
    """Formation target: the graph, the common edge length, per-clique orientations.

    Each clique's desired signed area is z_star_signs[i] * sqrt(3)/4 * d_star**2,
    taken in the clique's stored vertex order.
    """

    graph: FormationGraph
    d_star: float
    z_star_signs: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not (math.isfinite(self.d_star) and self.d_star > 0):
            raise GraphSpecError(f"d_star must be finite and positive, got {self.d_star}")
        signs = self.z_star_signs
        if signs == ():
            signs = tuple(1 for _ in self.graph.cliques)
            object.__setattr__(self, "z_star_signs", signs)
        if len(signs) != len(self.graph.cliques):
            raise GraphSpecError(
                f"need {len(self.graph.cliques)} orientation signs, got {len(signs)}"
            )
        if any(s not in (-1, 1) for s in signs):
            raise GraphSpecError(f"orientation signs must be +1 or -1, got {signs}")

    @property
    def target_area(self) -> float:
        """Unsigned area of the equilateral target triangle."""
        return 0.25 * SQRT3 * self.d_star * self.d_star

    def z_star(self, clique_index: int) -> float:
        return self.z_star_signs[clique_index] * self.target_area


def build_example_graph() -> FormationGraph:
    """The 10-agent benchmark graph: a six-triangle hexagon around agent 5
    plus three fringe triangles, nine equilateral triangles in total.

    Clique orders are chosen so that every desired signed area is positive in
    the target layout.
    """
    cliques = [
        (1, 2, 3),
        (3, 2, 5),
        (5, 2, 4),
        (3, 5, 6),
        (8, 4, 7),
        (5, 4, 8),
        (5, 8, 9),
        (6, 5, 9),
        (6, 9, 10),
    ]
    edges = {_canonical_edge(u, v) for c in cliques for u, v in combinations(c, 2)}
    return FormationGraph(10, edges, cliques)


@dataclass(frozen=True)
class LamanCheck:
    """Result of the triangulated-growth validation."""

    ok: bool
    ordering: tuple[int, ...] | None = None
    violation: str | None = None


def validate_triangulated_laman(graph: FormationGraph) -> LamanCheck:
    """Check that the graph can be grown by triangle-closing vertex additions.

    Accepts iff the vertices can be ordered so that the first two share an
    edge and every later vertex attaches to at least two earlier vertices of
    which some pair is adjacent (so each addition closes a triangle).  The
    discovered ordering is returned on success; on failure the violation
    names the first vertex that could not be attached.

    The search is greedy lowest-index-first over all seed edges.  Greedy is
    complete here: attachability only grows as vertices are placed, so if any
    valid ordering with a given seed exists the greedy one succeeds too.
    """
    n = graph.n
    if n == 1:
        return LamanCheck(ok=True, ordering=(1,))
    adj = graph.adjacency()
    if not graph.edges:
        return LamanCheck(ok=False, violation="graph has no edges to seed an ordering")

    def grow(seed: Edge) -> tuple[list[int], set[int]]:
        order = [seed[0], seed[1]]
        placed = {seed[0], seed[1]}
        while len(order) < n:
            pick = None
            for v in range(1, n + 1):
                if v in placed:
                    continue
                earlier = adj[v] & placed
                if len(earlier) >= 2 and any(
                    b in adj[a] for a, b in combinations(sorted(earlier), 2)
                ):
                    pick = v
                    break
            if pick is None:
                break
            order.append(pick)
            placed.add(pick)
        return order, placed

    best_order: list[int] = []
    best_placed: set[int] = set()
    for seed in sorted(graph.edges):
        order, placed = grow(seed)
        if len(order) == n:
            return LamanCheck(ok=True, ordering=tuple(order))
        if len(order) > len(best_order):
            best_order, best_placed = order, placed
    stuck = min(v for v in range(1, n + 1) if v not in best_placed)
    return LamanCheck(
        ok=False,
        violation=(
            f"vertex {stuck} cannot attach to two adjacent placed vertices "
            f"(best ordering covers {len(best_order)} of {n} agents)"
        ),
    )


def formation_errors(df: DesiredFormation, positions: Sequence[Position]) -> tuple[float, float]:
    """Worst distance error over edges and worst signed-area error over cliques.

    positions[i-1] is agent i.  Returns (max |dist - d_star|, max |Z - Z_star|);
    either maximum is 0.0 when the corresponding set is empty.
    """
    if len(positions) != df.graph.n:
        raise ValueError(f"expected {df.graph.n} positions, got {len(positions)}")
    dist_err = 0.0
    for u, v in df.graph.edges:
        e = abs(distance(positions[u - 1], positions[v - 1]) - df.d_star)
        if e > dist_err:
            dist_err = e
    area_err = 0.0
    for ci, (i, j, k) in enumerate(df.graph.cliques):
        z = signed_area(positions[i - 1], positions[j - 1], positions[k - 1])
        e = abs(z - df.z_star(ci))
        if e > area_err:
            area_err = e
    return dist_err, area_err
