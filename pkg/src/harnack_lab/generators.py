"""Graph families: lattice boxes, the three-rail graph, lamplighter balls.

All generators return finite truncations of infinite graphs.  Each truncation
records a halo of vertices too close to the cut; downstream operations refuse
domains whose closure touches the halo instead of silently computing biased
answers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import PreconditionError
from .graph import WeightedGraph, build_graph

MAX_LATTICE_VERTICES = 5_000_000
MAX_LAMP_STATES = 10_000_000


@dataclass(frozen=True)
class LampState:
    """A lamplighter configuration: walker position and the set of lit lamps."""

    position: int
    lamps: frozenset[int] = frozenset()

    def __str__(self) -> str:
        return "%d;%s" % (self.position, ",".join(str(i) for i in sorted(self.lamps)))


def lattice_box(d: int, half_width: int) -> WeightedGraph:
    """Unit-weight box [-half_width, half_width]^d with nearest-neighbor edges.

    Halo: the outermost shell (vertices with some |coordinate| = half_width),
    whose degrees are deficient relative to the infinite lattice.
    """
    if d not in (1, 2, 3):
        raise PreconditionError("lattice dimension must be 1, 2 or 3")
    if half_width < 1:
        raise PreconditionError("half_width must be >= 1")
    side = 2 * half_width + 1
    if side ** d > MAX_LATTICE_VERTICES:
        raise PreconditionError(f"lattice box would exceed {MAX_LATTICE_VERTICES} vertices")
    rng_axis = range(-half_width, half_width + 1)
    if d == 1:
        coords = [(x,) for x in rng_axis]
    elif d == 2:
        coords = [(x, y) for x in rng_axis for y in rng_axis]
    else:
        coords = [(x, y, z) for x in rng_axis for y in rng_axis for z in rng_axis]
    in_box = set(coords)
    edges = []
    for p in coords:
        for axis in range(d):
            q = tuple(c + (1 if a == axis else 0) for a, c in enumerate(p))
            if q in in_box:
                edges.append((p, q, 1.0))
    halo = [p for p in coords if max(abs(c) for c in p) == half_width]
    return build_graph(edges, halo_labels=halo,
                       meta={"family": "lattice_box", "d": d, "half_width": half_width,
                             "margin": f"|coord| < {half_width}"})


def three_rail(n_max: int) -> WeightedGraph:
    """Z x {0,1,2} truncated to |n| <= n_max.

    Rail 0 carries the line edges {(n,0),(n+1,0)}; each column n is a triangle
    {(n,i),(n,j)}.  The column edge between rails 1 and 2 has weight 2^{-|n|},
    every other edge weight 1.  Halo: |n| >= n_max - 1 (two steps from the cut).
    """
    if n_max < 1:
        raise PreconditionError("n_max must be >= 1")
    edges = []
    for n in range(-n_max, n_max + 1):
        if n + 1 <= n_max:
            edges.append(((n, 0), (n + 1, 0), 1.0))
        edges.append(((n, 0), (n, 1), 1.0))
        edges.append(((n, 0), (n, 2), 1.0))
        edges.append(((n, 1), (n, 2), 2.0 ** (-abs(n))))
    halo = [(n, r) for n in range(-n_max, n_max + 1) if abs(n) >= n_max - 1 for r in range(3)]
    return build_graph(edges, halo_labels=halo,
                       meta={"family": "three_rail", "n_max": n_max,
                             "margin": f"|n| < {n_max - 1}"})


# -- lamplighter --------------------------------------------------------------

def lamp_neighbors(s: LampState) -> list[LampState]:
    """The four neighbors: set the lamp at the current site, then step left or right."""
    out = []
    for lit in (False, True):
        lamps = s.lamps | {s.position} if lit else s.lamps - {s.position}
        for step in (-1, 1):
            out.append(LampState(s.position + step, frozenset(lamps)))
    return out


def lamp_distance(s: LampState) -> int:
    """Word distance from the base state (0, all lamps off), in closed form.

    The walk must depart every lit site (a lamp changes only when the walker
    leaves it) and end at ``position``.  The minimum is attained by a single
    left-right sweep in one of the two orders, plus a 2-step bounce when the
    final position is itself the extreme lit site on its side.  Validated
    against breadth-first search on every state within distance 9 of the base.
    """
    pos = s.position
    if not s.lamps:
        return abs(pos)
    m, big = min(s.lamps), max(s.lamps)
    t_left = min(0, pos, m)
    t_right = max(0, pos, big)
    if t_left == 0 and t_right == 0:
        return 2  # only the origin lamp is lit and we stand on it
    left_first = -t_left + (t_right - t_left) + (t_right - pos)
    if pos == t_right and pos == big and pos > 0:
        left_first += 2
    right_first = t_right + (t_right - t_left) + (pos - t_left)
    if pos == t_left and pos == m and pos < 0:
        right_first += 2
    return min(left_first, right_first)


def lamp_distance_paper_form(position: int, lamps: frozenset[int]) -> int:
    """2a + b + |b - position| with -a = min lit site, b = max lit site.

    Valid when a, b >= 0, position >= 0 and position != b; see
    :func:`lamp_distance` for the unconditional form.
    """
    a, b = -min(lamps), max(lamps)
    return 2 * a + b + abs(b - position)


def lamplighter_ball(r_max: int) -> tuple[WeightedGraph, int]:
    """Induced unit-weight graph on the closure of the radius-``r_max`` ball.

    States are enumerated breadth-first from the base state; every vertex label
    is its :class:`LampState`.  Returns ``(graph, base_index)``.  Halo: the
    boundary shell at distance ``r_max + 1``, whose neighbor lists are cut.
    Experiments that stop on exit from a radius-K*R ball need
    ``r_max >= K*R + 1``; the margin is recorded in ``meta``.
    """
    if r_max < 1:
        raise PreconditionError("r_max must be >= 1")
    base = LampState(0)
    dist: dict[LampState, int] = {base: 0}
    order = [base]
    q = deque([base])
    while q:
        s = q.popleft()
        if dist[s] > r_max:
            continue
        for t in lamp_neighbors(s):
            if t not in dist:
                if len(dist) >= MAX_LAMP_STATES:
                    raise PreconditionError(
                        f"lamplighter ball would exceed {MAX_LAMP_STATES} states")
                dist[t] = dist[s] + 1
                order.append(t)
                q.append(t)
    def key(s: LampState):
        return (s.position, tuple(sorted(s.lamps)))

    edges = []
    for s in order:
        for t in lamp_neighbors(s):
            if t in dist and key(s) < key(t):
                edges.append((s, t, 1.0))
    halo = [s for s in order if dist[s] == r_max + 1]
    g = build_graph(edges, halo_labels=halo,
                    meta={"family": "lamplighter_ball", "r_max": r_max,
                          "margin": f"d(base, .) <= {r_max}"})
    return g, g.index(base)


def perturb_weights(g: WeightedGraph,
                    factor_map: Mapping[tuple[int, int], float] | Callable[[int, int], float],
                    c1: float) -> WeightedGraph:
    """New graph with each edge weight multiplied by its factor in [1/c1, c1].

    ``factor_map`` is keyed by index pairs (u, v) with u < v (missing edges
    keep factor 1), or is a callable (u, v) -> factor.  Vertex indexing, the
    edge set, and the halo are preserved.
    """
    if c1 < 1.0:
        raise PreconditionError("perturbation band constant c1 must be >= 1")
    get = factor_map if callable(factor_map) else \
        (lambda u, v: factor_map.get((u, v), 1.0))
    new_weights = np.array(g.weights)
    for u in range(g.n):
        for k in range(g.indptr[u], g.indptr[u + 1]):
            v = int(g.indices[k])
            f = float(get(min(u, v), max(u, v)))
            if not (1.0 / c1 <= f <= c1):
                raise PreconditionError(
                    f"factor {f} for edge ({min(u, v)},{max(u, v)}) outside [1/{c1}, {c1}]")
            new_weights[k] = g.weights[k] * f
    meta = dict(g.meta)
    meta["perturbed"] = c1
    return WeightedGraph(np.array(g.indptr), np.array(g.indices), new_weights,
                         g.labels, halo=g.halo, meta=meta)
