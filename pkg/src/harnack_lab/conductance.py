"""Dirichlet forms, effective conductance, and the dumbbell-ratio survey.

The Dirichlet form is the double sum over ordered pairs inside the domain,
so each interior edge contributes twice.  The conductance between two vertex
sets is the infimum of the form over potentials pinned to 1 and 0, with no
constraint elsewhere (the form only sees edges inside the domain, so the
domain frontier behaves like a free/Neumann boundary).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import PreconditionError, ResidualError
from .graph import VertexField, VertexSet, WeightedGraph, ball, bfs_distances

ENERGY_REL_TOL = 1e-9
PAIR_CAP_DEFAULT = 20_000


@dataclass(frozen=True)
class ConductanceResult:
    """Effective conductance value with its minimizing potential."""

    value: float
    potential: VertexField
    energy_residual: float
    min_random_feasible_energy: float | None = None


def dirichlet_energy(g: WeightedGraph, domain: VertexSet, f: VertexField) -> float:
    """sum_{x in D} sum_{y in D} nu_xy (f(x) - f(y))^2 (each edge counted twice)."""
    if not domain.members <= f.domain.members:
        raise PreconditionError("field must be defined on all of the domain")
    acc = 0.0
    for u in sorted(domain.members):
        fu = f.values[u]
        for k in range(g.indptr[u], g.indptr[u + 1]):
            v = int(g.indices[k])
            if v in domain.members:
                d = fu - f.values[v]
                acc += g.weights[k] * d * d
    return acc


def effective_conductance(g: WeightedGraph, domain: VertexSet,
                          source_set: VertexSet, sink_set: VertexSet,
                          n_feasible_checks: int = 20,
                          check_seed: int = 0) -> ConductanceResult:
    """Conductance between ``source_set`` (potential 1) and ``sink_set`` (0) in ``domain``.

    The minimizer solves the Dirichlet problem on the domain's induced graph;
    components of the induced graph containing neither pinned set get
    potential 0.  If the two sets share no component the value is 0.  The
    variational inequality is spot-checked against ``n_feasible_checks``
    random feasible potentials.
    """
    a, b = source_set.members, sink_set.members
    if not a or not b:
        raise PreconditionError("source and sink sets must be nonempty")
    if a & b:
        raise PreconditionError("source and sink sets overlap")
    if not (a <= domain.members and b <= domain.members):
        raise PreconditionError("source and sink sets must lie inside the domain")

    members = domain.sorted()
    pos = {int(v): i for i, v in enumerate(members)}
    A_dd = g.adjacency()[np.ix_(members, members)].tocsr()
    n_comp, comp = sp.csgraph.connected_components(A_dd, directed=False)

    values = np.zeros(len(members))
    comp_of = lambda vs: {comp[pos[v]] for v in vs}
    a_comps, b_comps = comp_of(a), comp_of(b)
    for v in a:
        values[pos[v]] = 1.0
    # components touching the source but not the sink float at potential 1
    for i, v in enumerate(members):
        if comp[i] in a_comps and comp[i] not in b_comps and int(v) not in a:
            values[i] = 1.0

    shared = a_comps & b_comps
    residual = 0.0
    if shared:
        pinned = np.zeros(len(members), dtype=bool)
        for v in a | b:
            pinned[pos[v]] = True
        free = np.flatnonzero(~pinned & np.isin(comp, list(shared)))
        if len(free):
            deg = np.asarray(A_dd.sum(axis=1)).ravel()
            lap_free = (sp.diags(deg[free]) - A_dd[np.ix_(free, free)]).tocsc()
            pinned_ids = np.flatnonzero(pinned)
            rhs = A_dd[np.ix_(free, pinned_ids)] @ values[pinned_ids]
            sol = splu(lap_free).solve(rhs)
            values[free] = sol
            residual = float(np.abs(lap_free @ sol - rhs).max())

    np.clip(values, 0.0, 1.0, out=values)
    potential = VertexField(domain, {int(v): float(values[i]) for i, v in enumerate(members)})
    value = dirichlet_energy(g, domain, potential)

    min_random = None
    if n_feasible_checks > 0 and shared:
        rng = np.random.default_rng(np.random.SeedSequence((check_seed, len(members), len(a))))
        free_mask = np.ones(len(members), dtype=bool)
        for v in a | b:
            free_mask[pos[v]] = False
        min_random = np.inf
        for _ in range(n_feasible_checks):
            trial = values.copy()
            trial[free_mask] = rng.random(int(free_mask.sum()))
            tf = VertexField(domain, {int(v): float(trial[i]) for i, v in enumerate(members)})
            e = dirichlet_energy(g, domain, tf)
            min_random = min(min_random, e)
            if e < value - ENERGY_REL_TOL * max(value, 1.0):
                raise ResidualError(
                    f"random feasible potential beats the minimizer: {e} < {value}")
        min_random = float(min_random)

    return ConductanceResult(value, potential, residual, min_random)


def _dumbbell_pairs(g: WeightedGraph, x0: int, radius: int) -> tuple[list, int]:
    """All unordered pairs (x, y) with 2 d(.,x0) <= R and 3 d(x,y) >= R.

    Rational comparisons on the integer metric; heads of radius floor(R/10)
    are disjoint for every admissible pair since R/3 > 2 R/10.
    """
    d0 = bfs_distances(g, x0)
    half = sorted(v for v in range(g.n) if d0[v] >= 0 and 2 * d0[v] <= radius)
    pairs = []
    excluded_overlap = 0
    head_r = radius // 10
    for i, x in enumerate(half):
        dx = bfs_distances(g, x, limit=max(radius, 2 * head_r + 1))
        for y in half[i + 1:]:
            if 3 * dx[y] >= radius and dx[y] > 0:
                if dx[y] <= 2 * head_r:
                    excluded_overlap += 1
                    continue
                pairs.append((x, y))
    return pairs, excluded_overlap


def _stratified_subsample(pairs: list, dists: list[int], cap: int) -> list:
    """Deterministic per-distance-shell thinning down to ``cap`` pairs."""
    if len(pairs) <= cap:
        return pairs
    by_shell: dict[int, list] = {}
    for p, d in zip(pairs, dists):
        by_shell.setdefault(d, []).append(p)
    out = []
    total = len(pairs)
    for d in sorted(by_shell):
        shell = by_shell[d]
        quota = max(1, (len(shell) * cap) // total)
        if quota >= len(shell):
            out.extend(shell)
        else:
            idx = np.linspace(0, len(shell) - 1, quota).round().astype(int)
            out.extend(shell[i] for i in sorted(set(int(i) for i in idx)))
    return out[:cap]


def dumbbell_ratio(g: WeightedGraph, x0: int, radius: int,
                   cap: int = PAIR_CAP_DEFAULT) -> dict:
    """Max/min ratio of head-to-head conductances inside B(x0, R).

    Enumerates well-separated pairs (x, y) in the half-radius ball, computes
    the conductance between the balls B(x, floor(R/10)) and B(y, floor(R/10))
    within D = B(x0, R), and reports the ratio with witnesses.  Above ``cap``
    pairs a deterministic stratified subsample by distance shell is used and
    flagged in the report.
    """
    if radius < 10:
        raise PreconditionError("dumbbell survey needs R >= 10")
    domain = ball(g, x0, radius)
    g.require_unclipped(domain.members, what=f"B({x0}, {radius})")
    head_r = radius // 10

    pairs, excluded_overlap = _dumbbell_pairs(g, x0, radius)
    if not pairs:
        raise PreconditionError("no admissible dumbbell pairs")
    dist_cache: dict[int, np.ndarray] = {}

    def d_between(x, y):
        if x not in dist_cache:
            dist_cache[x] = bfs_distances(g, x)
        return int(dist_cache[x][y])

    dists = [d_between(x, y) for x, y in pairs]
    sampled = len(pairs) > cap
    used = _stratified_subsample(pairs, dists, cap)

    best = (-np.inf, None)
    worst = (np.inf, None)
    conductances = []
    for (x, y) in used:
        res = effective_conductance(g, domain, ball(g, x, head_r), ball(g, y, head_r),
                                    n_feasible_checks=0)
        conductances.append((x, y, res.value))
        if res.value > best[0]:
            best = (res.value, (x, y))
        if res.value < worst[0]:
            worst = (res.value, (x, y))
    ratio = best[0] / worst[0]
    return {
        "center": int(x0),
        "R": int(radius),
        "head_radius": head_r,
        "pair_count": len(pairs),
        "pairs_evaluated": len(used),
        "sampled": sampled,
        "excluded_overlapping_heads": excluded_overlap,
        "max": best[0], "max_pair": best[1],
        "min": worst[0], "min_pair": worst[1],
        "ratio": float(ratio),
        "conductances": conductances,
        "separation_convention": "2*d(x,x0) <= R; 3*d(x,y) >= R; heads floor(R/10)",
    }
