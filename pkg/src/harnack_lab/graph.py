"""Immutable weighted graphs with metric operations and the weighted Laplacian.

A :class:`WeightedGraph` stores a finite, connected, undirected graph with
symmetric positive edge weights ``nu`` and precomputed vertex measure
``mu(x) = sum_y nu_xy``.  Vertices are dense integer indices assigned at build
time; the original labels are kept for reporting.  Infinite graphs are handled
elsewhere as finite truncations carrying a ``halo`` of indices near the cut;
operations whose correctness would be distorted by the cut must call
:meth:`WeightedGraph.require_unclipped` on their domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ClippedDomainError, PreconditionError

Label = Hashable


@dataclass(frozen=True)
class VertexSet:
    """A subset of a graph's vertices, optionally tagged as a metric ball."""

    members: frozenset[int]
    center: int | None = None
    radius: int | None = None

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, v: int) -> bool:
        return v in self.members

    def sorted(self) -> np.ndarray:
        """Members as an ascending index array (deterministic iteration order)."""
        return np.fromiter(sorted(self.members), dtype=np.int64, count=len(self.members))


@dataclass(frozen=True)
class VertexField:
    """A real-valued function on a vertex subset.

    Evaluation outside the domain raises :class:`PreconditionError`; every
    domain member has a value.
    """

    domain: VertexSet
    values: Mapping[int, float]

    def __post_init__(self):
        missing = self.domain.members - set(self.values)
        if missing:
            raise PreconditionError(f"field is missing values on {len(missing)} domain vertices")

    def __call__(self, v: int) -> float:
        if v not in self.domain.members:
            raise PreconditionError(f"vertex {v} is outside the field's domain")
        return self.values[v]

    def restrict(self, subset: VertexSet) -> "VertexField":
        if not subset.members <= self.domain.members:
            raise PreconditionError("restriction target is not a subset of the domain")
        return VertexField(subset, {v: self.values[v] for v in subset.members})


class WeightedGraph:
    """Finite connected weighted graph in CSR form.

    Attributes
    ----------
    n : number of vertices.
    indptr, indices, weights : CSR adjacency, neighbor lists sorted ascending.
    mu : vertex measure, accumulated in ascending neighbor order.
    labels : tuple of original vertex labels, index-aligned.
    halo : indices too close to a truncation cut for metric/potential use.
    meta : generator provenance (name, parameters, margin).
    """

    __slots__ = ("n", "indptr", "indices", "weights", "mu", "labels",
                 "_index_of", "halo", "meta", "_csr")

    def __init__(self, indptr, indices, weights, labels, halo=frozenset(), meta=None):
        self.n = len(labels)
        self.indptr = indptr
        self.indices = indices
        self.weights = weights
        self.labels = tuple(labels)
        self._index_of = {lab: i for i, lab in enumerate(self.labels)}
        # deterministic accumulation: neighbors are stored ascending by index
        mu = np.zeros(self.n)
        for x in range(self.n):
            s = 0.0
            for k in range(indptr[x], indptr[x + 1]):
                s += weights[k]
            mu[x] = s
        self.mu = mu
        self.halo = frozenset(halo)
        self.meta = dict(meta or {})
        self._csr = None
        for arr in (self.indptr, self.indices, self.weights, self.mu):
            arr.setflags(write=False)

    # -- lookup -----------------------------------------------------------

    def index(self, label: Label) -> int:
        try:
            return self._index_of[label]
        except KeyError:
            raise PreconditionError(f"unknown vertex label {label!r}") from None

    def check_vertex(self, v: int) -> int:
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.n):
            raise PreconditionError(f"unknown vertex index {v!r}")
        return int(v)

    def neighbors(self, v: int) -> np.ndarray:
        v = self.check_vertex(v)
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edge_weight(self, u: int, v: int) -> float:
        u, v = self.check_vertex(u), self.check_vertex(v)
        lo, hi = self.indptr[u], self.indptr[u + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], v)
        if k < hi and self.indices[k] == v:
            return float(self.weights[k])
        return 0.0

    def edges(self) -> Iterable[tuple[int, int, float]]:
        """Each undirected edge once, as (u, v, w) with u < v, ascending."""
        for u in range(self.n):
            for k in range(self.indptr[u], self.indptr[u + 1]):
                v = self.indices[k]
                if u < v:
                    yield u, int(v), float(self.weights[k])

    def adjacency(self) -> sp.csr_matrix:
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.weights, self.indices, self.indptr), shape=(self.n, self.n))
        return self._csr

    # -- halo -------------------------------------------------------------

    def require_unclipped(self, members: frozenset[int], what: str = "domain") -> None:
        """Reject any domain whose closure touches the truncation halo."""
        if not self.halo:
            return
        touched = closure_members(self, members) & self.halo
        if touched:
            margin = self.meta.get("margin", "?")
            raise ClippedDomainError(
                f"{what} touches the truncation halo ({len(touched)} vertices; "
                f"generator margin {margin}); enlarge the truncation or shrink the domain")


def build_graph(edge_list: Sequence[tuple[Label, Label, float]],
                halo_labels: Iterable[Label] = (),
                meta: Mapping | None = None) -> WeightedGraph:
    """Build an immutable weighted graph from an undirected edge list.

    Vertex indices follow first appearance in the edge list.  Rejects
    self-loops, nonpositive weights, duplicate edges with conflicting weights,
    and disconnected inputs.
    """
    index: dict[Label, int] = {}
    labels: list[Label] = []

    def intern(lab: Label) -> int:
        i = index.get(lab)
        if i is None:
            i = len(labels)
            index[lab] = i
            labels.append(lab)
        return i

    seen: dict[tuple[int, int], float] = {}
    for u_lab, v_lab, w in edge_list:
        w = float(w)
        if not np.isfinite(w) or w <= 0.0:
            raise PreconditionError(f"edge ({u_lab!r},{v_lab!r}) has nonpositive weight {w}")
        u, v = intern(u_lab), intern(v_lab)
        if u == v:
            raise PreconditionError(f"self-loop at {u_lab!r}")
        key = (u, v) if u < v else (v, u)
        old = seen.get(key)
        if old is not None and old != w:
            raise PreconditionError(f"duplicate edge ({u_lab!r},{v_lab!r}) with conflicting weights")
        seen[key] = w

    n = len(labels)
    if n == 0:
        raise PreconditionError("empty edge list")
    deg = np.zeros(n, dtype=np.int64)
    for (u, v) in seen:
        deg[u] += 1
        deg[v] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.zeros(indptr[-1], dtype=np.int64)
    weights = np.zeros(indptr[-1])
    cursor = indptr[:-1].copy()
    for (u, v), w in seen.items():
        indices[cursor[u]] = v
        weights[cursor[u]] = w
        cursor[u] += 1
        indices[cursor[v]] = u
        weights[cursor[v]] = w
        cursor[v] += 1
    for x in range(n):
        lo, hi = indptr[x], indptr[x + 1]
        order = np.argsort(indices[lo:hi], kind="stable")
        indices[lo:hi] = indices[lo:hi][order]
        weights[lo:hi] = weights[lo:hi][order]

    halo = set()
    for lab in halo_labels:
        if lab not in index:
            raise PreconditionError(f"halo label {lab!r} is not a vertex")
        halo.add(index[lab])
    g = WeightedGraph(indptr, indices, weights, labels, frozenset(halo), meta)
    # connectivity check via BFS from vertex 0
    if int((bfs_distances(g, 0) >= 0).sum()) != n:
        raise PreconditionError("edge list describes a disconnected graph")
    return g


# -- metric operations ------------------------------------------------------

def bfs_distances(g: WeightedGraph, source: int, limit: int | None = None) -> np.ndarray:
    """Graph distances from ``source``; -1 beyond ``limit`` or unreachable."""
    source = g.check_vertex(source)
    kw = {} if limit is None else {"limit": float(limit)}
    d = sp.csgraph.dijkstra(g.adjacency(), unweighted=True, indices=source, **kw)
    dist = np.full(g.n, -1, dtype=np.int64)
    finite = np.isfinite(d)
    dist[finite] = d[finite].astype(np.int64)
    return dist


def transition_prob(g: WeightedGraph, x: int, y: int) -> float:
    """One-step probability nu_xy / mu(x); zero for non-adjacent pairs."""
    x, y = g.check_vertex(x), g.check_vertex(y)
    return g.edge_weight(x, y) / g.mu[x]


def ball(g: WeightedGraph, x: int, r: int) -> VertexSet:
    """Closed metric ball of radius ``r`` around ``x``."""
    if r < 0:
        raise PreconditionError("ball radius must be nonnegative")
    dist = bfs_distances(g, x, limit=r)
    members = frozenset(np.flatnonzero((dist >= 0) & (dist <= r)).tolist())
    return VertexSet(members, center=g.check_vertex(x), radius=int(r))


def sphere(g: WeightedGraph, x: int, r: int) -> frozenset[int]:
    """Vertices at distance exactly ``r`` from ``x``."""
    dist = bfs_distances(g, x, limit=r)
    return frozenset(np.flatnonzero(dist == r).tolist())


def exterior_boundary(g: WeightedGraph, a: VertexSet) -> VertexSet:
    if not a.members:
        raise PreconditionError("exterior boundary of an empty set")
    out: set[int] = set()
    for u in a.members:
        for v in g.neighbors(u):
            if v not in a.members:
                out.add(int(v))
    return VertexSet(frozenset(out))


def closure_members(g: WeightedGraph, members: frozenset[int]) -> frozenset[int]:
    out = set(members)
    for u in members:
        out.update(int(v) for v in g.neighbors(u))
    return frozenset(out)


def closure(g: WeightedGraph, a: VertexSet) -> VertexSet:
    return VertexSet(closure_members(g, a.members), center=a.center, radius=a.radius)


def geodesic(g: WeightedGraph, x: int, y: int) -> list[int]:
    """A shortest path from ``x`` to ``y``.

    Deterministic tie-break: walking back from ``y``, each predecessor is the
    smallest-index neighbor one step closer to ``x``.  ``path[k]`` is at
    distance k from ``x``.
    """
    x, y = g.check_vertex(x), g.check_vertex(y)
    dist = bfs_distances(g, x)
    if dist[y] < 0:
        raise PreconditionError("vertices are not connected")
    path = [y]
    v = y
    while v != x:
        dv = dist[v]
        for u in g.neighbors(v):  # ascending index: first hit is the tie-break winner
            if dist[u] == dv - 1:
                path.append(int(u))
                v = int(u)
                break
    path.reverse()
    return path


def controlled_weights_p0(g: WeightedGraph) -> float:
    """min over edges {x,y} of min(nu_xy/mu(x), nu_xy/mu(y)).

    The graph has controlled weights at level p iff the returned value is >= p.
    """
    p0 = np.inf
    for u in range(g.n):
        mu_u = g.mu[u]
        for k in range(g.indptr[u], g.indptr[u + 1]):
            r = g.weights[k] / mu_u
            if r < p0:
                p0 = r
    return float(p0)


def laplacian_apply(g: WeightedGraph, f: VertexField, x: int) -> float:
    """Weighted Laplacian (1/mu_x) * sum_y nu_xy (f(y) - f(x)) at ``x``."""
    x = g.check_vertex(x)
    fx = f(x)
    acc = 0.0
    for k in range(g.indptr[x], g.indptr[x + 1]):
        y = int(g.indices[k])
        if y not in f.domain.members:
            raise PreconditionError(f"missing neighbor value at vertex {y} for Laplacian at {x}")
        acc += g.weights[k] * (f.values[y] - fx)
    return acc / g.mu[x]


# -- text format -------------------------------------------------------------

def label_str(label: Label) -> str:
    """Canonical one-token string form of a vertex label for the TSV format."""
    if isinstance(label, tuple):
        return ",".join(str(c) for c in label)
    return str(label)


def save_graph_tsv(g: WeightedGraph, path: str) -> None:
    """One edge per line: ``u<TAB>v<TAB>weight`` with 17-significant-digit weights."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# harnack-lab graph, %d vertices\n" % g.n)
        for u, v, w in g.edges():
            fh.write("%s\t%s\t%.17g\n" % (label_str(g.labels[u]), label_str(g.labels[v]), w))


def load_graph_tsv(path: str) -> WeightedGraph:
    """Load the TSV edge format; vertex labels are kept as strings."""
    edge_list = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise PreconditionError(f"{path}:{line_no}: expected 'u<TAB>v<TAB>weight'")
            edge_list.append((parts[0], parts[1], float(parts[2])))
    return build_graph(edge_list, meta={"source": path})
