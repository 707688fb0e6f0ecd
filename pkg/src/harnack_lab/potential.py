"""Exact potential theory on finite domains: harmonic extensions, harmonic
measure (exit distributions), and Green's functions.

All operations reduce to symmetric positive-definite sparse systems with the
killed weighted Laplacian ``L = diag(mu) - A`` restricted to the domain.  A
direct factorization is used up to ``DIRECT_SOLVER_LIMIT`` unknowns and a
diagonally preconditioned conjugate-gradient solve above it (relative residual
target 1e-11); one factorization is shared across all right-hand sides of a
domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, splu

from .errors import PreconditionError, ResidualError
from .graph import (VertexField, VertexSet, WeightedGraph, closure,
                    exterior_boundary, laplacian_apply)

DIRECT_SOLVER_LIMIT = 200_000
CG_RELATIVE_TOL = 1e-11
HARMONICITY_TOL = 1e-10
PROBABILITY_TOL = 1e-10


@dataclass(frozen=True)
class ExitDistribution:
    """Harmonic measure: exit probabilities of the walk on a boundary set."""

    boundary: VertexSet
    probs: Mapping[int, float]

    def __post_init__(self):
        vals = np.array([self.probs[z] for z in self.boundary.members])
        if len(vals) != len(self.probs):
            raise PreconditionError("exit distribution support exceeds the boundary")
        if vals.min(initial=0.0) < -1e-12:
            raise ResidualError("negative exit probability")
        if abs(vals.sum() - 1.0) > PROBABILITY_TOL:
            raise ResidualError(f"exit probabilities sum to {vals.sum()!r}, not 1")

    def __call__(self, z: int) -> float:
        if z not in self.boundary.members:
            raise PreconditionError(f"vertex {z} is not on the exit boundary")
        return self.probs[z]

    def total_variation(self, other: "ExitDistribution") -> float:
        if self.boundary.members != other.boundary.members:
            raise PreconditionError("exit distributions live on different boundaries")
        return 0.5 * sum(abs(self.probs[z] - other.probs[z]) for z in self.boundary.members)


@dataclass(frozen=True)
class GreenColumn:
    """One column g_D(source, .) of the Green's function of a finite domain."""

    domain: VertexSet
    source: int
    values: Mapping[int, float]

    def __call__(self, y: int) -> float:
        """g_D(source, y); zero outside the domain."""
        return self.values.get(y, 0.0)


class DirichletSystem:
    """Factorization of the killed Laplacian on a domain's interior.

    ``solve`` maps right-hand sides to interior solutions; ``boundary_coupling``
    is the (interior x boundary) weight block used to impose Dirichlet data.
    """

    def __init__(self, g: WeightedGraph, interior: np.ndarray, boundary: np.ndarray):
        self.graph = g
        self.interior = interior
        self.boundary = boundary
        self.pos = {int(v): i for i, v in enumerate(interior)}
        A = g.adjacency()
        self.lap = (sp.diags(g.mu[interior]) - A[np.ix_(interior, interior)]).tocsc()
        self.coupling = A[np.ix_(interior, boundary)].tocsr()
        if len(interior) <= DIRECT_SOLVER_LIMIT:
            self._lu = splu(self.lap)
            self._solve = self._lu.solve
        else:
            self._lu = None
            d_inv = 1.0 / self.lap.diagonal()
            M = LinearOperator(self.lap.shape, matvec=lambda v: d_inv * v)
            lap = self.lap

            def solve_cg(b):
                if b.ndim == 1:
                    x, info = cg(lap, b, M=M, rtol=CG_RELATIVE_TOL, atol=0.0)
                    if info != 0:
                        raise ResidualError(f"conjugate gradient did not converge (info={info})")
                    return x
                return np.stack([solve_cg(col) for col in b.T], axis=1)

            self._solve = solve_cg

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._solve(rhs)


def _domain_arrays(g: WeightedGraph, region: VertexSet) -> tuple[np.ndarray, np.ndarray]:
    interior = region.sorted()
    bdry = exterior_boundary(g, region).sorted()
    return interior, bdry


def harmonic_extension(g: WeightedGraph, region: VertexSet,
                       boundary_values: VertexField | Mapping[int, float]) -> VertexField:
    """Solve the discrete Dirichlet problem on ``region``.

    Returns the unique field on the closure of ``region`` that is harmonic on
    ``region`` and agrees with ``boundary_values`` on its exterior boundary.
    The harmonicity residual is verified against ``1e-10 * max|boundary data|``.
    """
    if not region.members:
        raise PreconditionError("empty region")
    interior, bdry = _domain_arrays(g, region)
    if len(bdry) == 0:
        raise PreconditionError("region has empty exterior boundary; harmonic => constant")
    getter = boundary_values if not isinstance(boundary_values, VertexField) else boundary_values.values
    try:
        f_bdry = np.array([getter[z] for z in bdry], dtype=float)
    except KeyError as e:
        raise PreconditionError(f"missing boundary value at vertex {e.args[0]}") from None
    sys_ = DirichletSystem(g, interior, bdry)
    h = sys_.solve(sys_.coupling @ f_bdry)
    values = {int(v): float(h[i]) for i, v in enumerate(interior)}
    values.update({int(z): float(f_bdry[i]) for i, z in enumerate(bdry)})
    field = VertexField(closure(g, region), values)
    scale = float(np.max(np.abs(f_bdry))) if len(f_bdry) else 0.0
    _check_harmonic_residual(g, field, region, HARMONICITY_TOL * max(scale, 1e-300))
    return field


def _check_harmonic_residual(g, field, region, tol):
    worst = 0.0
    for x in region.members:
        worst = max(worst, abs(laplacian_apply(g, field, x)))
    if worst > tol:
        raise ResidualError(f"harmonicity residual {worst:.3e} exceeds tolerance {tol:.3e}")


def harmonic_measure_matrix(g: WeightedGraph, region: VertexSet
                            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All exit kernels of ``region`` from one factorization.

    Returns ``(interior, boundary, H)`` where ``H[i, j]`` is the probability
    that the walk from ``interior[i]`` exits ``region`` at ``boundary[j]``;
    equivalently the value at ``interior[i]`` of the harmonic extension of the
    indicator of ``boundary[j]``.
    """
    if not region.members:
        raise PreconditionError("empty region")
    interior, bdry = _domain_arrays(g, region)
    if len(bdry) == 0:
        raise PreconditionError("region has empty exterior boundary (exit time undefined)")
    sys_ = DirichletSystem(g, interior, bdry)
    H = sys_.solve(sys_.coupling.toarray())
    if H.ndim == 1:
        H = H[:, None]
    return interior, bdry, H


def harmonic_measure(g: WeightedGraph, region: VertexSet, x: int) -> ExitDistribution:
    """Exit distribution of the walk from ``x`` on the boundary of ``region``.

    Uses the symmetry of the killed Laplacian: one linear solve for the source
    column yields the full boundary row.
    """
    x = g.check_vertex(x)
    if x not in region.members:
        raise PreconditionError(f"start vertex {x} is not inside the region")
    interior, bdry, sys_ = _measure_system(g, region)
    e = np.zeros(len(interior))
    e[np.searchsorted(interior, x)] = 1.0
    w = sys_.solve(e)
    probs = sys_.coupling.T @ w
    dist = {int(z): float(p) for z, p in zip(bdry, probs)}
    return ExitDistribution(VertexSet(frozenset(int(z) for z in bdry)), dist)


def _measure_system(g, region):
    interior, bdry = _domain_arrays(g, region)
    if len(bdry) == 0:
        raise PreconditionError("region has empty exterior boundary (exit time undefined)")
    return interior, bdry, DirichletSystem(g, interior, bdry)


def green_column(g: WeightedGraph, domain: VertexSet, x0: int) -> GreenColumn:
    """Green's function column of the walk killed outside ``domain``.

    Solves ``(diag(mu) - A_DD) v = e_{x0}``; the solution equals the expected
    occupation of each vertex before the exit time, divided by its measure.
    Nonnegative, zero outside the domain, harmonic off the source.
    """
    x0 = g.check_vertex(x0)
    if x0 not in domain.members:
        raise PreconditionError(f"source {x0} is not inside the domain")
    interior, bdry = _domain_arrays(g, domain)
    if len(bdry) == 0:
        raise PreconditionError("Green's function needs a domain with nonempty boundary")
    sys_ = DirichletSystem(g, interior, bdry)
    e = np.zeros(len(interior))
    e[np.searchsorted(interior, x0)] = 1.0
    v = sys_.solve(e)
    if v.min() < -1e-13:
        raise ResidualError(f"negative Green value {v.min():.3e}")
    return GreenColumn(domain, x0, {int(y): float(v[i]) for i, y in enumerate(interior)})


def green_series_oracle(g: WeightedGraph, domain: VertexSet, x0: int, n_max: int) -> VertexField:
    """Partial sum up to ``n_max`` of the killed-kernel series for the Green column.

    Iterates the adjoint killed kernel on the point mass at the source; partial
    sums are monotone nondecreasing in ``n_max``.  Test oracle for
    :func:`green_column`, deliberately independent of the linear-system path.
    """
    x0 = g.check_vertex(x0)
    if x0 not in domain.members:
        raise PreconditionError(f"source {x0} is not inside the domain")
    if n_max < 0:
        raise PreconditionError("n_max must be >= 0")
    interior = domain.sorted()
    A_dd = g.adjacency()[np.ix_(interior, interior)].tocsr()
    inv_mu = 1.0 / g.mu[interior]
    r = np.zeros(len(interior))
    r[np.searchsorted(interior, x0)] = 1.0
    acc = r.copy()
    for _ in range(n_max):
        r = A_dd @ (r * inv_mu)  # adjoint step: mass flows along nu_xy / mu(x)
        acc += r
    vals = acc * inv_mu
    return VertexField(domain, {int(y): float(vals[i]) for i, y in enumerate(interior)})


def is_harmonic(g: WeightedGraph, f: VertexField, region: VertexSet, tol: float
                ) -> tuple[bool, float]:
    """Max Laplacian residual of ``f`` over ``region``, compared to ``tol``."""
    if not closure(g, region).members <= f.domain.members:
        raise PreconditionError("field domain must contain the closure of the region")
    worst = 0.0
    for x in region.members:
        worst = max(worst, abs(laplacian_apply(g, f, x)))
    return worst <= tol, worst
