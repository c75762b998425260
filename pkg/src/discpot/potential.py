"""Dirichlet problems, harmonic measure, Green's function and partition functions.

All solves use the symmetric conductance form: for interior ``v``,
``mu_v h(v) - sum_{v' inside} w h(v') = sum_{boundary points x at v} w g(x)``.
Boundary points outside the Dirichlet set are dropped from the matrix
(Neumann condition), which is how mixed problems are posed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domain import BoundaryEdge, DiscreteDomain, DomainError

RESIDUAL_TOL = 1e-10
DENSE_LIMIT = 500


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class HarmonicField:
    """Solution values on the interior (local order) and on each boundary point."""

    domain: DiscreteDomain
    values: np.ndarray
    boundary: np.ndarray
    residual: float

    def at(self, v: int) -> float:
        return float(self.values[self.domain.index[int(v)]])


@dataclass(frozen=True)
class GreenField:
    domain: DiscreteDomain
    pole: int
    values: np.ndarray

    def at(self, v: int) -> float:
        return float(self.values[self.domain.index[int(v)]])


@dataclass(frozen=True)
class PartitionValue:
    value: float
    x: object
    y: object
    loop_convention: bool = False


def _dirichlet_key(mask: np.ndarray | None) -> bytes:
    return b"all" if mask is None else np.packbits(np.asarray(mask) != 0).tobytes()


def system_matrix(domain: DiscreteDomain, mask: np.ndarray | None = None) -> sp.csc_matrix:
    """Conductance matrix with boundary points in ``mask`` kept as Dirichlet data.

    ``mask=None`` keeps every boundary point.
    """
    n = domain.n_interior
    iu, iv, iw = domain.interior_edges
    diag = np.zeros(n)
    np.add.at(diag, iu, iw)
    np.add.at(diag, iv, iw)
    bw = domain.bd_weight if mask is None else domain.bd_weight * mask
    np.add.at(diag, domain.bd_inner_local, bw)
    rows = np.concatenate([iu, iv, np.arange(n)])
    cols = np.concatenate([iv, iu, np.arange(n)])
    data = np.concatenate([-iw, -iw, diag])
    return sp.csc_matrix((data, (rows, cols)), shape=(n, n))


class _Factor:
    def __init__(self, mat: sp.csc_matrix):
        self.mat = mat
        self.lu = splu(mat)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.lu.solve(rhs)


def factor(domain: DiscreteDomain, mask: np.ndarray | None = None) -> _Factor:
    """Cached sparse LU factor of the system matrix."""
    key = ("lu", _dirichlet_key(mask))
    f = domain._cache.get(key)
    if f is None:
        f = _Factor(system_matrix(domain, mask))
        domain._cache[key] = f
    return f


def relative_residual(mat, x, rhs) -> float:
    r = mat @ x - rhs
    scale = np.linalg.norm(rhs)
    if scale == 0:
        scale = abs(mat).max() * max(np.linalg.norm(x), 1.0)
    return float(np.linalg.norm(r) / scale) if scale else 0.0


def solve_system(domain: DiscreteDomain, rhs: np.ndarray, mask: np.ndarray | None = None,
                 method: str = "sparse") -> tuple[np.ndarray, float]:
    """Solve the conductance system; ``method="dense"`` is the reference route."""
    if method == "dense":
        mat = system_matrix(domain, mask)
        x = np.linalg.solve(mat.toarray(), rhs)
    elif method == "sparse":
        f = factor(domain, mask)
        mat = f.mat
        x = f.solve(rhs)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = relative_residual(mat, x, rhs)
    if res > RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.2e} above tolerance")
    return x, res


def boundary_rhs(domain: DiscreteDomain, data: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    rhs = np.zeros(domain.n_interior)
    w = domain.bd_weight * data
    if mask is not None:
        w = w * mask
    np.add.at(rhs, domain.bd_inner_local, w)
    return rhs


def solve_dirichlet(domain: DiscreteDomain, boundary_data, method: str = "sparse") -> HarmonicField:
    """Harmonic extension of per-boundary-point data."""
    data = np.asarray(boundary_data, dtype=float)
    if data.shape != (domain.n_boundary,):
        raise DomainError("boundary data must have one value per boundary point")
    if not np.all(np.isfinite(data)):
        raise DomainError("boundary data must be finite")
    x, res = solve_system(domain, boundary_rhs(domain, data), method=method)
    return HarmonicField(domain, x, data, res)


def indicator(domain: DiscreteDomain, points: Iterable[int]) -> np.ndarray:
    out = np.zeros(domain.n_boundary)
    idx = list(points)
    if idx:
        out[idx] = 1.0
    return out


def greens_function(domain: DiscreteDomain, u: int, method: str = "sparse") -> GreenField:
    """``G(.; u)``: zero on the boundary, Laplacian ``-1/mu_u`` at ``u``, harmonic elsewhere."""
    if int(u) not in domain.index:
        raise DomainError(f"{u} is not an interior vertex")
    rhs = np.zeros(domain.n_interior)
    rhs[domain.index[int(u)]] = 1.0
    x, _ = solve_system(domain, rhs, method=method)
    return GreenField(domain, int(u), x)


def exit_distribution(domain: DiscreteDomain, u: int) -> np.ndarray:
    """Harmonic measure of each single boundary point seen from ``u``."""
    g = greens_function(domain, u).values
    return domain.bd_weight * g[domain.bd_inner_local]


def harmonic_measure(domain: DiscreteDomain, u: int, E: Iterable[int]) -> float:
    """Probability that the walk from ``u`` leaves the domain through a point of ``E``."""
    idx = list(E)
    return float(exit_distribution(domain, u)[idx].sum()) if idx else 0.0


def harmonic_measure_field(domain: DiscreteDomain, E: Iterable[int]) -> HarmonicField:
    return solve_dirichlet(domain, indicator(domain, E))


def z_to_points(domain: DiscreteDomain, points: Iterable[int]) -> np.ndarray:
    """``sum_{y in points} Z(v; y)`` for every interior vertex ``v``."""
    data = np.zeros(domain.n_boundary)
    for y in points:
        data[y] += 1.0 / domain.bd_mu[y]
    x, _ = solve_system(domain, boundary_rhs(domain, data))
    return x


def z_row(domain: DiscreteDomain, points: Sequence[int]) -> np.ndarray:
    """``Z(x; points)`` for every boundary point ``x``.

    When ``x`` itself belongs to ``points`` the one-point path is counted.
    """
    h = z_to_points(domain, points)
    out = domain.bd_step * h[domain.bd_inner_local]
    for y in set(points):
        out[y] += 1.0 / domain.bd_mu[y]
    return out


def _as_point(domain: DiscreteDomain, x):
    if isinstance(x, BoundaryEdge):
        return "b", x.index
    x = int(x)
    if x not in domain.index:
        raise DomainError(f"{x} is not an interior vertex; pass domain.bd(i) for boundary points")
    return "v", x


def partition_Z(domain: DiscreteDomain, x, y) -> PartitionValue:
    """Sum of path weights from ``x`` to ``y`` through the interior.

    ``x`` and ``y`` are interior vertex ids or :class:`BoundaryEdge` objects.
    For ``x == y`` on the boundary the value includes the one-point path and
    is flagged with ``loop_convention=True``.
    """
    kx, px = _as_point(domain, x)
    ky, py = _as_point(domain, y)
    if kx == "v" and ky == "v":
        return PartitionValue(greens_function(domain, py).at(px), x, y)
    if kx == "v":
        kx, px, ky, py = ky, py, kx, px
    if ky == "v":
        # interior to boundary, by symmetry Z(v; b) = Z(b; v)
        return PartitionValue(float(z_to_points(domain, [px])[domain.index[py]]), x, y)
    val = float(z_row(domain, [py])[px])
    return PartitionValue(val, x, y, loop_convention=(px == py))


def partition_Z_arcs(domain: DiscreteDomain, A: Iterable[int], B: Iterable[int]) -> float:
    """``Z(A; B) = sum_{x in A, y in B} Z(x; y)`` with one solve."""
    A, B = list(A), list(B)
    if set(A) & set(B):
        raise DomainError("arcs must be disjoint")
    if not A or not B:
        return 0.0
    return float(z_row(domain, B)[A].sum())


def ratio_R(domain: DiscreteDomain, x: int, A: Iterable[int], B: Iterable[int]) -> float:
    """``Z(x; A) / Z(x; B)`` for a boundary point ``x``."""
    A, B = list(A), list(B)
    return float(z_row(domain, A)[x] / z_row(domain, B)[x])


def ratio_R_all(domain: DiscreteDomain, A: Iterable[int], B: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    """``R`` at every boundary point, and ``Z(v; A) / Z(v; B)`` at every interior vertex."""
    A, B = list(A), list(B)
    hA, hB = z_to_points(domain, A), z_to_points(domain, B)
    zA = domain.bd_step * hA[domain.bd_inner_local]
    zB = domain.bd_step * hB[domain.bd_inner_local]
    for y in set(A):
        zA[y] += 1.0 / domain.bd_mu[y]
    for y in set(B):
        zB[y] += 1.0 / domain.bd_mu[y]
    return zA / zB, hA / hB


def find_interior_anchor(domain: DiscreteDomain, arcs: Sequence[Sequence[int]]) -> tuple[int, float]:
    """Interior vertex maximising the smallest harmonic measure of the given arcs."""
    fields = [harmonic_measure_field(domain, a).values for a in arcs]
    worst = np.min(np.vstack(fields), axis=0)
    k = int(np.argmax(worst))
    return int(domain.interior[k]), float(worst[k])


def boundary_green(domain: DiscreteDomain) -> np.ndarray:
    """Dense matrix of ``Z(x; y)`` over all boundary point pairs (small domains only)."""
    N = domain.n_boundary
    rhs = np.zeros((domain.n_interior, N))
    np.add.at(rhs, (domain.bd_inner_local, np.arange(N)), domain.bd_weight / domain.bd_mu)
    h = factor(domain).solve(rhs)
    Z = domain.bd_step[:, None] * h[domain.bd_inner_local, :]
    Z[np.arange(N), np.arange(N)] += 1.0 / domain.bd_mu
    return Z
