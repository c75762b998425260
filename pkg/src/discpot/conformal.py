"""Cross-ratios, extremal length, the extremal metric, harmonic conjugates and dual networks."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domain import DiscreteDomain, DomainError, Quadrilateral, arc
from .potential import boundary_rhs, partition_Z_arcs, ratio_R_all, solve_system, z_row, z_to_points

FLUX_TOL = 1e-9


@dataclass(frozen=True)
class CrossRatios:
    X: float
    Y: float
    Z_ab: float
    Z_ac: float
    Z_ad: float
    Z_bc: float
    Z_bd: float
    Z_cd: float


def two_point_table(quad: Quadrilateral) -> dict[str, float]:
    """All six two-point partition functions between the marked points (three solves)."""
    dom = quad.domain
    a, b, c, d = quad.marks
    rb, rc, rd = z_row(dom, [b]), z_row(dom, [c]), z_row(dom, [d])
    return {"ab": float(rb[a]), "ac": float(rc[a]), "ad": float(rd[a]),
            "bc": float(rc[b]), "bd": float(rd[b]), "cd": float(rd[c])}


def cross_ratios(quad: Quadrilateral) -> CrossRatios:
    z = two_point_table(quad)
    X = math.sqrt(z["ac"] * z["bd"] / (z["ab"] * z["cd"]))
    Y = math.sqrt(z["ad"] * z["bc"] / (z["ab"] * z["cd"]))
    return CrossRatios(X, Y, z["ab"], z["ac"], z["ad"], z["bc"], z["bd"], z["cd"])


def xy_relation_ratio(quad: Quadrilateral, cr: CrossRatios | None = None) -> float:
    cr = cr or cross_ratios(quad)
    return (1.0 / cr.X) / (1.0 + 1.0 / cr.Y)


def arc_partition(quad: Quadrilateral) -> float:
    """``Z([ab]; [cd])``."""
    return partition_Z_arcs(quad.domain, quad.ab.indices, quad.cd.indices)


def sandwich_check(quad: Quadrilateral, cr: CrossRatios | None = None,
                   Z: float | None = None) -> tuple[float, float]:
    """``(Z/X, Z/Y)`` with ``Z = Z([ab]; [cd])``."""
    cr = cr or cross_ratios(quad)
    Z = arc_partition(quad) if Z is None else Z
    return Z / cr.X, Z / cr.Y


def z_log_y_ratio(quad: Quadrilateral, cr: CrossRatios | None = None, Z: float | None = None) -> float:
    cr = cr or cross_ratios(quad)
    Z = arc_partition(quad) if Z is None else Z
    return Z / math.log1p(cr.Y)


def zfact_ratio(domain: DiscreteDomain, a: int, b: int, c: int) -> float:
    """``Z(a; [bc]) / sqrt(Z(a;b) Z(a;c) / Z(b;c))`` for counterclockwise ``a, b, c``."""
    bc = arc(domain, b, c).indices
    if a in bc:
        raise DomainError("a must lie outside [bc]")
    rb, rc = z_row(domain, [b]), z_row(domain, [c])
    z_abc = partition_Z_arcs(domain, [a], bc)
    return z_abc / math.sqrt(rb[a] * rc[a] / rc[b])


def r_monotonicity(domain: DiscreteDomain, A: Sequence[int], B: Sequence[int]) -> tuple[float, float]:
    """Largest relative step against the expected direction of ``R = Z(.; A) / Z(.; B)``.

    ``R`` should not increase from the end of ``A`` to the start of ``B``
    (both included) and should not decrease from the end of ``B`` to the
    start of ``A``.  Returns the worst violation on each of the two arcs
    (zero or negative when monotone).
    """
    R, _ = ratio_R_all(domain, A, B)
    out = []
    for first, last, sign in ((A[-1], B[0], 1.0), (B[-1], A[0], -1.0)):
        run = arc(domain, first, last).indices
        vals = R[list(run)]
        steps = sign * np.diff(vals) / np.maximum(np.abs(vals[:-1]), np.abs(vals[1:]))
        out.append(float(steps.max()) if len(steps) else 0.0)
    return out[0], out[1]


# ---------------------------------------------------------------- extremal length


@dataclass(frozen=True)
class DNField:
    """Potential with ``V = 0`` on ``A``, ``V = 1`` on ``B``, Neumann elsewhere."""

    domain: DiscreteDomain
    A: tuple[int, ...]
    B: tuple[int, ...]
    values: np.ndarray
    boundary: np.ndarray
    current: float
    current_far: float


@dataclass(frozen=True)
class EdgeMetric:
    """Nonnegative lengths on interior edges (aligned with ``domain.interior_edges``) and boundary points."""

    interior: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        if np.any(self.interior < 0) or np.any(self.boundary < 0):
            raise ValueError("metric entries must be nonnegative")

    def scaled(self, lam: float) -> "EdgeMetric":
        return EdgeMetric(self.interior * lam, self.boundary * lam)


@dataclass(frozen=True)
class ExtremalLengthResult:
    EL: float
    field: DNField
    _extra: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def metric(self) -> EdgeMetric:
        if "metric" not in self._extra:
            self._extra["metric"] = extremal_metric(self)
        return self._extra["metric"]


def dn_field(domain: DiscreteDomain, A: Iterable[int], B: Iterable[int], method: str = "sparse") -> DNField:
    A, B = tuple(sorted(set(A))), tuple(sorted(set(B)))
    if not A or not B:
        raise DomainError("electrode arcs must be nonempty")
    if set(A) & set(B):
        raise DomainError("electrode arcs overlap")
    mask = np.zeros(domain.n_boundary)
    mask[list(A)] = 1.0
    mask[list(B)] = 1.0
    data = np.zeros(domain.n_boundary)
    data[list(B)] = 1.0
    try:
        V, _ = solve_system(domain, boundary_rhs(domain, data, mask), mask=mask, method=method)
    except RuntimeError as exc:
        raise DomainError(f"mixed problem is singular: {exc}") from exc
    inner = V[domain.bd_inner_local]
    bvals = inner.copy()
    bvals[list(A)] = 0.0
    bvals[list(B)] = 1.0
    w = domain.bd_weight
    IA = float(np.sum(w[list(A)] * inner[list(A)]))
    IB = float(np.sum(w[list(B)] * (1.0 - inner[list(B)])))
    if abs(IA - IB) > FLUX_TOL * max(1.0, IA):
        raise DomainError(f"flux imbalance {IA - IB:.3e}")
    return DNField(domain, A, B, V, bvals, IA, IB)


def extremal_length(domain: DiscreteDomain, A: Iterable[int], B: Iterable[int],
                    method: str = "sparse") -> ExtremalLengthResult:
    """Discrete extremal length between two sets of boundary points, ``1 / I(V)``."""
    f = dn_field(domain, A, B, method)
    return ExtremalLengthResult(1.0 / f.current, f)


def extremal_metric(result: ExtremalLengthResult) -> EdgeMetric:
    f = result.field
    iu, iv, _ = f.domain.interior_edges
    gi = np.abs(f.values[iu] - f.values[iv])
    gb = np.abs(f.boundary - f.values[f.domain.bd_inner_local])
    return EdgeMetric(gi, gb)


def metric_area(domain: DiscreteDomain, g: EdgeMetric) -> float:
    _, _, iw = domain.interior_edges
    return float(np.sum(iw * g.interior ** 2) + np.sum(domain.bd_weight * g.boundary ** 2))


def metric_length(domain: DiscreteDomain, g: EdgeMetric, A: Iterable[int], B: Iterable[int]) -> float:
    """Shortest ``g``-length of a path from a point of ``A`` to a point of ``B`` through the interior."""
    n = domain.n_interior
    iu, iv, _ = domain.interior_edges
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n + 1)]
    for a, b, l in zip(iu.tolist(), iv.tolist(), g.interior.tolist()):
        adj[a].append((b, l))
        adj[b].append((a, l))
    src = n
    loc = domain.bd_inner_local
    for x in A:
        adj[src].append((int(loc[x]), float(g.boundary[x])))
    exit_cost = np.full(n, np.inf)
    for x in B:
        exit_cost[loc[x]] = min(exit_cost[loc[x]], float(g.boundary[x]))
    dist = np.full(n + 1, np.inf)
    dist[src] = 0.0
    heap = [(0.0, src)]
    best = np.inf
    while heap:
        d0, v = heapq.heappop(heap)
        if d0 > dist[v] or d0 >= best:
            continue
        if v < n and np.isfinite(exit_cost[v]):
            best = min(best, d0 + exit_cost[v])
        for nb, l in adj[v]:
            nd = d0 + l
            if nd < dist[nb]:
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return float(best)


def metric_ratio(domain: DiscreteDomain, g: EdgeMetric, A, B) -> float:
    """``L_g^2 / A_g``; zero for the zero metric."""
    area = metric_area(domain, g)
    if area == 0:
        return 0.0
    return metric_length(domain, g, A, B) ** 2 / area


# ---------------------------------------------------------------- conjugate and dual


@dataclass(frozen=True)
class ConjugateField:
    values: np.ndarray
    monodromy: float
    residual: float


def _dual_increments(domain: DiscreteDomain, V: np.ndarray, bvals: np.ndarray):
    """Yield ``(left_face, right_face, increment)`` for every real edge of the domain."""
    fs = domain.faces
    iu, iv, iw = domain.interior_edges
    glob = domain.interior
    out = []
    for a, b, w in zip(iu.tolist(), iv.tolist(), iw.tolist()):
        va, vb = int(glob[a]), int(glob[b])
        out.append((fs.left[(va, vb)], fs.left[(vb, va)], w * (V[b] - V[a])))
    loc = domain.bd_inner_local
    for i in range(domain.n_boundary):
        out.append((int(fs.gap[i]), int(fs.gap[domain.pred(i)]),
                    float(domain.bd_weight[i] * (bvals[i] - V[loc[i]]))))
    return out


def harmonic_conjugate(domain: DiscreteDomain, V: np.ndarray, bvals: np.ndarray,
                       zero_face: int | None = None, tol: float = 1e-9) -> ConjugateField:
    """Integrate ``V*(left) - V*(right) = w (V(v') - V(v))`` over the faces.

    On a multiply connected domain the nonzero mismatches on closing edges
    are reported as the monodromy.
    """
    nf = domain.faces.n_faces
    incs = _dual_increments(domain, V, bvals)
    adj: list[list[tuple[int, float, int]]] = [[] for _ in range(nf)]
    for k, (L, R, d) in enumerate(incs):
        adj[L].append((R, -d, k))
        adj[R].append((L, d, k))
    vals = np.full(nf, np.nan)
    root = 0 if zero_face is None else zero_face
    vals[root] = 0.0
    used = set()
    queue = [root]
    for f in queue:
        for g, d, k in adj[f]:
            if np.isnan(vals[g]):
                vals[g] = vals[f] + d
                used.add(k)
                queue.append(g)
    if np.any(np.isnan(vals)):
        raise DomainError("face graph is disconnected")
    scale = max(1.0, max((abs(d) for _, _, d in incs), default=0.0))
    gaps = np.array([vals[L] - vals[R] - d for k, (L, R, d) in enumerate(incs) if k not in used])
    mono = float(np.max(np.abs(gaps))) if len(gaps) else 0.0
    if mono <= tol * scale:
        mono = 0.0
        residual = float(np.max(np.abs(gaps))) if len(gaps) else 0.0
    else:
        residual = float(np.max(np.minimum(np.abs(gaps), np.abs(np.abs(gaps) - mono))))
    if residual > tol * scale:
        raise DomainError(f"conjugate closedness residual {residual:.2e}; field is not harmonic")
    return ConjugateField(vals, mono, residual)


def dn_conjugate(f: DNField, zero_face: int | None = None) -> ConjugateField:
    return harmonic_conjugate(f.domain, f.values, f.boundary, zero_face)


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)


def dual_extremal_length(domain: DiscreteDomain, A: Sequence[int], B: Sequence[int]) -> float:
    """Extremal length of the dual network between the two free arcs.

    ``A`` and ``B`` must be counterclockwise runs on a simply connected
    domain.  Dual vertices are faces (boundary faces split at boundary
    points), dual conductances are ``1/w``, and the faces along each free arc
    are merged into one electrode.
    """
    if not domain.is_simply_connected:
        raise DomainError("dual network needs a simply connected domain")
    A, B = list(A), list(B)
    if set(A) & set(B) or not A or not B:
        raise DomainError("arcs must be nonempty and disjoint")
    electrodes = set(A) | set(B)
    fs = domain.faces
    uf = _UnionFind(fs.n_faces)
    for i in range(domain.n_boundary):
        if i not in electrodes:
            uf.union(int(fs.gap[i]), int(fs.gap[domain.pred(i)]))
    e1, e2 = uf.find(int(fs.gap[A[-1]])), uf.find(int(fs.gap[B[-1]]))
    if e1 == e2:
        raise DomainError("degenerate dual: free arcs merge")
    rows, cols, cond = [], [], []
    iu, iv, iw = domain.interior_edges
    glob = domain.interior
    for a, b, w in zip(iu.tolist(), iv.tolist(), iw.tolist()):
        L, R = uf.find(fs.left[(int(glob[a]), int(glob[b]))]), uf.find(fs.left[(int(glob[b]), int(glob[a]))])
        if L != R:
            rows.append(L)
            cols.append(R)
            cond.append(1.0 / w)
    for i in electrodes:
        L, R = uf.find(int(fs.gap[i])), uf.find(int(fs.gap[domain.pred(i)]))
        if L != R:
            rows.append(L)
            cols.append(R)
            cond.append(1.0 / float(domain.bd_weight[i]))
    nodes = sorted(set(rows) | set(cols))
    pos = {f: k for k, f in enumerate(nodes)}
    r = np.array([pos[x] for x in rows])
    c = np.array([pos[x] for x in cols])
    cond = np.array(cond)
    m = len(nodes)
    lap = sp.coo_matrix((np.concatenate([-cond, -cond, cond, cond]),
                         (np.concatenate([r, c, r, c]), np.concatenate([c, r, r, c]))), shape=(m, m)).tocsc()
    k1, k2 = pos[e1], pos[e2]
    free = np.array([k for k in range(m) if k not in (k1, k2)])
    phi = np.zeros(m)
    phi[k2] = 1.0
    if len(free):
        sub = lap[free][:, free].tocsc()
        rhs = -lap[free][:, [k2]].toarray().ravel()
        phi[free] = splu(sub).solve(rhs)
    flux = float((lap @ phi)[k2])
    return 1.0 / flux


def duality_product(quad: Quadrilateral) -> float:
    """``EL([ab];[cd]) * EL([bc];[da])`` on the primal graph."""
    el = extremal_length(quad.domain, quad.ab.indices, quad.cd.indices).EL
    el2 = extremal_length(quad.domain, quad.bc.indices, quad.da.indices).EL
    return el * el2


def z_el_bound(quad: Quadrilateral) -> float:
    return arc_partition(quad) * extremal_length(quad.domain, quad.ab.indices, quad.cd.indices).EL


@dataclass
class InvariantReport:
    Z: float
    X: float
    Y: float
    EL: float
    Z_dual: float
    X_dual: float
    Y_dual: float
    EL_dual: float
    EL_dual_network: float
    ratios: dict
    flags: dict

    def to_dict(self) -> dict:
        return {"Z": self.Z, "X": self.X, "Y": self.Y, "EL": self.EL, "Z_dual": self.Z_dual,
                "X_dual": self.X_dual, "Y_dual": self.Y_dual, "EL_dual": self.EL_dual,
                "EL_dual_network": self.EL_dual_network, "ratios": dict(self.ratios),
                "flags": dict(self.flags)}


#: thresholds for the six "small/large" flags used by the regime comparisons
FLAG_THRESHOLDS = {"Y": 1.0, "Z": 0.25, "EL": 1.0}


def invariant_report(quad: Quadrilateral) -> InvariantReport:
    """All invariants of a quadrilateral and of its conjugate (rotated) quadrilateral."""
    dom = quad.domain
    cr = cross_ratios(quad)
    rot = quad.rotated()
    cr2 = cross_ratios(rot)
    Z = arc_partition(quad)
    Z2 = arc_partition(rot)
    EL = extremal_length(dom, quad.ab.indices, quad.cd.indices).EL
    EL2 = extremal_length(dom, quad.bc.indices, quad.da.indices).EL
    ELn = dual_extremal_length(dom, quad.ab.indices, quad.cd.indices)
    ratios = {
        "xy_relation": xy_relation_ratio(quad, cr),
        "z_over_x": Z / cr.X,
        "z_over_y": Z / cr.Y,
        "z_log_y": Z / math.log1p(cr.Y),
        "duality_product": EL * EL2,
        "z_el": Z * EL,
        "el_dual_network_product": EL * ELn,
        "y_product": cr.Y * cr2.Y,
        "neg_log_z": -math.log(Z),
        "log_inv_y_over_el": math.log1p(1.0 / cr.Y) / EL,
    }
    t = FLAG_THRESHOLDS
    flags = {
        "Y_small": cr.Y <= t["Y"], "Z_small": Z <= t["Z"], "EL_large": EL >= t["EL"],
        "Y_dual_large": cr2.Y >= 1.0 / t["Y"], "Z_dual_large": Z2 >= t["Z"],
        "EL_dual_small": EL2 <= 1.0 / t["EL"],
    }
    return InvariantReport(Z, cr.X, cr.Y, EL, Z2, cr2.X, cr2.Y, EL2, ELn, ratios, flags)
