"""Random walk sampling, Doob-conditioned walks, and checks of the disc properties.

Walks run in lockstep: every live walker draws one uniform number per step
and looks it up in a padded table of cumulative transition probabilities.
Targets ``t < n_interior`` are interior vertices (local order); larger
values encode an exit through boundary point ``t - n_interior``.

Properties of discs (hitting of angular sectors, occupation times, Harnack)
are evaluated by exact solves; sampling is reserved for path intersection
laws and for cross-checking solver outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .domain import DiscreteDomain, DomainError, Quadrilateral, inner_disc, make_domain
from .graph_core import EmbeddedGraph, discrete_disc
from .potential import exit_distribution, factor, greens_function, z_to_points
from .rng import make_rng

STEP_CAP = 10**9
GATE_SIGMA = 4.0


@dataclass(frozen=True)
class WalkSample:
    """One walk: interior vertices in visiting order and the boundary point of exit."""

    path: tuple[int, ...]
    exit: int
    steps: int
    occupation: float


@dataclass(frozen=True)
class EmpiricalEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int

    def within(self, exact: float, sigma: float = GATE_SIGMA) -> bool:
        """``|estimate - exact| <= sigma * stderr``; a zero stderr demands an exact match."""
        return abs(self.estimate - exact) <= sigma * self.stderr + 1e-12

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr, "n": self.samples, "seed": self.seed}


def _indicator_estimate(hits: np.ndarray, seed: int) -> EmpiricalEstimate:
    n = len(hits)
    p = float(np.mean(hits)) if n else math.nan
    return EmpiricalEstimate(p, math.sqrt(p * (1 - p) / n) if n else math.nan, n, seed)


# ---------------------------------------------------------------------------
# transition tables


@dataclass(frozen=True)
class TransitionTable:
    targets: np.ndarray
    cumulative: np.ndarray
    probs: np.ndarray
    degree: np.ndarray


def _neighbour_lists(domain: DiscreteDomain):
    g = domain.graph
    idx = domain.index
    look = {(int(a), int(b)): i for i, (a, b) in enumerate(zip(domain.bd_inner, domain.bd_outer))}
    nI = domain.n_interior
    lists = []
    for v in domain.interior.tolist():
        row = []
        for n in g.rotation[v]:
            t = idx[n] if n in idx else nI + look[(v, n)]
            row.append((t, g.weight(v, n)))
        lists.append(row)
    return lists


def _assemble(lists, scores) -> TransitionTable:
    n = len(lists)
    deg = np.array([len(r) for r in lists], dtype=np.int64)
    width = int(deg.max())
    targets = np.zeros((n, width), dtype=np.int64)
    probs = np.zeros((n, width))
    for i, row in enumerate(lists):
        t = np.array([x for x, _ in row], dtype=np.int64)
        p = np.array([s for s in scores(i, row)], dtype=float)
        p = p / p.sum()
        targets[i, :len(t)] = t
        targets[i, len(t):] = t[-1]
        probs[i, :len(t)] = p
    cum = np.cumsum(probs, axis=1)
    for i, d in enumerate(deg):
        cum[i, d - 1:] = 1.0
    return TransitionTable(targets, cum, probs, deg)


def transition_table(domain: DiscreteDomain) -> TransitionTable:
    """Free walk: step ``v -> v'`` with probability ``w / mu_v``."""
    key = ("mc_table",)
    if key not in domain._cache:
        domain._cache[key] = _assemble(_neighbour_lists(domain), lambda i, row: [w for _, w in row])
    return domain._cache[key]


def conditioned_table(domain: DiscreteDomain, b: int) -> tuple[TransitionTable, np.ndarray, np.ndarray]:
    """Walk conditioned to exit at ``b``: ``v -> v'`` with probability proportional to ``w h(v')``.

    ``h = Z(.; b)``, which is ``1 / mu_b`` at ``b`` and zero at other
    boundary points.  Returns the table, ``h`` on the interior, and the
    unnormalised row sums ``sum w h(v')`` divided by ``mu_v h(v)``, which
    equal one by harmonicity.
    """
    key = ("mc_cond", int(b))
    if key in domain._cache:
        return domain._cache[key]
    nI = domain.n_interior
    h = z_to_points(domain, [b])
    hb = 1.0 / domain.bd_mu[b]
    lists = _neighbour_lists(domain)

    def hval(t):
        if t < nI:
            return h[t]
        return hb if t - nI == b else 0.0

    def scores(i, row):
        return [w * hval(t) for t, w in row]

    table = _assemble(lists, scores)
    mu = domain.mu_interior
    sums = np.array([sum(scores(i, row)) for i, row in enumerate(lists)]) / (mu * h)
    out = (table, h, sums)
    domain._cache[key] = out
    return out


def _walk(table: TransitionTable, n_int: int, starts: np.ndarray, rng: np.random.Generator,
          record: bool = False, mark: np.ndarray | None = None):
    """Run walkers from interior local indices until they all exit.

    Returns exit boundary indices, step counts, optional ``(n, T)`` path
    matrix padded with ``-1``, and whether each walker visited ``mark``.
    """
    pos = np.array(starts, dtype=np.int64)
    n = len(pos)
    alive = np.ones(n, dtype=bool)
    exits = np.full(n, -1, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    hit = mark[pos].copy() if mark is not None else None
    cols = [pos.copy()] if record else None
    t = 0
    while alive.any():
        t += 1
        if t > STEP_CAP:
            raise RuntimeError("walk exceeded the step cap")
        ids = np.nonzero(alive)[0]
        cur = pos[ids]
        r = rng.random(len(ids))
        j = (table.cumulative[cur] < r[:, None]).sum(axis=1)
        j = np.minimum(j, table.degree[cur] - 1)
        nxt = table.targets[cur, j]
        steps[ids] += 1
        out = nxt >= n_int
        exits[ids[out]] = nxt[out] - n_int
        alive[ids[out]] = False
        stay = ids[~out]
        pos[stay] = nxt[~out]
        if mark is not None:
            hit[stay] |= mark[nxt[~out]]
        if record:
            col = np.full(n, -1, dtype=np.int64)
            col[stay] = nxt[~out]
            cols.append(col)
    paths = np.stack(cols, axis=1) if record else None
    return exits, steps, paths, hit


def _sample(domain, table, start_local, rng) -> WalkSample:
    exits, steps, paths, _ = _walk(table, domain.n_interior, np.array([start_local]), rng, record=True)
    loc = paths[0][paths[0] >= 0]
    verts = domain.interior[loc]
    r = domain.graph.local_scales[verts]
    return WalkSample(tuple(int(v) for v in verts), int(exits[0]), int(steps[0]), float(np.sum(r * r)))


def sample_walk(domain: DiscreteDomain, start: int, rng: np.random.Generator) -> WalkSample:
    """Free walk from an interior vertex until it first leaves the domain."""
    if int(start) not in domain.index:
        raise DomainError(f"{start} is not an interior vertex")
    return _sample(domain, transition_table(domain), domain.index[int(start)], rng)


def sample_conditioned(domain: DiscreteDomain, a: int, b: int, rng: np.random.Generator) -> WalkSample:
    """Walk from boundary point ``a`` conditioned to exit at ``b``.

    The law is the normalised path weight on paths from ``a`` to ``b``; the
    first step ``a -> a_int`` is forced.
    """
    if a == b:
        raise DomainError("a and b must be distinct boundary points")
    table, _, _ = conditioned_table(domain, b)
    return _sample(domain, table, domain.bd_inner_local[a], rng)


def exit_frequencies(domain: DiscreteDomain, u: int, n: int, seed: int = 0) -> tuple[np.ndarray, int]:
    """Counts of exits per boundary point over ``n`` free walks from ``u``."""
    rng = make_rng(seed, "exit", int(u), domain.n_interior)
    starts = np.full(n, domain.index[int(u)])
    exits, _, _, _ = _walk(transition_table(domain), domain.n_interior, starts, rng)
    return np.bincount(exits, minlength=domain.n_boundary), n


def estimate_hm(domain: DiscreteDomain, u: int, E: Iterable[int], n: int, seed: int = 0) -> EmpiricalEstimate:
    """Fraction of ``n`` free walks from ``u`` that leave through ``E``."""
    if n < 1:
        raise ValueError("n must be positive")
    counts, _ = exit_frequencies(domain, u, n, seed)
    k = sum(int(counts[i]) for i in set(E))
    return _indicator_estimate(np.r_[np.ones(k), np.zeros(n - k)], seed)


def occupation_estimate(domain: DiscreteDomain, u: int, n: int, seed: int = 0) -> EmpiricalEstimate:
    """Mean of ``sum r_v^2 / mu_v`` over visits of free walks from ``u``.

    Its expectation is ``sum_v r_v^2 G(v; u)``.
    """
    rng = make_rng(seed, "occupation", int(u))
    starts = np.full(n, domain.index[int(u)])
    _, _, paths, _ = _walk(transition_table(domain), domain.n_interior, starts, rng, record=True)
    r = domain.graph.local_scales[domain.interior]
    val = np.r_[r * r / domain.mu_interior, 0.0]
    tally = val[np.where(paths >= 0, paths, -1)].sum(axis=1)
    return EmpiricalEstimate(float(tally.mean()), float(tally.std(ddof=1) / math.sqrt(n)), n, seed)


# ---------------------------------------------------------------------------
# discs: properties (S), (T) and Harnack by exact solves


def disc_domain(graph: EmbeddedGraph, u: int, r: float) -> DiscreteDomain:
    disc = discrete_disc(graph, u, r)
    if not disc.boundary:
        raise DomainError("disc has no boundary inside the graph")
    for v in disc.interior:
        if len(graph.rotation[v]) == 0:
            raise DomainError("isolated vertex")
    dom = make_domain(graph, disc.interior, {"disc": (int(u), float(r))})
    missing = set(disc.boundary) - {int(x) for x in dom.bd_outer}
    if missing:
        raise DomainError("disc boundary is not fully represented")
    return dom


def _angles(domain: DiscreteDomain, u: int) -> np.ndarray:
    pos = domain.graph.pos
    d = pos[domain.bd_outer] - pos[u]
    return np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * math.pi)


def sector_measure(graph: EmbeddedGraph, u: int, r: float, start: float, length: float) -> float:
    """Harmonic measure from ``u`` of boundary vertices of the disc with angle in ``[start, start+length]``."""
    dom = disc_domain(graph, u, r)
    omega = exit_distribution(dom, u)
    ang = np.mod(_angles(dom, u) - start, 2 * math.pi)
    return float(omega[ang <= length + 1e-12].sum())


def test_property_S(graph: EmbeddedGraph, u: int, r: float, direction_interval: tuple[float, float]) -> float:
    """Exit probability of the disc through the sector ``(start, length)``, by one Green solve."""
    start, length = direction_interval
    return sector_measure(graph, u, r, start, length)


test_property_S.__test__ = False


def property_S_min(graph: EmbeddedGraph, u: int, r: float, length: float) -> float:
    """Minimum over all sectors of the given angular length.

    The hit set only changes when a sector endpoint crosses a boundary
    vertex, so the half-open sectors starting just after each boundary
    vertex angle exhaust all cases.
    """
    dom = disc_domain(graph, u, r)
    omega = exit_distribution(dom, u)
    ang = _angles(dom, u)
    best = math.inf
    for theta in np.unique(ang):
        rel = np.mod(ang - theta, 2 * math.pi)
        sel = (rel > 0) & (rel <= length + 1e-12)
        best = min(best, float(omega[sel].sum()))
    return best


def test_property_T(graph: EmbeddedGraph, u: int, r: float) -> float:
    """``sum_v r_v^2 G(v; u) / r^2`` over the disc of radius ``r``."""
    dom = disc_domain(graph, u, r)
    G = greens_function(dom, u).values
    rv = graph.local_scales[dom.interior]
    return float(np.sum(rv * rv * G) / (r * r))


test_property_T.__test__ = False


def test_harnack(graph: EmbeddedGraph, u: int, r: float, rho: float) -> float:
    """Worst ``min / max`` over the inner disc of nonnegative harmonic functions on the outer disc.

    Every nonnegative harmonic function on the outer disc is a nonnegative
    combination of single-point harmonic measures, so the extreme value is
    attained on that family and the result is the exact constant.
    """
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    dom = disc_domain(graph, u, rho * r)
    inner = discrete_disc(graph, u, r).interior
    loc = np.array([dom.index[v] for v in inner if v in dom.index])
    N = dom.n_boundary
    rhs = np.zeros((dom.n_interior, N))
    np.add.at(rhs, (dom.bd_inner_local, np.arange(N)), dom.bd_weight)
    H = factor(dom).solve(rhs)[loc]
    ratios = H.min(axis=0) / H.max(axis=0)
    return float(ratios.min())


test_harnack.__test__ = False


def intrinsic_distance(domain: DiscreteDomain, u: int, E: Iterable[int]) -> float:
    """Euclidean length of the shortest path inside the domain from ``u`` to a point of ``E``."""
    g = domain.graph
    nI = domain.n_interior
    iu, iv, _ = domain.interior_edges
    pos = g.pos
    ids = domain.interior
    lens = np.linalg.norm(pos[ids[iu]] - pos[ids[iv]], axis=1)
    E = sorted(set(E))
    eb = np.arange(nI, nI + len(E))
    blens = np.linalg.norm(pos[domain.bd_inner[E]] - pos[domain.bd_outer[E]], axis=1)
    rows = np.r_[iu, iv, domain.bd_inner_local[E], eb]
    cols = np.r_[iv, iu, eb, domain.bd_inner_local[E]]
    data = np.r_[lens, lens, blens, blens]
    mat = csr_matrix((data, (rows, cols)), shape=(nI + len(E), nI + len(E)))
    dist = dijkstra(mat, indices=domain.index[int(u)])
    return float(dist[nI:].min())


def test_beurling(domain: DiscreteDomain, u: int, E: Iterable[int]) -> tuple[float, float]:
    """``(omega(u; E), dist_inside(u; E) / dist(u; boundary))``."""
    from .domain import distance_to_boundary
    from .potential import harmonic_measure

    E = list(E)
    omega = harmonic_measure(domain, u, E)
    return omega, intrinsic_distance(domain, u, E) / distance_to_boundary(domain, u)


test_beurling.__test__ = False


def fit_beurling_exponent(pairs: Sequence[tuple[float, float]]) -> float:
    """Least-squares ``beta`` in ``log omega = const - beta log(distance ratio)``."""
    om = np.array([p[0] for p in pairs])
    ra = np.array([p[1] for p in pairs])
    if len(om) < 2 or np.ptp(np.log(ra)) == 0:
        raise ValueError("need at least two distinct distance ratios")
    slope = np.polyfit(np.log(ra), np.log(om), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# conditioned walks and intersections


def _conditioned_paths(domain: DiscreteDomain, a: int, b: int, n: int, rng) -> np.ndarray:
    table, _, _ = conditioned_table(domain, b)
    starts = np.full(n, domain.bd_inner_local[a])
    exits, _, paths, _ = _walk(table, domain.n_interior, starts, rng, record=True)
    if np.any(exits != b):
        raise RuntimeError("conditioned walk left through the wrong boundary point")
    return paths


def loop_erase(path: Sequence[int]) -> list[int]:
    """Chronological loop erasure."""
    out: list[int] = []
    where: dict[int, int] = {}
    for v in path:
        if v in where:
            k = where[v]
            for x in out[k + 1:]:
                del where[x]
            del out[k + 1:]
        else:
            where[v] = len(out)
            out.append(v)
    return out


def intersection_probability(quad: Quadrilateral, n: int, seed: int = 0,
                             variant: str = "loop_erased") -> EmpiricalEstimate:
    """Probability that two independent conditioned walks share an interior vertex.

    ``variant="loop_erased"`` (default) pairs the loop erasure of a walk
    from ``a`` to ``b`` with a walk from ``d`` to ``c``; its meeting
    probability equals ``X^2``.  ``variant="plain"`` pairs plain walks from
    ``a`` to ``d`` and from ``b`` to ``c``.
    """
    dom = quad.domain
    a, b, c, d = quad.marks
    if variant == "loop_erased":
        first, second = (a, b), (d, c)
    elif variant == "plain":
        first, second = (a, d), (b, c)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    p1 = _conditioned_paths(dom, *first, n, make_rng(seed, "xsq", variant, 1))
    p2 = _conditioned_paths(dom, *second, n, make_rng(seed, "xsq", variant, 2))
    nI = dom.n_interior
    occ = np.zeros((n, nI + 1), dtype=bool)
    rows = np.repeat(np.arange(n), p2.shape[1])
    occ[rows, np.where(p2 >= 0, p2, nI).ravel()] = True
    occ = occ[:, :nI]
    hits = np.zeros(n, dtype=bool)
    for i in range(n):
        row = p1[i][p1[i] >= 0]
        verts = loop_erase(row.tolist()) if variant == "loop_erased" else row
        hits[i] = bool(occ[i, verts].any())
    return _indicator_estimate(hits, seed)


def intersection_ball_probability(domain: DiscreteDomain, a: int, b: int, u: int, n: int,
                                  seed: int = 0) -> EmpiricalEstimate:
    """Probability that a walk from ``a`` conditioned to exit at ``b`` visits the inner disc of ``u``."""
    ball = inner_disc(domain, u)
    mark = np.zeros(domain.n_interior, dtype=bool)
    mark[[domain.index[v] for v in ball]] = True
    table, _, _ = conditioned_table(domain, b)
    starts = np.full(n, domain.bd_inner_local[a])
    rng = make_rng(seed, "ball", int(a), int(b), int(u))
    _, _, _, hit = _walk(table, domain.n_interior, starts, rng, mark=mark)
    return _indicator_estimate(hit, seed)


__all__ = [
    "EmpiricalEstimate", "TransitionTable", "WalkSample", "conditioned_table", "disc_domain",
    "estimate_hm", "exit_frequencies", "fit_beurling_exponent", "intersection_ball_probability",
    "intersection_probability", "intrinsic_distance", "loop_erase", "occupation_estimate",
    "property_S_min", "sample_conditioned", "sample_walk", "sector_measure", "test_beurling",
    "test_harnack", "test_property_S", "test_property_T", "transition_table",
]
