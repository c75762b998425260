"""Separator cross-cuts, annuli around an interior vertex, and slit cutting.

The separator of two boundary arcs ``A``, ``B`` at level ``k`` splits the
interior according to the ratio ``Z(u; A) / Z(u; B)``.  The annulus around
``u`` removes a small ambient disc; cutting it along a path from the inner
boundary to the outer one gives a simply connected domain in which both
sides of the path are interior.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .conformal import dn_field, extremal_length
from .domain import DiscreteDomain, DomainError, holes, make_domain
from .graph_core import combinatorial_graph, discrete_disc
from .potential import greens_function, harmonic_measure, partition_Z_arcs, z_row, z_to_points

DEFAULT_RHO0 = 0.25
SANDWICH_TOL = 1e-10
EL_TOL = 1e-9
TIE_TOL = 1e-12


class SurgeryError(ValueError):
    pass


def _components(graph, vertices: set[int]) -> list[set[int]]:
    left, out = set(vertices), []
    while left:
        seed = min(left)
        comp, stack = {seed}, [seed]
        while stack:
            x = stack.pop()
            for y in graph.rotation[x]:
                if y in left and y not in comp:
                    comp.add(y)
                    stack.append(y)
        left -= comp
        out.append(comp)
    return out


def _bd_lookup(domain: DiscreteDomain) -> dict[tuple[int, int], int]:
    return {(int(a), int(b)): i for i, (a, b) in enumerate(zip(domain.bd_inner, domain.bd_outer))}


def _cyclic_run(domain: DiscreteDomain, indices: set[int]) -> tuple[int, int] | None:
    """``(start, end)`` if ``indices`` is one ccw run on the outer contour."""
    s, e = domain.contours[0]
    n = e - s
    flags = [(s + i) in indices for i in range(n)]
    if not any(flags) or any(i not in range(s, e) for i in indices):
        return None
    if all(flags):
        return s, e - 1
    starts = [i for i in range(n) if flags[i] and not flags[i - 1]]
    if len(starts) != 1:
        return None
    m = starts[0]
    while flags[(m + 1) % n]:
        m += 1
    return s + starts[0], s + m % n


# ---------------------------------------------------------------------------
# separators


@dataclass
class SeparatorSplit:
    """Split of a domain by the level ``k`` of ``Z(.; A) / Z(.; B)``.

    ``contacts`` holds the runs of original boundary points kept by each
    part: ``"A"`` is ``(y_A, x_A)`` and ``"B"`` is ``(x_B, y_B)``.
    """

    domain: DiscreteDomain
    A: tuple[int, ...]
    B: tuple[int, ...]
    k: float
    ratio: np.ndarray
    interior_A: frozenset
    interior_B: frozenset
    slit: tuple[tuple[int, int], ...]
    connected_A: bool
    connected_B: bool
    covers_A: bool
    covers_B: bool
    part_A: DiscreteDomain | None = None
    part_B: DiscreteDomain | None = None
    contacts: dict = field(default_factory=dict)

    @property
    def usable(self) -> bool:
        """Both parts connected, each holding every inner vertex next to its own arc."""
        return self.connected_A and self.connected_B and self.covers_A and self.covers_B

    @property
    def reason(self) -> str:
        out = [f"part {n} is empty or disconnected" for n, ok in
               (("A", self.connected_A), ("B", self.connected_B)) if not ok]
        out += [f"part {n} misses an inner vertex next to {n}" for n, ok in
                (("A", self.covers_A), ("B", self.covers_B)) if not ok]
        return "; ".join(out)


def _part(domain: DiscreteDomain, verts: frozenset) -> tuple[bool, DiscreteDomain | None]:
    if not verts or len(_components(domain.graph, set(verts))) != 1:
        return False, None
    return True, make_domain(domain.graph, verts)


def separator_split(domain: DiscreteDomain, A: Iterable[int], B: Iterable[int], k: float) -> SeparatorSplit:
    """Split ``domain`` into ``{R >= k}`` and ``{R < k}`` with ``R = Z(u; A) / Z(u; B)``.

    An empty or disconnected part, or a part missing an inner vertex next to
    its own arc, makes the split unusable; this is reported through
    :attr:`SeparatorSplit.usable` rather than raised.
    """
    A, B = tuple(A), tuple(B)
    if not A or not B or set(A) & set(B):
        raise DomainError("A and B must be nonempty disjoint sets of boundary points")
    if not k > 0 or not math.isfinite(k):
        raise DomainError("k must be a positive finite number")
    ratio = z_to_points(domain, A) / z_to_points(domain, B)
    keep = ratio >= k
    ids = domain.interior
    inA = frozenset(int(v) for v in ids[keep])
    inB = frozenset(int(v) for v in ids[~keep])
    iu, iv, _ = domain.interior_edges
    slit = []
    for a, b in zip(iu.tolist(), iv.tolist()):
        if keep[a] != keep[b]:
            ua, ub = (a, b) if keep[a] else (b, a)
            slit.append((int(ids[ua]), int(ids[ub])))
    slit.sort()
    okA, partA = _part(domain, inA)
    okB, partB = _part(domain, inB)
    contacts = {}
    for name, verts in (("A", inA), ("B", inB)):
        kept = {i for i in range(domain.n_boundary) if int(domain.bd_inner[i]) in verts}
        contacts[name] = _cyclic_run(domain, kept) if kept else None
    return SeparatorSplit(
        domain=domain, A=A, B=B, k=float(k), ratio=ratio, interior_A=inA, interior_B=inB,
        slit=tuple(slit), connected_A=okA, connected_B=okB,
        covers_A=all(int(domain.bd_inner[i]) in inA for i in A),
        covers_B=all(int(domain.bd_inner[i]) in inB for i in B),
        part_A=partA, part_B=partB, contacts=contacts)


def _lift(part: DiscreteDomain, domain: DiscreteDomain, idx: Iterable[int]) -> list[int]:
    """Boundary points of ``domain`` that survive as boundary points of ``part``."""
    look = _bd_lookup(part)
    out = []
    for i in idx:
        key = (int(domain.bd_inner[i]), int(domain.bd_outer[i]))
        if key in look:
            out.append(look[key])
    return out


def _slit_points(part: DiscreteDomain, other: frozenset) -> list[int]:
    return [i for i in range(part.n_boundary) if int(part.bd_outer[i]) in other]


def separator_partitions(split: SeparatorSplit) -> tuple[float, float, float]:
    """``(Z(A; B), Z_{part A}(A; slit), Z_{part B}(slit; B))``."""
    if not split.usable:
        raise SurgeryError(f"separator split at k={split.k} is unusable: {split.reason}")
    dom = split.domain
    Z = partition_Z_arcs(dom, split.A, split.B)
    pa, pb = split.part_A, split.part_B
    A_in = _lift(pa, dom, split.A)
    B_in = _lift(pb, dom, split.B)
    L_a = _slit_points(pa, split.interior_B)
    L_b = _slit_points(pb, split.interior_A)
    ZA = partition_Z_arcs(pa, A_in, L_a) if A_in else 0.0
    ZB = partition_Z_arcs(pb, L_b, B_in) if B_in else 0.0
    return Z, ZA, ZB


def separator_verify(split: SeparatorSplit) -> tuple[float, float]:
    """Factorisation ratio ``Z / (Z_A' Z_B')`` and level ratio ``(Z_A' / Z_B') / k``."""
    Z, ZA, ZB = separator_partitions(split)
    if ZA <= 0 or ZB <= 0:
        raise SurgeryError("a part lost its marked arc; the split does not separate A from B")
    return Z / (ZA * ZB), (ZA / ZB) / split.k


def _margins(domain, A, S, x):
    """``Z(u; A) Z(x; S) - Z(x; A) Z(u; S)`` at every interior vertex, with a scale."""
    uA, uS = z_to_points(domain, A), z_to_points(domain, S)
    xA, xS = z_row(domain, A)[x], z_row(domain, S)[x]
    m = uA * xS - xA * uS
    scale = np.abs(uA * xS) + np.abs(xA * uS)
    return m, scale


def separator_inclusion_check(domain: DiscreteDomain, A: Sequence[int], B: Sequence[int],
                              C: Sequence[int], x: int, tol: float = 1e-9) -> bool:
    """Nesting of separators whose level is read off at a boundary point ``x``.

    For ``x`` strictly between ``A`` and ``B`` the chain is
    ``sep(A, C) <= sep(A, B u C) <= sep(A, B)``; for ``x`` strictly between
    ``C`` and ``A`` it is reversed.  Vertices within ``tol`` (relative) of a
    threshold are not counted as violations.
    """
    A, B, C = list(A), list(B), list(C)
    if not A or not B or not C:
        raise DomainError("arcs must be nonempty")
    if domain.succ(B[-1]) != C[0]:
        raise DomainError("B and C must be consecutive arcs")
    gap_ab = _open_between(domain, A[-1], B[0])
    gap_ca = _open_between(domain, C[-1], A[0])
    if x in gap_ab:
        chain = [C, B + C, B]
    elif x in gap_ca:
        chain = [B, B + C, C]
    else:
        raise DomainError(f"boundary point {x} is not strictly between the arcs")
    margins = [_margins(domain, A, S, x) for S in chain]
    ok = True
    for (m1, s1), (m2, s2) in zip(margins, margins[1:]):
        ok &= not np.any((m1 > tol * s1) & (m2 < -tol * s2))
    return bool(ok)


def _open_between(domain: DiscreteDomain, a: int, b: int) -> set[int]:
    out, i = set(), domain.succ(a)
    while i != b:
        out.add(i)
        i = domain.succ(i)
        if i == a:
            raise DomainError("arc endpoints lie on different contours")
    return out


# ---------------------------------------------------------------------------
# annulus


@dataclass
class AnnulusDomain:
    """Domain minus a small ambient disc around ``u``.

    ``domain`` is the annulus itself when it is doubly connected, and
    otherwise the fallback component (the largest one).  ``inner`` lists the
    boundary points of ``domain`` facing the removed disc; ``to_base`` maps
    the other boundary points back to the base domain (``-1`` on ``inner``).
    """

    base: DiscreteDomain
    u: int
    rho0: float
    radius: float
    disc: frozenset
    domain: DiscreteDomain
    inner: tuple[int, ...]
    to_base: np.ndarray
    doubly_connected: bool
    fallback: bool
    n_components: int
    green_on_C: tuple[float, float]

    @property
    def outer(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.nonzero(self.to_base >= 0)[0])

    def lift(self, base_indices: Iterable[int]) -> tuple[int, ...]:
        """Annulus boundary points corresponding to the given base boundary points."""
        want = {int(i) for i in base_indices}
        return tuple(int(i) for i in np.nonzero(np.isin(self.to_base, list(want)))[0]) if want else ()


def annulus(domain: DiscreteDomain, u: int, rho0: float = DEFAULT_RHO0) -> AnnulusDomain:
    """Remove the ambient disc of radius ``rho0 * dist(u, boundary)`` around ``u``."""
    from .domain import distance_to_boundary

    u = int(u)
    if u not in domain.index:
        raise DomainError(f"{u} is not an interior vertex")
    if not 0 < rho0 < 1:
        raise DomainError("rho0 must lie in (0, 1)")
    radius = rho0 * distance_to_boundary(domain, u)
    disc = discrete_disc(domain.graph, u, radius).interior
    rest = set(domain.index) - set(disc)
    if not rest:
        raise SurgeryError("the disc covers the whole domain")
    comps = _components(domain.graph, rest)
    comps.sort(key=lambda c: (-len(c), min(c)))
    ann = make_domain(domain.graph, comps[0], {"annulus_of": u})
    base_look = _bd_lookup(domain)
    to_base = np.array([base_look.get((int(a), int(b)), -1) for a, b in zip(ann.bd_inner, ann.bd_outer)],
                       dtype=np.int64)
    inner = tuple(int(i) for i in np.nonzero(to_base < 0)[0])
    doubly = len(comps) == 1 and holes(ann) == 1
    g = greens_function(domain, u)
    gc = [g.at(v) for v in sorted({int(ann.bd_outer[i]) for i in inner})]
    return AnnulusDomain(domain, u, rho0, radius, frozenset(disc), ann, inner, to_base, doubly,
                         not doubly, len(comps), (min(gc), max(gc)) if gc else (math.nan, math.nan))


def hm_via_annulus(domain: DiscreteDomain, u: int, arc_indices: Iterable[int],
                   rho0: float = DEFAULT_RHO0, ann: AnnulusDomain | None = None) -> tuple[float, float]:
    """Harmonic measure of an arc from ``u`` and the annulus partition function ``Z(C; arc)``."""
    arc_indices = list(arc_indices)
    ann = ann or annulus(domain, u, rho0)
    omega = harmonic_measure(domain, u, arc_indices)
    target = ann.lift(arc_indices)
    Z = partition_Z_arcs(ann.domain, ann.inner, target) if target and ann.inner else 0.0
    return omega, Z


def log_hm_vs_el(domain: DiscreteDomain, u: int, arc_indices: Iterable[int],
                 rho0: float = DEFAULT_RHO0, ann: AnnulusDomain | None = None) -> tuple[float, float]:
    """``log(1 + 1/omega)`` and the annulus extremal length between ``C`` and the arc."""
    arc_indices = list(arc_indices)
    ann = ann or annulus(domain, u, rho0)
    omega = harmonic_measure(domain, u, arc_indices)
    target = ann.lift(arc_indices)
    if not target or not ann.inner:
        raise SurgeryError("the arc or the inner boundary is missing from the annulus component")
    EL = extremal_length(ann.domain, ann.inner, target).EL
    return math.log1p(1.0 / omega), EL


# ---------------------------------------------------------------------------
# cutting along a slit


@dataclass
class CutDomain:
    """Annulus cut along a path, with both sides of the path kept as interior.

    ``labels[i]`` is one of ``"outer"``, ``"C"``, ``"gamma_left"`` and
    ``"gamma_right"`` for every boundary point of ``domain``; ``origin``
    maps each vertex of the cut graph to the base vertex it copies.
    """

    annulus: AnnulusDomain
    path: tuple[int, ...]
    c: int
    d: int
    domain: DiscreteDomain
    left_copy: tuple[int, ...]
    right_copy: tuple[int, ...]
    origin: np.ndarray
    labels: tuple[str, ...]

    def points(self, *names: str) -> tuple[int, ...]:
        return tuple(i for i, lab in enumerate(self.labels) if lab in names)

    def lift(self, base_indices: Iterable[int]) -> tuple[int, ...]:
        """Outer boundary points of the cut domain that copy the given base points."""
        look = _bd_lookup(self.annulus.base)
        want = {int(i) for i in base_indices}
        dom, o = self.domain, self.origin
        out = []
        for i in self.points("outer"):
            key = (int(o[dom.bd_inner[i]]), int(o[dom.bd_outer[i]]))
            if look.get(key, -1) in want:
                out.append(i)
        return tuple(out)


def _between_ccw(rot: Sequence[int], start: int, stop: int) -> set[int]:
    """Neighbours strictly after ``start`` and strictly before ``stop`` in ccw order."""
    n = len(rot)
    i = rot.index(start)
    out = set()
    for k in range(1, n):
        x = rot[(i + k) % n]
        if x == stop:
            break
        out.add(x)
    return out


def _check_path(ann: AnnulusDomain, path: Sequence[int]) -> None:
    g = ann.domain.graph
    inside = set(ann.domain.index)
    if len(set(path)) != len(path):
        raise SurgeryError("slit path is self-intersecting")
    for v in path:
        if v not in inside:
            raise SurgeryError(f"slit vertex {v} is not in the annulus")
    for a, b in zip(path, path[1:]):
        if b not in g.rotation[a]:
            raise SurgeryError(f"slit vertices {a} and {b} are not adjacent")
    pos = {v: i for i, v in enumerate(path)}
    for i, v in enumerate(path):
        for n in g.rotation[v]:
            if n in pos and abs(pos[n] - i) > 1:
                raise SurgeryError("slit path has a chord; shortcut it first")


def cut_annulus(ann: AnnulusDomain, path: Sequence[int], c: int | None = None,
                d: int | None = None) -> CutDomain:
    """Cut a doubly connected annulus along ``path``.

    ``path`` runs from a vertex next to the removed disc (through the disc
    vertex ``c``) to a vertex next to the outer boundary (through the
    exterior vertex ``d``).  Each path vertex is duplicated; each copy keeps
    its mass, its edges along the path, and its edges on its own side, while
    edges towards the other side become boundary points of the cut.
    """
    if not ann.doubly_connected:
        raise SurgeryError("cutting needs a doubly connected annulus")
    path = [int(v) for v in path]
    if not path:
        raise SurgeryError("empty slit path")
    _check_path(ann, path)
    dom = ann.domain
    g = dom.graph
    inside = set(dom.index)
    disc = ann.disc
    first_nb = [n for n in g.rotation[path[0]] if n in disc]
    last_nb = [n for n in g.rotation[path[-1]] if n not in inside and n not in disc]
    if c is None:
        c = first_nb[0] if first_nb else None
    if d is None:
        d = last_nb[0] if last_nb else None
    if c not in first_nb or d not in last_nb:
        raise SurgeryError("slit path must run from the inner boundary to the outer boundary")

    on_path = {v: i for i, v in enumerate(path)}
    side: dict[tuple[int, int], str] = {}
    for i, v in enumerate(path):
        prev = path[i - 1] if i > 0 else c
        nxt = path[i + 1] if i + 1 < len(path) else d
        rot = list(g.rotation[v])
        for n in _between_ccw(rot, nxt, prev):
            side[(v, n)] = "L"
        for n in _between_ccw(rot, prev, nxt):
            side[(v, n)] = "R"

    # vertex table of the cut graph
    origin: list[int] = []
    new_id: dict[int, int] = {}
    copy: dict[tuple[int, str], int] = {}
    exterior = set()
    for v in sorted(inside):
        for n in g.rotation[v]:
            if n not in inside:
                exterior.add(n)
    for v in sorted(inside | exterior):
        if v in on_path:
            for s in "LR":
                copy[(v, s)] = len(origin)
                origin.append(v)
        else:
            new_id[v] = len(origin)
            origin.append(v)
    mu = [float(g.mu[v]) for v in origin]
    rotation: list[list[int]] = [[] for _ in origin]
    edges: list[tuple[int, int]] = []
    weights: list[float] = []
    stub_of: dict[int, str] = {}

    def add_edge(a, b, w):
        edges.append((a, b))
        weights.append(w)

    def target(v, n, s):
        """Neighbour of copy ``s`` of path vertex ``v`` standing for ``n``."""
        if n in on_path:
            return copy[(n, s)]
        if (v, n) not in side:
            return new_id[n]  # c or d, shared by both copies
        if side[(v, n)] == s:
            return new_id[n]
        sid = len(origin)
        origin.append(n)
        mu.append(float(g.mu[n]))
        rotation.append([copy[(v, s)]])
        stub_of[sid] = s
        add_edge(copy[(v, s)], sid, g.weight(v, n))
        return sid

    for v in sorted(inside):
        for s in ("LR" if v in on_path else " "):
            me = copy[(v, s)] if v in on_path else new_id[v]
            for n in g.rotation[v]:
                if v in on_path:
                    t = target(v, n, s)
                elif n in on_path:
                    t = copy[(n, side[(n, v)])]
                else:
                    t = new_id[n]
                rotation[me].append(t)
                if t not in stub_of and (n not in inside or me < t):
                    add_edge(me, t, g.weight(v, n))
    for a, b in list(edges):
        if origin[b] in exterior and b not in stub_of:
            rotation[b].append(a)

    pos = g.pos[origin]
    cg = combinatorial_graph(pos, edges, weights, rotation, mu)
    interior = [copy[(v, s)] for v in path for s in "LR"] + [new_id[v] for v in inside if v not in on_path]
    cdom = make_domain(cg, interior, {"cut_of": ann.u})
    if len(cdom.contours) != 1:
        raise SurgeryError("cut domain is not simply connected")
    ends = {(path[0], c), (path[-1], d)}
    labels = []
    for i in range(cdom.n_boundary):
        inner, outer = int(cdom.bd_inner[i]), int(cdom.bd_outer[i])
        if outer in stub_of:
            # a stub hanging from the right copy faces the left side of the path
            labels.append("gamma_left" if stub_of[outer] == "R" else "gamma_right")
        elif (origin[inner], origin[outer]) in ends and origin[inner] in on_path:
            labels.append("gamma_left" if inner == copy[(origin[inner], "R")] else "gamma_right")
        elif origin[outer] in disc:
            labels.append("C")
        else:
            labels.append("outer")
    cut = CutDomain(ann, tuple(path), int(c), int(d), cdom,
                    tuple(copy[(v, "L")] for v in path), tuple(copy[(v, "R")] for v in path),
                    np.array(origin, dtype=np.int64), tuple(labels))
    if not boundary_order_ok(cut):
        raise SurgeryError("cut boundary does not decompose into outer, slit, inner, slit runs")
    return cut


def boundary_order_ok(cut: CutDomain) -> bool:
    """Labels form the ccw cyclic pattern outer, gamma_left, C, gamma_right (empty runs allowed)."""
    labs = list(cut.labels)
    order = ["outer", "gamma_left", "C", "gamma_right"]
    runs = []
    for lab in labs:
        if not runs or runs[-1] != lab:
            runs.append(lab)
    if len(runs) > 1 and runs[0] == runs[-1]:
        runs.pop()
    if len(set(runs)) != len(runs):
        return False
    idx = [order.index(r) for r in runs]
    k = idx.index(min(idx))
    idx = idx[k:] + idx[:k]
    return idx == sorted(idx)


def cut_sandwich(cut: CutDomain, arc_indices: Iterable[int]) -> tuple[float, float, float]:
    """``Z_cut(C; arc) <= Z_annulus(C; arc) <= Z_cut(slit u C u slit; arc)`` as a triple."""
    arc_indices = list(arc_indices)
    ann = cut.annulus
    mid = partition_Z_arcs(ann.domain, ann.inner, ann.lift(arc_indices))
    tgt = cut.lift(arc_indices)
    lo = partition_Z_arcs(cut.domain, cut.points("C"), tgt)
    hi = partition_Z_arcs(cut.domain, cut.points("C", "gamma_left", "gamma_right"), tgt)
    return lo, mid, hi


def sandwich_holds(triple: tuple[float, float, float], tol: float = SANDWICH_TOL) -> bool:
    lo, mid, hi = triple
    return lo <= mid + tol and mid <= hi + tol


# ---------------------------------------------------------------------------
# slit search


@dataclass
class SlitResult:
    """Outcome of a slit search.

    ``branch`` is ``"cut"`` when a slit was produced and checked, and
    ``"near"`` when the level path does not exist and the alternative
    extremal length inequality was checked instead.
    """

    mode: str
    branch: str
    path: tuple[int, ...] | None
    cut: CutDomain | None
    V_d: float
    lhs: float
    rhs: float
    holds: bool


def _sanitize(graph, path: list[int], near_c, near_d) -> list[int]:
    """Trim to the last inner contact and the first outer contact after it, then drop chords."""
    i0 = max(i for i, v in enumerate(path) if near_c(v))
    i1 = min(i for i in range(i0, len(path)) if near_d(path[i]))
    return _shortcut(path[i0:i1 + 1], graph)


def _shortcut(path: list[int], graph) -> list[int]:
    pos = {v: i for i, v in enumerate(path)}
    out, i = [path[0]], 0
    while i < len(path) - 1:
        j = max(pos[n] for n in graph.rotation[path[i]] if n in pos and pos[n] > i)
        out.append(path[j])
        i = j
    return out


def find_slit(ann: AnnulusDomain, arc_indices: Iterable[int], mode: str = "conjugate_sign",
              q: float = 2.0) -> SlitResult:
    """Find a slit from the inner to the outer boundary avoiding the arc, cut, and check it.

    ``V`` is the potential equal to 0 on the arc, 1 on the inner boundary and
    Neumann elsewhere, and ``d`` maximises ``V`` over the free outer boundary.
    ``conjugate_sign`` follows a best-first nondecreasing ascent of ``V`` from ``d`` to the
    inner boundary and checks ``EL(cut; C, arc) <= 2 EL(annulus; C, arc)``.
    ``level_set`` follows a path where ``V >= 1 - 1/q``; when ``V(d)`` is
    below that level it checks ``EL(annulus; C, arc) < q^2 EL(annulus; C, outer)``.
    """
    if mode not in ("conjugate_sign", "level_set"):
        raise ValueError(f"unknown slit mode {mode!r}")
    if mode == "level_set" and not q > 1:
        raise ValueError("q must exceed 1")
    if not ann.doubly_connected:
        raise SurgeryError("slit search needs a doubly connected annulus")
    dom = ann.domain
    g = dom.graph
    base_arc = list(arc_indices)
    target = list(ann.lift(base_arc))
    if not target:
        raise SurgeryError("arc does not touch the annulus")
    free = [i for i in ann.outer if i not in set(target)]
    if not free:
        raise SurgeryError("the arc covers the whole outer boundary")
    f = dn_field(dom, target, ann.inner)
    V = f.values
    EL = 1.0 / f.current
    idx = dom.index
    dpt = max(free, key=lambda i: (f.boundary[i], -i))
    V_d = float(f.boundary[dpt])
    d_int, d_out = int(dom.bd_inner[dpt]), int(dom.bd_outer[dpt])
    free_pairs = {(int(dom.bd_inner[i]), int(dom.bd_outer[i])) for i in free}

    def near_c(v):
        return any(n in ann.disc for n in g.rotation[v])

    def near_d(v):
        return any((v, n) in free_pairs for n in g.rotation[v])

    if mode == "conjugate_sign":
        path = _ascent_path(g, idx, V, d_int, near_c)
    else:
        level = 1.0 - 1.0 / q
        if V_d < level:
            EL_all = extremal_length(dom, ann.outer, ann.inner).EL
            lhs, rhs = EL, q * q * EL_all
            return SlitResult(mode, "near", None, None, V_d, lhs, rhs, lhs < rhs)
        path = _widest_path(g, idx, V, d_int, near_c)
    path = path[::-1]
    path = _sanitize(g, path, near_c, near_d)
    c = next(n for n in g.rotation[path[0]] if n in ann.disc)
    d = next(n for n in g.rotation[path[-1]] if (path[-1], n) in free_pairs)
    if path[-1] == d_int:
        d = d_out
    cut = cut_annulus(ann, path, c, d)
    tgt = cut.lift(base_arc)
    if mode == "conjugate_sign":
        lhs = extremal_length(cut.domain, cut.points("C"), tgt).EL
        rhs = 2.0 * EL
        holds = lhs <= rhs + EL_TOL
    else:
        lhs = extremal_length(cut.domain, cut.points("C", "gamma_left", "gamma_right"), tgt).EL
        rhs = (1.0 - 1.0 / q) ** 2 * EL
        holds = lhs >= rhs - EL_TOL
    return SlitResult(mode, "cut", tuple(path), cut, V_d, lhs, rhs, holds)


def _ascent_path(graph, idx, V, start, stop) -> list[int]:
    """Path from ``start`` to a vertex satisfying ``stop`` along which ``V`` never decreases.

    Best-first on ``V``; plateaus (equal values up to rounding) are crossed
    in breadth.  The maximum principle guarantees such a path exists.
    """
    prev = {start: None}
    heap = [(-V[idx[start]], start)]
    while heap:
        _, v = heapq.heappop(heap)
        if stop(v):
            out = [v]
            while prev[out[-1]] is not None:
                out.append(prev[out[-1]])
            return out[::-1]
        for n in graph.rotation[v]:
            if n in idx and n not in prev and V[idx[n]] >= V[idx[v]] - TIE_TOL:
                prev[n] = v
                heapq.heappush(heap, (-V[idx[n]], n))
    raise SurgeryError("no nondecreasing path reaches the inner boundary")


def _widest_path(graph, idx, V, start, stop) -> list[int]:
    """Path from ``start`` to a vertex satisfying ``stop`` maximising the minimum of ``V``."""
    best = {start: V[idx[start]]}
    prev = {start: None}
    heap = [(-best[start], start)]
    done = set()
    while heap:
        negw, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if stop(v):
            out = [v]
            while prev[out[-1]] is not None:
                out.append(prev[out[-1]])
            return out[::-1]
        for n in graph.rotation[v]:
            if n not in idx or n in done:
                continue
            w = min(-negw, V[idx[n]])
            if w > best.get(n, -math.inf):
                best[n] = w
                prev[n] = v
                heapq.heappush(heap, (-w, n))
    raise SurgeryError("no path from the outer boundary to the inner boundary")


__all__ = [
    "AnnulusDomain", "CutDomain", "DEFAULT_RHO0", "SeparatorSplit", "SlitResult", "SurgeryError",
    "annulus", "boundary_order_ok", "cut_annulus", "cut_sandwich", "find_slit", "hm_via_annulus",
    "log_hm_vs_el", "sandwich_holds", "separator_inclusion_check", "separator_partitions",
    "separator_split", "separator_verify",
]
