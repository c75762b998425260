"""Discrete domains: connected sets of interior vertices and their boundary.

A boundary point is an oriented edge ``(inner, outer)`` with ``inner`` in the
domain and ``outer`` outside it.  Boundary points are indexed
``0 .. N-1`` counterclockwise with respect to the domain, contour by contour
(outer contour first).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .graph_core import (EmbeddedGraph, GraphError, _shoelace, discrete_disc, graph_from_dict,
                         graph_to_dict)


class DomainError(ValueError):
    pass


class BoundaryEdge(NamedTuple):
    index: int
    inner: int
    outer: int
    weight: float


@dataclass(frozen=True)
class BoundaryArc:
    """Counterclockwise run of boundary points from ``start`` to ``end`` inclusive."""

    start: int
    end: int
    indices: tuple[int, ...]
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True)
class FaceStructure:
    """Faces of a domain, with each contour face split at the boundary points.

    ``left[(v, n)]`` is the face on the left of the dart ``v -> n`` for an
    interior vertex ``v``; ``gap[i]`` is the face between boundary points
    ``i`` and its counterclockwise successor; for boundary point ``i`` the
    dart into the domain has ``gap[prev(i)]`` on its left.
    """

    n_faces: int
    left: dict
    gap: np.ndarray
    inner_faces: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    graph: EmbeddedGraph
    interior: np.ndarray
    bd_inner: np.ndarray
    bd_outer: np.ndarray
    bd_weight: np.ndarray
    contours: tuple[tuple[int, int], ...]
    meta: dict = field(default_factory=dict, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.bd_inner)

    @cached_property
    def index(self) -> dict[int, int]:
        return {int(v): i for i, v in enumerate(self.interior)}

    @cached_property
    def bd_inner_local(self) -> np.ndarray:
        idx = self.index
        return np.array([idx[int(v)] for v in self.bd_inner], dtype=np.int64)

    @cached_property
    def bd_mu(self) -> np.ndarray:
        return self.graph.mu[self.bd_outer]

    @cached_property
    def bd_step(self) -> np.ndarray:
        """Probability of the forced first step from each boundary point inward."""
        return self.bd_weight / self.bd_mu

    @cached_property
    def interior_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Local endpoint indices and weights of edges with both ends inside."""
        idx = self.index
        iu, iv, iw = [], [], []
        for (a, b), w in zip(self.graph.edges.tolist(), self.graph.weights.tolist()):
            if a in idx and b in idx:
                iu.append(idx[a])
                iv.append(idx[b])
                iw.append(w)
        return np.array(iu, dtype=np.int64), np.array(iv, dtype=np.int64), np.array(iw)

    @cached_property
    def mu_interior(self) -> np.ndarray:
        return self.graph.mu[self.interior]

    @property
    def is_simply_connected(self) -> bool:
        return len(self.contours) == 1

    def bd(self, i: int) -> BoundaryEdge:
        i = int(i)
        return BoundaryEdge(i, int(self.bd_inner[i]), int(self.bd_outer[i]), float(self.bd_weight[i]))

    def contour_of(self, i: int) -> int:
        for c, (s, e) in enumerate(self.contours):
            if s <= i < e:
                return c
        raise DomainError(f"boundary index {i} out of range")

    def succ(self, i: int) -> int:
        s, e = self.contours[self.contour_of(i)]
        return s + (i - s + 1) % (e - s)

    def pred(self, i: int) -> int:
        s, e = self.contours[self.contour_of(i)]
        return s + (i - s - 1) % (e - s)

    def find_boundary(self, inner: int, outer: int) -> int:
        hits = np.nonzero((self.bd_inner == inner) & (self.bd_outer == outer))[0]
        if len(hits) != 1:
            raise DomainError(f"({inner}, {outer}) is not a boundary point")
        return int(hits[0])

    @cached_property
    def faces(self) -> FaceStructure:
        return _face_structure(self)


def _contour_walk(graph: EmbeddedGraph, inside: set[int]):
    """Trace the faces of the interior graph with one leaf per boundary point.

    Returns the traced faces as lists of darts ``(v, n)`` with ``v`` inside.
    A dart with ``n`` outside stands for the leaf excursion along that
    boundary point.
    """
    rot, slot = graph.rotation, graph.rotation_slot
    seen: dict[tuple[int, int], int] = {}
    faces: list[list[tuple[int, int]]] = []
    for v in sorted(inside):
        for n in rot[v]:
            if (v, n) in seen:
                continue
            fid = len(faces)
            cyc = []
            a, b = v, n
            while (a, b) not in seen:
                seen[(a, b)] = fid
                cyc.append((a, b))
                if b in inside:
                    rb = rot[b]
                    a, b = b, rb[(slot[b][a] - 1) % len(rb)]
                else:
                    ra = rot[a]
                    b = ra[(slot[a][b] - 1) % len(ra)]
            faces.append(cyc)
    return faces, seen


def make_domain(graph: EmbeddedGraph, interior: Iterable[int], meta: dict | None = None) -> DiscreteDomain:
    """Build a domain from a set of interior vertex ids.

    The set must be nonempty and induce a connected subgraph, and at least
    one vertex must have a neighbour outside it.
    """
    inside = {int(v) for v in interior}
    if not inside:
        raise DomainError("interior is empty")
    if min(inside) < 0 or max(inside) >= graph.n_vertices:
        raise DomainError("interior refers to an unknown vertex")
    start = min(inside)
    stack, reached = [start], {start}
    while stack:
        x = stack.pop()
        for y in graph.rotation[x]:
            if y in inside and y not in reached:
                reached.add(y)
                stack.append(y)
    if reached != inside:
        raise DomainError("interior does not induce a connected subgraph")

    faces, _ = _contour_walk(graph, inside)
    contours = []
    for cyc in faces:
        pts = [(a, b) for a, b in cyc if b not in inside]
        if pts:
            contours.append(pts[::-1])
    if not contours:
        raise DomainError("domain has no boundary")
    pos = graph.pos

    def area(pts):
        mid = np.array([(pos[a] + pos[b]) / 2 for a, b in pts])
        return _shoelace(mid) if len(mid) > 2 else 0.0

    areas = [area(c) for c in contours]
    order = sorted(range(len(contours)), key=lambda k: -areas[k])
    ordered = []
    for k in order:
        c = contours[k]
        first = min(range(len(c)), key=lambda i: c[i])
        ordered.append(c[first:] + c[:first])
    bounds, flat, s = [], [], 0
    for c in ordered:
        bounds.append((s, s + len(c)))
        flat.extend(c)
        s += len(c)
    bi = np.array([a for a, _ in flat], dtype=np.int64)
    bo = np.array([b for _, b in flat], dtype=np.int64)
    lookup = graph.edge_lookup
    bw = np.array([graph.weights[lookup[(a, b)]] for a, b in flat])
    return DiscreteDomain(graph=graph, interior=np.array(sorted(inside), dtype=np.int64), bd_inner=bi,
                          bd_outer=bo, bd_weight=bw, contours=tuple(bounds), meta=dict(meta or {}))


def cycle_rank(domain: DiscreteDomain) -> int:
    return len(domain.interior_edges[0]) - domain.n_interior + 1


def enclosed_face_count(domain: DiscreteDomain) -> int:
    """Number of bounded faces of the ambient graph whose vertices all lie inside."""
    g = domain.graph
    if g.faces is None:
        raise DomainError("ambient graph has no geometric faces")
    idx = domain.index
    return sum(1 for f in g.faces if not f.is_outer and all(v in idx for v in f.vertices))


def is_simply_connected(domain: DiscreteDomain) -> bool:
    """Cycle rank of the interior subgraph equals the number of enclosed faces."""
    if domain.graph.faces is None:
        return len(domain.contours) == 1
    return cycle_rank(domain) == enclosed_face_count(domain)


def holes(domain: DiscreteDomain) -> int:
    if domain.graph.faces is None:
        return len(domain.contours) - 1
    return cycle_rank(domain) - enclosed_face_count(domain)


def arc(domain: DiscreteDomain, a: int, b: int) -> BoundaryArc:
    """Boundary points from ``a`` to ``b`` counterclockwise, both included.

    ``arc(d, a, a)`` is the whole contour starting at ``a``, flagged degenerate.
    """
    N = domain.n_boundary
    if not (0 <= a < N and 0 <= b < N):
        raise DomainError("arc endpoint out of range")
    ca, cb = domain.contour_of(a), domain.contour_of(b)
    if ca != cb:
        raise DomainError("arc endpoints lie on different boundary contours")
    s, e = domain.contours[ca]
    L = e - s
    if a == b:
        return BoundaryArc(a, b, tuple(s + (a - s + k) % L for k in range(L)), True)
    n = (b - a) % L + 1
    return BoundaryArc(a, b, tuple(s + (a - s + k) % L for k in range(n)))


def open_arc(domain: DiscreteDomain, a: int, b: int) -> tuple[int, ...]:
    """Boundary points strictly between ``a`` and ``b`` counterclockwise."""
    if a == b:
        return tuple(i for i in arc(domain, a, a).indices[1:])
    return arc(domain, a, b).indices[1:-1]


@dataclass(frozen=True)
class Quadrilateral:
    """A simply connected domain with four marked boundary points in counterclockwise order."""

    domain: DiscreteDomain
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        dom = self.domain
        N = dom.n_boundary
        pts = (self.a, self.b, self.c, self.d)
        if len(set(pts)) != 4 or any(not 0 <= p < N for p in pts):
            raise DomainError("marked points must be four distinct boundary indices")
        if not dom.is_simply_connected:
            raise DomainError("quadrilaterals require a simply connected domain")
        rel = [(p - self.a) % N for p in pts]
        if not rel[1] < rel[2] < rel[3]:
            raise DomainError("marked points are not in counterclockwise order")

    @property
    def marks(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def rotated(self) -> "Quadrilateral":
        """The same domain with marks (b, c, d, a); its arcs play the conjugate roles."""
        return Quadrilateral(self.domain, self.b, self.c, self.d, self.a)

    @property
    def ab(self) -> BoundaryArc:
        return arc(self.domain, self.a, self.b)

    @property
    def bc(self) -> BoundaryArc:
        return arc(self.domain, self.b, self.c)

    @property
    def cd(self) -> BoundaryArc:
        return arc(self.domain, self.c, self.d)

    @property
    def da(self) -> BoundaryArc:
        return arc(self.domain, self.d, self.a)


class PolygonalRepresentation(NamedTuple):
    vertices: np.ndarray
    area: float


def polygonal_representation(domain: DiscreteDomain, contour: int = 0) -> PolygonalRepresentation:
    """Polygon through the midpoints of the boundary edges of one contour."""
    s, e = domain.contours[contour]
    pos = domain.graph.pos
    mid = (pos[domain.bd_inner[s:e]] + pos[domain.bd_outer[s:e]]) / 2
    return PolygonalRepresentation(mid, _shoelace(mid) if len(mid) > 2 else 0.0)


def distance_to_boundary(domain: DiscreteDomain, u: int) -> float:
    if u not in domain.index:
        raise DomainError(f"{u} is not an interior vertex")
    pos = domain.graph.pos
    return float(np.min(np.linalg.norm(pos[domain.bd_outer] - pos[u], axis=1)))


def inner_disc(domain: DiscreteDomain, u: int) -> frozenset:
    """Interior of the ambient disc of radius one third of the distance to the boundary."""
    return discrete_disc(domain.graph, u, distance_to_boundary(domain, u) / 3).interior


def neighborhood_in_domain(domain: DiscreteDomain, x: int, r: float, *, boundary: bool = False) -> frozenset:
    """Component of (domain interior) intersected with (ambient disc of radius ``r`` at ``x``).

    With ``boundary=True``, ``x`` is a boundary index and the disc is centred
    at its outer vertex; the component is the one containing its inner vertex.
    """
    if boundary:
        e = domain.bd(x)
        centre, seed = e.outer, e.inner
    else:
        centre = seed = int(x)
        if seed not in domain.index:
            raise DomainError(f"{x} is not an interior vertex")
    disc = discrete_disc(domain.graph, centre, r).interior
    allowed = {v for v in disc if v in domain.index}
    if seed not in allowed:
        return frozenset()
    out, stack = {seed}, [seed]
    while stack:
        v = stack.pop()
        for n in domain.graph.rotation[v]:
            if n in allowed and n not in out:
                out.add(n)
                stack.append(n)
    return frozenset(out)


def _face_structure(domain: DiscreteDomain) -> FaceStructure:
    graph = domain.graph
    inside = set(domain.index)
    faces, dart_face = _contour_walk(graph, inside)
    bd_pos = {(int(a), int(b)): i for i, (a, b) in enumerate(zip(domain.bd_inner, domain.bd_outer))}
    N = domain.n_boundary
    left: dict[tuple[int, int], int] = {}
    gap = np.full(N, -1, dtype=np.int64)
    inner = []
    nf = 0
    for cyc in faces:
        leaves = [k for k, (a, b) in enumerate(cyc) if b not in inside]
        if not leaves:
            for dart in cyc:
                left[dart] = nf
            inner.append(nf)
            nf += 1
            continue
        # rotate so the cycle starts right after a leaf; each run of darts
        # ending in a leaf dart is one gap face
        k0 = leaves[0] + 1
        cyc = cyc[k0:] + cyc[:k0]
        run_start = nf
        for a, b in cyc:
            left[(a, b)] = nf
            if b not in inside:
                # the dart to boundary point i lies in gap(i)
                gap[bd_pos[(a, b)]] = nf
                nf += 1
        assert nf > run_start
    return FaceStructure(nf, left, gap, tuple(inner))


def domain_to_dict(domain: DiscreteDomain) -> dict:
    out = {"graph": graph_to_dict(domain.graph), "interior": [int(v) for v in domain.interior]}
    if domain.meta:
        out["meta"] = _jsonable(domain.meta)
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def domain_from_dict(data: dict, base: Path | None = None) -> DiscreteDomain:
    g = data.get("graph")
    if isinstance(g, str):
        p = Path(g) if base is None else base / g
        g = json.loads(p.read_text())
    if g is None or "interior" not in data:
        raise DomainError("domain record needs 'graph' and 'interior'")
    graph = graph_from_dict(g)
    return make_domain(graph, data["interior"], data.get("meta"))


def load_domain(path: str | Path) -> DiscreteDomain:
    path = Path(path)
    return domain_from_dict(json.loads(path.read_text()), path.parent)


def save_domain(domain: DiscreteDomain, path: str | Path) -> None:
    Path(path).write_text(json.dumps(domain_to_dict(domain)))


__all__ = [
    "BoundaryArc", "BoundaryEdge", "DiscreteDomain", "DomainError", "FaceStructure", "GraphError",
    "PolygonalRepresentation", "Quadrilateral", "arc", "cycle_rank", "distance_to_boundary",
    "domain_from_dict", "domain_to_dict", "enclosed_face_count", "holes", "inner_disc",
    "is_simply_connected", "load_domain", "make_domain", "neighborhood_in_domain", "open_arc",
    "polygonal_representation", "save_domain",
]
