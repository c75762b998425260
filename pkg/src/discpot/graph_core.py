"""Weighted planar graphs with a straight-line embedding.

The graph stores, for every vertex, its neighbours sorted counterclockwise
(the rotation system).  Faces are traced from the rotation system with the
face kept on the left of each dart, so bounded faces come out
counterclockwise and the outer face is the only one with negative signed
area.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

COINCIDENCE_TOL = 1e-12


class GraphError(ValueError):
    """Raised when input data does not describe a valid embedded graph."""


@dataclass(frozen=True)
class Face:
    """A face given by its boundary darts, traversed with the face on the left."""

    darts: tuple[tuple[int, int], ...]
    signed_area: float
    centroid: tuple[float, float]
    is_outer: bool = False

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(d[0] for d in self.darts)


@dataclass(frozen=True, eq=False)
class EmbeddedGraph:
    """Planar graph with positions, edge weights and a rotation system.

    Attributes
    ----------
    pos : ndarray of shape (V, 2)
    edges : ndarray of shape (E, 2)
    weights : ndarray of shape (E,)
    rotation : tuple of tuples
        ``rotation[v]`` lists the neighbours of ``v`` in counterclockwise order.
    rotation_edges : tuple of tuples
        Edge ids aligned with ``rotation``.
    mu : ndarray of shape (V,)
        Vertex masses, the sum of incident weights unless overridden.
    faces : tuple of Face or None
        ``None`` for graphs assembled combinatorially (no geometric faces).
    """

    pos: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    rotation: tuple[tuple[int, ...], ...]
    rotation_edges: tuple[tuple[int, ...], ...]
    mu: np.ndarray
    faces: tuple[Face, ...] | None = None
    outer_face: int | None = None
    dart_face: dict = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.pos)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_lookup(self) -> dict[tuple[int, int], int]:
        out = {}
        for eid, (u, v) in enumerate(self.edges.tolist()):
            out[(u, v)] = eid
            out[(v, u)] = eid
        return out

    @cached_property
    def rotation_slot(self) -> tuple[dict[int, int], ...]:
        return tuple({n: i for i, n in enumerate(rot)} for rot in self.rotation)

    @cached_property
    def local_scales(self) -> np.ndarray:
        """Shortest incident edge length per vertex."""
        lengths = np.linalg.norm(self.pos[self.edges[:, 0]] - self.pos[self.edges[:, 1]], axis=1)
        r = np.full(self.n_vertices, np.inf)
        np.minimum.at(r, self.edges[:, 0], lengths)
        np.minimum.at(r, self.edges[:, 1], lengths)
        return r

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.pos[self.edges[:, 0]] - self.pos[self.edges[:, 1]], axis=1)

    def weight(self, u: int, v: int) -> float:
        return float(self.weights[self.edge_lookup[(u, v)]])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.rotation[v]


class StructureReport(NamedTuple):
    varpi0: float
    eta0: float
    kappa0: float
    nu0: float
    min_weight: float
    max_mass: float


class Disc(NamedTuple):
    interior: frozenset
    boundary: frozenset


class ConnectorPath(NamedTuple):
    path: tuple[int, ...]
    length: float
    ratio: float


def _masses(n: int, edges: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mu = np.zeros(n)
    np.add.at(mu, edges[:, 0], weights)
    np.add.at(mu, edges[:, 1], weights)
    return mu


def _sorted_rotation(pos, edges, n):
    nbrs: list[list[tuple[float, int, int]]] = [[] for _ in range(n)]
    for eid, (u, v) in enumerate(edges.tolist()):
        du = pos[v] - pos[u]
        nbrs[u].append((math.atan2(du[1], du[0]), v, eid))
        nbrs[v].append((math.atan2(-du[1], -du[0]), u, eid))
    rotation, rot_edges = [], []
    for v, lst in enumerate(nbrs):
        lst.sort()
        for (t1, _, _), (t2, _, _) in zip(lst, lst[1:]):
            if abs(t2 - t1) <= COINCIDENCE_TOL:
                raise GraphError(f"two edges leave vertex {v} in the same direction")
        if len(lst) > 1 and abs(lst[0][0] + 2 * math.pi - lst[-1][0]) <= COINCIDENCE_TOL:
            raise GraphError(f"two edges leave vertex {v} in the same direction")
        rotation.append(tuple(t[1] for t in lst))
        rot_edges.append(tuple(t[2] for t in lst))
    return tuple(rotation), tuple(rot_edges)


def trace_faces(rotation: Sequence[Sequence[int]]) -> tuple[list[list[tuple[int, int]]], dict]:
    """Trace all faces of a rotation system, face on the left of each dart."""
    slot = [{n: i for i, n in enumerate(rot)} for rot in rotation]
    dart_face: dict[tuple[int, int], int] = {}
    faces = []
    for u, rot in enumerate(rotation):
        for v in rot:
            if (u, v) in dart_face:
                continue
            fid = len(faces)
            cycle = []
            a, b = u, v
            while (a, b) not in dart_face:
                dart_face[(a, b)] = fid
                cycle.append((a, b))
                rb = rotation[b]
                w = rb[(slot[b][a] - 1) % len(rb)]
                a, b = b, w
            faces.append(cycle)
    return faces, dart_face


def _shoelace(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segments_cross(p1, p2, q1, q2) -> bool:
    """Proper or touching intersection of two closed segments."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) <= COINCIDENCE_TOL else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - COINCIDENCE_TOL <= c[0] <= max(a[0], b[0]) + COINCIDENCE_TOL
                and min(a[1], b[1]) - COINCIDENCE_TOL <= c[1] <= max(a[1], b[1]) + COINCIDENCE_TOL)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def check_crossings(pos: np.ndarray, edges: np.ndarray) -> None:
    """Quadratic check that no two edges meet away from a shared endpoint."""
    pos = np.asarray(pos, float)
    lo = np.minimum(pos[edges[:, 0]], pos[edges[:, 1]])
    hi = np.maximum(pos[edges[:, 0]], pos[edges[:, 1]])
    for i in range(len(edges)):
        cand = np.nonzero(np.all(lo[i + 1:] <= hi[i] + COINCIDENCE_TOL, axis=1)
                          & np.all(hi[i + 1:] >= lo[i] - COINCIDENCE_TOL, axis=1))[0] + i + 1
        a, b = edges[i]
        for j in cand:
            c, d = edges[j]
            shared = {a, b} & {c, d}
            if shared:
                # edges sharing an endpoint may only touch there; collinear
                # overlap is already rejected by the rotation sort
                continue
            if _segments_cross(pos[a], pos[b], pos[c], pos[d]):
                raise GraphError(f"edges {i} and {j} cross")


def build_graph(positions, edges, weights=None, *, check_planarity: bool = False) -> EmbeddedGraph:
    """Build and validate an embedded graph.

    Parameters
    ----------
    positions : array_like of shape (V, 2)
        Vertex ``i`` sits at ``positions[i]``.
    edges : array_like
        Pairs ``(u, v)`` or triples ``(u, v, w)``.
    weights : array_like, optional
        Edge weights when ``edges`` holds pairs; defaults to 1.
    check_planarity : bool
        Run the quadratic edge crossing check.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2 or len(pos) == 0:
        raise GraphError("positions must have shape (V, 2) with V > 0")
    if not np.all(np.isfinite(pos)):
        raise GraphError("non-finite vertex position")
    edge_list = [tuple(e) for e in edges]
    if edge_list and len(edge_list[0]) == 3:
        w = np.array([e[2] for e in edge_list], dtype=float)
        e = np.array([[e[0], e[1]] for e in edge_list], dtype=np.int64)
    else:
        e = np.array(edge_list, dtype=np.int64).reshape(-1, 2)
        w = np.ones(len(e)) if weights is None else np.asarray(weights, dtype=float)
    n = len(pos)
    if len(e) == 0:
        raise GraphError("graph has no edges")
    if len(w) != len(e):
        raise GraphError("weights and edges differ in length")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise GraphError("edge weights must be finite and positive")
    if e.min() < 0 or e.max() >= n:
        raise GraphError("edge refers to an unknown vertex")
    if np.any(e[:, 0] == e[:, 1]):
        raise GraphError("self-loop")
    key = np.sort(e, axis=1)
    if len(np.unique(key, axis=0)) != len(e):
        raise GraphError("multi-edge")
    pairs = cKDTree(pos).query_pairs(COINCIDENCE_TOL)
    if pairs:
        i, j = sorted(pairs)[0]
        raise GraphError(f"vertices {i} and {j} coincide")
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise GraphError("graph is not connected")
    if check_planarity:
        check_crossings(pos, e)

    rotation, rot_edges = _sorted_rotation(pos, e, n)
    cycles, dart_face = trace_faces(rotation)
    faces = []
    negative = []
    for fid, cyc in enumerate(cycles):
        pts = pos[[d[0] for d in cyc]]
        area = _shoelace(pts)
        if area < 0:
            negative.append(fid)
        faces.append((cyc, area, tuple(pts.mean(axis=0))))
    if len(faces) == 1:
        outer = 0
    elif len(negative) == 1:
        outer = negative[0]
    else:
        raise GraphError(f"expected exactly one face of negative area, found {len(negative)}")
    if n - len(e) + len(faces) != 2:
        raise GraphError("Euler characteristic check failed; embedding is not planar")
    face_objs = tuple(Face(tuple(c), a, cen, fid == outer) for fid, (c, a, cen) in enumerate(faces))
    return EmbeddedGraph(pos=pos, edges=e, weights=w, rotation=rotation, rotation_edges=rot_edges,
                         mu=_masses(n, e, w), faces=face_objs, outer_face=outer, dart_face=dart_face)


def combinatorial_graph(pos, edges, weights, rotation, mu) -> EmbeddedGraph:
    """Assemble a graph from an explicit rotation system, skipping geometry checks.

    Used for slit domains, where duplicated vertices share a position.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    lookup = {}
    for eid, (u, v) in enumerate(e.tolist()):
        lookup[(u, v)] = eid
        lookup[(v, u)] = eid
    rot_edges = tuple(tuple(lookup[(v, n)] for n in rot) for v, rot in enumerate(rotation))
    return EmbeddedGraph(pos=np.asarray(pos, float), edges=e, weights=np.asarray(weights, float),
                         rotation=tuple(tuple(r) for r in rotation), rotation_edges=rot_edges,
                         mu=np.asarray(mu, float))


def transition_probability(graph: EmbeddedGraph, v: int, v2: int) -> float:
    return graph.weight(v, v2) / float(graph.mu[v])


def local_scale(graph: EmbeddedGraph, v: int) -> float:
    return float(graph.local_scales[v])


def _max_open_angle(graph: EmbeddedGraph) -> float:
    """Largest angle between consecutive edges, ignoring wedges in the outer face."""
    worst = 0.0
    for v, rot in enumerate(graph.rotation):
        d = len(rot)
        angles = [math.atan2(*(graph.pos[n] - graph.pos[v])[::-1]) for n in rot]
        for i in range(d):
            if graph.dart_face[(v, rot[i])] == graph.outer_face:
                continue
            gap = (angles[(i + 1) % d] - angles[i]) % (2 * math.pi) if d > 1 else 2 * math.pi
            worst = max(worst, gap)
    return worst


def validate_assumptions(graph: EmbeddedGraph, n_pairs: int = 200, seed: int = 0) -> StructureReport:
    """Compute the structural constants of the graph.

    ``varpi0`` is the largest constant with every weight at least ``varpi0``
    and every mass at most ``1/varpi0``; ``eta0`` is pi minus the widest
    angle between consecutive edges; ``kappa0`` bounds incident edge length
    ratios; ``nu0`` is a sampled estimate of the connector-path detour.
    """
    if graph.faces is None:
        raise GraphError("structure report needs a geometric graph")
    min_w = float(graph.weights.min())
    max_mu = float(graph.mu.max())
    varpi0 = min(min_w, 1.0 / max_mu)
    eta0 = math.pi - _max_open_angle(graph)
    longest = np.zeros(graph.n_vertices)
    np.maximum.at(longest, graph.edges[:, 0], graph.edge_lengths)
    np.maximum.at(longest, graph.edges[:, 1], graph.edge_lengths)
    kappa0 = float(np.max(longest / graph.local_scales))
    nu0 = estimate_nu0(graph, n_pairs, seed)
    return StructureReport(varpi0, eta0, kappa0, nu0, min_w, max_mu)


def estimate_nu0(graph: EmbeddedGraph, n_pairs: int = 200, seed: int = 0) -> float:
    if n_pairs <= 0 or graph.n_vertices < 2:
        return 1.0
    rng = np.random.default_rng([seed, zlib.crc32(b"nu0")])
    worst = 1.0
    for _ in range(n_pairs):
        u, v = rng.choice(graph.n_vertices, size=2, replace=False)
        worst = max(worst, connector_path(graph, int(u), int(v)).ratio)
    return worst


def _face_geometry(graph: EmbeddedGraph):
    polys = [graph.pos[list(f.vertices)] for f in graph.faces]
    lo = np.array([p.min(axis=0) for p in polys])
    hi = np.array([p.max(axis=0) for p in polys])
    return polys, lo, hi


def _point_in_polygon(pt, poly) -> bool:
    x, y = pt
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def _segment_meets_polygon(p, q, poly) -> bool:
    n = len(poly)
    for i in range(n):
        if _segments_cross(p, q, poly[i], poly[(i + 1) % n]):
            return True
    return _point_in_polygon(p, poly) or _point_in_polygon(q, poly)


def connector_path(graph: EmbeddedGraph, u: int, v: int) -> ConnectorPath:
    """Shortest path from ``u`` to ``v`` through the boundaries of the faces met by ``[u, v]``."""
    if graph.faces is None:
        raise GraphError("connector paths need a geometric graph")
    if u == v:
        return ConnectorPath((u,), 0.0, 1.0)
    if "_face_geom" not in graph.__dict__:
        graph.__dict__["_face_geom"] = _face_geometry(graph)
    polys, lo, hi = graph.__dict__["_face_geom"]
    p, q = graph.pos[u], graph.pos[v]
    smin, smax = np.minimum(p, q), np.maximum(p, q)
    cand = np.nonzero(np.all(lo <= smax + COINCIDENCE_TOL, axis=1) & np.all(hi >= smin - COINCIDENCE_TOL, axis=1))[0]
    allowed = set()
    for fid in cand:
        if fid == graph.outer_face:
            continue
        if _segment_meets_polygon(p, q, polys[fid]):
            allowed.update(graph.faces[fid].vertices)
    allowed.update((u, v))
    path = _restricted_shortest_path(graph, u, v, allowed)
    if path is None:
        path = _restricted_shortest_path(graph, u, v, None)
    pts = graph.pos[list(path)]
    length = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
    return ConnectorPath(tuple(path), length, length / float(np.linalg.norm(q - p)))


def _restricted_shortest_path(graph, u, v, allowed):
    if allowed is None:
        verts = np.arange(graph.n_vertices)
    else:
        verts = np.array(sorted(allowed))
    index = {int(x): i for i, x in enumerate(verts)}
    mask = np.array([a in index and b in index for a, b in graph.edges.tolist()], dtype=bool)
    ed = graph.edges[mask]
    if len(ed) == 0:
        return None
    rows = [index[a] for a in ed[:, 0].tolist()]
    cols = [index[b] for b in ed[:, 1].tolist()]
    mat = coo_matrix((graph.edge_lengths[mask], (rows, cols)), shape=(len(verts), len(verts))).tocsr()
    dist, pred = dijkstra(mat, directed=False, indices=index[u], return_predecessors=True)
    if not np.isfinite(dist[index[v]]):
        return None
    out = [index[v]]
    while out[-1] != index[u]:
        out.append(int(pred[out[-1]]))
    return [int(verts[i]) for i in reversed(out)]


def discrete_disc(graph: EmbeddedGraph, u: int, r: float) -> Disc:
    """Component of ``{v : |v - u| < r}`` containing ``u``, and its outer vertex boundary."""
    centre = graph.pos[u]
    inside = {u}
    stack = [u]
    boundary = set()
    while stack:
        x = stack.pop()
        for y in graph.rotation[x]:
            if y in inside:
                continue
            if float(np.linalg.norm(graph.pos[y] - centre)) < r:
                inside.add(y)
                stack.append(y)
            else:
                boundary.add(y)
    boundary -= inside
    return Disc(frozenset(inside), frozenset(boundary))


def graph_to_dict(graph: EmbeddedGraph) -> dict:
    return {
        "vertices": [{"id": i, "x": float(x), "y": float(y)} for i, (x, y) in enumerate(graph.pos.tolist())],
        "edges": [{"u": int(u), "v": int(v), "w": float(w)}
                  for (u, v), w in zip(graph.edges.tolist(), graph.weights.tolist())],
    }


def graph_from_dict(data: dict, *, check_planarity: bool = False) -> EmbeddedGraph:
    try:
        verts = sorted(data["vertices"], key=lambda d: d["id"])
        ids = [int(d["id"]) for d in verts]
        if ids != list(range(len(ids))):
            raise GraphError("vertex ids must be dense from 0")
        pos = [[float(d["x"]), float(d["y"])] for d in verts]
        edges = [(int(d["u"]), int(d["v"]), float(d.get("w", 1.0))) for d in data["edges"]]
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph record: {exc}") from exc
    return build_graph(pos, edges, check_planarity=check_planarity)


def load_graph(path: str | Path, *, check_planarity: bool = False) -> EmbeddedGraph:
    return graph_from_dict(json.loads(Path(path).read_text()), check_planarity=check_planarity)


def save_graph(graph: EmbeddedGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph)))


def lattice_graph(xs: Iterable[int], ys: Iterable[int], *, amplitude: float = 0.0,
                  weight_jitter: float = 0.0, rng: np.random.Generator | None = None,
                  weight=1.0) -> tuple[EmbeddedGraph, dict[tuple[int, int], int]]:
    """Square lattice patch, optionally with jittered positions and weights.

    Position jitter is clamped to a quarter of the unit spacing so the
    embedding stays proper.  Returns the graph and the map from lattice
    coordinates to vertex ids.
    """
    xs, ys = list(xs), list(ys)
    coords = [(x, y) for y in ys for x in xs]
    ids = {c: i for i, c in enumerate(coords)}
    pos = np.array(coords, dtype=float)
    if amplitude > 0 or weight_jitter > 0:
        if rng is None:
            raise GraphError("jitter requires a random generator")
    if amplitude > 0:
        amp = min(amplitude, 0.25)
        pos = pos + rng.uniform(-amp, amp, size=pos.shape)
    edges = []
    for (x, y), i in ids.items():
        if (x + 1, y) in ids:
            edges.append((i, ids[(x + 1, y)]))
        if (x, y + 1) in ids:
            edges.append((i, ids[(x, y + 1)]))
    if callable(weight):
        w = np.array([weight(coords[a], coords[b]) for a, b in edges], dtype=float)
    else:
        w = np.full(len(edges), float(weight))
    if weight_jitter > 0:
        j = min(weight_jitter, 0.9)
        w = w * (1.0 + rng.uniform(-j, j, size=len(w)))
    return build_graph(pos, edges, w), ids
