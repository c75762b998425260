"""Parametric families of lattice domains.

Every family is built as a set of unit lattice cells (interior vertices)
inside a square lattice patch with a margin of two rows, so that each
boundary vertex keeps its full neighbourhood and mass.  Landmark arcs are
stored in ``domain.meta["arcs"]`` as ``(start, end)`` boundary indices.
"""

from __future__ import annotations

from typing import Callable

from .domain import DiscreteDomain, DomainError, arc, make_domain
from .graph_core import lattice_graph
from .rng import make_rng

MARGIN = 2


def _build(cells: set[tuple[int, int]], family: str, params: dict, seed: int, *,
           amplitude: float = 0.0, weight_jitter: float = 0.0) -> DiscreteDomain:
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    rng = make_rng(seed, family, "geometry") if (amplitude or weight_jitter) else None
    graph, ids = lattice_graph(range(min(xs) - MARGIN, max(xs) + MARGIN + 1),
                               range(min(ys) - MARGIN, max(ys) + MARGIN + 1),
                               amplitude=amplitude, weight_jitter=weight_jitter, rng=rng)
    lattice = {v: c for c, v in ids.items()}
    dom = make_domain(graph, [ids[c] for c in cells],
                      {"family": family, "params": dict(params), "seed": seed})
    dom.meta["lattice"] = lattice
    dom.meta["cell_id"] = ids
    return dom


def _direction(dom: DiscreteDomain, i: int) -> tuple[int, int]:
    lat = dom.meta["lattice"]
    a, b = lat[int(dom.bd_inner[i])], lat[int(dom.bd_outer[i])]
    return (b[0] - a[0], b[1] - a[1])


def side_run(dom: DiscreteDomain, pred: Callable[[tuple[int, int], tuple[int, int]], bool]) -> tuple[int, int]:
    """Counterclockwise ``(start, end)`` of the unique run of boundary points satisfying ``pred``.

    ``pred`` receives the lattice coordinates of the inner vertex and the
    outward step direction.
    """
    s, e = dom.contours[0]
    lat = dom.meta["lattice"]
    flags = [pred(lat[int(dom.bd_inner[i])], _direction(dom, i)) for i in range(s, e)]
    n = len(flags)
    if not any(flags):
        raise DomainError("no boundary point matches the landmark")
    if all(flags):
        return s, e - 1
    starts = [k for k in range(n) if flags[k] and not flags[k - 1]]
    if len(starts) != 1:
        raise DomainError("landmark is not a single boundary run")
    k = starts[0]
    m = k
    while flags[(m + 1) % n]:
        m += 1
    return s + k, s + m % n


def _rect_arcs(dom, x0, x1, y0, y1):
    return {
        "left": side_run(dom, lambda c, d: d == (-1, 0) and c[0] == x0 and y0 <= c[1] <= y1),
        "right": side_run(dom, lambda c, d: d == (1, 0) and c[0] == x1 and y0 <= c[1] <= y1),
        "bottom": side_run(dom, lambda c, d: d == (0, -1) and c[1] == y0 and x0 <= c[0] <= x1),
        "top": side_run(dom, lambda c, d: d == (0, 1) and c[1] == y1 and x0 <= c[0] <= x1),
    }


def rect_cells(m: int, n: int, x0: int = 0, y0: int = 0) -> set[tuple[int, int]]:
    return {(x0 + i, y0 + j) for i in range(m) for j in range(n)}


def gen_plus(params, seed):
    dom = _build({(0, 0)}, "plus", params, seed)
    arms = {}
    for name, d in (("east", (1, 0)), ("north", (0, 1)), ("west", (-1, 0)), ("south", (0, -1))):
        i = side_run(dom, lambda c, dd, d=d: dd == d)
        arms[name] = i
    dom.meta["arcs"] = arms
    dom.meta["quad"] = tuple(arms[k][0] for k in ("east", "north", "west", "south"))
    dom.meta["anchor"] = dom.meta["cell_id"][(0, 0)]
    return dom


def gen_rect(params, seed):
    m, n = int(params["m"]), int(params["n"])
    if m < 1 or n < 1:
        raise DomainError("rect needs m, n >= 1")
    dom = _build(rect_cells(m, n), "rect", params, seed,
                 amplitude=float(params.get("amplitude", 0.0)),
                 weight_jitter=float(params.get("weight_jitter", 0.0)))
    arcs = _rect_arcs(dom, 0, m - 1, 0, n - 1)
    dom.meta["arcs"] = arcs
    # [ab] = left side (top to bottom), [cd] = right side (bottom to top)
    dom.meta["quad"] = (arcs["left"][0], arcs["left"][1], arcs["right"][0], arcs["right"][1])
    dom.meta["anchor"] = dom.meta["cell_id"][(m // 2, n // 2)]
    return dom


def gen_square_sym(params, seed):
    k = int(params["k"])
    dom = _build(rect_cells(k, k), "square_sym", params, seed)
    arcs = _rect_arcs(dom, 0, k - 1, 0, k - 1)
    dom.meta["arcs"] = arcs
    # same offset on every side, so the quarter turn permutes the marks
    mids = [arcs[s][0] + k // 2 for s in ("bottom", "right", "top", "left")]
    dom.meta["quad"] = tuple(int(x) % dom.n_boundary for x in mids)
    dom.meta["anchor"] = dom.meta["cell_id"][(k // 2, k // 2)]
    return dom


def gen_fjord(params, seed):
    """Base rectangle with a corridor of the given width and length on its top side."""
    width = int(params.get("width", 1))
    length = int(params["length"])
    bm, bn = int(params.get("base_m", 5)), int(params.get("base_n", 5))
    mouth = int(params.get("mouth", (bm - width) // 2))
    if not (0 <= mouth and mouth + width <= bm) or width < 1 or length < 1:
        raise DomainError("fjord corridor must fit on the base")
    cells = rect_cells(bm, bn) | {(mouth + i, bn + j) for i in range(width) for j in range(length)}
    dom = _build(cells, "fjord", params, seed)
    top = bn + length - 1
    tip = side_run(dom, lambda c, d: c[1] == top and (d == (0, 1) or (d in ((1, 0), (-1, 0)))))
    bottom = side_run(dom, lambda c, d: d == (0, -1) and c[1] == 0)
    dom.meta["arcs"] = {"tip": tip, "bottom": bottom}
    dom.meta["quad"] = (tip[0], tip[1], bottom[0], bottom[1])
    dom.meta["anchor"] = dom.meta["cell_id"][(bm // 2, 0)]
    dom.meta["tip_cell"] = dom.meta["cell_id"][(mouth, top)]
    return dom


def gen_bottleneck(params, seed):
    """Two square rooms joined by a neck of width ``w``."""
    w = int(params["w"])
    size = int(params.get("size", 7))
    neck = int(params.get("neck", 3))
    if not 1 <= w <= size:
        raise DomainError("neck width must be between 1 and the room size")
    off = (size - w) // 2
    cells = rect_cells(size, size) | rect_cells(size, size, size + neck, 0)
    cells |= {(size + i, off + j) for i in range(neck) for j in range(w)}
    dom = _build(cells, "bottleneck", params, seed)
    x1 = 2 * size + neck - 1
    arcs = {
        "left": side_run(dom, lambda c, d: d == (-1, 0) and c[0] == 0),
        "right": side_run(dom, lambda c, d: d == (1, 0) and c[0] == x1),
    }
    dom.meta["arcs"] = arcs
    dom.meta["quad"] = (arcs["left"][0], arcs["left"][1], arcs["right"][0], arcs["right"][1])
    dom.meta["anchor"] = dom.meta["cell_id"][(size // 2, size // 2)]
    return dom


def gen_perturbed_grid(params, seed):
    m, n = int(params["m"]), int(params["n"])
    dom = _build(rect_cells(m, n), "perturbed_grid", params, seed,
                 amplitude=float(params.get("amplitude", 0.1)),
                 weight_jitter=float(params.get("weight_jitter", 0.0)))
    arcs = _rect_arcs(dom, 0, m - 1, 0, n - 1)
    dom.meta["arcs"] = arcs
    dom.meta["quad"] = (arcs["left"][0], arcs["left"][1], arcs["right"][0], arcs["right"][1])
    dom.meta["anchor"] = dom.meta["cell_id"][(m // 2, n // 2)]
    return dom


def spiral_cells(turns: int, width: int) -> tuple[set[tuple[int, int]], tuple[int, int], tuple[int, int]]:
    """Square spiral corridor; successive windings are separated by one lattice row."""
    p = width + 1
    dirs = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    x = y = 0
    cells: set[tuple[int, int]] = set()
    for k in range(4 * turns):
        dx, dy = dirs[k % 4]
        for _ in range(p * (k // 2 + 1)):
            cells |= {(x + i, y + j) for i in range(width) for j in range(width)}
            x, y = x + dx, y + dy
    cells |= {(x + i, y + j) for i in range(width) for j in range(width)}
    return cells, (0, 0), (x, y)


def gen_spiral(params, seed):
    turns, width = int(params["turns"]), int(params.get("width", 1))
    if turns < 1 or width < 1:
        raise DomainError("spiral needs turns, width >= 1")
    cells, start, end = spiral_cells(turns, width)
    dom = _build(cells, "spiral", params, seed)

    inner = side_run(dom, lambda c, d: c == start and (c[0] + d[0], c[1] + d[1]) not in cells)
    outer = side_run(dom, lambda c, d: c == end and (c[0] + d[0], c[1] + d[1]) not in cells)
    dom.meta["arcs"] = {"inner_end": inner, "outer_end": outer}
    dom.meta["quad"] = (inner[0], inner[1], outer[0], outer[1])
    dom.meta["anchor"] = dom.meta["cell_id"][start]
    return dom


FAMILIES: dict[str, Callable] = {
    "plus": gen_plus,
    "rect": gen_rect,
    "square_sym": gen_square_sym,
    "fjord": gen_fjord,
    "bottleneck": gen_bottleneck,
    "perturbed_grid": gen_perturbed_grid,
    "spiral": gen_spiral,
}


def generate(family: str, params: dict | None = None, seed: int = 0) -> DiscreteDomain:
    """Build a domain from a named family; deterministic in ``(family, params, seed)``."""
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    return FAMILIES[family](dict(params or {}), int(seed))


def parse_params(text: str) -> dict:
    """Parse ``"m=3,n=2"`` into a dict of numbers."""
    out: dict = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"bad parameter {part!r}")
        k, v = part.split("=", 1)
        v = v.strip()
        try:
            out[k.strip()] = int(v)
        except ValueError:
            out[k.strip()] = float(v)
    return out


def landmark(dom: DiscreteDomain, name: str) -> tuple[int, ...]:
    """Boundary indices of a named landmark arc (a single point when start == end)."""
    s, e = dom.meta["arcs"][name]
    if s == e:
        return (s,)
    return arc(dom, s, e).indices
