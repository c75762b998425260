"""Independent reference computations used by the tests.

None of these call the package solvers: they rebuild the relevant
matrices directly from the raw graph arrays, or sum paths explicitly.
"""

from __future__ import annotations

import numpy as np


def raw_interior_system(dom):
    """Dense ``diag(mu) - W`` over the interior, assembled straight from the edge list."""
    g = dom.graph
    ids = [int(v) for v in dom.interior]
    pos = {v: i for i, v in enumerate(ids)}
    n = len(ids)
    M = np.zeros((n, n))
    for i, v in enumerate(ids):
        M[i, i] = g.mu[v]
    for (a, b), w in zip(g.edges.tolist(), g.weights.tolist()):
        if a in pos and b in pos:
            M[pos[a], pos[b]] -= w
            M[pos[b], pos[a]] -= w
    return M, pos


def dense_green(dom):
    """``G[v, u]`` for all interior pairs, as the inverse of the raw system."""
    M, pos = raw_interior_system(dom)
    return np.linalg.inv(M), pos


def _edge_weight(g, a, b):
    for (x, y), w in zip(g.edges.tolist(), g.weights.tolist()):
        if (x, y) == (a, b) or (x, y) == (b, a):
            return w
    raise KeyError((a, b))


def path_series_Z(dom, x, y, tail: float = 1e-15, max_steps: int = 200_000):
    """Partition function by summing path weights length by length.

    ``x`` and ``y`` are ``("v", vertex_id)`` or ``("b", boundary_index)``.
    A path's weight is the product of its edge weights over the product of
    the masses of all its vertices, endpoints included.  The sum over
    lengths is stopped when the propagated mass drops below ``tail``.
    """
    g = dom.graph
    ids = [int(v) for v in dom.interior]
    pos = {v: i for i, v in enumerate(ids)}
    n = len(ids)
    W = np.zeros((n, n))
    for (a, b), w in zip(g.edges.tolist(), g.weights.tolist()):
        if a in pos and b in pos:
            W[pos[a], pos[b]] += w
            W[pos[b], pos[a]] += w
    mu = np.array([g.mu[v] for v in ids])

    def start_vec(p):
        kind, i = p
        s = np.zeros(n)
        if kind == "v":
            s[pos[i]] = 1.0 / mu[pos[i]]
        else:
            inner, outer = int(dom.bd_inner[i]), int(dom.bd_outer[i])
            s[pos[inner]] = _edge_weight(g, inner, outer) / (g.mu[outer] * mu[pos[inner]])
        return s

    def end_vec(p):
        kind, i = p
        e = np.zeros(n)
        if kind == "v":
            e[pos[i]] = 1.0
        else:
            inner, outer = int(dom.bd_inner[i]), int(dom.bd_outer[i])
            e[pos[inner]] = _edge_weight(g, inner, outer) / g.mu[outer]
        return e

    total = 0.0
    if x == y and x[0] == "b":
        total += 1.0 / g.mu[int(dom.bd_outer[x[1]])]
    s, e = start_vec(x), end_vec(y)
    for _ in range(max_steps):
        total += float(s @ e)
        s = (W @ s) / mu
        if s.sum() < tail:
            return total
    raise RuntimeError("path series did not converge")


def enumerate_paths_Z(dom, x_b: int, y_b: int, max_len: int):
    """Explicit depth-first enumeration of boundary-to-boundary paths up to ``max_len`` interior steps."""
    g = dom.graph
    inside = {int(v) for v in dom.interior}
    a_in, a_out = int(dom.bd_inner[x_b]), int(dom.bd_outer[x_b])
    b_in, b_out = int(dom.bd_inner[y_b]), int(dom.bd_outer[y_b])
    total = 0.0
    stack = [(a_in, _edge_weight(g, a_in, a_out) / (g.mu[a_out] * g.mu[a_in]), 0)]
    while stack:
        v, w, k = stack.pop()
        if v == b_in:
            total += w * _edge_weight(g, b_in, b_out) / g.mu[b_out]
        if k == max_len:
            continue
        for n in g.rotation[v]:
            if n in inside:
                stack.append((n, w * _edge_weight(g, v, n) / g.mu[n], k + 1))
    return total


def merged_resistance_EL(dom, A, B):
    """Extremal length as the effective resistance between merged electrodes.

    Electrode nodes collect the boundary edges of ``A`` and ``B``; other
    boundary edges are dropped.  Uses a dense pseudo-inverse Laplacian.
    """
    ids = [int(v) for v in dom.interior]
    pos = {v: i for i, v in enumerate(ids)}
    n = len(ids)
    nA, nB = n, n + 1
    L = np.zeros((n + 2, n + 2))

    def add(i, j, w):
        L[i, i] += w
        L[j, j] += w
        L[i, j] -= w
        L[j, i] -= w

    for (a, b), w in zip(dom.graph.edges.tolist(), dom.graph.weights.tolist()):
        if a in pos and b in pos:
            add(pos[a], pos[b], w)
    for k in A:
        add(pos[int(dom.bd_inner[k])], nA, float(dom.bd_weight[k]))
    for k in B:
        add(pos[int(dom.bd_inner[k])], nB, float(dom.bd_weight[k]))
    e = np.zeros(n + 2)
    e[nA], e[nB] = 1.0, -1.0
    return float(e @ np.linalg.pinv(L) @ e)


def grid_disc_count(r: float) -> int:
    """Number of lattice points strictly inside radius ``r`` (the disc is connected for r > 1)."""
    k = int(np.ceil(r))
    return sum(1 for x in range(-k, k + 1) for y in range(-k, k + 1) if x * x + y * y < r * r)
