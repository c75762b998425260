import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from discpot import conformal as cf
from discpot.domain import DomainError, Quadrilateral, arc, make_domain
from discpot.generators import generate
from discpot.graph_core import lattice_graph
from discpot.potential import solve_dirichlet

from conftest import polyomino, quad_of
from oracles import merged_resistance_EL


def random_quad(seed: int, size: int, jitter: float = 0.3):
    dom = polyomino(seed, size, jitter)
    rng = np.random.default_rng(seed)
    marks = sorted(int(x) for x in rng.choice(dom.n_boundary, 4, replace=False))
    return Quadrilateral(dom, *marks)


def test_plus_cross_ratios(plus):
    cr = cf.cross_ratios(quad_of(plus))
    assert cr.X == pytest.approx(1.0) and cr.Y == pytest.approx(1.0)
    assert cr.Z_ab == pytest.approx(1 / 64)
    # closed arcs: [ab] and [cd] hold two arms each, so four pairs of 1/64
    assert cf.arc_partition(quad_of(plus)) == pytest.approx(1 / 16)


def test_plus_three_point_ratio(plus):
    a, b, c, _ = plus.meta["quad"]
    # Z(a; {b, c}) = 2/64 against sqrt(Z(a;b) Z(a;c) / Z(b;c)) = 1/8
    assert cf.zfact_ratio(plus, a, b, c) == pytest.approx(0.25)


@given(st.integers(0, 400), st.integers(4, 18))
def test_rotation_inverts_y(seed, size):
    q = random_quad(seed, size)
    cr, cr2 = cf.cross_ratios(q), cf.cross_ratios(q.rotated())
    assert cr.Y * cr2.Y == pytest.approx(1.0, rel=1e-10)
    assert cr2.X == pytest.approx(cr.X / cr.Y, rel=1e-10)


@given(st.integers(0, 400), st.integers(4, 18))
def test_cross_ratio_order(seed, size):
    # X <= min(1, Y) holds for every quadrilateral
    cr = cf.cross_ratios(random_quad(seed, size))
    assert cr.X <= 1.0 + 1e-12
    assert cr.X <= cr.Y * (1 + 1e-12)


@given(st.integers(0, 400), st.integers(3, 20))
def test_ratio_R_is_monotone(seed, size):
    q = random_quad(seed, size)
    up, down = cf.r_monotonicity(q.domain, list(q.ab), list(q.cd))
    assert up <= 1e-12 and down <= 1e-12


@pytest.mark.parametrize("m,n", [(m, n) for m in (1, 2, 5, 11, 20) for n in (2, 3, 7, 20)])
def test_rectangle_extremal_length(m, n):
    dom = generate("rect", {"m": m, "n": n})
    q = quad_of(dom)
    res = cf.extremal_length(dom, q.ab, q.cd)
    assert res.EL == pytest.approx((m + 1) / n, rel=1e-10)
    assert cf.extremal_length(dom, q.ab, q.cd, method="dense").EL == pytest.approx(res.EL, rel=1e-12)


@given(st.integers(0, 400), st.integers(3, 20))
def test_extremal_length_matches_merged_resistance(seed, size):
    q = random_quad(seed, size)
    el = cf.extremal_length(q.domain, q.ab, q.cd).EL
    assert el == pytest.approx(merged_resistance_EL(q.domain, q.ab, q.cd), rel=1e-8)


@given(st.integers(0, 400), st.integers(3, 20))
def test_dual_network_inverts_extremal_length(seed, size):
    q = random_quad(seed, size)
    el = cf.extremal_length(q.domain, q.ab, q.cd).EL
    dual = cf.dual_extremal_length(q.domain, list(q.ab), list(q.cd))
    assert el * dual == pytest.approx(1.0, rel=1e-9)


def test_extremal_metric_attains_the_length(rect84):
    q = quad_of(rect84)
    res = cf.extremal_length(rect84, q.ab, q.cd)
    g = res.metric
    assert cf.metric_length(rect84, g, q.ab, q.cd) == pytest.approx(1.0)
    assert cf.metric_area(rect84, g) == pytest.approx(1.0 / res.EL)
    assert cf.metric_ratio(rect84, g, q.ab, q.cd) == pytest.approx(res.EL)


def test_random_metrics_never_beat_the_extremal_length(rect84):
    q = quad_of(rect84)
    el = cf.extremal_length(rect84, q.ab, q.cd).EL
    n_int = len(rect84.interior_edges[0])
    rng = np.random.default_rng(7)
    for _ in range(100):
        g = cf.EdgeMetric(rng.exponential(size=n_int), rng.exponential(size=rect84.n_boundary))
        assert cf.metric_ratio(rect84, g, q.ab, q.cd) <= el * (1 + 1e-12)
    assert cf.metric_ratio(rect84, cf.EdgeMetric(np.zeros(n_int), np.zeros(rect84.n_boundary)), q.ab, q.cd) == 0


def test_negative_metric_rejected():
    with pytest.raises(ValueError):
        cf.EdgeMetric(np.array([-1.0]), np.array([0.0]))


def test_flux_is_conserved_and_conjugate_single_valued(rect84):
    q = quad_of(rect84)
    f = cf.dn_field(rect84, q.ab, q.cd)
    assert f.current == pytest.approx(f.current_far, rel=1e-12)
    conj = cf.dn_conjugate(f)
    assert conj.monodromy == 0.0
    # the conjugate rises by the total current from one free arc to the other
    fs = rect84.faces
    spread = abs(conj.values[fs.gap[q.b]] - conj.values[fs.gap[q.d]])
    assert spread == pytest.approx(f.current, rel=1e-10)


def test_ring_conjugate_has_monodromy_equal_to_flux():
    g, ids = lattice_graph(range(-2, 7), range(-2, 7))
    cells = [ids[(x, y)] for x in range(5) for y in range(5) if (x, y) != (2, 2)]
    dom = make_domain(g, cells)
    s, e = dom.contours[1]
    data = np.zeros(dom.n_boundary)
    data[s:e] = 1.0
    field = solve_dirichlet(dom, data)
    loc = dom.bd_inner_local
    flux = float(np.sum(dom.bd_weight[s:e] * (1.0 - field.values[loc[s:e]])))
    conj = cf.harmonic_conjugate(dom, field.values, data)
    assert conj.monodromy == pytest.approx(flux, rel=1e-9)


def test_overlapping_electrodes_rejected(rect32):
    with pytest.raises(DomainError):
        cf.dn_field(rect32, [0, 1], [1, 2])
    with pytest.raises(DomainError):
        cf.dn_field(rect32, [], [1, 2])


def test_invariant_report_rectangle(rect84):
    rep = cf.invariant_report(quad_of(rect84))
    assert rep.EL == pytest.approx(2.25)
    assert rep.EL * rep.EL_dual_network == pytest.approx(1.0)
    assert rep.ratios["y_product"] == pytest.approx(1.0)
    assert rep.ratios["neg_log_z"] == pytest.approx(-math.log(rep.Z))
    assert rep.flags["EL_large"] and rep.flags["Z_small"]
    assert set(rep.to_dict()) >= {"Z", "X", "Y", "EL", "ratios", "flags"}


def test_three_point_ratio_rejects_bad_order(rect32):
    b, c = 2, 5
    inside = arc(rect32, b, c).indices[1]
    with pytest.raises(DomainError):
        cf.zfact_ratio(rect32, inside, b, c)
