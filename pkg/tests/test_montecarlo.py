import math

import numpy as np
import pytest

from discpot import montecarlo as mc
from discpot.conformal import cross_ratios
from discpot.domain import DomainError, inner_disc, make_domain
from discpot.generators import generate
from discpot.potential import exit_distribution, greens_function, partition_Z

from conftest import quad_of

EXIT_FIXTURES = [("plus", {}), ("rect", {"m": 3, "n": 2}), ("bottleneck", {"w": 1, "size": 3, "neck": 2})]


@pytest.mark.parametrize("family,params", EXIT_FIXTURES)
def test_exit_frequencies_match_harmonic_measure(family, params):
    dom = generate(family, params)
    u = dom.meta["anchor"]
    n = 100_000
    counts, _ = mc.exit_frequencies(dom, u, n, seed=2)
    exact = exit_distribution(dom, u)
    sigma = np.sqrt(exact * (1 - exact) / n)
    assert np.all(np.abs(counts / n - exact) <= mc.GATE_SIGMA * sigma)


def test_estimate_hm_is_reproducible(rect32):
    u = rect32.meta["anchor"]
    e1 = mc.estimate_hm(rect32, u, [0, 1, 2], 5000, seed=4)
    e2 = mc.estimate_hm(rect32, u, [0, 1, 2], 5000, seed=4)
    assert e1 == e2
    assert e1.within(float(exit_distribution(rect32, u)[[0, 1, 2]].sum()))
    with pytest.raises(ValueError):
        mc.estimate_hm(rect32, u, [0], 0)


def test_conditioned_table_rows_are_normalised(rect84):
    for b in (0, 5, 13):
        table, h, sums = mc.conditioned_table(rect84, b)
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)
        np.testing.assert_allclose(table.probs.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(h > 0)


def test_conditioned_walk_exits_at_target(rect84):
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = mc.sample_conditioned(rect84, 2, 15, rng)
        assert s.exit == 15
        assert s.path[0] == int(rect84.bd_inner[2])
    with pytest.raises(DomainError):
        mc.sample_conditioned(rect84, 3, 3, rng)


def test_free_walk_is_a_lattice_path(rect84):
    rng = np.random.default_rng(1)
    s = mc.sample_walk(rect84, rect84.meta["anchor"], rng)
    g = rect84.graph
    for a, b in zip(s.path, s.path[1:]):
        assert b in g.rotation[a]
    assert int(rect84.bd_inner[s.exit]) == s.path[-1]
    assert s.steps == len(s.path)


def test_occupation_matches_green(rect84):
    u = rect84.meta["anchor"]
    est = mc.occupation_estimate(rect84, u, 20_000, seed=3)
    r = rect84.graph.local_scales[rect84.interior]
    exact = float(np.sum(r * r * greens_function(rect84, u).values))
    assert est.within(exact)


def test_loop_erasure():
    assert mc.loop_erase([1, 2, 3, 2, 4, 1, 5]) == [1, 5]
    assert mc.loop_erase([1, 2, 3]) == [1, 2, 3]
    assert mc.loop_erase([]) == []


def test_loop_erased_intersection_matches_x_squared():
    dom = generate("rect", {"m": 6, "n": 3})
    q = quad_of(dom)
    X = cross_ratios(q).X
    est = mc.intersection_probability(q, 20_000, seed=1)
    assert est.within(X * X)


def test_plain_intersection_is_a_different_law():
    dom = generate("rect", {"m": 6, "n": 3})
    q = quad_of(dom)
    X = cross_ratios(q).X
    est = mc.intersection_probability(q, 5_000, seed=1, variant="plain")
    assert est.estimate > 10 * X * X
    with pytest.raises(ValueError):
        mc.intersection_probability(q, 10, variant="other")


def test_ball_probability_matches_exact_avoidance():
    dom = generate("rect", {"m": 7, "n": 5})
    q = quad_of(dom)
    a, b = q.a, q.c
    u = dom.meta["anchor"]
    ball = inner_disc(dom, u)
    rest = make_domain(dom.graph, set(dom.index) - set(ball))
    key = lambda i: (int(dom.bd_inner[i]), int(dom.bd_outer[i]))
    ra, rb = rest.find_boundary(*key(a)), rest.find_boundary(*key(b))
    avoid = partition_Z(rest, rest.bd(ra), rest.bd(rb)).value / partition_Z(dom, dom.bd(a), dom.bd(b)).value
    est = mc.intersection_ball_probability(dom, a, b, u, 20_000, seed=5)
    assert est.within(1.0 - avoid)


@pytest.mark.parametrize("r", [3.0, 6.0, 12.0])
def test_disc_properties_on_lattice(r):
    dom = generate("rect", {"m": 31, "n": 31})
    g, c = dom.graph, dom.meta["anchor"]
    # quarter-turn symmetry puts exactly a quarter of the mass in each quadrant
    assert mc.property_S_min(g, c, r, math.pi / 2) == pytest.approx(0.25, abs=1e-12)
    assert mc.test_property_S(g, c, r, (0.1, math.pi)) > 0.4
    assert 0.2 < mc.test_property_T(g, c, r) < 0.35
    assert 0.1 < mc.test_harnack(g, c, r / 2, 2.0) <= 1.0


def test_harnack_rejects_small_ratio(rect84):
    with pytest.raises(ValueError):
        mc.test_harnack(rect84.graph, rect84.meta["anchor"], 1.0, 1.0)


def test_beurling_decay_in_fjord():
    pairs = []
    for length in (5, 10, 20, 40):
        dom = generate("fjord", {"width": 1, "length": length})
        tip = dom.meta["tip_cell"]
        omega, ratio = mc.test_beurling(dom, tip, quad_of(dom).cd)
        pairs.append((omega, ratio))
    omegas = [p[0] for p in pairs]
    assert omegas == sorted(omegas, reverse=True)
    assert mc.fit_beurling_exponent(pairs) > 0
    with pytest.raises(ValueError):
        mc.fit_beurling_exponent(pairs[:1])
