import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from discpot.domain import DomainError
from discpot.generators import generate, landmark
from discpot.potential import (
    boundary_green,
    exit_distribution,
    greens_function,
    harmonic_measure,
    partition_Z,
    partition_Z_arcs,
    ratio_R,
    solve_dirichlet,
    solve_system,
    system_matrix,
    z_row,
)

from conftest import polyomino, quad_of
from oracles import dense_green, enumerate_paths_Z, path_series_Z, raw_interior_system

SMALL = [("plus", {}), ("rect", {"m": 3, "n": 2}), ("rect", {"m": 2, "n": 2}),
         ("rect", {"m": 4, "n": 2}), ("rect", {"m": 2, "n": 3, "weight_jitter": 0.4})]


def small_domains():
    doms = [generate(f, p, seed=1) for f, p in SMALL]
    doms += [polyomino(s, 8, jitter=0.3) for s in range(3)]
    return doms


def test_constant_data_is_reproduced(rect84):
    f = solve_dirichlet(rect84, np.full(rect84.n_boundary, 2.5))
    np.testing.assert_allclose(f.values, 2.5, rtol=1e-13)
    assert f.residual < 1e-12


def test_plus_centre_sees_each_arm_equally(plus):
    u = plus.meta["anchor"]
    np.testing.assert_allclose(exit_distribution(plus, u), 0.25, rtol=1e-14)


def test_block_side_harmonic_measure_is_quarter_by_symmetry(block5):
    u = block5.meta["anchor"]
    sides = block5.meta["arcs"]
    vals = [harmonic_measure(block5, u, landmark(block5, s)) for s in sides]
    np.testing.assert_allclose(vals, 0.25, rtol=1e-12)


@given(st.integers(0, 300), st.integers(1, 25))
def test_exit_distribution_sums_to_one(seed, size):
    dom = polyomino(seed, size, jitter=0.3)
    u = int(dom.interior[seed % dom.n_interior])
    p = exit_distribution(dom, u)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


@given(st.integers(0, 300), st.integers(2, 25))
def test_green_is_symmetric(seed, size):
    dom = polyomino(seed, size, jitter=0.3)
    rng = np.random.default_rng(seed)
    u, v = (int(x) for x in rng.choice(dom.interior, 2, replace=False))
    assert greens_function(dom, u).at(v) == pytest.approx(greens_function(dom, v).at(u), rel=1e-12)


@pytest.mark.parametrize("dom", small_domains(), ids=lambda d: f"{d.meta.get('family', 'poly')}{d.n_interior}")
def test_green_matches_dense_inverse(dom):
    inv, pos = dense_green(dom)
    for u in dom.interior[:4]:
        g = greens_function(dom, int(u))
        for v, i in pos.items():
            assert g.at(v) == pytest.approx(inv[i, pos[int(u)]], rel=1e-12)
        dense = greens_function(dom, int(u), method="dense")
        np.testing.assert_allclose(dense.values, g.values, rtol=1e-12)


@pytest.mark.parametrize("dom", small_domains(), ids=lambda d: f"{d.meta.get('family', 'poly')}{d.n_interior}")
def test_partition_function_matches_path_series(dom):
    N = dom.n_boundary
    Zb = boundary_green(dom)
    for x in range(N):
        for y in range(N):
            assert Zb[x, y] == pytest.approx(path_series_Z(dom, ("b", x), ("b", y)), rel=1e-9)
    v = int(dom.interior[0])
    for y in range(0, N, 3):
        got = partition_Z(dom, v, dom.bd(y)).value
        assert got == pytest.approx(path_series_Z(dom, ("v", v), ("b", y)), rel=1e-9)


def test_enumeration_agrees_with_series_on_plus(plus):
    # on the plus every path has exactly one interior vertex
    for x in range(4):
        for y in range(4):
            if x != y:
                assert enumerate_paths_Z(plus, x, y, 3) == pytest.approx(1 / 64)


def test_enumeration_is_a_lower_bound_converging_to_z(rect32):
    exact = partition_Z(rect32, rect32.bd(0), rect32.bd(5)).value
    partial = [enumerate_paths_Z(rect32, 0, 5, k) for k in (4, 7, 10)]
    assert partial == sorted(partial)
    assert partial[-1] < exact
    assert partial[-1] > 0.95 * exact


def test_frozen_plus_values(plus):
    a, b = plus.meta["quad"][:2]
    u = plus.meta["anchor"]
    assert partition_Z(plus, plus.bd(a), plus.bd(b)).value == pytest.approx(1 / 64)
    assert partition_Z(plus, u, plus.bd(b)).value == pytest.approx(1 / 16)
    assert partition_Z(plus, u, u).value == pytest.approx(1 / 4)
    loop = partition_Z(plus, plus.bd(a), plus.bd(a))
    assert loop.loop_convention and loop.value == pytest.approx(1 / 4 + 1 / 64)


def test_frozen_rect_value(rect32):
    assert partition_Z(rect32, rect32.bd(0), rect32.bd(5)).value == pytest.approx(0.00121635610766, rel=1e-10)


def test_arc_partition_is_additive(rect84):
    q = quad_of(rect84)
    A, B = list(q.ab), list(q.cd)
    whole = partition_Z_arcs(rect84, A, B)
    split = partition_Z_arcs(rect84, A[:2], B) + partition_Z_arcs(rect84, A[2:], B)
    assert whole == pytest.approx(split, rel=1e-13)
    Zb = boundary_green(rect84)
    assert whole == pytest.approx(Zb[np.ix_(A, B)].sum(), rel=1e-12)


def test_arc_partition_rejects_overlap(rect32):
    with pytest.raises(DomainError):
        partition_Z_arcs(rect32, [0, 1], [1, 2])


def test_ratio_R_matches_rows(rect84):
    q = quad_of(rect84)
    x = rect84.succ(q.b)
    expect = z_row(rect84, list(q.ab))[x] / z_row(rect84, list(q.cd))[x]
    assert ratio_R(rect84, x, q.ab, q.cd) == pytest.approx(expect)


def test_system_matrix_matches_raw_assembly(rect32):
    M, pos = raw_interior_system(rect32)
    S = system_matrix(rect32).toarray()
    order = [pos[int(v)] for v in rect32.interior]
    np.testing.assert_allclose(S, M[np.ix_(order, order)])


def test_solver_reports_small_residual(block9):
    rhs = np.ones(block9.n_interior)
    x, res = solve_system(block9, rhs)
    assert res < 1e-12


def test_boundary_data_validation(rect32):
    with pytest.raises(DomainError):
        solve_dirichlet(rect32, np.zeros(3))
    with pytest.raises(DomainError):
        solve_dirichlet(rect32, np.full(rect32.n_boundary, np.nan))
    with pytest.raises(DomainError):
        greens_function(rect32, int(rect32.bd_outer[0]))
