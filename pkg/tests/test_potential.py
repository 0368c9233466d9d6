import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reltv.errors import InputError
from reltv.hypgeom import V_real, alpha_from_dihedral, covolume, lengths_from_angles, solve_polyhedral_metric, xi_real
from reltv.potential import (ANALYTIC_HESSIAN, REGULAR_POINT, TABULATED_HESSIAN, U, U_r, W_eps, W_tet,
                             beta_from_theta, branch_flags, cauchy_riemann_residual, d2U_dxi2, dU_dxi,
                             geometric_critical_point, hessian_checks, mu_signs, regular_point_checks,
                             verify_critical, volume_hessian, xi_star)
from reltv.samples import load_sample

import oracles

PI = math.pi
angles6 = st.lists(st.floats(0.02, PI / 3 - 0.02), min_size=6, max_size=6)


@settings(max_examples=40, deadline=None)
@given(angles6, st.floats(-0.3, 0.3))
def test_im_U_is_twice_V_on_real_points(theta, dx):
    a = alpha_from_dihedral(theta)
    xi = xi_real(a) + dx * 0.1
    assert U(a, xi).imag == pytest.approx(2 * V_real(a, xi), abs=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_U_is_holomorphic(seed):
    rng = random.Random(seed)
    a = [complex(PI, rng.uniform(0.1, 1.0)) for _ in range(6)]
    z = xi_star(a)
    for j in range(6):
        def f(w, j=j):
            aa = list(a)
            aa[j] = w
            return U(aa, z)
        assert cauchy_riemann_residual(f, a[j]) < 1e-6
    assert cauchy_riemann_residual(lambda w: U(a, w), z + 0.05) < 1e-6


def test_xi_derivatives_match_differences():
    a = [complex(PI, 0.4)] * 6
    z = 5.6 + 0.7j
    h = 1e-5
    fd = (U(a, z + h) - U(a, z - h)) / (2 * h)
    assert dU_dxi(a, z) == pytest.approx(fd, rel=1e-7)
    fd2 = (dU_dxi(a, z + h) - dU_dxi(a, z - h)) / (2 * h)
    assert d2U_dxi2(a, z) == pytest.approx(fd2, rel=1e-7)


def test_xi_star_regular_point():
    x = xi_star([PI] * 6, x0=7 * PI / 4 + 0.1)
    assert abs(x - 7 * PI / 4) < 1e-10
    assert regular_point_checks()["ok"]


@settings(max_examples=15, deadline=None)
@given(angles6)
def test_xi_star_commutes_with_conjugation(theta):
    # not guaranteed a priori; this records that it holds at geometric points
    a = [complex(PI, l) for l in lengths_from_angles(theta)]
    x = xi_star(a)
    xc = xi_star([v.conjugate() for v in a])
    assert abs(dU_dxi(a, x)) < 1e-9
    assert abs(xc - x.conjugate()) < 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_covolume_identity(seed):
    rng = random.Random(100 + seed)
    L = lengths_from_angles([rng.uniform(0.05, 1.0) for _ in range(6)])
    w = W_tet([complex(PI, l) for l in L])
    assert abs(w - 2 * PI**2 - 2j * covolume(L)) < 1e-6


def test_covolume_identity_both_branches_agree():
    L = lengths_from_angles([0.3, 0.4, 0.2, 0.5, 0.1, 0.3])
    wp = W_tet([complex(PI, l) for l in L])
    wm = W_tet([complex(PI, -l) for l in L])
    target = 2 * PI**2 + 2j * covolume(L)
    assert abs(wp - target) < 1e-8 and abs(wm - target) < 1e-8


def test_U_r_approaches_U():
    a, xi = [2.9] * 6, 5.5
    u = U(a, xi)
    gaps = [abs(U_r(a, xi, r) - u) for r in (51, 101, 201)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.4


@pytest.mark.parametrize("name", ["one_tet_one_edge", "one_tet_two_edge", "two_tet_two_edge"])
@pytest.mark.parametrize("c", [0.0, 0.1])
def test_geometric_point_is_critical(name, c):
    T = load_sample(name)
    theta = [c] * T.num_edges
    m = solve_polyhedral_metric(T, theta)
    for eps in ([1] * T.num_edges, [-1] * T.num_edges):
        rep = verify_critical(T, m, beta_from_theta(theta), eps)
        assert rep["ok"], rep
        assert rep["gradient_norm"] < 1e-7
        assert rep["imag_part_error"] < 1e-6


def test_dual_branches_give_equal_values():
    T = load_sample("one_tet_two_edge")
    m = solve_polyhedral_metric(T, [0.1, 0.1])
    beta = beta_from_theta([0.1, 0.1])
    vals = [W_eps(T, beta, eps, geometric_critical_point(T, m, beta, eps).coords)
            for eps in ([1, 1], [-1, -1], [1, -1])]
    assert vals[0] == pytest.approx(vals[1], abs=1e-8)
    assert vals[0] == pytest.approx(vals[2], abs=1e-8)


def test_point_validation():
    T = load_sample("one_tet_one_edge")
    m = solve_polyhedral_metric(T, [0.1])
    with pytest.raises(InputError):
        geometric_critical_point(T, m, [PI], [2])
    with pytest.raises(InputError):
        geometric_critical_point(T, m, [PI, PI], [1])
    p = geometric_critical_point(T, m, beta_from_theta([0.1]), [1])
    assert p.theta == pytest.approx((0.1,))
    assert mu_signs([PI + 0.1, PI - 0.1]) == (1, -1)


def test_hessian_matches_analytic_values():
    H = volume_hessian()
    assert np.max(np.abs(H - ANALYTIC_HESSIAN)) < 1e-5
    assert np.all(np.linalg.eigvalsh(H) < 0)
    rep = hessian_checks()
    assert rep["ok"] and rep["negative_definite"]
    # the alpha-alpha block of the tabulated values is twice the derivative of V
    assert not rep["tabulated_entries_match"]
    assert np.allclose(TABULATED_HESSIAN[:6, :6], 2 * ANALYTIC_HESSIAN[:6, :6])


@pytest.mark.parametrize("i, j", [(0, 0), (0, 1), (0, 6), (6, 6)])
def test_hessian_against_mpmath(i, j):
    ref = oracles.v_hessian_entry(REGULAR_POINT[:6], REGULAR_POINT[6], i, j)
    assert volume_hessian()[i, j] == pytest.approx(ref, abs=1e-6)
    assert ANALYTIC_HESSIAN[i, j] == pytest.approx(ref, abs=1e-12)


def test_branch_guard_flags_cut_points():
    branch_flags(clear=True)
    a = [complex(PI, 0.3)] * 6
    U(a, complex(2 * PI, -1e-12))
    assert branch_flags(clear=True)
    U(a, 5.6 + 0.5j)
    assert branch_flags() == []


@pytest.mark.parametrize("t", [0.8, 1.0, 1.04])
def test_xi_star_tracks_geometric_root_for_long_edges(t):
    # a lone Newton run from the real maximiser lands on a spurious root here
    L = lengths_from_angles([t] * 6)
    w = W_tet([complex(PI, l) for l in L])
    assert abs(w - 2 * PI**2 - 2j * covolume(L)) < 1e-9
