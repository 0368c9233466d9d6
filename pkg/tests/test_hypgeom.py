import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from reltv.errors import DomainError, InputError
from reltv.hypgeom import (V8, HyperidealDomainError, HyperidealTet, MetricSolverError, V_real, alpha_from_dihedral,
                           angles_from_lengths, covolume, delta_lob, dilog, lengths_from_angles, lobachevsky,
                           lobachevsky_prime, solve_polyhedral_metric, tet_volume, xi_real)
from reltv.samples import SAMPLES, load_sample

import oracles

PI = math.pi
angle = st.floats(0.02, PI / 3 - 0.02)
angles6 = st.lists(angle, min_size=6, max_size=6)


def random_angles(rng, hi=PI / 3):
    return [rng.uniform(0.02, hi - 0.02) for _ in range(6)]


@settings(max_examples=60, deadline=None)
@given(st.floats(-10, 10))
def test_lobachevsky_against_fourier_series(x):
    assert lobachevsky(x) == pytest.approx(oracles.lobachevsky_fourier(x), abs=1e-14)


@pytest.mark.parametrize("x", [0.1, 0.5, PI / 6, PI / 4, 1.3, 2.7])
def test_lobachevsky_against_integral(x):
    assert lobachevsky(x) == pytest.approx(oracles.lobachevsky_integral(x), abs=1e-13)


def test_lobachevsky_values():
    # frozen: 8 Lambda(pi/4) and Lambda(pi/6) from Cl_2 at 30 digits
    assert V8 == pytest.approx(3.663862376708876, abs=1e-14)
    assert lobachevsky(PI / 6) == pytest.approx(0.5074708032048268, abs=1e-14)
    assert lobachevsky(PI / 2) == pytest.approx(0.0, abs=1e-15)
    assert lobachevsky(PI) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3))
def test_lobachevsky_odd_and_periodic(x):
    assert lobachevsky(-x) == pytest.approx(-lobachevsky(x), abs=1e-14)
    assert lobachevsky(x + PI) == pytest.approx(lobachevsky(x), abs=1e-13)


def test_lobachevsky_prime_matches_difference():
    x, h = 0.8, 1e-5
    fd = (lobachevsky(x + h) - lobachevsky(x - h)) / (2 * h)
    assert fd == pytest.approx(lobachevsky_prime(x), abs=1e-9)


def test_delta_at_pi_vanishes():
    assert delta_lob(PI, PI, PI) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
def test_dilog_against_mpmath(z):
    if z.imag == 0 and z.real > 1:
        with pytest.raises(DomainError):
            dilog(z)
        return
    assert dilog(z) == pytest.approx(oracles.dilog(z), rel=1e-13, abs=1e-14)


def test_dilog_special_values():
    assert dilog(0) == 0
    assert dilog(1) == pytest.approx(PI**2 / 6)
    assert dilog(-1) == pytest.approx(-PI**2 / 12)
    with pytest.raises(DomainError):
        dilog(2.0)


def test_regular_point_maximizer():
    alpha = [PI] * 6
    xi = xi_real(alpha)
    assert xi == pytest.approx(7 * PI / 4, abs=1e-12)
    assert V_real(alpha, xi) == pytest.approx(V8, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(angles6)
def test_xi_maximizer_against_mpmath(theta):
    a = alpha_from_dihedral(theta)
    assert xi_real(a) == pytest.approx(oracles.xi_maximizer(a), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(angles6)
def test_angles_lengths_roundtrip(theta):
    L = lengths_from_angles(theta)
    assert angles_from_lengths(L) == pytest.approx(theta, abs=1e-9)
    assert lengths_from_angles(angles_from_lengths(L)) == pytest.approx(L, abs=1e-9)


def test_lengths_from_angles_vertex_error():
    with pytest.raises(HyperidealDomainError, match="vertex"):
        lengths_from_angles([1.2] * 6)
    with pytest.raises(HyperidealDomainError):
        lengths_from_angles([-0.1] + [0.3] * 5)
    with pytest.raises(InputError):
        lengths_from_angles([0.3] * 5)


def test_volume_at_zero_angles_is_v8():
    assert tet_volume([0.0] * 6) == pytest.approx(V8, abs=1e-12)
    h = HyperidealTet.from_lengths([0.0] * 6)
    assert h.volume == V8


def test_volume_decreases_with_angle():
    vols = [tet_volume([t] * 6) for t in (0.0, 0.2, 0.5, 0.9)]
    assert all(b < a for a, b in zip(vols, vols[1:]))
    assert all(v > 0 for v in vols)


@pytest.mark.parametrize("seed", range(5))
def test_schlafli(seed):
    rng = random.Random(seed)
    theta = random_angles(rng)
    L = lengths_from_angles(theta)
    h = 1e-5
    for i in range(6):
        tp, tm = list(theta), list(theta)
        tp[i] += h
        tm[i] -= h
        d = (tet_volume(tp) - tet_volume(tm)) / (2 * h)
        assert d == pytest.approx(-L[i] / 2, abs=1e-6)
        lp, lm = list(L), list(L)
        lp[i] += h
        lm[i] -= h
        d = (covolume(lp) - covolume(lm)) / (2 * h)
        assert d == pytest.approx(theta[i] / 2, abs=1e-6)


def test_volume_symmetric_under_relabelling():
    from reltv.triangulation import TET_SYMMETRIES, apply_symmetry
    theta = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
    v = tet_volume(theta)
    for g in TET_SYMMETRIES:
        assert tet_volume(apply_symmetry(theta, g)) == pytest.approx(v, abs=1e-12)


def test_tet_volume_rejects_bad_vertex():
    with pytest.raises(HyperidealDomainError):
        tet_volume([1.5, 1.5, 1.5, 0.2, 0.2, 0.2])


@pytest.mark.parametrize("name", [n for n in SAMPLES if n != "free_tet"])
@pytest.mark.parametrize("c", [0.0, 0.1, 0.5])
def test_metric_solver_hits_cone_angles(name, c):
    T = load_sample(name)
    target = [c] * T.num_edges
    m = solve_polyhedral_metric(T, target)
    assert m.cone_angles == pytest.approx(target, abs=1e-8)
    assert m.total_volume <= T.num_tets * V8 + 1e-12
    assert m.total_volume == pytest.approx(sum(t.volume for t in m.per_tet))
    if c == 0.0:
        assert m.total_volume == pytest.approx(T.num_tets * V8)


def test_metric_volume_is_schlafli_consistent():
    # dVol/dtheta along the cone-angle family equals -(1/2) sum of lengths
    T = load_sample("one_tet_two_edge")
    h = 1e-4
    base = solve_polyhedral_metric(T, [0.3, 0.2])
    for i in range(2):
        tp, tm = [0.3, 0.2], [0.3, 0.2]
        tp[i] += h
        tm[i] -= h
        d = (solve_polyhedral_metric(T, tp).total_volume - solve_polyhedral_metric(T, tm).total_volume) / (2 * h)
        assert d == pytest.approx(-base.edge_lengths[i] / 2, abs=1e-5)


def test_metric_solver_errors():
    T = load_sample("one_tet_one_edge")
    with pytest.raises(InputError):
        solve_polyhedral_metric(T, [0.1, 0.1])
    with pytest.raises(InputError):
        solve_polyhedral_metric(T, [-0.1])
    with pytest.raises(MetricSolverError):
        solve_polyhedral_metric(T, [30.0])


def test_metric_to_dict():
    m = solve_polyhedral_metric(load_sample("one_tet_one_edge"), [0.1])
    d = m.to_dict()
    assert set(d) >= {"edge_lengths", "cone_angles", "total_volume", "tetrahedra"}
    assert len(d["tetrahedra"]) == 1
