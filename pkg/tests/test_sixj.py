import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from reltv.errors import DomainError, InputError
from reltv.quantum_arith import Precision, QuantumContext, Root
from reltv.sixj import (AdmissibilityError, SixjCache, canonical_key, delta_factor, edge_weight_H, is_admissible,
                        is_admissible_triple, is_hyperideal_type, potential_phase, sixj_direct, sixj_via_potential)
from reltv.triangulation import TET_SYMMETRIES, apply_symmetry

import oracles


def admissible_tuples(r):
    return [a for a in itertools.product(range(r - 1), repeat=6) if is_admissible(a, r)]


def test_triple_rules():
    assert is_admissible_triple(1, 1, 2, 5)
    assert not is_admissible_triple(1, 1, 1, 5)  # odd sum
    assert not is_admissible_triple(0, 1, 3, 7)  # triangle
    assert not is_admissible_triple(3, 3, 2, 5)  # sum above 2(r-2)
    with pytest.raises(InputError):
        is_admissible_triple(0, 0, 9, 5)
    with pytest.raises(InputError):
        is_admissible((0, 0, 0), 5)


def test_admissible_counts():
    # frozen by enumeration
    assert [len(admissible_tuples(r)) for r in (3, 5, 7)] == [8, 120, 784]
    assert all(oracles.admissible(a, 7) for a in admissible_tuples(7))


def test_hyperideal_type_is_stricter():
    r = 11
    for a in admissible_tuples(r)[::7]:
        if is_hyperideal_type(a, r):
            assert is_admissible(a, r)
    assert not is_hyperideal_type((0,) * 6, r)
    assert is_hyperideal_type((6,) * 6, r)


def test_zero_tuple():
    assert sixj_direct((0,) * 6, QuantumContext(7)) == pytest.approx(1.0)


@pytest.mark.parametrize("r, root", [(5, "2pir"), (7, "2pir"), (9, "2pir"), (6, "pir"), (8, "pir")])
def test_against_oracle_and_symmetries(r, root):
    ctx = QuantumContext(r, root)
    vals = {a: sixj_direct(a, ctx) for a in admissible_tuples(r)}
    for a, v in vals.items():
        ref = complex(oracles.sixj(a, r, root))
        assert abs(v - ref) <= 1e-12 * max(1.0, abs(ref)), a
        for g in TET_SYMMETRIES:
            assert vals[apply_symmetry(a, g)] == pytest.approx(v, rel=1e-12, abs=1e-14)


def test_extended_path():
    r = 11
    d, e = QuantumContext(r), QuantumContext(r, precision=Precision.EXTENDED)
    for a in admissible_tuples(r)[::50]:
        assert complex(sixj_direct(a, e)) == pytest.approx(complex(oracles.sixj(a, r)), rel=1e-25, abs=1e-25)
        assert complex(sixj_direct(a, e)) == pytest.approx(sixj_direct(a, d), rel=1e-12, abs=1e-14)


def test_non_admissible_raises():
    with pytest.raises(AdmissibilityError):
        sixj_direct((1, 0, 0, 0, 0, 0), QuantumContext(7))
    assert issubclass(AdmissibilityError, DomainError)
    with pytest.raises(AdmissibilityError):
        delta_factor(1, 1, 1, QuantumContext(7))


def test_delta_sign_convention():
    # negative radicand -> purely imaginary
    ctx = QuantumContext(7)
    for a, b, c in itertools.product(range(6), repeat=3):
        if is_admissible_triple(a, b, c, 7):
            d = delta_factor(a, b, c, ctx)
            assert d.real == 0 or d.imag == 0
            assert d.real >= 0 and d.imag >= 0


def _hyperideal_sample(r, n, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        a = tuple(rng.randrange(r - 1) for _ in range(6))
        if is_hyperideal_type(a, r):
            out.append(a)
    return out


@pytest.mark.parametrize("r", [15, 21])
def test_potential_route(r):
    ctx = QuantumContext(r)
    for a in _hyperideal_sample(r, 10, r):
        d = sixj_direct(a, ctx)
        assert sixj_via_potential(a, ctx) == pytest.approx(d, rel=1e-8)
        raw = sixj_via_potential(a, ctx, raw=True)
        assert raw == pytest.approx(potential_phase(a, ctx) * d, rel=1e-8)
        assert abs(potential_phase(a, ctx)) == 1


def test_potential_route_rejects():
    with pytest.raises(DomainError):
        sixj_via_potential((0,) * 6, QuantumContext(11))
    with pytest.raises(InputError):
        sixj_via_potential((6,) * 6, QuantumContext(12, Root.EPIR))


def test_edge_weight():
    r = 9
    ctx = QuantumContext(r)
    for a, b in itertools.product(range(r - 1), repeat=2):
        assert edge_weight_H(a, b, ctx) == pytest.approx(float(oracles.edge_weight(a, b, r)), abs=1e-12)
        assert edge_weight_H(a, b, ctx) == pytest.approx(edge_weight_H(b, a, ctx))
    # H(a, 0) = (-1)^a [a+1]
    assert edge_weight_H(2, 0, ctx) == pytest.approx(math.sin(3 * ctx.angle) / math.sin(ctx.angle))
    e = QuantumContext(r, precision="extended")
    assert float(edge_weight_H(3, 4, e)) == pytest.approx(edge_weight_H(3, 4, ctx), rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=6, max_size=6))
def test_canonical_key_is_orbit_invariant(a):
    k = canonical_key(a)
    for g in TET_SYMMETRIES[::5]:
        assert canonical_key(apply_symmetry(a, g)) == k


def test_cache():
    ctx = QuantumContext(9)
    c = SixjCache(ctx, canonical=True)
    a = (2, 2, 2, 2, 2, 2)
    b = (1, 1, 2, 1, 1, 2)
    c(a)
    c(a)
    c(b)
    c(apply_symmetry(b, TET_SYMMETRIES[7]))
    assert c.hits == 2 and c.misses == 2 and len(c) == 2
    assert c.hit_rate == 0.5
    assert c(b) == sixj_direct(b, ctx)
