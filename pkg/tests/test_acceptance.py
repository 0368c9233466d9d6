"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) and
then asserts, so the verdict and the pytest outcome always agree.
"""
import cmath
import itertools
import math
import random
import time

import numpy as np
import pytest

from conftest import record
from reltv.cli import AsymptoticsPlan, run_asymptotics
from reltv.hypgeom import (V8, HyperidealDomainError, V_real, covolume, lengths_from_angles, solve_polyhedral_metric,
                           tet_volume, xi_real)
from reltv.potential import (ANALYTIC_HESSIAN, PI, TABULATED_HESSIAN, W_tet, beta_from_theta, verify_critical,
                             volume_hessian, xi_star)
from reltv.quantum_arith import QuantumContext, factorial_identity_residual, identity_variants, phi_r
from reltv.samples import load_sample
from reltv.sixj import is_admissible, is_hyperideal_type, sixj_direct, sixj_via_potential
from reltv.statesum import parity_check, relative_tv, turaev_viro
from reltv.triangulation import TET_SYMMETRIES, apply_symmetry, face_parity_kernel_dim

import oracles


def random_valid_angles(rng, n, hi=1.0):
    """Six-tuples of dihedral angles whose truncation triangles are hyperbolic."""
    out = []
    while len(out) < n:
        th = [rng.uniform(0.02, hi) for _ in range(6)]
        try:
            lengths_from_angles(th)
        except HyperidealDomainError:
            continue
        out.append(th)
    return out


def _hessian_report():
    t0 = time.perf_counter()
    H = volume_hessian()
    dt = time.perf_counter() - t0
    neg = bool(np.all(np.linalg.eigvalsh((H + H.T) / 2) < 0))
    return H, neg, dt


@pytest.mark.xfail(strict=True, reason="tabulated alpha-alpha entries are twice the derivatives of V; see notes")
def test_criterion_1_hessian_tabulated_entries():
    H, neg, dt = _hessian_report()
    err = float(np.max(np.abs(H - TABULATED_HESSIAN)))
    derived = float(np.max(np.abs(H - ANALYTIC_HESSIAN)))
    ok = err < 1e-5 and neg and dt < 1
    record(1, ok, f"tabulated entries max error {err:.3g} (tol 1e-5); negative definite {neg}; "
                  f"derived entries (-1, -1/2, 2, -8) match to {derived:.2g}; {dt:.2f}s")
    assert ok


def test_criterion_1_hessian_derived_entries():
    # the part of criterion 1 that is attainable: the derivatives of V itself
    H, neg, dt = _hessian_report()
    for i, j in [(0, 0), (0, 1), (0, 6), (6, 6)]:
        assert oracles.v_hessian_entry([PI] * 6, 7 * PI / 4, i, j) == pytest.approx(ANALYTIC_HESSIAN[i, j], abs=1e-10)
    assert np.max(np.abs(H - ANALYTIC_HESSIAN)) < 1e-5
    assert neg and dt < 1


def test_criterion_2_regular_maximiser():
    t0 = time.perf_counter()
    x1 = xi_real([PI] * 6)
    x2 = xi_star([PI] * 6)
    v = V_real([PI] * 6, 7 * PI / 4)
    dt = time.perf_counter() - t0
    e = max(abs(x1 - 7 * PI / 4), abs(x2 - 7 * PI / 4))
    ok = e < 1e-9 and abs(v - V8) < 1e-9 and abs(V8 - 3.6638624) < 1e-7 and dt < 1
    record(2, ok, f"xi error {e:.2g}, V - 8 Lambda(pi/4) = {v - V8:.2g}; {dt:.2f}s")
    assert ok


def test_criterion_3_covolume_identity():
    rng = random.Random(3)
    t0 = time.perf_counter()
    worst = 0.0
    for th in random_valid_angles(rng, 20):
        L = lengths_from_angles(th)
        worst = max(worst, abs(W_tet([complex(PI, l) for l in L]) - 2 * PI**2 - 2j * covolume(L)))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 10
    record(3, ok, f"max |W - 2pi^2 - 2i Cov| = {worst:.3g} over 20 tuples; {dt:.2f}s")
    assert ok


def test_criterion_4_schlafli():
    rng = random.Random(4)
    t0 = time.perf_counter()
    h = 1e-5
    worst = 0.0
    for th in random_valid_angles(rng, 20, hi=PI / 3):
        L = lengths_from_angles(th)
        for i in range(6):
            tp, tm = list(th), list(th)
            tp[i] += h
            tm[i] -= h
            worst = max(worst, abs((tet_volume(tp) - tet_volume(tm)) / (2 * h) + L[i] / 2))
            lp, lm = list(L), list(L)
            lp[i] += h
            lm[i] -= h
            worst = max(worst, abs((covolume(lp) - covolume(lm)) / (2 * h) - th[i] / 2))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 10
    record(4, ok, f"max gradient mismatch {worst:.3g} over 20 tetrahedra; {dt:.2f}s")
    assert ok


def test_criterion_5_factorial_identities():
    t0 = time.perf_counter()
    worst = 0.0
    both = True
    for r in (15, 31, 51):
        ctx = QuantumContext(r)
        for n in range(r - 1):
            res = factorial_identity_residual(n, ctx)
            assert set(res) == set(identity_variants(n, r))
            worst = max(worst, max(res.values()))
        both &= set().union(*(identity_variants(n, r) for n in range(r - 1))) == {1, 2}
    ratios = []
    for z in (0.7 + 0.1j, 1.5, 2.2 - 0.2j):
        li = oracles.dilog(cmath.exp(2j * z))
        ratios.append(abs(phi_r(z, 51) - li) / abs(phi_r(z, 101) - li))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and both and all(3.2 <= q <= 4.8 for q in ratios) and dt < 30
    record(5, ok, f"max relative residual {worst:.3g}; phi error ratios 51/101 "
                  f"{', '.join(f'{q:.3f}' for q in ratios)}; {dt:.2f}s")
    assert ok


def test_criterion_6_sixj():
    t0 = time.perf_counter()
    count = 0
    worst = 0.0
    sym_bad = 0
    zeros = 0
    zero_err = 0.0
    for root, rs in (("2pir", range(3, 14, 2)), ("pir", range(3, 14))):
        for r in rs:
            ctx = QuantumContext(r, root)
            vals = {a: sixj_direct(a, ctx) for a in itertools.product(range(r - 1), repeat=6) if is_admissible(a, r)}
            for a, v in vals.items():
                sym_bad += sum(abs(vals[apply_symmetry(a, g)] - v) > 1e-12 * max(1.0, abs(v)) for g in TET_SYMMETRIES)
                ref = complex(oracles.sixj(a, r, root))
                if abs(ref) < 1e-30:
                    # vanishing symbols (they occur at q = e^{i pi / r}): digits are meaningless, check absolutely
                    zeros += 1
                    zero_err = max(zero_err, abs(v))
                    continue
                worst = max(worst, abs(v - ref) / abs(ref))
            count += len(vals)
    pot = 0.0
    for r in (31, 51):
        ctx = QuantumContext(r)
        rng = random.Random(r)
        n = 0
        while n < 20:
            a = tuple(rng.randrange(r - 1) for _ in range(6))
            if not is_hyperideal_type(a, r):
                continue
            n += 1
            d = sixj_direct(a, ctx)
            pot = max(pot, abs(sixj_via_potential(a, ctx) - d) / abs(d))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and zero_err < 1e-12 and sym_bad == 0 and pot < 1e-8 and dt < 120
    record(6, ok, f"{count} tuples, worst relative oracle error {worst:.3g} ({zeros} vanishing, max |value| "
                  f"{zero_err:.2g}), {sym_bad} symmetry mismatches; "
                  f"potential route max relative error {pot:.3g}; {dt:.1f}s")
    assert ok


def test_criterion_7_state_sums():
    t0 = time.perf_counter()
    names = [n for n in ("free_tet", "one_tet_one_edge", "one_tet_two_edge", "one_tet_three_edge",
                         "two_tet_one_edge", "two_tet_two_edge") if load_sample(n).num_edges <= 3]
    worst = 0.0
    checked = 0
    for name in names:
        T = load_sample(name)
        for r in (3, 5, 7, 9):
            ctx = QuantumContext(r)
            for b in itertools.product(range(r - 1), repeat=T.num_edges):
                ref = oracles.brute_force_tv(T.tets, T.num_edges, b, r)
                got = relative_tv(T, b, ctx).value
                worst = max(worst, abs(got - ref) / max(1.0, abs(ref)))
                checked += 1
    tv_err = 0.0
    parity_ok = True
    for name in names:
        T = load_sample(name)
        for r in (5, 7, 9):
            ctx = QuantumContext(r)
            z = relative_tv(T, [0] * T.num_edges, ctx).value
            tv_err = max(tv_err, abs(z - turaev_viro(T, ctx)) / max(1.0, abs(z)))
        rep = parity_check(T, [0] * T.num_edges, QuantumContext(7))
        if rep["applicable"]:
            rows = [[sum(1 for e in f if e == k) % 2 for k in range(T.num_edges)] for f in T.faces]
            kdim = oracles.gf2_kernel_dim(rows, T.num_edges)
            parity_ok &= bool(rep["power_of_two"]) and round(rep["exponent"]) == kdim == face_parity_kernel_dim(T)
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and tv_err < 1e-10 and parity_ok and dt < 120
    record(7, ok, f"{checked} boundary colorings on {len(names)} triangulations, worst relative error {worst:.3g}; "
                  f"b=0 vs plain TV {tv_err:.3g}; parity factors exact powers of 2 {parity_ok}; {dt:.1f}s")
    assert ok


def test_criterion_8_critical_points():
    t0 = time.perf_counter()
    T = load_sample("one_tet_one_edge")
    grad = img = 0.0
    all_ok = True
    for c in (0.0, 0.1):
        m = solve_polyhedral_metric(T, [c])
        for eps in ([1], [-1]):
            rep = verify_critical(T, m, beta_from_theta([c]), eps)
            grad = max(grad, rep["gradient_norm"])
            img = max(img, rep["imag_part_error"])
            all_ok &= rep["ok"]
    dt = time.perf_counter() - t0
    ok = grad < 1e-7 and img < 1e-6 and all_ok and dt < 30
    record(8, ok, f"max gradient norm {grad:.3g}, max |Im W - 2 Vol| {img:.3g}; {dt:.2f}s")
    assert ok


def test_criterion_9_growth_trend():
    t0 = time.perf_counter()
    plan = AsymptoticsPlan("one_tet_one_edge", [0.1], list(range(11, 102, 2)), timing=False)
    rows, summary = run_asymptotics(plan)
    dt = time.perf_counter() - t0
    vol = summary["geometric_volume"]
    logs = [row["scaled_log"] for row in rows]
    # from some r on, every step moves towards the volume
    start = next(i for i in range(len(logs)) if all(abs(b - vol) < abs(a - vol) for a, b in zip(logs[i:], logs[i + 1:])))
    rel = summary["relative_error"]
    ok = summary["eventually_monotone"] and start < len(logs) - 5 and rel < 0.05 and dt < 600
    record(9, ok, f"monotone from r={rows[start]['r']}, extrapolated {summary['extrapolated_limit']:.7f} "
                  f"vs Vol {vol:.7f} (relative {rel:.2g}); {dt:.1f}s")
    assert ok
