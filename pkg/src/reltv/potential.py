"""Complex potentials U, U_r, W and W^eps and their critical points.

U(alpha, xi) is holomorphic near the real hyperideal region; on real points
Im U = 2 V with V the Lobachevsky-function volume expression from
``hypgeom``.  W(alpha) = U(alpha, xi*(alpha)) where xi* is the critical
point of U in xi.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, InputError
from .hypgeom import (V8, PolyhedralMetric, V_real, dilog, face_sums, quad_sums, xi_bracket,
                      xi_real)
from .quantum_arith import phi_r
from .triangulation import Triangulation

log = logging.getLogger(__name__)

PI = math.pi
LI2_ONE = PI * PI / 6
CUT_GUARD = 1e-8

__all__ = [
    "U", "U_r", "V_real", "dU_dxi", "d2U_dxi2", "xi_star", "W_tet", "W_eps", "PotentialPoint",
    "geometric_critical_point", "verify_critical", "hessian_checks", "regular_point_checks", "branch_flags",
    "ANALYTIC_HESSIAN", "TABULATED_HESSIAN", "volume_hessian",
]


# -- cut handling ----------------------------------------------------------

_flags: list = []


def branch_flags(clear: bool = False) -> list:
    """Points nudged off a branch cut since the last clear."""
    out = list(_flags)
    if clear:
        _flags.clear()
    return out


def _off_cut(w: complex) -> complex:
    """Guard the argument of Li2(e^{2iw}) and log(1 - e^{2iw}).

    Both have their cut where e^{2iw} is real and >= 1, i.e. Re w in pi Z
    with Im w <= 0.  Arguments within CUT_GUARD of it move by +CUT_GUARD i.
    """
    w = complex(w)
    d = abs(w.real - PI * round(w.real / PI))
    if d < CUT_GUARD and w.imag < CUT_GUARD and abs(w - PI * round(w.real / PI)) > 0:
        _flags.append(w)
        return w + CUT_GUARD * 1j
    return w


def _li2e(w) -> complex:
    """Li2(e^{2iw})."""
    w = _off_cut(w)
    return dilog(cmath.exp(2j * w))


def _log1m(w) -> complex:
    """log(1 - e^{2iw})."""
    w = _off_cut(w)
    return cmath.log(1 - cmath.exp(2j * w))


def _ratio(w) -> complex:
    """e^{2iw}/(1 - e^{2iw})."""
    w = _off_cut(w)
    e = cmath.exp(2j * w)
    return e / (1 - e)


# -- U and derivatives -----------------------------------------------------

def _check_point(alpha, xi):
    if len(alpha) != 6:
        raise InputError("alpha needs 6 entries")
    a = [complex(x) for x in alpha]
    lo, hi = xi_bracket([x.real for x in a])
    if not lo < hi:
        raise DomainError("Re alpha is not of hyperideal type")
    return a, complex(xi)


def U(alpha: Sequence[complex], xi: complex) -> complex:
    alpha, xi = _check_point(alpha, xi)
    tau, eta = face_sums(alpha), quad_sums(alpha)
    u = PI**2 + 0.5 * sum((e - t) ** 2 for t in tau for e in eta) - 0.5 * sum((t - PI) ** 2 for t in tau)
    u += (xi - PI) ** 2 - sum((xi - t) ** 2 for t in tau) - sum((e - xi) ** 2 for e in eta)
    u += -2 * LI2_ONE
    u -= 0.5 * sum(_li2e(e - t) for t in tau for e in eta)
    u += 0.5 * sum(_li2e(t - PI) for t in tau)
    u -= _li2e(xi - PI)
    u += sum(_li2e(xi - t) for t in tau)
    u += sum(_li2e(e - xi) for e in eta)
    return u


def dU_dxi(alpha, xi) -> complex:
    alpha, xi = _check_point(alpha, xi)
    tau, eta = face_sums(alpha), quad_sums(alpha)
    d = 2 * (xi - PI) - 2 * sum(xi - t for t in tau) + 2 * sum(e - xi for e in eta)
    d += 2j * _log1m(xi - PI) - 2j * sum(_log1m(xi - t) for t in tau) + 2j * sum(_log1m(e - xi) for e in eta)
    return d


def d2U_dxi2(alpha, xi) -> complex:
    alpha, xi = _check_point(alpha, xi)
    tau, eta = face_sums(alpha), quad_sums(alpha)
    return (-12 + 4 * _ratio(xi - PI) - 4 * sum(_ratio(xi - t) for t in tau)
            - 4 * sum(_ratio(e - xi) for e in eta))


def U_r(alpha: Sequence[float], xi: float, r: int) -> complex:
    """Quantum-dilogarithm version of U at level r.

    The 6j-symbol at q = exp(2 pi i/r) is ({1}/2) sum_k exp(r/(4 pi i) U_r)
    with alpha = 2 pi a/r and xi = 2 pi k/r.
    """
    alpha = [float(x) for x in alpha]
    xi = float(xi)
    tau, eta = face_sums(alpha), quad_sums(alpha)
    c = 2 * PI / r
    h = PI / r
    P = lambda z: phi_r(z, r)
    u = PI**2 - c * c + 0.5 * sum((e - t) ** 2 for t in tau for e in eta) - 0.5 * sum((t + c - PI) ** 2 for t in tau)
    u += (xi + c - PI) ** 2 - sum((xi - t) ** 2 for t in tau) - sum((e - xi) ** 2 for e in eta)
    u += -2 * P(h)
    u -= 0.5 * sum(P(e - t + h) for t in tau for e in eta)
    u += 0.5 * sum(P(t - PI + 3 * h) for t in tau)
    u -= P(xi - PI + 3 * h)
    u += sum(P(xi - t + h) for t in tau)
    u += sum(P(e - xi + h) for e in eta)
    return u


# -- the critical xi -------------------------------------------------------

def _newton_xi(alpha, x, lo, hi, max_iter):
    for _ in range(max_iter):
        g = dU_dxi(alpha, x)
        step = g / d2U_dxi2(alpha, x)
        lam = 1.0
        while lam > 1e-4:
            xn = x - lam * step
            if lo < xn.real < hi and abs(dU_dxi(alpha, xn)) < abs(g) * (1 + 1e-12) + 1e-14:
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"xi_star: damped Newton stalled at {x}", estimate=abs(g))
        x = xn
        if abs(lam * step) < 1e-15 * (1 + abs(x)):
            break
    return x


def _continue_xi(alpha, lo, hi, max_iter):
    # follow the root from Re alpha (where it is the real maximiser of V)
    # out to the full imaginary parts, halving the step whenever Newton
    # fails or jumps
    re = [a.real for a in alpha]
    im = [a.imag for a in alpha]
    x = complex(xi_real(re))
    t, h = 0.0, 0.125
    while t < 1.0:
        tn = min(1.0, t + h)
        a = [complex(u, tn * v) for u, v in zip(re, im)]
        try:
            xn = _newton_xi(a, x, lo, hi, max_iter)
            ok = abs(dU_dxi(a, xn)) < 1e-10 and abs(xn - x) < 0.5
        except (ConvergenceError, OverflowError, ZeroDivisionError, ValueError):
            ok = False
        if ok:
            t, x = tn, xn
            h = min(2 * h, 0.5)
        else:
            h *= 0.5
            if h < 1e-6:
                raise ConvergenceError(f"xi_star: continuation stuck at t={t:.6g}, xi={x}")
    return x


def xi_star(alpha: Sequence[complex], x0: complex | None = None, tol: float = 1e-10, max_iter: int = 60) -> complex:
    """Critical point of xi -> U(alpha, xi) by Newton on the analytic derivative.

    Without ``x0`` the root is tracked by continuation in Im alpha, starting
    from the maximiser of V at Re alpha; this stays on the geometric branch
    when the lengths are large and a single Newton run would wander off.
    """
    alpha = [complex(x) for x in alpha]
    re = [x.real for x in alpha]
    lo, hi = xi_bracket(re)
    if not lo < hi:
        raise DomainError("Re alpha is not of hyperideal type")
    if x0 is None:
        x = _continue_xi(alpha, lo, hi, max_iter)
    else:
        x = _newton_xi(alpha, complex(x0), lo, hi, max_iter)
    res = abs(dU_dxi(alpha, x))
    if res >= tol:
        raise ConvergenceError(f"xi_star residual {res:.3g} at {x}", estimate=res)
    if not lo < x.real < hi:
        raise DomainError(f"xi_star {x} escaped the bracket ({lo}, {hi})")
    return x


def W_tet(alpha: Sequence[complex]) -> complex:
    return U(alpha, xi_star(alpha))


# -- the global potential --------------------------------------------------

def _split(T: Triangulation, point):
    alpha, xi = point
    alpha = [complex(a) for a in alpha]
    xi = [complex(x) for x in xi]
    if len(alpha) != T.num_edges or len(xi) != T.num_tets:
        raise InputError(f"point needs {T.num_edges} alphas and {T.num_tets} xis")
    return alpha, xi


def W_eps(T: Triangulation, beta: Sequence[float], eps: Sequence[int], point) -> complex:
    """-sum_i 2 eps_i (alpha_i - pi)(beta_i - pi) + sum_s U(alpha at the slots of tet s, xi_s)."""
    alpha, xi = _split(T, point)
    w = -sum(2 * e * (a - PI) * (b - PI) for a, b, e in zip(alpha, beta, eps))
    for t, x in zip(T.tets, xi):
        w += U([alpha[e] for e in t], x)
    return w


@dataclass
class PotentialPoint:
    alpha: tuple[complex, ...]
    xi: tuple[complex, ...]
    beta: tuple[float, ...]
    eps: tuple[int, ...]
    mu: tuple[int, ...]

    @property
    def theta(self) -> tuple[float, ...]:
        return tuple(2 * abs(b - PI) for b in self.beta)

    @property
    def coords(self):
        return list(self.alpha), list(self.xi)


def mu_signs(beta: Sequence[float]) -> tuple[int, ...]:
    return tuple(1 if b >= PI else -1 for b in beta)


def beta_from_theta(theta: Sequence[float], mu: Sequence[int] | None = None) -> list[float]:
    mu = mu or [1] * len(theta)
    return [PI + m * t / 2 for t, m in zip(theta, mu)]


def geometric_critical_point(T: Triangulation, metric: PolyhedralMetric, beta: Sequence[float],
                             eps: Sequence[int]) -> PotentialPoint:
    """alpha_i = pi + eps_i mu_i i l_i, xi_s = xi_star at the tetrahedron's alpha."""
    beta = tuple(float(b) for b in beta)
    eps = tuple(int(e) for e in eps)
    if len(beta) != T.num_edges or len(eps) != T.num_edges:
        raise InputError("beta and eps need one entry per edge")
    if any(e not in (1, -1) for e in eps):
        raise InputError("eps entries must be +1 or -1")
    mu = mu_signs(beta)
    alpha = tuple(complex(PI, e * m * l) for e, m, l in zip(eps, mu, metric.edge_lengths))
    xi = tuple(xi_star([alpha[e] for e in t]) for t in T.tets)
    return PotentialPoint(alpha, xi, beta, eps, mu)


# -- finite differences ----------------------------------------------------

def _step(x) -> float:
    return 1e-5 * (1 + abs(x))


def central_diff(f: Callable[[float], complex], x: complex, h: float | None = None) -> complex:
    """Central difference in a real direction, Richardson-extrapolated once."""
    h = _step(x) if h is None else h
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def gradient_W(T, beta, eps, point) -> np.ndarray:
    """Complex gradient of W^eps over the |E| + |T| coordinates (real-direction differences)."""
    alpha, xi = _split(T, point)
    z = alpha + xi
    n = T.num_edges
    out = []
    for j in range(len(z)):
        def f(v, j=j):
            zz = list(z)
            zz[j] = v
            return W_eps(T, beta, eps, (zz[:n], zz[n:]))
        out.append(central_diff(f, z[j], _step(z[j])))
    return np.array(out)


def cauchy_riemann_residual(f: Callable[[complex], complex], z: complex) -> float:
    """|df/dy - i df/dx| / |df/dx|; zero for holomorphic f."""
    z = complex(z)
    h = _step(z)
    dx = central_diff(lambda t: f(complex(t, z.imag)), z.real, h)
    dy = central_diff(lambda t: f(complex(z.real, t)), z.imag, h)
    return abs(dy - 1j * dx) / max(abs(dx), 1e-300)


# -- reports ---------------------------------------------------------------

GRAD_TOL = 1e-7
VALUE_TOL = 1e-6


def verify_critical(T: Triangulation, metric: PolyhedralMetric, beta: Sequence[float], eps: Sequence[int]) -> dict:
    """Check that z^eps is critical for W^eps with value 2|T| pi^2 + 2i Vol."""
    report = {"eps": list(eps), "beta": list(beta)}
    try:
        z = geometric_critical_point(T, metric, beta, eps)
        w = W_eps(T, beta, eps, z.coords)
        g = gradient_W(T, beta, eps, z.coords)
    except (ConvergenceError, DomainError) as exc:
        report.update(ok=False, error=str(exc))
        return report
    gnorm = float(np.max(np.abs(g)))
    re_err = abs(w.real - 2 * T.num_tets * PI**2)
    im_err = abs(w.imag - 2 * metric.total_volume)
    report.update(
        value=[w.real, w.imag],
        volume=metric.total_volume,
        gradient_norm=gnorm,
        real_part_error=re_err,
        imag_part_error=im_err,
        xi=[[x.real, x.imag] for x in z.xi],
        gradient_ok=gnorm < GRAD_TOL,
        real_ok=re_err < VALUE_TOL,
        imag_ok=im_err < VALUE_TOL,
    )
    report["ok"] = report["gradient_ok"] and report["real_ok"] and report["imag_ok"]
    return report


REGULAR_POINT = (PI,) * 6 + (7 * PI / 4,)
# Second derivatives of V at the regular point from Lambda'' = -cot:
# alpha-alpha diagonal -1, off-diagonal -1/2, alpha-xi 2, xi-xi -8.
ANALYTIC_HESSIAN = np.array(
    [[-1.0 if i == j else -0.5 for j in range(6)] + [2.0] for i in range(6)] + [[2.0] * 6 + [-8.0]]
)
# Widely tabulated values; the alpha-alpha block there is twice the above
# (it is the Hessian of Im U rather than V), while the xi entries agree.
TABULATED_HESSIAN = np.array(
    [[-2.0 if i == j else -1.0 for j in range(6)] + [2.0] for i in range(6)] + [[2.0] * 6 + [-8.0]]
)


def volume_hessian(point: Sequence[float] = REGULAR_POINT) -> np.ndarray:
    """Finite-difference Hessian of Im U / 2 = V in the seven real variables."""
    x0 = np.array(point, dtype=float)

    def f(x):
        return U(x[:6], x[6]).imag / 2

    n = len(x0)
    H = np.empty((n, n))

    def d2(i, j, h):
        ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h
        if i == j:
            return (f(x0 + ei) - 2 * f(x0) + f(x0 - ei)) / h**2
        return (f(x0 + ei + ej) - f(x0 + ei - ej) - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4 * h * h)

    for i in range(n):
        for j in range(i, n):
            h = 1e-3 * (1 + abs(x0[i]))
            H[i, j] = H[j, i] = (4 * d2(i, j, h / 2) - d2(i, j, h)) / 3
    return H


def hessian_checks(tol: float = 1e-5) -> dict:
    """Finite-difference Hessian against the analytic one; the tabulated table is reported alongside."""
    H = volume_hessian()
    err = float(np.max(np.abs(H - ANALYTIC_HESSIAN)))
    tab_err = float(np.max(np.abs(H - TABULATED_HESSIAN)))
    eig = np.linalg.eigvalsh((H + H.T) / 2)
    neg = bool(np.all(eig < 0))
    return {
        "point": list(REGULAR_POINT),
        "hessian": H.tolist(),
        "expected": ANALYTIC_HESSIAN.tolist(),
        "max_entry_error": err,
        "tabulated_max_entry_error": tab_err,
        "tabulated_entries_match": tab_err < tol,
        "eigenvalues": eig.tolist(),
        "entries_ok": err < tol,
        "negative_definite": neg,
        "ok": err < tol and neg,
    }


def regular_point_checks() -> dict:
    xi = xi_star([PI] * 6, x0=7 * PI / 4 + 0.1)
    v = V_real([PI] * 6, 7 * PI / 4)
    return {
        "xi_star": [xi.real, xi.imag],
        "xi_error": abs(xi - 7 * PI / 4),
        "volume": v,
        "volume_error": abs(v - V8),
        "ok": abs(xi - 7 * PI / 4) < 1e-9 and abs(v - V8) < 1e-9,
    }
