"""Hyperbolic geometry of truncated hyperideal tetrahedra.

Angles and lengths are indexed by tetrahedron slot (see ``triangulation``);
slot s is the edge between the vertices ``SLOT_VERTICES[s]``.  Vertices are
hyperideal, so each vertex is truncated by a triangle.  An ideal or
hyperideal vertex has incident angle sum <= pi.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, DomainError, InputError
from .triangulation import OPPOSITE_SLOT, SLOT_FACES, SLOT_QUADS, SLOT_VERTICES, Triangulation

log = logging.getLogger(__name__)

PI = math.pi


class HyperidealDomainError(DomainError):
    pass


class MetricSolverError(ConvergenceError):
    pass


# -- Lobachevsky function ---------------------------------------------------

def _zeta_even(nmax: int) -> list[float]:
    """zeta(2n) for n = 0..nmax from Bernoulli numbers."""
    B = [Fraction(1)]
    for m in range(1, 2 * nmax + 1):
        B.append(-sum(math.comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    out = [-0.5]
    for n in range(1, nmax + 1):
        coef = abs(B[2 * n]) * 2 ** (2 * n - 1) / math.factorial(2 * n)
        out.append(float(coef) * PI ** (2 * n))
    return out


_NTERMS = 30
_LOB_COEF = [0.0] + [z / (n * (2 * n + 1)) for n, z in enumerate(_zeta_even(_NTERMS)) if n]


def _reduce(theta: float) -> float:
    t = math.fmod(theta, PI)
    if t > PI / 2:
        t -= PI
    elif t < -PI / 2:
        t += PI
    return t


def lobachevsky(theta: float) -> float:
    """Lambda(theta) = -int_0^theta log|2 sin t| dt.

    Odd and pi-periodic; after reduction to [-pi/2, pi/2] this sums the
    power series theta - theta log|2 theta| + sum zeta(2n) theta^(2n+1) / (n (2n+1) pi^2n).
    """
    t = _reduce(float(theta))
    if t == 0.0:
        return 0.0
    x = (t / PI) ** 2
    p = t
    s = 0.0
    for c in _LOB_COEF[1:]:
        p *= x
        s += c * p
    return t - t * math.log(abs(2 * t)) + s


def lobachevsky_prime(theta: float) -> float:
    return -math.log(abs(2 * math.sin(theta)))


V8 = 8 * lobachevsky(PI / 4)


# -- dilogarithm ------------------------------------------------------------

def _bernoulli_floats(n: int) -> list[float]:
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(math.comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    return [float(b) for b in B]


_LI2_COEF = [b / math.factorial(n + 1) for n, b in enumerate(_bernoulli_floats(40))]


def _li2_series(z: complex) -> complex:
    # Li2(z) = sum_n B_n u^(n+1)/(n+1)!,  u = -log(1 - z), |u| < 2 pi
    u = -cmath.log(1 - z)
    u2 = u * u
    s = u + _LI2_COEF[1] * u2
    p = u
    for n in range(2, len(_LI2_COEF), 2):
        p *= u2
        term = _LI2_COEF[n] * p
        s += term
        if abs(term) < 1e-17 * abs(s):
            break
    return s


def dilog(z) -> complex:
    """Principal branch of Li2 on C minus [1, inf)."""
    z = complex(z)
    if z.imag == 0.0 and z.real > 1.0:
        raise DomainError(f"dilog: {z.real} lies on the branch cut (1, inf)")
    if z == 0:
        return 0j
    if z == 1:
        return complex(PI * PI / 6)
    if abs(z) > 1.0:
        # Li2(z) + Li2(1/z) = -pi^2/6 - log(-z)^2 / 2
        return -PI * PI / 6 - 0.5 * cmath.log(-z) ** 2 - dilog(1 / z)
    if z.real > 0.5:
        # Li2(z) + Li2(1-z) = pi^2/6 - log z log(1-z)
        w = 1 - z
        lw = cmath.log(w) if w != 0 else 0.0
        return PI * PI / 6 - cmath.log(z) * lw - _li2_series(w)
    return _li2_series(z)


# -- the volume function V(alpha, xi) --------------------------------------

def face_sums(alpha: Sequence) -> list:
    """tau_i: half the sum of alpha over each face triple."""
    return [(alpha[i] + alpha[j] + alpha[k]) / 2 for i, j, k in SLOT_FACES]


def quad_sums(alpha: Sequence) -> list:
    """eta_j: half the sum of alpha over each quad (complement of an opposite pair)."""
    return [sum(alpha[i] for i in q) / 2 for q in SLOT_QUADS]


def delta_lob(x: float, y: float, z: float) -> float:
    return 0.5 * (-lobachevsky((x + y - z) / 2) - lobachevsky((y + z - x) / 2)
                  - lobachevsky((z + x - y) / 2) + lobachevsky((x + y + z) / 2))


def xi_bracket(alpha: Sequence[float]) -> tuple[float, float]:
    return max(face_sums(alpha)), min(min(quad_sums(alpha)), 2 * PI)


def V_real(alpha: Sequence[float], xi: float) -> float:
    tau, eta = face_sums(alpha), quad_sums(alpha)
    v = sum(delta_lob(*(alpha[i] for i in f)) for f in SLOT_FACES)
    v -= lobachevsky(xi)
    v += sum(lobachevsky(xi - t) for t in tau)
    v += sum(lobachevsky(e - xi) for e in eta)
    return v


def dV_dxi(alpha, xi: float) -> float:
    tau, eta = face_sums(alpha), quad_sums(alpha)
    d = -lobachevsky_prime(xi)
    d += sum(lobachevsky_prime(xi - t) for t in tau)
    d -= sum(lobachevsky_prime(e - xi) for e in eta)
    return d


def d2V_dxi2(alpha, xi: float) -> float:
    cot = lambda w: math.cos(w) / math.sin(w)
    tau, eta = face_sums(alpha), quad_sums(alpha)
    return cot(xi) - sum(cot(xi - t) for t in tau) - sum(cot(e - xi) for e in eta)


def xi_real(alpha: Sequence[float], tol: float = 1e-12) -> float:
    """Maximiser of the strictly concave map xi -> V(alpha, xi)."""
    lo, hi = xi_bracket(alpha)
    if not lo < hi:
        raise HyperidealDomainError(f"empty xi interval ({lo:.6g}, {hi:.6g}); alpha not of hyperideal type")
    res = minimize_scalar(lambda x: -V_real(alpha, x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    x = float(res.x)
    # polish on the derivative; Brent gets within ~1e-8, Newton finishes
    for _ in range(30):
        d2 = d2V_dxi2(alpha, x)
        if not d2 < 0:
            break
        step = dV_dxi(alpha, x) / d2
        xn = x - step
        if not lo < xn < hi:
            break
        x = xn
        if abs(step) < tol:
            break
    if not lo < x < hi or min(x - lo, hi - x) < 1e-14:
        raise DomainError(f"xi maximiser {x} not interior to ({lo}, {hi})")
    return x


def alpha_from_dihedral(theta: Sequence[float]) -> list[float]:
    """Arguments of V describing the tetrahedron with dihedral angles theta.

    V evaluated at alpha is the volume of the tetrahedron whose dihedral
    angle at slot s is pi - alpha at the opposite slot.
    """
    return [PI - theta[OPPOSITE_SLOT[s]] for s in range(6)]


# -- angles and lengths -----------------------------------------------------

def _check_six(x, what: str) -> list[float]:
    x = [float(v) for v in x]
    if len(x) != 6:
        raise InputError(f"{what} needs 6 values, got {len(x)}")
    if not all(math.isfinite(v) for v in x):
        raise InputError(f"{what} must be finite")
    return x


def _pair_table(values: Sequence[float], f) -> dict:
    tab = {}
    for s, (i, j) in enumerate(SLOT_VERTICES):
        tab[i, j] = tab[j, i] = f(values[s])
    return tab


def _others(i: int, j: int) -> tuple[int, int]:
    k, l = (v for v in range(4) if v not in (i, j))
    return k, l


def vertex_slots(v: int) -> tuple[int, ...]:
    return tuple(s for s, p in enumerate(SLOT_VERTICES) if v in p)


def lengths_from_angles(theta: Sequence[float]) -> list[float]:
    """Edge lengths of the truncated tetrahedron with dihedral angles theta."""
    theta = _check_six(theta, "dihedral angles")
    for s, t in enumerate(theta):
        if not 0.0 <= t < PI:
            raise HyperidealDomainError(f"dihedral angle at slot {s} is {t}, outside [0, pi)")
    c = _pair_table(theta, math.cos)
    rad = {}
    for v in range(4):
        a, b, d = (u for u in range(4) if u != v)
        val = -1 + c[v, a] ** 2 + c[v, b] ** 2 + c[v, d] ** 2 + 2 * c[v, a] * c[v, b] * c[v, d]
        if not val > 0:
            sl = vertex_slots(v)
            raise HyperidealDomainError(
                f"vertex {v} (slots {sl}) has angle sum {sum(theta[s] for s in sl):.6g} >= pi: not hyperideal")
        rad[v] = val
    out = []
    for s, (i, j) in enumerate(SLOT_VERTICES):
        k, l = _others(i, j)
        num = (c[k, l] + c[i, k] * c[j, k] + c[i, l] * c[j, l]
               + (c[i, k] * c[j, l] + c[i, l] * c[j, k]) * c[i, j] - c[k, l] * c[i, j] ** 2)
        x = num / math.sqrt(rad[i] * rad[j])
        if x < 1.0:
            if x < 1.0 - 1e-9:
                raise HyperidealDomainError(f"cosh of length at slot {s} is {x} < 1")
            x = 1.0
        out.append(math.acosh(x))
    return out


def angles_from_lengths(lengths: Sequence[float]) -> list[float]:
    """Dihedral angles of the truncated tetrahedron with the given edge lengths.

    For slot ij with complementary pair kl, cos theta_ij is a rational
    expression in ch = cosh(length) over the two triangular faces that
    contain the edge ij.
    """
    lengths = _check_six(lengths, "edge lengths")
    if any(v < 0 for v in lengths):
        raise InputError("edge lengths must be non-negative")
    ch = _pair_table(lengths, math.cosh)
    out = []
    for s, (i, j) in enumerate(SLOT_VERTICES):
        k, l = _others(i, j)
        num = (ch[k, l] + ch[i, k] * ch[i, l] + ch[j, k] * ch[j, l]
               + (ch[i, k] * ch[j, l] + ch[i, l] * ch[j, k]) * ch[i, j] - ch[k, l] * ch[i, j] ** 2)
        d1 = -1 + ch[i, j] ** 2 + ch[i, k] ** 2 + ch[j, k] ** 2 + 2 * ch[i, j] * ch[i, k] * ch[j, k]
        d2 = -1 + ch[i, j] ** 2 + ch[i, l] ** 2 + ch[j, l] ** 2 + 2 * ch[i, j] * ch[i, l] * ch[j, l]
        if not (d1 > 0 and d2 > 0):
            raise HyperidealDomainError(f"non-positive face radicand at slot {s}")
        x = num / math.sqrt(d1 * d2)
        if abs(x) > 1.0:
            if abs(x) > 1.0 + 1e-9:
                raise HyperidealDomainError(
                    f"lengths do not bound a truncated tetrahedron: cos(theta) = {x:.12g} at slot {s}")
            x = math.copysign(1.0, x)
        out.append(math.acos(x))
    return out


def _check_angles(theta) -> list[float]:
    theta = _check_six(theta, "dihedral angles")
    for s, t in enumerate(theta):
        if not 0.0 <= t < PI:
            raise HyperidealDomainError(f"dihedral angle at slot {s} is {t}, outside [0, pi)")
    for v in range(4):
        sl = vertex_slots(v)
        if sum(theta[s] for s in sl) > PI + 1e-12:
            raise HyperidealDomainError(f"vertex {v} (slots {sl}): angle sum exceeds pi")
    return theta


def tet_volume_with_xi(theta: Sequence[float]) -> tuple[float, float]:
    theta = _check_angles(theta)
    alpha = alpha_from_dihedral(theta)
    xi = xi_real(alpha)
    return V_real(alpha, xi), xi


def tet_volume(theta: Sequence[float]) -> float:
    """Hyperbolic volume of the truncated tetrahedron with dihedral angles theta."""
    return tet_volume_with_xi(theta)[0]


def covolume(lengths: Sequence[float]) -> float:
    """Vol + (1/2) sum theta_i l_i as a function of the edge lengths."""
    theta = angles_from_lengths(lengths)
    return tet_volume(theta) + 0.5 * sum(t * l for t, l in zip(theta, lengths))


@dataclass
class HyperidealTet:
    theta: tuple[float, ...]
    lengths: tuple[float, ...]
    volume: float
    covolume: float

    @classmethod
    def from_angles(cls, theta) -> "HyperidealTet":
        theta = tuple(_check_angles(theta))
        lengths = tuple(lengths_from_angles(theta)) if any(theta) else (0.0,) * 6
        vol = tet_volume(theta)
        return cls(theta, lengths, vol, vol + 0.5 * sum(t * l for t, l in zip(theta, lengths)))

    @classmethod
    def from_lengths(cls, lengths) -> "HyperidealTet":
        lengths = tuple(_check_six(lengths, "edge lengths"))
        if not any(lengths):
            return cls((0.0,) * 6, lengths, V8, V8)
        theta = tuple(angles_from_lengths(lengths))
        vol = tet_volume(theta)
        return cls(theta, lengths, vol, vol + 0.5 * sum(t * l for t, l in zip(theta, lengths)))


# -- polyhedral metrics -----------------------------------------------------

LENGTH_FLOOR = 1e-8


@dataclass
class PolyhedralMetric:
    triangulation: Triangulation
    edge_lengths: tuple[float, ...]
    per_tet: tuple[HyperidealTet, ...]
    cone_angles: tuple[float, ...]
    total_volume: float
    residual: float = 0.0
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "edge_lengths": list(self.edge_lengths),
            "cone_angles": list(self.cone_angles),
            "total_volume": self.total_volume,
            "residual": self.residual,
            "iterations": self.iterations,
            "tetrahedra": [
                {"angles": list(t.theta), "lengths": list(t.lengths), "volume": t.volume, "covolume": t.covolume}
                for t in self.per_tet
            ],
        }


def tet_lengths(T: Triangulation, edge_lengths: Sequence[float]) -> list[list[float]]:
    return [[edge_lengths[e] for e in t] for t in T.tets]


def cone_angles(T: Triangulation, edge_lengths: Sequence[float]) -> np.ndarray:
    cone = np.zeros(T.num_edges)
    for t, ls in zip(T.tets, tet_lengths(T, edge_lengths)):
        for e, a in zip(t, angles_from_lengths(ls)):
            cone[e] += a
    return cone


def total_covolume(T: Triangulation, edge_lengths: Sequence[float]) -> float:
    return sum(covolume(ls) for ls in tet_lengths(T, edge_lengths))


def initial_lengths(T: Triangulation, target: Sequence[float]) -> np.ndarray:
    """Per-tet angles target/degree, lengths per tet, averaged over incident slots."""
    deg = T.edge_degrees
    acc = np.zeros(T.num_edges)
    for t in T.tets:
        ls = lengths_from_angles([target[e] / deg[e] for e in t])
        for e, l in zip(t, ls):
            acc[e] += l
    return np.maximum(acc / np.array(deg), LENGTH_FLOOR)


def _build_metric(T, l, residual=0.0, iterations=0) -> PolyhedralMetric:
    per_tet = tuple(HyperidealTet.from_lengths(ls) for ls in tet_lengths(T, l))
    cone = np.zeros(T.num_edges)
    for t, h in zip(T.tets, per_tet):
        for e, a in zip(t, h.theta):
            cone[e] += a
    return PolyhedralMetric(T, tuple(float(x) for x in l), per_tet, tuple(float(c) for c in cone),
                            float(sum(h.volume for h in per_tet)), residual, iterations)


def solve_polyhedral_metric(T: Triangulation, cone_target: Sequence[float], *, init=None,
                            tol: float = 1e-9, max_iter: int = 50) -> PolyhedralMetric:
    """Edge lengths whose dihedral angles sum to cone_target around every edge.

    Damped Newton on cone(l) - target with a central-difference Jacobian.
    In variational terms this is the critical point of
    sum_s Cov_s(l) - (1/2) sum_i target_i l_i.
    """
    target = np.asarray([float(x) for x in cone_target])
    if target.shape != (T.num_edges,):
        raise InputError(f"cone_target needs {T.num_edges} entries, got {target.size}")
    if np.any(target < 0) or not np.all(np.isfinite(target)):
        raise InputError("cone angles must be finite and non-negative")
    if not np.any(target):
        # every tetrahedron is the regular ideal octahedron
        return _build_metric(T, np.zeros(T.num_edges))

    try:
        l = np.asarray(init, dtype=float) if init is not None else initial_lengths(T, target)
    except HyperidealDomainError as exc:
        raise MetricSolverError(f"cone angles too large for the initial guess: {exc}") from None
    l = np.maximum(l, LENGTH_FLOOR)

    def residual(x):
        return cone_angles(T, x) - target

    try:
        F = residual(l)
    except HyperidealDomainError as exc:
        raise MetricSolverError(f"initial lengths outside the hyperideal domain: {exc}") from None
    norm = float(np.max(np.abs(F)))
    it = 0
    while norm >= tol:
        if it >= max_iter:
            raise MetricSolverError(f"no convergence after {max_iter} Newton steps (residual {norm:.3g})",
                                    estimate=norm)
        it += 1
        n = T.num_edges
        J = np.empty((n, n))
        for j in range(n):
            h = 1e-6 * (1 + abs(l[j]))
            lp, lm = l.copy(), l.copy()
            lp[j] += h
            lm[j] = max(lm[j] - h, 0.0)
            J[:, j] = (residual(lp) - residual(lm)) / (lp[j] - lm[j])
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        for _ in range(30):
            trial = np.maximum(l + lam * step, LENGTH_FLOOR)
            try:
                Ft = residual(trial)
            except HyperidealDomainError:
                lam *= 0.5
                continue
            nt = float(np.max(np.abs(Ft)))
            if nt < norm:
                break
            lam *= 0.5
        else:
            raise MetricSolverError(f"line search failed at step {it} (residual {norm:.3g})", estimate=norm)
        l, F, norm = trial, Ft, nt
        log.debug("newton step %d: residual %.3g, damping %.3g", it, norm, lam)
    return _build_metric(T, l, norm, it)
