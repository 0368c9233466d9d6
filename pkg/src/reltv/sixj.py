"""Quantum 6j-symbols at a root of unity and the edge weight H(a, b).

Slots follow ``triangulation``: the four admissibility triples are the
faces (0,1,2), (0,4,5), (1,3,5), (2,3,4) and the three quads are the
complements of the opposite pairs.
"""
from __future__ import annotations

import cmath
import math
import threading
from typing import Sequence

import mpmath

from .errors import DomainError, InputError
from .quantum_arith import QuantumContext, Root
from .triangulation import SLOT_FACES, SLOT_QUADS, TET_SYMMETRIES, apply_symmetry


class AdmissibilityError(DomainError):
    pass


def _check_colors(colors: Sequence[int], r: int):
    for a in colors:
        if not 0 <= a <= r - 2:
            raise InputError(f"color {a} outside [0, {r - 2}] for r={r}")


def is_admissible_triple(a: int, b: int, c: int, r: int) -> bool:
    _check_colors((a, b, c), r)
    return a + b >= c and b + c >= a and c + a >= b and a + b + c <= 2 * (r - 2) and (a + b + c) % 2 == 0


def is_admissible(t: Sequence[int], r: int) -> bool:
    if len(t) != 6:
        raise InputError("a 6j tuple needs 6 colors")
    return all(is_admissible_triple(*(t[i] for i in f), r) for f in SLOT_FACES)


def is_hyperideal_type(t: Sequence[int], r: int) -> bool:
    """Strict version of admissibility used for the potential formula."""
    if not is_admissible(t, r):
        return False
    for f in SLOT_FACES:
        x, y, z = (t[i] for i in f)
        if not (x + y - z < r - 2 and y + z - x < r - 2 and z + x - y < r - 2):
            return False
        if not r - 2 < x + y + z <= 2 * (r - 2):
            return False
    return True


def face_half_sums(t):
    return [sum(t[i] for i in f) // 2 for f in SLOT_FACES]


def quad_half_sums(t):
    return [sum(t[i] for i in q) // 2 for q in SLOT_QUADS]


def _require_admissible(t, r):
    if not is_admissible(t, r):
        raise AdmissibilityError(f"{tuple(t)} is not {r}-admissible")


_I_POW = (1, 1j, -1, -1j)


# -- double precision, from log-factorial tables ---------------------------

def _delta_log(a, b, c, logf, sgn):
    h = (a + b + c) // 2
    s = int(sgn[h - a]) * int(sgn[h - b]) * int(sgn[h - c]) * int(sgn[h + 1])
    return logf[h - a] + logf[h - b] + logf[h - c] - logf[h + 1], s


def delta_factor(a: int, b: int, c: int, ctx: QuantumContext):
    """sqrt([h-a]![h-b]![h-c]!/[h+1]!) with h the half sum; sqrt(x) = i sqrt|x| for x < 0."""
    if not is_admissible_triple(a, b, c, ctx.r):
        raise AdmissibilityError(f"({a},{b},{c}) is not {ctx.r}-admissible")
    if ctx.extended:
        return _delta_mp(a, b, c, ctx)
    lr, s = _delta_log(a, b, c, *ctx.factorial_tables)
    m = math.exp(0.5 * lr)
    return complex(m, 0.0) if s > 0 else complex(0.0, m)


def sixj_terms(t, ctx: QuantumContext):
    """(prefactor exponent e of i, log|prod Delta|, list of (sign, log|term|))."""
    logf, sgn = ctx.factorial_tables
    T, Q = face_half_sums(t), quad_half_sums(t)
    lrad, neg = 0.0, 0
    for f in SLOT_FACES:
        l, s = _delta_log(*(t[i] for i in f), logf, sgn)
        lrad += l
        neg += s < 0
    kmin, kmax = max(T), min(min(Q), ctx.r - 2)
    if kmin > kmax:
        raise AssertionError(f"empty summation range for admissible {tuple(t)}")
    terms = []
    for k in range(kmin, kmax + 1):
        lg = logf[k + 1] - sum(logf[k - x] for x in T) - sum(logf[y - k] for y in Q)
        s = (-1) ** k * int(sgn[k + 1])
        for x in T:
            s *= int(sgn[k - x])
        for y in Q:
            s *= int(sgn[y - k])
        terms.append((s, lg))
    e = (neg - sum(t)) % 4
    return e, 0.5 * lrad, terms


def _sixj_double(t, ctx) -> complex:
    e, lpre, terms = sixj_terms(t, ctx)
    m = max(lg for _, lg in terms)
    s = math.fsum(sg * math.exp(lg - m) for sg, lg in terms)
    return _I_POW[e] * (s * math.exp(lpre + m))


# -- extended precision ----------------------------------------------------

def _mp_factorials(ctx):
    return ctx.mp_factorial_table


def _mp_sqrt(x):
    return mpmath.sqrt(x) if x >= 0 else 1j * mpmath.sqrt(-x)


def _delta_mp(a, b, c, ctx, fac=None):
    with mpmath.workdps(ctx.dps):
        fac = fac or _mp_factorials(ctx)
        h = (a + b + c) // 2
        return _mp_sqrt(fac[h - a] * fac[h - b] * fac[h - c] / fac[h + 1])


def _sixj_mp(t, ctx):
    with mpmath.workdps(ctx.dps):
        fac = _mp_factorials(ctx)
        T, Q = face_half_sums(t), quad_half_sums(t)
        pre = mpmath.mpc(1)
        for f in SLOT_FACES:
            pre *= _delta_mp(*(t[i] for i in f), ctx, fac)
        s = mpmath.mpf(0)
        for k in range(max(T), min(min(Q), ctx.r - 2) + 1):
            term = (-1) ** k * fac[k + 1]
            for x in T:
                term /= fac[k - x]
            for y in Q:
                term /= fac[y - k]
            s += term
        return mpmath.mpc(_I_POW[(-sum(t)) % 4]) * pre * s


def sixj_direct(t: Sequence[int], ctx: QuantumContext):
    """The quantum 6j-symbol from the Racah-type single sum."""
    t = tuple(int(x) for x in t)
    _require_admissible(t, ctx.r)
    if ctx.extended:
        return _sixj_mp(t, ctx)
    return _sixj_double(t, ctx)


# -- the potential route ---------------------------------------------------

def potential_phase(t: Sequence[int], ctx: QuantumContext) -> complex:
    """Ratio between the literal potential sum and sixj_direct.

    The potential expression carries i^(sum a) less one factor of i for every
    face whose Delta radicand is negative.
    """
    logf, sgn = ctx.factorial_tables
    neg = sum(_delta_log(*(t[i] for i in f), logf, sgn)[1] < 0 for f in SLOT_FACES)
    return _I_POW[(sum(t) - neg) % 4]


def sixj_via_potential(t: Sequence[int], ctx: QuantumContext, raw: bool = False) -> complex:
    """6j-symbol as ({1}/2) sum_k exp(r/(4 pi i) U_r(2 pi a/r, 2 pi k/r)).

    Only tuples of hyperideal type are accepted.  The literal sum (``raw``)
    differs from sixj_direct by the unit ``potential_phase``; by default the
    phase is removed so the two routes agree.
    """
    from .potential import U_r  # potential depends on hypgeom only

    t = tuple(int(x) for x in t)
    if ctx.root is not Root.E2PIR:
        raise InputError("the potential route is defined for q = exp(2 pi i/r)")
    if not is_hyperideal_type(t, ctx.r):
        raise DomainError(f"{t} is not of hyperideal type for r={ctx.r}")
    r = ctx.r
    alpha = [2 * math.pi * a / r for a in t]
    T, Q = face_half_sums(t), quad_half_sums(t)
    tot = 0j
    for k in range(max(T), min(min(Q), r - 2) + 1):
        tot += cmath.exp(r / (4j * math.pi) * U_r(alpha, 2 * math.pi * k / r, r))
    val = (ctx.q - 1 / ctx.q) / 2 * tot
    return val if raw else val / potential_phase(t, ctx)


# -- edge weight -----------------------------------------------------------

def edge_weight_H(a: int, b: int, ctx: QuantumContext):
    """(-1)^(a+b) [(a+1)(b+1)]; real because |q| = 1."""
    _check_colors((a, b), ctx.r)
    n = (a + 1) * (b + 1)
    sign = -1 if (a + b) % 2 else 1
    if ctx.extended:
        with mpmath.workdps(ctx.dps):
            th = ctx.mp_angle()
            return sign * mpmath.sin(n * th) / mpmath.sin(th)
    return sign * math.sin(n * ctx.angle) / math.sin(ctx.angle)


# -- caching ---------------------------------------------------------------

def canonical_key(t: Sequence[int]) -> tuple:
    return min(apply_symmetry(t, g) for g in TET_SYMMETRIES)


class SixjCache:
    """Memo of 6j values for one context.

    Keys are raw tuples unless ``canonical`` is set, in which case the 24
    relabellings of a tetrahedron share one entry.
    """

    def __init__(self, ctx: QuantumContext, canonical: bool = False):
        self.ctx = ctx
        self.canonical = canonical
        self._store: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __call__(self, t) -> complex:
        key = canonical_key(t) if self.canonical else tuple(t)
        v = self._store.get(key)
        if v is not None:
            self.hits += 1
            return v
        v = sixj_direct(key, self.ctx)
        with self._lock:
            self._store.setdefault(key, v)
            self.misses += 1
        return v

    def __len__(self):
        return len(self._store)

    @property
    def hit_rate(self) -> float:
        n = self.hits + self.misses
        return self.hits / n if n else 0.0
