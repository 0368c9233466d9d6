"""Arithmetic at a root of unity: quantum integers, factorials and phi_r.

Two roots are supported: q = exp(2 pi i / r) with r odd (the default) and
q = exp(pi i / r).  In both cases [n] = sin(n t) / sin(t) with t the
argument of q, so quantum integers and factorials are real.
"""
from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import mpmath
import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import ConvergenceError, DomainError, InputError

EXTENDED_DPS = 32
CONTOUR_RADIUS = 0.5


class Root(enum.Enum):
    E2PIR = "2pir"
    EPIR = "pir"


class Precision(enum.Enum):
    DOUBLE = "double"
    EXTENDED = "extended"


@dataclass(frozen=True)
class QuantumContext:
    r: int
    root: Root = Root.E2PIR
    precision: Precision = Precision.DOUBLE
    dps: int = EXTENDED_DPS  # decimal digits used on the extended path

    def __post_init__(self):
        object.__setattr__(self, "root", Root(self.root))
        object.__setattr__(self, "precision", Precision(self.precision))
        if isinstance(self.r, bool) or not isinstance(self.r, int) or self.r < 3:
            raise InputError(f"r must be an integer >= 3, got {self.r!r}")
        # q^2 = exp(4 pi i/r) is primitive of order r iff gcd(2, r) = 1;
        # for q = exp(pi i/r), q^2 = exp(2 pi i/r) is always primitive.
        if self.root is Root.E2PIR and math.gcd(2, self.r) != 1:
            raise InputError(f"q = exp(2 pi i/r) needs odd r, got r={self.r}")

    @property
    def angle(self) -> float:
        return (2 if self.root is Root.E2PIR else 1) * math.pi / self.r

    @property
    def q(self) -> complex:
        return cmath.exp(1j * self.angle)

    @property
    def extended(self) -> bool:
        return self.precision is Precision.EXTENDED

    @cached_property
    def qint_table(self) -> np.ndarray:
        """[n] for n = 0..r."""
        n = np.arange(self.r + 1)
        tab = np.sin(n * self.angle) / math.sin(self.angle)
        tab[self.r] = 0.0  # exact zero, not 1e-16
        return tab

    @cached_property
    def factorial_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """(log|[n]!|, sign [n]!) for n = 0..r; [r]! = 0 has log -inf."""
        q = self.qint_table
        logf = np.zeros(self.r + 1)
        sgn = np.ones(self.r + 1, dtype=np.int8)
        for n in range(1, self.r + 1):
            if q[n] == 0.0:
                logf[n], sgn[n] = -np.inf, 0
            else:
                logf[n] = logf[n - 1] + math.log(abs(q[n]))
                sgn[n] = sgn[n - 1] * (1 if q[n] > 0 else -1)
        return logf, sgn

    def mp_angle(self):
        return (2 if self.root is Root.E2PIR else 1) * mpmath.pi / self.r

    def with_dps(self, dps: int) -> "QuantumContext":
        return QuantumContext(self.r, self.root, Precision.EXTENDED, max(int(dps), self.dps))

    @cached_property
    def mp_factorial_table(self) -> list:
        """[n]! for n = 0..r-1 as mpf at ``dps`` digits."""
        with mpmath.workdps(self.dps):
            t = self.mp_angle()
            st = mpmath.sin(t)
            f = [mpmath.mpf(1)]
            for n in range(1, self.r):
                f.append(f[-1] * mpmath.sin(n * t) / st)
        return f


def default_context(r: int) -> QuantumContext:
    return QuantumContext(r)


def quantum_integer(a: int, ctx: QuantumContext):
    if not 0 <= a <= ctx.r:
        raise InputError(f"quantum integer index {a} outside [0, {ctx.r}]")
    if ctx.extended:
        with mpmath.workdps(ctx.dps):
            t = ctx.mp_angle()
            return mpmath.sin(a * t) / mpmath.sin(t)
    return float(ctx.qint_table[a])


def quantum_factorial(n: int, ctx: QuantumContext):
    if not 0 <= n <= ctx.r - 1:
        raise InputError(f"factorial index {n} outside [0, {ctx.r - 1}]")
    if ctx.extended:
        return +ctx.mp_factorial_table[n]
    logf, sgn = ctx.factorial_tables
    return float(sgn[n]) * math.exp(logf[n])


def bracket_factorial(n: int, ctx: QuantumContext):
    """{n}! = prod_{k<=n} (q^k - q^-k), a direct product (no tables)."""
    if not 0 <= n <= ctx.r - 1:
        raise InputError(f"factorial index {n} outside [0, {ctx.r - 1}]")
    if ctx.extended:
        with mpmath.workdps(ctx.dps):
            t = ctx.mp_angle()
            p = mpmath.mpc(1)
            for k in range(1, n + 1):
                p *= 2j * mpmath.sin(k * t)
            return p
    p = 1 + 0j
    q = ctx.q
    for k in range(1, n + 1):
        p *= q**k - q**-k
    return p


# -- quantum dilogarithm ----------------------------------------------------

def _phi_pieces(z: complex, r: int, tol: float, eps: float):
    """Quadrature pieces of the contour integral, folded onto [eps, inf).

    With a = 2z - pi and c = 2 pi / r the integrand is
    e^{a x} / (4 x sinh(pi x) sinh(c x)); the two rays combine into the odd
    part, written so that nothing overflows for large x.
    """
    a = 2 * z - math.pi
    c = 2 * math.pi / r

    def ray(x):
        num = cmath.exp((a - math.pi - c) * x) - cmath.exp(-(a + math.pi + c) * x)
        den = -math.expm1(-2 * math.pi * x) * -math.expm1(-2 * c * x) * x
        return num / den

    def arc(t):
        # upper semicircle |x| = eps traversed from -eps to +eps
        x = eps * cmath.exp(1j * t)
        return -cmath.exp(a * x) / (4 * cmath.sinh(math.pi * x) * cmath.sinh(c * x)) * 1j

    opts = dict(epsabs=tol, epsrel=tol, limit=400)
    # quad warns when roundoff caps the accuracy of a near-zero piece; the
    # error estimates are returned and checked by the caller instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        parts = [
            quad(lambda x: ray(x).real, eps, np.inf, **opts),
            quad(lambda x: ray(x).imag, eps, np.inf, **opts),
            quad(lambda t: arc(t).real, 0.0, math.pi, **opts),
            quad(lambda t: arc(t).imag, 0.0, math.pi, **opts),
        ]
    val = complex(parts[0][0] + parts[2][0], parts[1][0] + parts[3][0])
    err = math.hypot(parts[0][1] + parts[2][1], parts[1][1] + parts[3][1])
    return val, err


def _check_strip(z: complex, r: int):
    if not -math.pi / r < z.real < math.pi + math.pi / r:
        raise DomainError(f"phi_r needs -pi/r < Re z < pi + pi/r, got Re z = {z.real:.6g} (r={r})")


@lru_cache(maxsize=65536)
def _phi_cached(z: complex, r: int, tol: float, eps: float):
    pre = 4j * math.pi / r
    val, err = _phi_pieces(z, r, tol, eps)
    return pre * val, abs(pre) * err


def phi_r_with_error(z, r: int, tol: float = 1e-13, eps: float = CONTOUR_RADIUS, target: float = 1e-10):
    """phi_r(z) and the quadrature error estimate.

    Raises ConvergenceError when the estimate exceeds ``target``.
    """
    z = complex(z)
    _check_strip(z, r)
    val, err = _phi_cached(z, int(r), float(tol), float(eps))
    if not err <= target:
        raise ConvergenceError(f"phi_r({z}, r={r}) quadrature error estimate {err:.3g} above {target:g}", estimate=err)
    return val, err


def phi_r(z, r: int, tol: float = 1e-13, eps: float = CONTOUR_RADIUS) -> complex:
    return phi_r_with_error(z, r, tol=tol, eps=eps)[0]


def phi_r_extended(z, r: int, dps: int = EXTENDED_DPS):
    """phi_r(z) with mpmath quadrature at ``dps`` digits (slow; for oracles)."""
    z = complex(z)
    _check_strip(z, r)
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z.real, z.imag)
        a = 2 * zz - mpmath.pi
        c = 2 * mpmath.pi / r
        eps = mpmath.mpf(CONTOUR_RADIUS)

        def ray(x):
            return (mpmath.exp((a - mpmath.pi - c) * x) - mpmath.exp(-(a + mpmath.pi + c) * x)) / (
                -mpmath.expm1(-2 * mpmath.pi * x) * -mpmath.expm1(-2 * c * x) * x)

        def arc(t):
            x = eps * mpmath.expj(t)
            return -mpmath.exp(a * x) / (4 * mpmath.sinh(mpmath.pi * x) * mpmath.sinh(c * x)) * 1j

        val = mpmath.quad(ray, [eps, 2, 8, 32, mpmath.inf]) + mpmath.quad(arc, [0, mpmath.pi / 2, mpmath.pi])
        return 4j * mpmath.pi / r * val


def phi_cache_clear():
    _phi_cached.cache_clear()


# -- factorial identities ---------------------------------------------------

def _identity_rhs(n: int, r: int, shift: float) -> complex:
    x = 2 * math.pi * n / r
    c = 2 * math.pi / r
    expo = -2 * math.pi * x + c * c * (n * n + n) + phi_r(math.pi / r, r) - phi_r(x + math.pi / r + shift, r)
    return cmath.exp(r / (4j * math.pi) * expo)


def factorial_identity_value(n: int, ctx: QuantumContext, variant: int) -> complex:
    """Right-hand side of the phi_r expression for {n}!.

    Variant 1 uses phi_r(2 pi n/r + pi/r); variant 2 moves the argument
    back by pi and carries a factor 2.
    """
    if ctx.root is not Root.E2PIR:
        raise InputError("factorial identities are stated for q = exp(2 pi i/r)")
    if variant == 1:
        return _identity_rhs(n, ctx.r, 0.0)
    if variant == 2:
        return 2 * _identity_rhs(n, ctx.r, -math.pi)
    raise InputError(f"unknown variant {variant}")


def identity_variants(n: int, r: int) -> tuple[int, ...]:
    """Variants whose phi_r argument stays inside the strip for this n."""
    out = []
    if 0 <= n <= (r - 1) // 2:
        out.append(1)
    if (r - 1) // 2 <= n <= r - 2:
        out.append(2)
    return tuple(out)


def factorial_identity_residual(n: int, ctx: QuantumContext, variant: int | None = None):
    """Relative difference between {n}! and its phi_r expression.

    With ``variant=None`` returns a dict {variant: residual} over every
    variant that applies to n (both in the overlap n = (r-1)/2).
    """
    if not 0 <= n <= ctx.r - 2:
        raise InputError(f"n={n} outside [0, {ctx.r - 2}]")
    exact = bracket_factorial(n, QuantumContext(ctx.r, ctx.root))
    variants = identity_variants(n, ctx.r) if variant is None else (variant,)
    res = {v: abs(factorial_identity_value(n, ctx, v) / exact - 1) for v in variants}
    return res if variant is None else res[variant]
