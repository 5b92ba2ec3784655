"""Composite rational approximants to x**(1/p) and to the p-sector function.

The lowest-order scaled Newton-type recursion, for ``j = 0, ..., k-1``::

    f_{j+1}(x) = ((p-1) mu_j f_j(x) + x / (mu_j**(p-1) f_j(x)**(p-1))) / p,  f_0 = 1
    alpha_{j+1} = H(alpha_j)

with ``mu_j = mu(alpha_j)``. After ``k`` steps the rescaled function
``ftilde_k = 2 alpha_k / (1 + alpha_k) * f_k`` has relative error on
``[alpha**p, 1]`` that equioscillates at level ``(1 - alpha_k) / (1 + alpha_k)``.

The sector approximant ``g_k(z) = z / f_k(z**p)`` obeys the pure composition
``g_{j+1} = shat(g_j, alpha_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

from .errors import DomainError, ExpansionCapError, PrecisionInsufficientError, SingularityError
from .hpnum import Poly, PrecisionCtx, nth_root, poly_mul, poly_pow

DEFAULT_EXPANSION_CAP = 4096


def _check_alpha(alpha, p: int) -> None:
    if p < 2:
        raise DomainError(f"root order p must be >= 2, got {p}")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def mu(alpha, p: int, ctx: PrecisionCtx | None = None):
    """Return ``((alpha - alpha**p) / ((p-1)(1-alpha)))**(1/p)``.

    The quotient is formed as ``alpha * (1 + alpha + ... + alpha**(p-2)) / (p-1)``
    so nothing cancels as ``alpha -> 1``.
    """
    ctx = ctx or PrecisionCtx()
    mp = ctx.mp
    alpha = ctx.mpf(alpha)
    _check_alpha(alpha, p)
    geometric = mp.fsum(alpha**j for j in range(p - 1))
    return mp.root(alpha * geometric / (p - 1), p)


def _shat(x, m, p: int):
    """``p x / ((p-1) mu + mu**(1-p) x**p)`` for a precomputed ``mu``."""
    den = (p - 1) * m + x**p / m ** (p - 1)
    if den == 0:
        raise SingularityError("sector step denominator vanished")
    return p * x / den


def alpha_step(alpha, p: int, ctx: PrecisionCtx | None = None):
    """One step ``alpha -> H(alpha) = shat(alpha, alpha)``."""
    ctx = ctx or PrecisionCtx()
    alpha = ctx.mpf(alpha)
    m = mu(alpha, p, ctx)
    return _shat(alpha, m, p)


@dataclass(frozen=True)
class Approximant:
    """The data of ``f_k``: root order, recursion count and the alpha/mu sequences.

    Build with :func:`make_approximant`.
    """

    p: int
    k: int
    alpha0: object
    alphas: tuple
    mus: tuple
    ctx: PrecisionCtx

    @property
    def alpha_k(self):
        return self.alphas[-1]

    @property
    def scale(self):
        """Factor ``2 alpha_k / (1 + alpha_k)`` turning ``f_k`` into ``ftilde_k``."""
        a = self.alpha_k
        return 2 * a / (1 + a)

    @property
    def sector_scale(self):
        return 2 / (1 + self.alpha_k)

    @property
    def eps(self):
        return rel_error_bound(self)

    @cached_property
    def _steps(self) -> tuple:
        # Per-step constants c1 = (p-1) mu / p and c2 = 1 / (p mu**(p-1)).
        p = self.p
        return tuple(((p - 1) * m / p, 1 / (p * m ** (p - 1))) for m in self.mus)


def make_approximant(p: int, alpha0, k: int, ctx: PrecisionCtx | None = None) -> Approximant:
    ctx = ctx or PrecisionCtx()
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    a = ctx.mpf(alpha0)
    _check_alpha(a, p)
    alphas = [a]
    mus = []
    for j in range(k):
        if a >= 1:
            raise PrecisionInsufficientError(
                f"alpha_{j} rounds to 1 at {ctx.significand_bits} bits; raise significand_bits"
            )
        m = mu(a, p, ctx)
        a = _shat(a, m, p)
        mus.append(m)
        alphas.append(a)
    return Approximant(p, k, ctx.mpf(alpha0), tuple(alphas), tuple(mus), ctx)


def _nonneg(A: Approximant, x):
    x = A.ctx.mpf(x)
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    return x


def eval_f(A: Approximant, x):
    """Unscaled ``f_k(x)`` for ``x >= 0``; ``f_k(0)`` comes from the product formula."""
    x = _nonneg(A, x)
    p = A.p
    if x == 0:
        val = A.ctx.mp.one
        for m in A.mus:
            val = val * (p - 1) * m / p
        return val
    f = A.ctx.mp.one
    for c1, c2 in A._steps:
        f = c1 * f + c2 * x / f ** (p - 1)
    return f


def eval_f_scaled(A: Approximant, x):
    return A.scale * eval_f(A, x)


def rel_error_bound(A: Approximant):
    """Equioscillation level ``(1 - alpha_k) / (1 + alpha_k)``."""
    a = A.alpha_k
    return (1 - a) / (1 + a)


def pth_root(x, p: int, ctx: PrecisionCtx):
    """Reference value of ``x**(1/p)``, computed independently of the approximant."""
    return nth_root(x, p, ctx)


def rescale_domain(A: Approximant, s) -> Callable:
    """Approximant to ``x**(1/p)`` on ``[0, s]``: ``x -> s**(1/p) ftilde_k(x / s)``."""
    ctx = A.ctx
    s = ctx.mpf(s)
    if s <= 0:
        raise DomainError(f"domain length s must be positive, got {s}")
    root_s = pth_root(s, A.p, ctx)

    def evaluator(x):
        return root_s * eval_f_scaled(A, ctx.mpf(x) / s)

    return evaluator


# -- sector function ----------------------------------------------------------


@dataclass(frozen=True)
class SectorEvaluator:
    """``g_k`` (``scaled=False``) or ``gtilde_k = 2 g_k / (1 + alpha_k)``."""

    approximant: Approximant
    scaled: bool = True


def sector(A: Approximant, scaled: bool = True) -> SectorEvaluator:
    return SectorEvaluator(A, scaled)


def eval_sector(S: SectorEvaluator, z):
    """Evaluate ``g_k(z)`` or ``gtilde_k(z)`` at a real or complex point."""
    A = S.approximant
    mp = A.ctx.mp
    g = mp.convert(z)
    for m in A.mus:
        g = _shat(g, m, A.p)
    if S.scaled:
        g = A.sector_scale * g
    return g


def sect(z, p: int, ctx: PrecisionCtx):
    """``z / (z**p)**(1/p)`` on the principal branch."""
    mp = ctx.mp
    z = mp.convert(z)
    if z == 0:
        raise DomainError("the sector function is undefined at 0")
    return z / mp.root(z**p, p)


# -- explicit rational form ---------------------------------------------------


@dataclass(frozen=True)
class RationalForm:
    """``scale * num(x) / den(x)`` with ``den`` monic."""

    num: Poly
    den: Poly
    scale: object

    @property
    def degrees(self) -> tuple[int, int]:
        return self.num.degree, self.den.degree

    def __call__(self, x):
        return self.scale * self.num(x) / self.den(x)


def _monic(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    lead = den.coeffs[-1]
    return num.scale(1 / lead), den.scale(1 / lead)


def expand(A: Approximant, scaled: bool = True, cap: int = DEFAULT_EXPANSION_CAP) -> RationalForm:
    """Explicit numerator and denominator of ``f_k``, of type ``(p**(k-1), p**(k-1) - 1)``.

    Uses ``num' = (p-1) mu**p num**p + x den**p`` and
    ``den' = p mu**(p-1) num**(p-1) den``.
    """
    p, ctx = A.p, A.ctx
    if A.k >= 1 and p ** (A.k - 1) > cap:
        raise ExpansionCapError(f"degree p**(k-1) = {p ** (A.k - 1)} exceeds cap {cap}")
    one = Poly.const(1, ctx)
    xpoly = Poly.x(ctx)
    num, den = one, one
    for m in A.mus:
        num_pm1 = poly_pow(num, p - 1)
        num_p = poly_mul(num_pm1, num)
        new_num = num_p.scale((p - 1) * m**p) + poly_mul(xpoly, poly_pow(den, p))
        new_den = poly_mul(num_pm1, den).scale(p * m ** (p - 1))
        num, den = _monic(new_num, new_den)
    scale = A.scale if scaled else ctx.mp.one
    return RationalForm(num, den, scale)


def expand_sector(A: Approximant, scaled: bool = True, cap: int = DEFAULT_EXPANSION_CAP) -> RationalForm:
    """Explicit form of ``g_k``, of type ``(p**k - p + 1, p**k)``."""
    p, ctx = A.p, A.ctx
    if p**A.k > cap:
        raise ExpansionCapError(f"degree p**k = {p ** A.k} exceeds cap {cap}")
    num, den = Poly.x(ctx), Poly.const(1, ctx)
    for m in A.mus:
        den_pm1 = poly_pow(den, p - 1)
        new_num = poly_mul(num, den_pm1).scale(p)
        new_den = poly_mul(den_pm1, den).scale((p - 1) * m) + poly_pow(num, p).scale(1 / m ** (p - 1))
        num, den = _monic(new_num, new_den)
    scale = A.sector_scale if scaled else ctx.mp.one
    return RationalForm(num, den, scale)
