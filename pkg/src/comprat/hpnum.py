"""Configurable-precision scalars and dense polynomial arithmetic.

Every numeric routine in comprat runs under a :class:`PrecisionCtx`. A ctx
owns a private :class:`mpmath.ctx_mp.MPContext`, so computations under
different precisions never touch mpmath's global state and results depend
only on the ctx and the operands.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

from mpmath.ctx_mp import MPContext

from .errors import DomainError

DEFAULT_BITS = 256
ENV_PRECISION = "COMPRAT_PRECISION_BITS"


@functools.lru_cache(maxsize=None)
def _mpcontext(bits: int) -> MPContext:
    # One shared context per precision; its prec is never mutated afterwards.
    mp = MPContext()
    mp.prec = bits
    return mp


@dataclass(frozen=True)
class PrecisionCtx:
    """Working precision, in significand bits.

    mpmath exponents are arbitrary-size integers, so magnitudes far below
    10**(-10**6) stay representable without special handling.
    """

    significand_bits: int = DEFAULT_BITS

    def __post_init__(self):
        if not isinstance(self.significand_bits, int) or self.significand_bits < 64:
            raise DomainError(
                f"significand_bits must be an integer >= 64, got {self.significand_bits!r}"
            )

    @classmethod
    def from_env(cls, default: int = DEFAULT_BITS) -> "PrecisionCtx":
        raw = os.environ.get(ENV_PRECISION)
        if raw is None or raw.strip() == "":
            return cls(default)
        try:
            bits = int(raw)
        except ValueError:
            raise DomainError(f"{ENV_PRECISION}={raw!r} is not an integer") from None
        return cls(bits)

    @property
    def mp(self) -> MPContext:
        return _mpcontext(self.significand_bits)

    @property
    def eps(self):
        """Unit roundoff 2**-significand_bits."""
        return self.mp.ldexp(self.mp.one, -self.significand_bits)

    def mpf(self, x):
        """Convert ``x`` (int, float, decimal string, or mpf of any ctx)."""
        return self.mp.mpf(x)

    def mpc(self, re, im=0):
        return self.mp.mpc(re, im)

    def tol(self, fraction: float):
        """``2**(-significand_bits * fraction)``, e.g. ``tol(0.5)`` for half precision."""
        return self.mp.ldexp(self.mp.one, -int(self.significand_bits * fraction))

    def digits(self) -> int:
        """Decimal digits used when printing numbers under this ctx."""
        return max(1, int(self.significand_bits / 3.3))

    def nstr(self, x) -> str:
        return self.mp.nstr(x, self.digits())


def nth_root(x, p: int, ctx: PrecisionCtx):
    """Real p-th root of ``x >= 0`` by Newton's method on ``y**p = x``.

    The binary exponent of ``x`` is split off first so Newton starts from a
    53-bit float guess on a mantissa in ``[1/2, 2**(p-1))``. Iterations run
    with 32 guard bits and the result is rounded to ``ctx``.
    """
    if p < 1:
        raise DomainError(f"root order must be >= 1, got {p}")
    x = ctx.mpf(x)
    if x < 0:
        raise DomainError("nth_root requires x >= 0")
    if x == 0 or p == 1:
        return x
    work = _mpcontext(ctx.significand_bits + 32)
    xw = work.mpf(x)
    man, exp = work.frexp(xw)
    q, r = divmod(exp, p)
    scaled = work.ldexp(man, r)
    y = work.mpf(float(scaled) ** (1.0 / p))
    # Quadratic convergence from 53 bits; a few extra sweeps for safety.
    sweeps = math.ceil(math.log2(work.prec / 50.0)) + 3
    for _ in range(sweeps):
        y = ((p - 1) * y + scaled / y ** (p - 1)) / p
    return ctx.mpf(work.ldexp(y, q))


@dataclass(frozen=True)
class Poly:
    """Dense polynomial with ascending coefficients under a ctx.

    Build through :meth:`make` so that trailing structural zeros are trimmed.
    """

    coeffs: tuple
    ctx: PrecisionCtx

    @classmethod
    def make(cls, coeffs: Iterable, ctx: PrecisionCtx) -> "Poly":
        return cls(_trim(tuple(ctx.mpf(c) for c in coeffs), ctx), ctx)

    @classmethod
    def const(cls, c, ctx: PrecisionCtx) -> "Poly":
        return cls.make([c], ctx)

    @classmethod
    def x(cls, ctx: PrecisionCtx) -> "Poly":
        return cls.make([0, 1], ctx)

    @property
    def degree(self) -> int:
        """Index of the last nonzero coefficient; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def scale(self, c) -> "Poly":
        c = self.ctx.mpf(c)
        return Poly.make([c * a for a in self.coeffs], self.ctx)

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        zero = self.ctx.mp.zero
        a = self.coeffs + (zero,) * (n - len(self.coeffs))
        b = other.coeffs + (zero,) * (n - len(other.coeffs))
        return Poly.make([u + v for u, v in zip(a, b)], self.ctx)

    def __mul__(self, other: "Poly") -> "Poly":
        return poly_mul(self, other)

    def __call__(self, x):
        return poly_eval(self, x)


def _trim(coeffs: Sequence, ctx: PrecisionCtx) -> tuple:
    if not coeffs:
        return ()
    big = max(abs(c) for c in coeffs)
    if big == 0:
        return ()
    cut = big * ctx.tol(0.5)
    n = len(coeffs)
    while n > 0 and (coeffs[n - 1] == 0 or abs(coeffs[n - 1]) < cut):
        n -= 1
    return tuple(coeffs[:n])


def poly_mul(a: Poly, b: Poly) -> Poly:
    if not a.coeffs or not b.coeffs:
        return Poly((), a.ctx)
    mp = a.ctx.mp
    ac, bc = a.coeffs, b.coeffs
    na, nb = len(ac), len(bc)
    out = []
    for k in range(na + nb - 1):
        lo = max(0, k - nb + 1)
        hi = min(k, na - 1)
        out.append(mp.fdot([(ac[i], bc[k - i]) for i in range(lo, hi + 1)]))
    return Poly.make(out, a.ctx)


def poly_pow(a: Poly, e: int) -> Poly:
    if e < 0:
        raise DomainError("poly_pow needs a nonnegative exponent")
    result = Poly.const(1, a.ctx)
    base = a
    while e:
        if e & 1:
            result = poly_mul(result, base)
        e >>= 1
        if e:
            base = poly_mul(base, base)
    return result


def poly_eval(a: Poly, x):
    """Horner evaluation; ``x`` may be real or complex."""
    mp = a.ctx.mp
    x = mp.convert(x)
    acc = mp.zero
    for c in reversed(a.coeffs):
        acc = acc * x + c
    return acc
