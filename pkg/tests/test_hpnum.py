import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from comprat.errors import DomainError
from comprat.hpnum import Poly, PrecisionCtx, nth_root, poly_eval, poly_mul, poly_pow


def P(coeffs, ctx):
    return Poly.make(coeffs, ctx)


def test_ctx_validation():
    assert PrecisionCtx().significand_bits == 256
    with pytest.raises(DomainError):
        PrecisionCtx(32)


def test_ctx_from_env(monkeypatch):
    monkeypatch.setenv("COMPRAT_PRECISION_BITS", "384")
    assert PrecisionCtx.from_env().significand_bits == 384
    monkeypatch.setenv("COMPRAT_PRECISION_BITS", "lots")
    with pytest.raises(DomainError):
        PrecisionCtx.from_env()


def test_contexts_are_independent():
    lo, hi = PrecisionCtx(64), PrecisionCtx(512)
    third = hi.mpf(1) / 3
    assert abs(third * 3 - 1) < hi.tol(0.9)
    assert lo.mp.prec == 64 and hi.mp.prec == 512
    assert mpmath.mp.prec == 53


def test_tiny_magnitudes_representable(ctx):
    x = ctx.mpf("1e-1000000")
    assert x > 0 and x * x > 0


def test_poly_mul_examples(ctx):
    assert poly_mul(P([1, 1], ctx), P([1, -1], ctx)).coeffs == P([1, 0, -1], ctx).coeffs
    a = P([3, 0, 2], ctx)
    assert poly_mul(a, P([1], ctx)).coeffs == a.coeffs
    sq = poly_mul(P(["0.25", 1], ctx), P(["0.25", 1], ctx))
    assert sq.coeffs == (ctx.mpf("0.0625"), ctx.mpf("0.5"), ctx.mpf(1))


def test_poly_pow_examples(ctx):
    assert poly_pow(P([0, 0, 0, 1], ctx), 2).coeffs == P([0] * 6 + [1], ctx).coeffs
    assert poly_pow(P([5, 7], ctx), 0).coeffs == (1,)
    assert poly_pow(P([1, 1], ctx), 2).coeffs == (1, 2, 1)
    with pytest.raises(DomainError):
        poly_pow(P([1], ctx), -1)


def test_poly_eval_examples(ctx):
    assert poly_eval(P([1, 0, -1], ctx), 1) == 0
    assert poly_eval(P(["0.25", 1], ctx), 1) == ctx.mpf("1.25")
    assert poly_eval(P([0, 1], ctx), ctx.mpc(0, 1)) == ctx.mpc(0, 1)


def test_degree_and_trimming(ctx):
    assert P([1, 2, 0, 0], ctx).degree == 1
    assert P([], ctx).degree == -1
    assert P([0, 0], ctx).degree == -1
    # Roundoff-sized leading coefficient is a structural zero.
    assert P([1, 1, ctx.tol(0.6)], ctx).degree == 1
    assert P([1, 1, ctx.tol(0.4)], ctx).degree == 2


coeff = st.integers(-(10**6), 10**6).map(lambda n: n / 1000)


@settings(max_examples=60, deadline=None)
@given(st.lists(coeff, min_size=1, max_size=8), st.lists(coeff, min_size=1, max_size=8),
       st.integers(-1000, 1000).map(lambda n: n / 997))
def test_mul_eval_homomorphism(a, b, x):
    ctx = PrecisionCtx(256)
    pa, pb = P(a, ctx), P(b, ctx)
    lhs = poly_eval(poly_mul(pa, pb), x)
    rhs = poly_eval(pa, x) * poly_eval(pb, x)
    # Horner error scales with the absolute coefficient sum, not the value.
    scale = poly_eval(P([abs(c) for c in a], ctx), abs(x)) * poly_eval(P([abs(c) for c in b], ctx), abs(x))
    assert abs(lhs - rhs) <= ctx.mp.ldexp(scale + 1, -256 + 10)


@pytest.mark.parametrize("p", [2, 3, 5, 31])
@pytest.mark.parametrize("x", ["0", "1", "0.5", "1e-70", "123.456", "1e300"])
def test_nth_root_against_mpmath(ctx, p, x):
    ref = ctx.mp.root(ctx.mpf(x), p)
    got = nth_root(x, p, ctx)
    assert abs(got - ref) <= ctx.mp.ldexp(abs(ref), -250)


def test_nth_root_domain(ctx):
    with pytest.raises(DomainError):
        nth_root(-1, 2, ctx)


def test_precision_refinement_consistent():
    lo, hi = PrecisionCtx(256), PrecisionCtx(512)
    a = nth_root("0.3", 7, lo)
    b = nth_root("0.3", 7, hi)
    assert abs(hi.mpf(a) - b) < hi.mp.ldexp(1, -250)
