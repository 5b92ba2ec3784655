"""Error scans, alpha balancing, rate calculators and convergence studies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .core import (
    Approximant,
    alpha_step,
    eval_f_scaled,
    eval_sector,
    make_approximant,
    pth_root,
    rel_error_bound,
    sector,
)
from .errors import ConvergenceError, DomainError, PrecisionInsufficientError
from .hpnum import PrecisionCtx

DEFAULT_SAMPLES = 10_000
DEFAULT_REL_TOL = 1e-10

# Smallest integers making predict_k an upper bound on the empirically needed
# k over eps in {1e-4, 1e-8, 1e-12}; regenerate with calibrate_k2_tilde.
K2_TILDE = {2: -2, 3: -2, 5: -4}
CALIBRATION_EPS = ("1e-4", "1e-8", "1e-12")

SPACINGS = ("linear", "root", "geometric")


@dataclass(frozen=True)
class ErrorReport:
    max_err: object
    arg_max: object
    interval: tuple
    samples: int
    refined: bool
    metric: str


# -- scanning machinery -------------------------------------------------------


def _grid_map(lo, hi, spacing: str, p: int, ctx: PrecisionCtx) -> Callable:
    """Map ``s in [0, 1]`` onto ``[lo, hi]``.

    ``root`` is uniform in ``x**(1/p)``, ``geometric`` uniform in ``log x``.
    """
    mp = ctx.mp
    if spacing == "linear":
        return lambda s: lo + (hi - lo) * s
    if spacing == "root":
        a, b = pth_root(lo, p, ctx), pth_root(hi, p, ctx)

        def to_x(s):
            if s >= 1:
                return hi
            return (a + (b - a) * s) ** p if s > 0 else lo

        return to_x
    if spacing == "geometric":
        if lo <= 0:
            raise DomainError("geometric spacing needs lo > 0")
        la, lb = mp.log(lo), mp.log(hi)

        def to_x(s):
            if s <= 0:
                return lo
            if s >= 1:
                return hi
            return mp.exp(la + (lb - la) * s)

        return to_x
    raise DomainError(f"unknown spacing {spacing!r}; expected one of {SPACINGS}")


def _golden_max(h: Callable, a, b, tol, mp):
    """Maximize ``h`` on ``[a, b]`` by golden-section search; returns ``(s, h(s))``."""
    invphi = (mp.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    hc, hd = h(c), h(d)
    while b - a > tol:
        if hc >= hd:
            b, d, hd = d, c, hc
            c = b - invphi * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + invphi * (b - a)
            hd = h(d)
    return (c, hc) if hc >= hd else (d, hd)


def scan_function(
    err: Callable,
    lo,
    hi,
    n_samples: int,
    ctx: PrecisionCtx,
    *,
    spacing: str = "linear",
    p: int = 2,
    metric: str = "absolute",
    refine: bool = True,
    n_refine: int = 3,
) -> ErrorReport:
    """Maximize a nonnegative error function over ``[lo, hi]``.

    Sample a grid (endpoints included), then golden-section refine the
    neighbourhoods of the ``n_refine`` largest local grid maxima until the
    bracket is narrower than ``2**(-bits/4)`` in the grid parameter.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")
    mp = ctx.mp
    lo, hi = ctx.mpf(lo), ctx.mpf(hi)
    if not lo < hi:
        raise DomainError(f"empty scan interval [{lo}, {hi}]")
    to_x = _grid_map(lo, hi, spacing, p, ctx)
    n = n_samples - 1
    ss = [mp.mpf(i) / n for i in range(n_samples)]
    xs = [to_x(s) for s in ss]
    vals = [err(x) for x in xs]

    best = max(range(n_samples), key=lambda i: (vals[i], -i))
    best_x, best_v = xs[best], vals[best]
    if refine:
        peaks = [
            i
            for i in range(n_samples)
            if (i == 0 or vals[i] >= vals[i - 1]) and (i == n or vals[i] >= vals[i + 1])
        ]
        peaks.sort(key=lambda i: (-vals[i], i))
        tol = ctx.tol(0.25)
        for i in peaks[:n_refine]:
            a, b = ss[max(i - 1, 0)], ss[min(i + 1, n)]
            s, v = _golden_max(lambda t: err(to_x(t)), a, b, tol, mp)
            if v > best_v:
                best_x, best_v = to_x(s), v
    return ErrorReport(best_v, best_x, (lo, hi), n_samples, refine, metric)


def _root_error(A: Approximant) -> Callable:
    ctx = A.ctx
    return lambda x: abs(eval_f_scaled(A, x) - pth_root(x, A.p, ctx))


def _signed_rel_error(A: Approximant) -> Callable:
    ctx = A.ctx

    def r(x):
        root = pth_root(x, A.p, ctx)
        return (eval_f_scaled(A, x) - root) / root

    return r


def scan_abs_error(
    A: Approximant, lo, hi, n_samples: int = DEFAULT_SAMPLES, *, spacing: str = "linear"
) -> ErrorReport:
    """Max of ``|ftilde_k(x) - x**(1/p)|`` over ``[lo, hi]`` inside ``[0, 1]``."""
    lo, hi = A.ctx.mpf(lo), A.ctx.mpf(hi)
    if lo < 0 or hi > 1:
        raise DomainError("scan interval must lie in [0, 1]")
    return scan_function(_root_error(A), lo, hi, n_samples, A.ctx, spacing=spacing, p=A.p)


def scan_rel_error(
    A: Approximant, n_samples: int = DEFAULT_SAMPLES, *, spacing: str = "geometric"
) -> ErrorReport:
    """Max relative error of ``ftilde_k`` over ``[alpha0**p, 1]``."""
    r = _signed_rel_error(A)
    return scan_function(
        lambda x: abs(r(x)), A.alpha0**A.p, 1, n_samples, A.ctx,
        spacing=spacing, p=A.p, metric="relative",
    )


def max_abs_error(A: Approximant, n_samples: int = DEFAULT_SAMPLES) -> tuple[ErrorReport, ErrorReport]:
    """Absolute error scans on ``[0, alpha0**p]`` and ``[alpha0**p, 1]``.

    The left piece is sampled uniformly in ``x**(1/p)``, the right piece
    uniformly in ``log x``; equispaced ``x`` cannot resolve either when
    ``alpha0**p`` is tiny.
    """
    cut = A.alpha0**A.p
    left = scan_abs_error(A, 0, cut, n_samples, spacing="root")
    right = scan_abs_error(A, cut, 1, n_samples, spacing="geometric")
    return left, right


def _alternating_extrema(signed: Callable, lo, hi, n_samples: int, ctx: PrecisionCtx, spacing: str, p: int):
    mp = ctx.mp
    to_x = _grid_map(ctx.mpf(lo), ctx.mpf(hi), spacing, p, ctx)
    n = n_samples - 1
    ss = [mp.mpf(i) / n for i in range(n_samples)]
    vals = [signed(to_x(s)) for s in ss]
    tol = ctx.tol(0.25)
    found = []
    for i, v in enumerate(vals):
        left = vals[i - 1] if i > 0 else None
        right = vals[i + 1] if i < n else None
        if v > 0 and (left is None or v >= left) and (right is None or v >= right):
            sign = 1
        elif v < 0 and (left is None or v <= left) and (right is None or v <= right):
            sign = -1
        else:
            continue
        a, b = ss[max(i - 1, 0)], ss[min(i + 1, n)]
        s, av = _golden_max(lambda t: sign * signed(to_x(t)), a, b, tol, mp)
        if av < sign * v:
            s, av = ss[i], sign * v
        found.append((to_x(s), sign * av))
    # Merge runs of equal sign, keeping the largest magnitude.
    merged = []
    for x, v in found:
        if merged and (merged[-1][1] > 0) == (v > 0):
            if abs(v) > abs(merged[-1][1]):
                merged[-1] = (x, v)
        else:
            merged.append((x, v))
    return merged


def equioscillation_points(A: Approximant, n_samples: int = DEFAULT_SAMPLES) -> list:
    """Sign-alternating extrema ``(x, signed relative error)`` on ``[alpha0**p, 1]``."""
    return _alternating_extrema(
        _signed_rel_error(A), A.alpha0**A.p, 1, n_samples, A.ctx, "geometric", A.p
    )


# -- balancing ----------------------------------------------------------------


def eps_after(alpha, p: int, k: int, ctx: PrecisionCtx):
    """Equioscillation level ``(1 - alpha_k) / (1 + alpha_k)`` starting from ``alpha``."""
    a = ctx.mpf(alpha)
    for _ in range(k):
        if a >= 1:
            # Saturated: the level is below the working resolution.
            return ctx.mp.zero
        a = alpha_step(a, p, ctx)
    return (1 - a) / (1 + a)


def balance_alpha(p: int, k: int, rel_tol=DEFAULT_REL_TOL, ctx: PrecisionCtx | None = None):
    """Solve ``2 alpha = eps_k(alpha)`` by bisection in ``log alpha``.

    Returns ``(alpha, eps_k(alpha))`` with ``|2 alpha - eps| <= rel_tol * 2 alpha``.
    """
    ctx = ctx or PrecisionCtx()
    if p < 2 or k < 1:
        raise DomainError("balance_alpha needs p >= 2 and k >= 1")
    rel_tol = ctx.mpf(rel_tol)
    if not 0 < rel_tol < 1:
        raise DomainError("rel_tol must lie in (0, 1)")

    def phi(a):
        e = eps_after(a, p, k, ctx)
        return 2 * a - e, e

    hi = ctx.mpf("0.5")
    if phi(hi)[0] <= 0:
        raise ConvergenceError("phi(1/2) is not positive")
    lo = ctx.mpf("0.25")
    for _ in range(40):
        if phi(lo)[0] < 0:
            break
        hi, lo = lo, lo * lo
    else:
        raise ConvergenceError("could not bracket the balanced alpha")

    mp = ctx.mp
    for _ in range(100_000):
        mid = mp.sqrt(lo * hi)
        val, e = phi(mid)
        if abs(val) <= rel_tol * 2 * mid:
            return mid, e
        if val > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= hi * ctx.eps * 4:
            break
    raise ConvergenceError(f"bisection stalled before reaching rel_tol={rel_tol}; raise precision")


# -- theory calculators -------------------------------------------------------


def exponent_c(p: int, ctx: PrecisionCtx | None = None):
    """Rate exponent ``log2 log(p/(p-1)) / (log p log(2p/(p-1)))``."""
    ctx = ctx or PrecisionCtx()
    if p < 2:
        raise DomainError("p must be >= 2")
    mp = ctx.mp
    r = mp.mpf(p) / (p - 1)
    return mp.log(2) * mp.log(r) / (mp.log(p) * mp.log(2 * r))


def exponent_c_hat(p: int, ctx: PrecisionCtx | None = None):
    ctx = ctx or PrecisionCtx()
    if p < 2:
        raise DomainError("p must be >= 2")
    mp = ctx.mp
    return mp.log(2) / mp.log(p)


def _loglog(x, mp):
    return mp.log(mp.log(x))


def predict_k(p: int, epsilon, k2_tilde: int | None = None, ctx: PrecisionCtx | None = None) -> int:
    """Recursion count ``loglog(2/eps)/log(p/(p-1)) + k2_tilde + loglog(2/(eps p))/log 2``, rounded up."""
    ctx = ctx or PrecisionCtx()
    mp = ctx.mp
    eps = ctx.mpf(epsilon)
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if eps * p >= 2:
        raise DomainError(f"loglog(2/(eps p)) is undefined for eps={epsilon}, p={p}")
    if k2_tilde is None:
        if p not in K2_TILDE:
            raise DomainError(f"no calibrated k2_tilde for p={p}; pass one explicitly")
        k2_tilde = K2_TILDE[p]
    t = (
        _loglog(2 / eps, mp) / mp.log(mp.mpf(p) / (p - 1))
        + k2_tilde
        + _loglog(2 / (eps * p), mp) / mp.log(2)
    )
    return int(mp.ceil(t))


def empirical_k(p: int, epsilon, ctx: PrecisionCtx | None = None, k_max: int = 200) -> int:
    """Smallest k with balanced error ``<= epsilon``.

    Balanced error is monotone in alpha, so this equals the smallest k with
    ``eps_k(epsilon / 2) <= epsilon``.
    """
    ctx = ctx or PrecisionCtx()
    eps = ctx.mpf(epsilon)
    a = eps / 2
    for k in range(k_max + 1):
        if (1 - a) / (1 + a) <= eps:
            return k
        a = alpha_step(a, p, ctx)
    raise ConvergenceError(f"accuracy {epsilon} not reached within {k_max} steps")


def calibrate_k2_tilde(p: int, eps_grid=CALIBRATION_EPS, ctx: PrecisionCtx | None = None) -> int:
    ctx = ctx or PrecisionCtx()
    return max(empirical_k(p, e, ctx) - predict_k(p, e, 0, ctx) for e in eps_grid)


def stage3_ratio(alpha, p: int, ctx: PrecisionCtx | None = None):
    """``eps(H(alpha)) / eps(alpha)**2``; tends to ``(p-1)/4`` as alpha -> 1."""
    ctx = ctx or PrecisionCtx()
    a = ctx.mpf(alpha)
    h = alpha_step(a, p, ctx)
    return ((1 - h) / (1 + h)) / ((1 - a) / (1 + a)) ** 2


@dataclass(frozen=True)
class TheoryParams:
    c: object
    c_hat: object
    k2_tilde: int | None
    alpha_star: object
    k1: int
    k2: int
    k3: int
    delta_k: object

    @property
    def total_k(self) -> int:
        return self.k1 + self.k2 + self.k3


def find_alpha_star(p: int, ctx: PrecisionCtx | None = None, grid: int = 1000):
    """Smallest grid point past ``max(1/e, (p-2)/(p+2))`` from which the stage-3
    contraction ``eps(H(a)) <= (p/2) eps(a)**2`` holds on the rest of the grid."""
    ctx = ctx or PrecisionCtx()
    mp = ctx.mp
    lo = max(1 / mp.e, mp.mpf(p - 2) / (p + 2))
    pts = [lo + (1 - lo) * mp.mpf(i) / grid for i in range(1, grid)]
    half_p = mp.mpf(p) / 2
    star = None
    for a in reversed(pts):
        if stage3_ratio(a, p, ctx) <= half_p:
            star = a
        else:
            break
    if star is None:
        raise ConvergenceError(f"stage-3 contraction fails near 1 for p={p}")
    return star


def stage_counts(p: int, alpha, epsilon, ctx: PrecisionCtx | None = None, grid: int = 1000) -> TheoryParams:
    """Stage lengths ``k1, k2, k3`` of the three-stage convergence argument."""
    ctx = ctx or PrecisionCtx()
    mp = ctx.mp
    alpha, eps = ctx.mpf(alpha), ctx.mpf(epsilon)
    if not 0 < alpha < 1 or not 0 < eps < 1:
        raise DomainError("alpha and epsilon must lie in (0, 1)")
    if eps * p >= 2:
        raise DomainError(
            f"epsilon={epsilon} too large for p={p}: k3 needs (p/2) eps < 1 so loglog(2/(eps p)) exists"
        )
    r = mp.mpf(p) / (p - 1)
    k1 = int(mp.ceil(_loglog(1 / alpha, mp) / mp.log(r))) if alpha < 1 / mp.e else 0
    star = find_alpha_star(p, ctx, grid)

    a = alpha
    for _ in range(k1):
        a = alpha_step(a, p, ctx)
    k2 = 0
    while a < star:
        a = alpha_step(a, p, ctx)
        k2 += 1
    delta = mp.mpf(p) / 2 * (1 - a) / (1 + a)

    inner = (2 / mp.mpf(p)) * (1 + star) / (1 - star)
    k3 = mp.ceil((_loglog(2 / (eps * p), mp) - _loglog(inner, mp)) / mp.log(2))
    return TheoryParams(
        c=exponent_c(p, ctx),
        c_hat=exponent_c_hat(p, ctx),
        k2_tilde=K2_TILDE.get(p),
        alpha_star=star,
        k1=k1,
        k2=k2,
        k3=max(0, int(k3)),
        delta_k=delta,
    )


# -- fits and convergence studies ---------------------------------------------


@dataclass(frozen=True)
class AffineFit:
    slope: object
    intercept: object
    r_squared: object
    max_residual: object

    def residual_fraction(self, ys) -> object:
        """Largest residual as a fraction of the spread of ``ys``."""
        return self.max_residual / (max(ys) - min(ys))


def affine_fit(xs, ys, ctx: PrecisionCtx) -> AffineFit:
    """Ordinary least squares ``y = slope x + intercept``."""
    mp = ctx.mp
    n = len(xs)
    if n < 2:
        raise DomainError("need at least two points to fit")
    mx = mp.fsum(xs) / n
    my = mp.fsum(ys) / n
    sxx = mp.fsum((x - mx) ** 2 for x in xs)
    sxy = mp.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    syy = mp.fsum((y - my) ** 2 for y in ys)
    slope = sxy / sxx
    intercept = my - slope * mx
    res = [y - (slope * x + intercept) for x, y in zip(xs, ys)]
    ss_res = mp.fsum(r**2 for r in res)
    r2 = 1 - ss_res / syy if syy else mp.one
    return AffineFit(slope, intercept, r2, max(abs(r) for r in res))


@dataclass(frozen=True)
class StudyRow:
    k: int
    alpha: object
    epsilon: object
    n: int
    bound_rhs: object
    p_to_ck: object
    log_eps: object
    left_err: object
    right_err: object


@dataclass(frozen=True)
class ConvergenceTable:
    p: int
    c: object
    rows: list = field(default_factory=list)
    fit: AffineFit | None = None
    loglog_fit: AffineFit | None = None

    def loglog_values(self, ctx: PrecisionCtx) -> list:
        mp = ctx.mp
        return [mp.log(-r.log_eps) for r in self.rows]


def convergence_study(
    p: int,
    k_min: int,
    k_max: int,
    ctx: PrecisionCtx | None = None,
    *,
    n_samples: int = DEFAULT_SAMPLES,
    rel_tol=DEFAULT_REL_TOL,
) -> ConvergenceTable:
    """Balanced max error on ``[0, 1]`` for each k, fitted against ``p**(c k)``."""
    ctx = ctx or PrecisionCtx()
    mp = ctx.mp
    if k_min < 1 or k_max < k_min:
        raise DomainError("need 1 <= k_min <= k_max")
    c = exponent_c(p, ctx)
    floor = ctx.tol(0.5)
    rows = []
    for k in range(k_min, k_max + 1):
        try:
            alpha, eps_k = balance_alpha(p, k, rel_tol, ctx)
        except ConvergenceError as exc:
            raise PrecisionInsufficientError(f"balancing failed at k={k}: {exc}") from exc
        if eps_k < floor:
            raise PrecisionInsufficientError(
                f"error {mp.nstr(eps_k, 5)} at k={k} is below 2**-{ctx.significand_bits // 2}; "
                "raise significand_bits"
            )
        A = make_approximant(p, alpha, k, ctx)
        left, right = max_abs_error(A, n_samples)
        err = max(left.max_err, right.max_err)
        rows.append(
            StudyRow(
                k=k,
                alpha=alpha,
                epsilon=err,
                n=p ** (k - 1),
                bound_rhs=max(2 * alpha, eps_k),
                p_to_ck=mp.mpf(p) ** (c * k),
                log_eps=mp.log(err),
                left_err=left.max_err,
                right_err=right.max_err,
            )
        )
    fit = loglog = None
    if len(rows) >= 2:
        fit = affine_fit([r.p_to_ck for r in rows], [r.log_eps for r in rows], ctx)
        loglog = affine_fit(
            [mp.mpf(r.k) for r in rows], [mp.log(-r.log_eps) for r in rows], ctx
        )
    return ConvergenceTable(p, c, rows, fit, loglog)


# -- unscaled Newton baseline -------------------------------------------------


def newton_baseline(p: int, k: int, x, ctx: PrecisionCtx | None = None):
    """k steps of the unscaled Newton iteration for ``x**(1/p)`` from ``f_0 = 1``."""
    ctx = ctx or PrecisionCtx()
    x = ctx.mpf(x)
    if x < 0 or k < 0:
        raise DomainError("newton_baseline needs x >= 0 and k >= 0")
    f = ctx.mp.one
    for _ in range(k):
        f = ((p - 1) * f + x / f ** (p - 1)) / p
    return f


def newton_max_error(p: int, k: int, ctx: PrecisionCtx | None = None, n_samples: int = DEFAULT_SAMPLES) -> ErrorReport:
    ctx = ctx or PrecisionCtx()
    return scan_function(
        lambda x: abs(newton_baseline(p, k, x, ctx) - pth_root(x, p, ctx)),
        0, 1, n_samples, ctx, spacing="root", p=p,
    )


# -- sector scans -------------------------------------------------------------


def sector_error_scan(
    A: Approximant, alpha_cut, n_samples: int = DEFAULT_SAMPLES
) -> tuple[ErrorReport, ErrorReport]:
    """Weighted error on ``S_p`` and unweighted error on ``[alpha_cut, 1]``.

    Both use equivariance to reduce to the positive real ray, where
    ``sect_p = 1``. The weighted scan covers ``[0, alpha_cut]`` linearly and
    ``[alpha_cut, 1]`` geometrically.
    """
    ctx = A.ctx
    cut = ctx.mpf(alpha_cut)
    if not 0 < cut < 1:
        raise DomainError("alpha_cut must lie in (0, 1)")
    S = sector(A, scaled=True)

    def unweighted(r):
        return abs(eval_sector(S, r) - 1)

    def weighted(r):
        return r * abs(eval_sector(S, r) - 1)

    inner = scan_function(weighted, 0, cut, n_samples, ctx, metric="weighted")
    outer = scan_function(weighted, cut, 1, n_samples, ctx, spacing="geometric", metric="weighted")
    best = outer if outer.max_err >= inner.max_err else inner
    w = ErrorReport(best.max_err, best.arg_max, (ctx.mp.zero, ctx.mp.one), 2 * n_samples, True, "weighted")
    u = scan_function(unweighted, cut, 1, n_samples, ctx, spacing="geometric", metric="absolute")
    return w, u


def sector_equioscillation_points(A: Approximant, alpha_cut, n_samples: int = DEFAULT_SAMPLES) -> list:
    """Alternating extrema of ``gtilde_k - 1`` on the ray segment ``[alpha_cut, 1]``."""
    S = sector(A, scaled=True)
    return _alternating_extrema(
        lambda r: eval_sector(S, r) - 1, alpha_cut, 1, n_samples, A.ctx, "geometric", A.p
    )
