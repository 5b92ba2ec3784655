"""Composite rational approximation of x**(1/p) on [0, 1] and of the p-sector function."""

__version__ = "0.1.0"

from .hpnum import PrecisionCtx, Poly, nth_root, poly_eval, poly_mul, poly_pow  # noqa: E402
from .core import (  # noqa: E402
    Approximant,
    RationalForm,
    SectorEvaluator,
    alpha_step,
    eval_f,
    eval_f_scaled,
    eval_sector,
    expand,
    expand_sector,
    make_approximant,
    mu,
    rel_error_bound,
    rescale_domain,
    sect,
    sector,
)

__all__ = [
    "PrecisionCtx", "Poly", "nth_root", "poly_eval", "poly_mul", "poly_pow",
    "Approximant", "RationalForm", "SectorEvaluator", "alpha_step", "eval_f",
    "eval_f_scaled", "eval_sector", "expand", "expand_sector", "make_approximant",
    "mu", "rel_error_bound", "rescale_domain", "sect", "sector",
]
