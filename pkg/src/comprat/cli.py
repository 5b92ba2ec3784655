"""Command-line front end; every command writes a self-describing CSV or matrix file.

Exit codes: 0 success, 2 usage, 3 numeric domain, 4 parse, 5 linear algebra.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import asdict, dataclass

import mpmath

from . import __version__
from .analysis import (
    DEFAULT_REL_TOL,
    DEFAULT_SAMPLES,
    balance_alpha,
    convergence_study,
    empirical_k,
    max_abs_error,
    sector_equioscillation_points,
    sector_error_scan,
)
from .core import eval_f_scaled, eval_sector, make_approximant, pth_root, rel_error_bound, sector
from .errors import ComposError, SolveError
from .hpnum import DEFAULT_BITS, ENV_PRECISION, PrecisionCtx
from .matfun import DenseMatrix, matrix_proot, random_spd, residual_report

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_PARSE = 4
EXIT_SOLVE = 5


class MatrixParseError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    p: int | None = None
    k: int | None = None
    k_min: int | None = None
    k_max: int | None = None
    alpha: str | None = None
    epsilon: str | None = None
    balance: bool = False
    samples: int = DEFAULT_SAMPLES
    precision_bits: int = DEFAULT_BITS
    rel_tol: str = str(DEFAULT_REL_TOL)
    seed: int = 0
    out: str | None = None
    input: str | None = None
    random: int | None = None
    report: str | None = None

    @property
    def mode(self) -> str:
        if self.alpha is not None:
            return "alpha"
        if self.epsilon is not None:
            return "epsilon"
        return "balance"

    def header(self) -> list[str]:
        # Output destinations are not part of the run, so reruns into other files match.
        fields = {key: val for key, val in asdict(self).items() if val is not None and key not in ("out", "report")}
        fields["mode"] = self.mode
        return [
            f"# comprat {__version__} {self.command}",
            "# " + ", ".join(f"{key}={fields[key]}" for key in sorted(fields)),
        ]


def _choose_alpha(cfg: RunConfig, ctx: PrecisionCtx):
    """Resolve ``(alpha, k)`` from the alpha / epsilon / balance mode."""
    if cfg.mode == "alpha":
        if cfg.k is None:
            raise _Usage("--k is required with --alpha")
        return ctx.mpf(cfg.alpha), cfg.k
    if cfg.mode == "epsilon":
        eps = ctx.mpf(cfg.epsilon)
        k = cfg.k if cfg.k is not None else empirical_k(cfg.p, eps, ctx)
        return eps / 2, k
    if cfg.k is None:
        raise _Usage("--k is required with --balance")
    alpha, _ = balance_alpha(cfg.p, cfg.k, ctx.mpf(cfg.rel_tol), ctx)
    return alpha, cfg.k


class _Usage(Exception):
    pass


def _csv_grid(A, samples: int):
    """Uniform in ``x**(1/p)`` on ``[0, alpha**p]``, then uniform in ``log x`` up to 1."""
    ctx = A.ctx
    mp = ctx.mp
    cut = A.alpha0**A.p
    n_left = max(samples // 2, 2)
    n_right = max(samples - n_left + 1, 2)
    a = A.alpha0
    xs = [(a * i / (n_left - 1)) ** A.p for i in range(n_left)]
    la = mp.log(cut)
    xs += [mp.exp(la * (1 - mp.mpf(i) / (n_right - 1))) for i in range(1, n_right - 1)]
    xs.append(mp.one)
    return xs


def cmd_approx(cfg: RunConfig, out) -> None:
    ctx = PrecisionCtx(cfg.precision_bits)
    alpha, k = _choose_alpha(cfg, ctx)
    A = make_approximant(cfg.p, alpha, k, ctx)
    eps = rel_error_bound(A)
    fmt = ctx.nstr
    for line in cfg.header():
        out.write(line + "\n")
    out.write(f"# p={cfg.p}, k={k}, alpha={fmt(alpha)}, eps={fmt(eps)}, precision_bits={ctx.significand_bits}\n")
    out.write("x,ftilde,xroot,err\n")
    cut = A.alpha0**A.p
    left = right = ctx.mp.zero
    for x in _csv_grid(A, cfg.samples):
        ft = eval_f_scaled(A, x)
        root = pth_root(x, A.p, ctx)
        err = ft - root
        if x <= cut:
            left = max(left, abs(err))
        if x >= cut:
            right = max(right, abs(err))
        out.write(f"{fmt(x)},{fmt(ft)},{fmt(root)},{fmt(err)}\n")
    out.write(f"# max_abs_err_left={fmt(left)}, max_abs_err_right={fmt(right)}, two_alpha={fmt(2 * alpha)}\n")


def cmd_study(cfg: RunConfig, out) -> None:
    if cfg.k_min is None or cfg.k_max is None:
        raise _Usage("study needs --k-min and --k-max")
    ctx = PrecisionCtx(cfg.precision_bits)
    table = convergence_study(
        cfg.p, cfg.k_min, cfg.k_max, ctx, n_samples=cfg.samples, rel_tol=ctx.mpf(cfg.rel_tol)
    )
    fmt = ctx.nstr
    for line in cfg.header():
        out.write(line + "\n")
    out.write(f"# p={cfg.p}, c={fmt(table.c)}, precision_bits={ctx.significand_bits}\n")
    out.write("k,alpha,epsilon,n,p_to_ck,log_eps\n")
    for r in table.rows:
        out.write(f"{r.k},{fmt(r.alpha)},{fmt(r.epsilon)},{r.n},{fmt(r.p_to_ck)},{fmt(r.log_eps)}\n")
    if table.fit is not None:
        f = table.fit
        out.write(f"# fit slope={fmt(f.slope)}, intercept={fmt(f.intercept)}, r_squared={fmt(f.r_squared)}\n")
        g = table.loglog_fit
        frac = g.residual_fraction(table.loglog_values(ctx))
        out.write(
            f"# loglog_fit slope={fmt(g.slope)}, intercept={fmt(g.intercept)}, "
            f"r_squared={fmt(g.r_squared)}, residual_fraction={fmt(frac)}\n"
        )


def cmd_sector(cfg: RunConfig, out) -> None:
    if cfg.alpha is None or cfg.k is None:
        raise _Usage("sector needs --alpha and --k")
    ctx = PrecisionCtx(cfg.precision_bits)
    alpha = ctx.mpf(cfg.alpha)
    A = make_approximant(cfg.p, alpha, cfg.k, ctx)
    S = sector(A, scaled=True)
    fmt = ctx.nstr
    for line in cfg.header():
        out.write(line + "\n")
    out.write(
        f"# p={cfg.p}, k={cfg.k}, alpha={fmt(alpha)}, eps={fmt(A.eps)}, precision_bits={ctx.significand_bits}\n"
    )
    out.write("r,abs_err\n")
    n = cfg.samples - 1
    for i in range(cfg.samples):
        r = alpha + (1 - alpha) * ctx.mp.mpf(i) / n
        out.write(f"{fmt(r)},{fmt(abs(eval_sector(S, r) - 1))}\n")
    weighted, unweighted = sector_error_scan(A, alpha, cfg.samples)
    alternations = len(sector_equioscillation_points(A, alpha, cfg.samples))
    out.write(
        f"# unweighted_max={fmt(unweighted.max_err)}, weighted_max={fmt(weighted.max_err)}, "
        f"weighted_bound={fmt(max(alpha, A.eps))}, alternations={alternations}\n"
    )


def read_matrix(text: str, ctx: PrecisionCtx) -> DenseMatrix:
    """Parse ``n`` followed by ``n`` rows of ``n`` whitespace-separated numbers."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        n = int(lines[0])
        if n < 1 or len(lines) != n + 1:
            raise MatrixParseError(f"expected {n} rows after the size line, got {len(lines) - 1}")
        rows = [ln.split() for ln in lines[1:]]
        if any(len(r) != n for r in rows):
            raise MatrixParseError("every row must hold exactly n entries")
        return DenseMatrix.from_rows([[ctx.mpf(v) for v in r] for r in rows], ctx)
    except MatrixParseError:
        raise
    except (IndexError, ValueError) as exc:
        raise MatrixParseError(f"cannot parse matrix: {exc}") from None


def write_matrix(M: DenseMatrix, out) -> None:
    out.write(f"{M.n}\n")
    for row in M.rows:
        out.write(" ".join(M.ctx.nstr(v) for v in row) + "\n")


def cmd_matrix(cfg: RunConfig, out, report_out) -> None:
    ctx = PrecisionCtx(cfg.precision_bits)
    if cfg.random is not None:
        M, _, _ = random_spd(cfg.random, cfg.seed, ctx)
    elif cfg.input is not None:
        try:
            with open(cfg.input, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise MatrixParseError(str(exc)) from None
        M = read_matrix(text, ctx)
    else:
        raise _Usage("matrix needs an input file or --random N")
    alpha, k = _choose_alpha(cfg, ctx)
    A = make_approximant(cfg.p, alpha, k, ctx)
    F = matrix_proot(A, M)
    write_matrix(F, out)
    rep = residual_report(A, M, F)
    fmt = ctx.nstr
    for line in cfg.header():
        report_out.write(line + "\n")
    report_out.write(f"# p={cfg.p}, k={k}, alpha={fmt(alpha)}, eps={fmt(A.eps)}, precision_bits={ctx.significand_bits}\n")
    for key in ("n", "dist_to_ftilde", "dist_to_root", "commutator", "eig_min", "eig_max"):
        val = getattr(rep, key)
        report_out.write(f"{key}={val if isinstance(val, int) else fmt(val)}\n")


def _default_bits() -> int:
    try:
        return PrecisionCtx.from_env().significand_bits
    except ComposError as exc:
        raise _Usage(str(exc)) from None


def build_parser(default_bits: int = DEFAULT_BITS) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comprat",
        description="Composite rational approximation of x**(1/p) and the p-sector function.",
    )
    parser.add_argument("--version", action="version", version=f"comprat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, *, modes: bool, k_range: bool = False):
        sp.add_argument("--p", type=int, required=True)
        if k_range:
            sp.add_argument("--k-min", type=int, required=True)
            sp.add_argument("--k-max", type=int, required=True)
        else:
            sp.add_argument("--k", type=int)
        if modes:
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--alpha")
            g.add_argument("--epsilon")
            g.add_argument("--balance", action="store_true")
        sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
        sp.add_argument(
            "--precision-bits", type=int, default=default_bits,
            help=f"significand bits (default {default_bits}; env {ENV_PRECISION})",
        )
        sp.add_argument("--rel-tol", default=str(DEFAULT_REL_TOL), help="balancing tolerance")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output path (default stdout)")

    common(sub.add_parser("approx", help="error curve of ftilde_k on [0, 1]"), modes=True)
    common(sub.add_parser("study", help="balanced error history over a k range"), modes=False, k_range=True)
    sp = sub.add_parser("sector", help="sector approximant error on [alpha, 1]")
    common(sp, modes=False)
    sp.add_argument("--alpha")
    sp = sub.add_parser("matrix", help="apply ftilde_k to a symmetric PSD matrix")
    common(sp, modes=True)
    sp.add_argument("input", nargs="?", help="matrix file: n, then n rows")
    sp.add_argument("--random", type=int, metavar="N", help="use a random N x N SPD matrix (see --seed)")
    sp.add_argument("--report", help="residual report path (default stderr, or stdout with --out)")
    return parser


def _config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    for key in vars(cfg):
        if hasattr(ns, key) and key != "command":
            setattr(cfg, key, getattr(ns, key))
    if cfg.p is not None and cfg.p < 2:
        raise _Usage("--p must be >= 2")
    if cfg.samples < 2:
        raise _Usage("--samples must be >= 2")
    if cfg.precision_bits < 64:
        raise _Usage("--precision-bits must be >= 64")
    for key in ("alpha", "epsilon", "rel_tol"):
        val = getattr(cfg, key)
        if val is not None:
            try:
                mpmath.mpf(val)
            except ValueError:
                raise _Usage(f"--{key.replace('_', '-')} expects a number, got {val!r}") from None
    return cfg


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser(_default_bits())
    except _Usage as exc:
        print(f"comprat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(ns)
        buf, rep = io.StringIO(), io.StringIO()
        if cfg.command == "approx":
            cmd_approx(cfg, buf)
        elif cfg.command == "study":
            cmd_study(cfg, buf)
        elif cfg.command == "sector":
            cmd_sector(cfg, buf)
        else:
            cmd_matrix(cfg, buf, rep)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"comprat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MatrixParseError as exc:
        print(f"comprat: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SolveError as exc:
        print(f"comprat: linear algebra failure: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    except ComposError as exc:
        print(f"comprat: numeric error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN

    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if rep.getvalue():
        if cfg.report:
            with open(cfg.report, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(rep.getvalue())
        elif cfg.out:
            sys.stdout.write(rep.getvalue())
        else:
            sys.stderr.write(rep.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
