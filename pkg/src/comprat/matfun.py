"""Matrix p-th roots of symmetric PSD matrices through the composite recursion."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Approximant, eval_f_scaled, pth_root
from .errors import DomainError, SolveError
from .hpnum import PrecisionCtx


@dataclass(frozen=True)
class DenseMatrix:
    """Square real matrix stored as a tuple of rows."""

    rows: tuple
    ctx: PrecisionCtx

    @classmethod
    def from_rows(cls, rows, ctx: PrecisionCtx) -> "DenseMatrix":
        rows = tuple(tuple(ctx.mpf(v) for v in row) for row in rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise DomainError("matrix must be square and nonempty")
        return cls(rows, ctx)

    @classmethod
    def identity(cls, n: int, ctx: PrecisionCtx) -> "DenseMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)], ctx)

    @classmethod
    def diag(cls, values, ctx: PrecisionCtx) -> "DenseMatrix":
        values = list(values)
        n = len(values)
        return cls.from_rows([[values[i] if i == j else 0 for j in range(n)] for i in range(n)], ctx)

    @property
    def n(self) -> int:
        return len(self.rows)

    def max_abs(self):
        return max(abs(v) for row in self.rows for v in row)

    def to_mp(self):
        return self.ctx.mp.matrix([list(r) for r in self.rows])

    @classmethod
    def from_mp(cls, m, ctx: PrecisionCtx) -> "DenseMatrix":
        return cls.from_rows([[m[i, j] for j in range(m.cols)] for i in range(m.rows)], ctx)


def _matmul(a, b, mp):
    n = len(a)
    cols = list(zip(*b))
    return [[mp.fdot(a[i], cols[j]) for j in range(n)] for i in range(n)]


def _lu(a, mp, tiny):
    """Doolittle LU with partial pivoting; returns (LU packed, permutation)."""
    n = len(a)
    lu = [list(r) for r in a]
    perm = list(range(n))
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(lu[r][c]))
        if abs(lu[piv][c]) <= tiny:
            raise SolveError(
                "iterate became numerically singular; the spectrum is probably outside [0, 1]"
            )
        if piv != c:
            lu[c], lu[piv] = lu[piv], lu[c]
            perm[c], perm[piv] = perm[piv], perm[c]
        for r in range(c + 1, n):
            f = lu[r][c] / lu[c][c]
            lu[r][c] = f
            for j in range(c + 1, n):
                lu[r][j] -= f * lu[c][j]
    return lu, perm


def _lu_solve(lu, perm, b, mp):
    """Solve for every column of ``b``."""
    n = len(lu)
    out_cols = []
    for col in zip(*b):
        y = [col[perm[i]] for i in range(n)]
        for i in range(n):
            y[i] -= mp.fdot(lu[i][:i], y[:i])
        for i in reversed(range(n)):
            y[i] = (y[i] - mp.fdot(lu[i][i + 1:], y[i + 1:])) / lu[i][i]
        out_cols.append(y)
    return [list(r) for r in zip(*out_cols)]


def check_symmetric(M: DenseMatrix, tol=None) -> None:
    ctx = M.ctx
    tol = ctx.tol(0.5) if tol is None else ctx.mpf(tol)
    bound = tol * max(M.max_abs(), ctx.mp.one)
    n = M.n
    for i in range(n):
        for j in range(i + 1, n):
            if abs(M.rows[i][j] - M.rows[j][i]) > bound:
                raise DomainError(f"matrix is not symmetric at ({i}, {j})")


def eigh(M: DenseMatrix):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    mp = M.ctx.mp
    lam, Q = mp.eigsy(M.to_mp())
    order = sorted(range(M.n), key=lambda i: lam[i])
    lam = [lam[i] for i in order]
    Q = [[Q[r, i] for i in order] for r in range(M.n)]
    return lam, Q


def check_spectrum(M: DenseMatrix) -> None:
    """Require the spectrum inside ``[0, 1]`` up to roundoff.

    Gershgorin discs settle most inputs; when they are inconclusive the
    eigenvalues are computed.
    """
    ctx = M.ctx
    tol = ctx.tol(0.5) * max(M.max_abs(), ctx.mp.one)
    ok = True
    for i, row in enumerate(M.rows):
        radius = ctx.mp.fsum(abs(v) for j, v in enumerate(row) if j != i)
        if row[i] - radius < -tol or row[i] + radius > 1 + tol:
            ok = False
            break
    if ok:
        return
    lam, _ = eigh(M)
    if lam[0] < -tol or lam[-1] > 1 + tol:
        raise DomainError(
            f"spectrum [{ctx.mp.nstr(lam[0], 8)}, {ctx.mp.nstr(lam[-1], 8)}] is not inside [0, 1]"
        )


def matrix_proot(A: Approximant, M: DenseMatrix, *, attested: bool = False) -> DenseMatrix:
    """``ftilde_k(M)``, an approximation of ``M**(1/p)``.

    Each step forms ``F^{-(p-1)} M`` by ``p-1`` solves against a fresh LU of
    the current iterate, then symmetrizes.
    """
    ctx = A.ctx
    mp = ctx.mp
    if M.ctx != ctx:
        M = DenseMatrix.from_rows(M.rows, ctx)
    check_symmetric(M)
    if not attested:
        check_spectrum(M)
    n, p = M.n, A.p
    m_rows = [list(r) for r in M.rows]
    F = [[mp.one if i == j else mp.zero for j in range(n)] for i in range(n)]
    tiny = ctx.eps * n
    for c1, c2 in A._steps:
        lu, perm = _lu(F, mp, tiny * max(abs(v) for r in F for v in r))
        X = m_rows
        for _ in range(p - 1):
            X = _lu_solve(lu, perm, X, mp)
        F = [[c1 * F[i][j] + c2 * X[i][j] for j in range(n)] for i in range(n)]
        F = [[(F[i][j] + F[j][i]) / 2 for j in range(n)] for i in range(n)]
    s = A.scale
    return DenseMatrix.from_rows([[s * v for v in r] for r in F], ctx)


def spectral_apply(lam, Q, fn, ctx: PrecisionCtx) -> DenseMatrix:
    """``Q diag(fn(lam)) Q^T``."""
    mp = ctx.mp
    n = len(lam)
    vals = [fn(v) for v in lam]
    rows = [[mp.fsum(Q[i][l] * vals[l] * Q[j][l] for l in range(n)) for j in range(n)] for i in range(n)]
    return DenseMatrix.from_rows(rows, ctx)


def max_dist(a: DenseMatrix, b: DenseMatrix):
    return max(abs(u - v) for ra, rb in zip(a.rows, b.rows) for u, v in zip(ra, rb))


def commutator_norm(a: DenseMatrix, b: DenseMatrix):
    mp = a.ctx.mp
    ab = _matmul(a.rows, b.rows, mp)
    ba = _matmul(b.rows, a.rows, mp)
    return max(abs(u - v) for ra, rb in zip(ab, ba) for u, v in zip(ra, rb))


@dataclass(frozen=True)
class MatrixReport:
    n: int
    dist_to_ftilde: object
    dist_to_root: object
    commutator: object
    eig_min: object
    eig_max: object


def residual_report(A: Approximant, M: DenseMatrix, F: DenseMatrix) -> MatrixReport:
    """Compare ``F`` against eigendecomposition references of ``ftilde_k(M)`` and ``M**(1/p)``."""
    ctx = A.ctx
    lam, Q = eigh(M)
    clamp = [max(v, ctx.mp.zero) for v in lam]
    ref_f = spectral_apply(clamp, Q, lambda v: eval_f_scaled(A, v), ctx)
    ref_root = spectral_apply(clamp, Q, lambda v: pth_root(v, A.p, ctx), ctx)
    return MatrixReport(
        n=M.n,
        dist_to_ftilde=max_dist(F, ref_f),
        dist_to_root=max_dist(F, ref_root),
        commutator=commutator_norm(F, M),
        eig_min=lam[0],
        eig_max=lam[-1],
    )


def random_spd(n: int, seed: int, ctx: PrecisionCtx):
    """Random symmetric PSD matrix with spectrum in ``[0, 1]``.

    Returns ``(M, Q, lam)`` with ``M = Q diag(lam) Q^T`` and ``Q`` orthogonal.
    """
    rng = random.Random(seed)
    mp = ctx.mp
    scale = mp.ldexp(mp.one, -53)
    G = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            G[i, j] = rng.getrandbits(53) * scale - mp.mpf("0.5")
    Qm, _ = mp.qr(G)
    Q = [[Qm[i, j] for j in range(n)] for i in range(n)]
    lam = sorted(rng.getrandbits(53) * scale for _ in range(n))
    M = spectral_apply(lam, Q, lambda v: v, ctx)
    return M, Q, lam
