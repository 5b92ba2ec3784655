import pytest

from comprat.core import eval_f_scaled, make_approximant, mu
from comprat.errors import DomainError, SolveError
from comprat.hpnum import PrecisionCtx
from comprat.matfun import (
    DenseMatrix,
    check_spectrum,
    check_symmetric,
    commutator_norm,
    eigh,
    matrix_proot,
    max_dist,
    random_spd,
    residual_report,
    spectral_apply,
)


def test_diag_zero_one(ctx):
    A = make_approximant(2, "0.25", 1, ctx)
    F = matrix_proot(A, DenseMatrix.diag([0, 1], ctx))
    assert abs(F.rows[0][0] - ctx.mpf(2) / 9) < ctx.tol(0.95)
    assert abs(F.rows[1][1] - ctx.mpf(10) / 9) < ctx.tol(0.95)
    assert F.rows[0][1] == 0 and F.rows[1][0] == 0


@pytest.mark.parametrize("p,k", [(2, 3), (3, 2), (5, 3)])
def test_identity_and_diagonal_exact(ctx, p, k):
    A = make_approximant(p, "0.1", k, ctx)
    F = matrix_proot(A, DenseMatrix.identity(4, ctx))
    target = eval_f_scaled(A, 1)
    for i in range(4):
        for j in range(4):
            want = target if i == j else 0
            assert abs(F.rows[i][j] - want) < ctx.tol(0.95)
    vals = ["0", "1e-6", "0.3", "1"]
    D = matrix_proot(A, DenseMatrix.diag(vals, ctx))
    for i, v in enumerate(vals):
        assert abs(D.rows[i][i] - eval_f_scaled(A, v)) < ctx.tol(0.95)


@pytest.mark.parametrize("p,k,seed", [(2, 4, 1), (3, 3, 7)])
def test_random_spd_matches_spectral_oracle(ctx, p, k, seed):
    M, Q, lam = random_spd(8, seed, ctx)
    A = make_approximant(p, "0.05", k, ctx)
    F = matrix_proot(A, M)
    # Reference built from the generating Q and lambda, not from an eigensolver.
    ref = spectral_apply(lam, Q, lambda v: eval_f_scaled(A, v), ctx)
    assert max_dist(F, ref) < ctx.tol(0.75)
    assert commutator_norm(F, M) < ctx.tol(0.75)
    rep = residual_report(A, M, F)
    assert rep.dist_to_ftilde < ctx.tol(0.75)
    assert rep.n == 8 and 0 <= rep.eig_min <= rep.eig_max <= 1


def test_random_spd_structure(ctx):
    M, Q, lam = random_spd(5, 3, ctx)
    check_symmetric(M)
    ev, _ = eigh(M)
    for a, b in zip(ev, lam):
        assert abs(a - b) < ctx.tol(0.8)
    M2, _, _ = random_spd(5, 3, ctx)
    assert M2 == M
    assert random_spd(5, 4, ctx)[0] != M


def test_output_symmetric(ctx):
    M, _, _ = random_spd(6, 11, ctx)
    F = matrix_proot(make_approximant(2, "0.2", 3, ctx), M)
    check_symmetric(F, tol=0)


def test_rejects_nonsymmetric(ctx):
    M = DenseMatrix.from_rows([[0.5, 0.1], [0.2, 0.5]], ctx)
    with pytest.raises(DomainError):
        matrix_proot(make_approximant(2, "0.5", 2, ctx), M)


def test_rejects_bad_spectrum(ctx):
    A = make_approximant(2, "0.5", 2, ctx)
    with pytest.raises(DomainError):
        matrix_proot(A, DenseMatrix.diag([-0.5, 0.5], ctx))
    with pytest.raises(DomainError):
        matrix_proot(A, DenseMatrix.diag([0.5, 2], ctx))
    # Gershgorin fails here but the eigenvalues (0 and 1) are fine.
    half = DenseMatrix.from_rows([[0.5, 0.5], [0.5, 0.5]], ctx)
    check_spectrum(half)


def test_rejects_nonsquare(ctx):
    with pytest.raises(DomainError):
        DenseMatrix.from_rows([[1, 2]], ctx)
    with pytest.raises(DomainError):
        DenseMatrix.from_rows([], ctx)


def test_singular_iterate_raises_solve_error(ctx):
    # For p = 2 the first step maps -mu**2 I to zero, so the second solve is singular.
    A = make_approximant(2, "0.5", 2, ctx)
    m0 = mu("0.5", 2, ctx)
    M = DenseMatrix.diag([-(m0**2)] * 3, ctx)
    with pytest.raises(SolveError):
        matrix_proot(A, M, attested=True)


def test_precision_conversion():
    lo, hi = PrecisionCtx(128), PrecisionCtx(256)
    M = DenseMatrix.diag(["0.25", "0.5"], lo)
    F = matrix_proot(make_approximant(2, "0.3", 2, hi), M)
    assert F.ctx == hi


def test_matrix_error_within_scalar_bound(ctx):
    from comprat.analysis import max_abs_error

    for p, seed in ((2, 5), (3, 6)):
        A = make_approximant(p, "0.05", 3, ctx)
        left, right = max_abs_error(A, 600)
        M, _, _ = random_spd(6, seed, ctx)
        rep = residual_report(A, M, matrix_proot(A, M))
        assert rep.dist_to_root <= max(left.max_err, right.max_err) + ctx.mpf("1e-30")
