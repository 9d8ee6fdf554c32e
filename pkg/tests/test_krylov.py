import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regsaddle.ict import ict
from regsaddle.krylov import (
    IndefiniteError,
    IndefinitePreconditionerError,
    fgmres,
    gmres,
    minres,
    pcg,
)
from regsaddle.precond import build_preconditioner
from regsaddle.problem import assemble_saddle, build_example1, manufactured_rhs


def random_system(seed, n=20):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 2 * np.sqrt(n) * np.eye(n)
    return A, rng.standard_normal(n)


class TestPcg:
    def test_identity_one_step(self):
        x, rep = pcg(np.eye(4), np.arange(1.0, 5.0))
        assert rep.converged and rep.outer_iters == 1

    def test_two_eigenvalues(self):
        x, rep = pcg(np.diag([1.0, 2.0]), np.array([1.0, 2.0]), tol=1e-14)
        assert rep.outer_iters <= 2
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_ict_on_model_block(self):
        A = build_example1(8).A
        b = np.random.default_rng(0).standard_normal(A.nrows)
        x, rep = pcg(A, b, ict(A, 1e-2), tol=1e-6, maxit=100)
        assert rep.converged and rep.res <= 1e-6
        ref = np.linalg.solve(A.to_dense(), b)
        assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-5

    def test_error_decreases(self):
        A = build_example1(8).A
        xs = np.ones(A.nrows)
        errs = []
        x, rep = pcg(A, A @ xs, ict(A), tol=1e-8, callback=lambda x: errs.append(np.linalg.norm(x - xs)))
        assert errs[-1] < errs[0]
        assert rep.converged and rep.res <= 1e-8

    def test_indefinite_detected(self):
        with pytest.raises(IndefiniteError) as e:
            pcg(np.diag([1.0, -1.0]), np.array([1.0, 3.0]))
        assert e.value.iteration >= 1

    def test_maxit(self):
        A = build_example1(8).A
        _, rep = pcg(A, np.ones(A.nrows), None, tol=1e-12, maxit=3)
        assert not rep.converged and rep.status == "maxit" and rep.outer_iters == 3


class TestGmres:
    def test_identity(self):
        x, rep = gmres(np.eye(5), np.ones(5))
        assert rep.outer_iters == 1 and rep.converged

    def test_upper_triangular(self):
        x, rep = gmres(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([2.0, 1.0]))
        assert rep.outer_iters <= 2
        np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 30), st.integers(0, 2**31 - 1))
    def test_finite_termination(self, n, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((n, n)) + np.sqrt(n) * np.eye(n)
        b = rng.standard_normal(n)
        x, rep = gmres(A, b, tol=1e-10, maxit=n)
        assert rep.converged and rep.outer_iters <= n
        assert np.linalg.norm(b - A @ x) / np.linalg.norm(b) <= 1e-10

    def test_estimate_monotone(self):
        A, b = random_system(3, 30)
        _, rep = gmres(A, b, np.diag(1 / np.diag(A)), tol=1e-12)
        h = np.array(rep.history)
        assert np.all(np.diff(h) <= 1e-15)

    def test_true_residual_certifies(self):
        # a badly scaled left preconditioner makes the preconditioned estimate
        # optimistic; the reported residual must still be the true one
        A, b = random_system(4)
        M = np.diag(np.geomspace(1e-6, 1.0, 20))
        x, rep = gmres(A, b, M, tol=1e-10)
        assert rep.converged
        assert rep.res == pytest.approx(np.linalg.norm(b - A @ x) / np.linalg.norm(b))
        assert rep.res <= 1e-10

    def test_maxit_status(self):
        A, b = random_system(5)
        _, rep = gmres(A, b, tol=1e-14, maxit=3)
        assert rep.status == "maxit" and not rep.converged and rep.res > 1e-14

    def test_zero_rhs(self):
        x, rep = gmres(np.eye(3), np.zeros(3))
        assert rep.converged and not x.any()


class TestFgmres:
    def test_exact_inverse(self):
        A, b = random_system(6)
        Ainv = np.linalg.inv(A)
        x, rep = fgmres(A, b, Ainv, tol=1e-10)
        assert rep.outer_iters == 1

    def test_identity_precond_matches_gmres(self):
        A, b = random_system(7, 10)
        it_f, it_g = [], []
        fgmres(A, b, None, tol=1e-13, callback=lambda x: it_f.append(x.copy()))
        gmres(A, b, None, tol=1e-13, callback=lambda x: it_g.append(x.copy()))
        assert len(it_f) == len(it_g)
        for xf, xg in zip(it_f, it_g):
            assert np.abs(xf - xg).max() < 1e-12

    def test_fixed_linear_precond_equals_right_preconditioning(self):
        A, b = random_system(8, 10)
        M = np.diag(1 / np.diag(A)) + 0.01 * np.ones((10, 10))
        it_f, it_r = [], []
        fgmres(A, b, M, tol=1e-13, callback=lambda x: it_f.append(x.copy()))
        # right preconditioning by hand: GMRES on A M u = b, x = M u
        gmres(A @ M, b, None, tol=1e-13, callback=lambda u: it_r.append(M @ u))
        assert len(it_f) == len(it_r)
        for xf, xr in zip(it_f, it_r):
            assert np.abs(xf - xr).max() < 1e-12

    def test_varying_preconditioner_on_model_problem(self):
        blocks = build_example1(4)
        system = assemble_saddle(blocks, "minus")
        b, w = manufactured_rhs(system)
        loose = build_preconditioner(blocks, "R", inner_tol=1e-3)
        tight = build_preconditioner(blocks, "R", inner_tol=1e-6)
        calls = [0]

        def varying(r):
            calls[0] += 1
            return (loose if calls[0] % 2 else tight)(r)

        x, rep = fgmres(system.matrix, b, varying, tol=1e-8)
        assert rep.converged
        assert np.linalg.norm(b - system.matrix @ x) / np.linalg.norm(b) <= 1e-8


class TestMinres:
    def test_two_eigenvalues(self):
        x, rep = minres(np.diag([1.0, -1.0]), np.array([1.0, 1.0]), tol=1e-14)
        assert rep.outer_iters <= 2
        np.testing.assert_allclose(x, [1.0, -1.0], atol=1e-14)

    def test_identity(self):
        _, rep = minres(np.eye(4), np.ones(4))
        assert rep.outer_iters == 1 and rep.converged

    def test_matches_dense_symmetric_indefinite(self):
        rng = np.random.default_rng(2)
        G = rng.standard_normal((15, 15))
        A = G + G.T
        b = rng.standard_normal(15)
        x, rep = minres(A, b, tol=1e-12, maxit=200)
        assert rep.converged
        np.testing.assert_allclose(x, np.linalg.solve(A, b), rtol=1e-7, atol=1e-9)

    def test_indefinite_preconditioner(self):
        with pytest.raises(IndefinitePreconditionerError):
            minres(np.eye(3), np.ones(3), np.diag([1.0, -1.0, 1.0]))

    def test_model_problem_with_rd(self):
        blocks = build_example1(4)
        system = assemble_saddle(blocks, "plus")
        b, w = manufactured_rhs(system)
        state = build_preconditioner(blocks, "RD", inner_tol=1e-12, inner_maxit=500)
        x, rep = minres(system.matrix, b, state, tol=1e-12, maxit=200)
        h = np.array(rep.history)
        assert np.all(np.diff(h) <= 1e-14)
        assert rep.converged and rep.res <= 1e-8
        # independent dense oracle
        ref = np.linalg.solve(system.matrix.to_dense(), b)
        assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-6
