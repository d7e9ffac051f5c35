import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from lcklab.errors import (BranchAmbiguity, DegenerateW, IllConditioned, NotContraction,
                           Singular)
from lcklab.linalg_core import (HermitianForm, absolute_part_unitarity, lemma_linear_u0,
                                logm_schur_parlett, lyapunov_residual, min_eig_hermitian,
                                principal_log, solve_lyapunov, spectral_check)

from conftest import DIAGONAL, JORDAN, RADIAL

LN2 = math.log(2.0)


def random_contraction(rng, n, rho=0.9):
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return rho * M / max(abs(np.linalg.eigvals(M)))


class TestSpectralCheck:
    def test_diagonal(self):
        C = spectral_check(DIAGONAL)
        assert C.diagonalizable
        assert sorted(abs(C.eigenvalues)) == pytest.approx([0.25, 0.5])
        assert np.allclose(C.A_abs, np.diag([0.5, 0.25]))

    def test_jordan_not_diagonalizable(self):
        C = spectral_check(JORDAN)
        assert not C.diagonalizable
        assert C.Q is None and C.A_abs is None

    def test_not_contraction(self):
        with pytest.raises(NotContraction):
            spectral_check(np.diag([0.5, 1.2]))
        with pytest.raises(NotContraction):
            spectral_check(np.diag([0.5, 1.0]))

    def test_singular(self):
        with pytest.raises(Singular):
            spectral_check(np.diag([0.5, 0.0]))

    def test_rotation_part_has_unitary_absolute_part(self):
        A = np.diag([0.5 * np.exp(0.3j), 0.4 * np.exp(-1.1j)])
        C = spectral_check(A)
        assert absolute_part_unitarity(C) < 1e-12

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            spectral_check(np.ones((2, 3)))


class TestPrincipalLog:
    def test_scalar(self):
        F = principal_log(spectral_check(RADIAL))
        assert np.allclose(F.L, -LN2 * np.eye(2), atol=1e-15)

    def test_jordan_closed_form(self):
        # log([[a, b], [0, a]]) = [[log a, b/a], [0, log a]]
        F = principal_log(spectral_check(JORDAN))
        assert np.allclose(F.L, [[-LN2, 1.0], [0, -LN2]], atol=1e-14)

    def test_flow_reaches_A(self):
        F = principal_log(spectral_check(JORDAN))
        assert np.allclose(F.flow(1.0), JORDAN, atol=1e-14)

    def test_branch_cut(self):
        with pytest.raises(BranchAmbiguity):
            logm_schur_parlett(np.diag([-0.5, 0.3]))

    def test_near_cut_but_off_it(self):
        A = np.diag([0.5 * np.exp(1j * (np.pi - 1e-6)), 0.3])
        L = logm_schur_parlett(A)
        assert np.allclose(sla.expm(L), A, atol=1e-13)
        assert abs(np.diag(L)[0].imag - (np.pi - 1e-6)) < 1e-12

    def test_against_scipy_logm_random(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 5, 8):
            for _ in range(5):
                A = random_contraction(rng, n)
                L = logm_schur_parlett(A)
                ref = sla.logm(A)
                assert np.linalg.norm(L - ref) <= 1e-10 * max(1, np.linalg.norm(ref))

    def test_clustered_eigenvalues(self):
        # near-defective: eigenvalues 0.5 and 0.5 + 1e-9 with a large coupling
        A = np.array([[0.5, 1.0, 0.0], [0.0, 0.5 + 1e-9, 1.0], [0, 0, 0.3 + 0.2j]])
        L = logm_schur_parlett(A)
        assert np.linalg.norm(sla.expm(L) - A) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
    def test_exp_log_roundtrip(self, n, seed):
        A = random_contraction(np.random.default_rng(seed), n, rho=0.8)
        L = logm_schur_parlett(A)
        assert np.linalg.norm(sla.expm(L) - A) <= 1e-10 * max(1.0, np.linalg.norm(A))


class TestLyapunov:
    def test_against_scipy(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 4):
            L = sla.logm(random_contraction(rng, n, 0.7))
            P = solve_lyapunov(L).H
            ref = sla.solve_continuous_lyapunov(L.conj().T, -np.eye(n))
            assert np.allclose(P, ref, atol=1e-10)
            assert lyapunov_residual(L, P) < 1e-10
            assert min_eig_hermitian(P) > 0

    def test_scalar_case(self):
        P = solve_lyapunov(-LN2 * np.eye(2)).H
        assert np.allclose(P, np.eye(2) / (2 * LN2), atol=1e-14)

    def test_ill_conditioned(self):
        with pytest.raises(IllConditioned):
            solve_lyapunov(np.diag([-1e-14, -1.0]).astype(complex))


class TestLemmaLinear:
    def test_worked_example(self):
        inst = lemma_linear_u0([[1, 1], [1, 3]], [[0, 0], [0, 1]], [[1], [0]])
        assert inst.u0 == pytest.approx(-2.0, abs=1e-12)
        hu = inst.h_u(inst.u0)
        assert np.allclose(hu, [[1, 1], [1, 1]], atol=1e-12)
        assert abs(min_eig_hermitian(hu)) < 1e-12
        assert abs(np.vdot(hu @ np.array([1, -1]), np.array([1, -1]))) < 1e-12

    def test_h2_scaling(self):
        base = lemma_linear_u0([[1, 1], [1, 3]], [[0, 0], [0, 1]], [[1], [0]]).u0
        scaled = lemma_linear_u0([[1, 1], [1, 3]], [[0, 0], [0, 4]], [[1], [0]]).u0
        assert scaled == pytest.approx(base / 4, abs=1e-12)

    def test_degenerate_w(self):
        with pytest.raises(DegenerateW):
            lemma_linear_u0([[-1, 0], [0, 1]], [[0, 0], [0, 1]], [[1], [0]])

    def test_h2_not_vanishing_on_w(self):
        with pytest.raises(ValueError):
            lemma_linear_u0([[1, 0], [0, 1]], [[1, 0], [0, 1]], [[1], [0]])

    def test_threshold_matches_eigenvalue_sweep(self):
        """Oracle: bisection on u for the sign of min_eig(h1 + u h2)."""
        rng = np.random.default_rng(3)
        for n in (2, 3, 4):
            W = rng.normal(size=(n, n - 1)) + 1j * rng.normal(size=(n, n - 1))
            Q, _ = np.linalg.qr(W, mode="complete")
            ell = Q[:, -1:]
            h2 = 2.5 * ell @ ell.conj().T
            X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            h1 = X @ X.conj().T - 5.0 * ell @ ell.conj().T
            inst = lemma_linear_u0(h1, h2, W)
            lo, hi = -1e3, 1e3
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if min_eig_hermitian(h1 + mid * h2) > 0:
                    hi = mid
                else:
                    lo = mid
            assert inst.u0 == pytest.approx(hi, rel=1e-8, abs=1e-8)


def test_hermitian_form_rejects_nonhermitian():
    with pytest.raises(ValueError):
        HermitianForm.from_matrix([[1, 2], [0, 1]])


def test_hermitian_form_is_sesquilinear():
    h = HermitianForm.from_matrix([[2, 1j], [-1j, 3]])
    x, y = np.array([1, 1j]), np.array([2, -1])
    assert h(x, y) == pytest.approx(np.conj(h(y, x)))
    assert h(2j * x, y) == pytest.approx(2j * h(x, y))
