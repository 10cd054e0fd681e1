"""Tests for the dense matrix kernels."""

import numpy as np
import pytest

from mortl.core.exceptions import DimensionMismatch, SingularPencil
from mortl.services.linalg import (
    expm,
    expm_frechet,
    lyapunov_from_schur,
    schur,
    solve_lyapunov,
    solve_sylvester,
    sylvester_from_schur,
)
from tests.oracles import frechet_quadrature, kron_sylvester


class TestSchur:
    """Test the real Schur factorization."""

    def test_reconstructs_the_matrix(self) -> None:
        """Test that Q T Q^T gives back A with orthogonal Q."""
        rng = np.random.default_rng(1)
        A = rng.standard_normal((6, 6))
        form = schur(A)
        assert np.allclose(form.Q @ form.T @ form.Q.T, A, atol=1e-12)
        assert np.allclose(form.Q.T @ form.Q, np.eye(6), atol=1e-12)
        assert np.allclose(np.tril(form.T, -2), 0.0)

    def test_eigenvalues_of_rotation_block(self) -> None:
        """Test the eigenvalues read from a 2x2 block."""
        form = schur([[0.0, 1.0], [-1.0, 0.0]])
        values = np.sort_complex(form.eigenvalues())
        assert np.allclose(values, [-1j, 1j])

    def test_eigenvalues_match_numpy(self) -> None:
        """Test the block-wise eigenvalues against numpy."""
        rng = np.random.default_rng(2)
        A = rng.standard_normal((7, 7))
        expected = np.sort_complex(np.linalg.eigvals(A))
        actual = np.sort_complex(schur(A).eigenvalues())
        assert np.allclose(actual, expected, atol=1e-10)

    def test_rejects_non_square(self) -> None:
        """Test that a rectangular matrix is refused."""
        with pytest.raises(DimensionMismatch):
            schur(np.ones((2, 3)))


class TestSylvester:
    """Test the Bartels-Stewart solver."""

    def test_scalar_equation(self) -> None:
        """Test a x + x b + c = 0 with scalars."""
        X = solve_sylvester([[-1.0]], [[-2.0]], [[3.0]])
        assert X[0, 0] == pytest.approx(1.0, rel=1e-14)

    def test_matches_kronecker_oracle(self) -> None:
        """Test random rectangular equations against the Kronecker form."""
        rng = np.random.default_rng(3)
        A = rng.standard_normal((5, 5)) - 3 * np.eye(5)
        B = rng.standard_normal((3, 3)) - 3 * np.eye(3)
        C = rng.standard_normal((5, 3))
        X = solve_sylvester(A, B, C)
        assert np.allclose(X, kron_sylvester(A, B, C), atol=1e-10)
        assert np.linalg.norm(A @ X + X @ B + C) < 1e-10

    def test_transposed_coefficients(self) -> None:
        """Test A^T X + X B^T + C = 0 from the Schur forms of A and B."""
        rng = np.random.default_rng(4)
        A = rng.standard_normal((4, 4)) - 2 * np.eye(4)
        B = rng.standard_normal((2, 2)) - 2 * np.eye(2)
        C = rng.standard_normal((4, 2))
        X = sylvester_from_schur(
            schur(A), schur(B), C, trans_a=True, trans_b=True
        )
        assert np.linalg.norm(A.T @ X + X @ B.T + C) < 1e-10

    def test_singular_pencil_is_named(self) -> None:
        """Test that lambda(A) + lambda(B) = 0 raises with the label."""
        with pytest.raises(SingularPencil, match="X_tau"):
            sylvester_from_schur(
                schur([[1.0]]), schur([[-1.0]]), [[1.0]], equation="X_tau"
            )

    def test_rejects_wrong_right_hand_side(self) -> None:
        """Test that a mis-shaped right-hand side is refused."""
        with pytest.raises(DimensionMismatch):
            solve_sylvester(-np.eye(2), -np.eye(3), np.ones((3, 2)))


class TestLyapunov:
    """Test the Lyapunov solvers."""

    def test_symmetric_solution(self) -> None:
        """Test the residual and the symmetry of P."""
        rng = np.random.default_rng(5)
        A = rng.standard_normal((6, 6)) - 4 * np.eye(6)
        B = rng.standard_normal((6, 2))
        P = solve_lyapunov(A, B @ B.T)
        assert np.array_equal(P, P.T)
        assert np.linalg.norm(A @ P + P @ A.T + B @ B.T) < 1e-10

    def test_transposed_form(self) -> None:
        """Test A^T Q + Q A + C^T C = 0."""
        rng = np.random.default_rng(6)
        A = rng.standard_normal((5, 5)) - 4 * np.eye(5)
        C = rng.standard_normal((1, 5))
        Q = lyapunov_from_schur(schur(A), C.T @ C, transpose=True)
        assert np.linalg.norm(A.T @ Q + Q @ A + C.T @ C) < 1e-10

    def test_unstable_but_solvable(self) -> None:
        """Test that instability alone does not block the solve."""
        A = np.diag([1.0, 2.0])
        P = solve_lyapunov(A, np.eye(2))
        assert np.allclose(P, np.diag([-0.5, -0.25]))

    def test_positive_semidefinite_for_stable_a(self) -> None:
        """Test P >= 0 when A is stable and the right-hand side is PSD."""
        rng = np.random.default_rng(13)
        A = rng.standard_normal((6, 6)) - 3 * np.eye(6)
        assert np.max(np.linalg.eigvals(A).real) < 0
        B = rng.standard_normal((6, 1))
        P = solve_lyapunov(A, B @ B.T)
        assert np.min(np.linalg.eigvalsh(P)) >= -1e-10 * np.linalg.norm(P)

    def test_marginal_eigenvalue_is_singular(self) -> None:
        """Test that a zero eigenvalue makes the pencil singular."""
        with pytest.raises(SingularPencil):
            solve_lyapunov(np.diag([0.0, -1.0]), np.eye(2))


class TestExpm:
    """Test the matrix exponential and its Frechet derivative."""

    def test_diagonal(self) -> None:
        """Test e^{At} for diagonal A."""
        E = expm(np.diag([-1.0, 2.0]), 0.5)
        assert np.allclose(E, np.diag(np.exp([-0.5, 1.0])), rtol=1e-14)

    def test_zero_time_is_identity(self) -> None:
        """Test e^{A 0} = I."""
        assert np.allclose(expm(np.ones((3, 3)), 0.0), np.eye(3))

    def test_negative_time_is_refused(self) -> None:
        """Test that t < 0 raises ValueError."""
        with pytest.raises(ValueError):
            expm(np.eye(2), -1.0)

    def test_frechet_matches_quadrature(self) -> None:
        """Test L(A, E) against the defining integral."""
        rng = np.random.default_rng(7)
        A = rng.standard_normal((4, 4))
        E = rng.standard_normal((4, 4))
        expected = frechet_quadrature(A, E)
        actual = expm_frechet(A, E)
        assert np.allclose(actual, expected, rtol=1e-9, atol=1e-11)

    def test_frechet_of_commuting_direction(self) -> None:
        """Test L(A, A) = A e^A."""
        A = np.array([[-1.0, 0.5], [0.0, -2.0]])
        assert np.allclose(
            expm_frechet(A, A), A @ expm(A), rtol=1e-10, atol=1e-12
        )

    def test_frechet_rejects_shape_mismatch(self) -> None:
        """Test that E must have the shape of A."""
        with pytest.raises(DimensionMismatch):
            expm_frechet(np.eye(2), np.eye(3))

    def test_semigroup_property(self) -> None:
        """Test e^{A(t1 + t2)} = e^{A t1} e^{A t2}."""
        rng = np.random.default_rng(8)
        M = rng.standard_normal((5, 5))
        A = 2 * M / np.linalg.norm(M, 2) - 3 * np.eye(5)
        assert np.linalg.norm(A, 2) <= 5
        whole = expm(A, 0.7 + 1.6)
        product = expm(A, 0.7) @ expm(A, 1.6)
        assert np.linalg.norm(whole - product) <= 1e-9 * np.linalg.norm(
            whole
        )

    def test_frechet_is_linear_in_the_direction(self) -> None:
        """Test L(A, 2 E + F) = 2 L(A, E) + L(A, F)."""
        rng = np.random.default_rng(9)
        A, E, F = rng.standard_normal((3, 4, 4))
        combined = expm_frechet(A, 2 * E + F)
        expected = 2 * expm_frechet(A, E) + expm_frechet(A, F)
        assert np.allclose(combined, expected, rtol=1e-10, atol=1e-12)

    def test_directional_difference_decays_linearly(self) -> None:
        """Test that the one-sided difference error is O(h)."""
        rng = np.random.default_rng(10)
        A = rng.standard_normal((4, 4)) - np.eye(4)
        E = rng.standard_normal((4, 4))
        L = expm_frechet(A, E)
        errors = [
            np.linalg.norm((expm(A + h * E) - expm(A)) / h - L)
            for h in (1e-4, 1e-5)
        ]
        assert 5 < errors[0] / errors[1] < 20
