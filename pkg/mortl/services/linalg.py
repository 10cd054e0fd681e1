"""Dense matrix kernels: Schur, Sylvester, Lyapunov and expm."""

from typing import Optional

import numpy as np
import scipy.linalg
from scipy.linalg import get_lapack_funcs

from mortl.core.exceptions import (
    DimensionMismatch,
    NonConvergence,
    SingularPencil,
)
from mortl.models.models import SchurForm, as_matrix

PENCIL_TOL = 1e-12


def _square(value, name: str) -> np.ndarray:
    matrix = as_matrix(value, name)
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(
            f"{name} must be square, got shape {matrix.shape}"
        )
    return matrix


def schur(A) -> SchurForm:
    """Compute the real Schur factorization of a square matrix.

    Parameters
    ----------
    A : array_like
        Square real matrix with finite entries.

    Returns
    -------
    SchurForm
        Orthogonal Q and quasi-upper-triangular T with A = Q T Q^T.

    Raises
    ------
    NonConvergence
        If the QR iteration does not converge.

    """
    A = _square(A, "A")
    try:
        T, Q = scipy.linalg.schur(A, output="real")
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"QR iteration did not converge: {exc}")
    # only the first subdiagonal may carry 2x2 blocks
    T = np.triu(T, -1)
    return SchurForm(Q=Q, T=T)


def sylvester_from_schur(
    sa: SchurForm,
    sb: SchurForm,
    C,
    trans_a: bool = False,
    trans_b: bool = False,
    equation: Optional[str] = None,
) -> np.ndarray:
    """Solve op(A) X + X op(B) + C = 0 from Schur forms of A and B.

    op(M) is M or M^T depending on `trans_a` / `trans_b`. The Schur
    forms are reused so that a fixed coefficient is factorized once.

    Parameters
    ----------
    sa, sb : SchurForm
        Real Schur forms of A and B.
    C : array_like
        Right-hand side, shaped (A.rows, B.rows).
    trans_a, trans_b : bool, optional
        Use the transposed coefficient, by default False.
    equation : str, optional
        Label reported by SingularPencil.

    Returns
    -------
    np.ndarray
        The solution X.

    Raises
    ------
    SingularPencil
        If some eigenvalue sum lambda_i(A) + lambda_j(B) is numerically
        zero.

    """
    C = as_matrix(C, "C")
    n_a, n_b = sa.T.shape[0], sb.T.shape[0]
    if C.shape != (n_a, n_b):
        raise DimensionMismatch(
            f"right-hand side must be {(n_a, n_b)}, got {C.shape}"
        )

    sums = sa.eigenvalues()[:, None] + sb.eigenvalues()[None, :]
    scale = np.linalg.norm(sa.T) + np.linalg.norm(sb.T)
    gap = float(np.min(np.abs(sums)))
    if gap <= PENCIL_TOL * scale:
        raise SingularPencil(
            f"eigenvalue sum {gap:.3e} vanishes (scale {scale:.3e})",
            equation=equation,
        )

    F = sa.Q.T @ (-C) @ sb.Q
    (trsyl,) = get_lapack_funcs(("trsyl",), (sa.T, sb.T, F))
    Y, factor, info = trsyl(
        sa.T,
        sb.T,
        F,
        trana="T" if trans_a else "N",
        tranb="T" if trans_b else "N",
    )
    if info < 0:
        raise ValueError(f"trsyl: illegal value in argument {-info}")
    if info == 1:
        raise SingularPencil(
            "close eigenvalue sums, solution perturbed", equation=equation
        )
    return sa.Q @ (Y / factor) @ sb.Q.T


def solve_sylvester(A, B, C) -> np.ndarray:
    """Solve A X + X B + C = 0 by the Bartels-Stewart method.

    Parameters
    ----------
    A : array_like
        Square matrix of size k.
    B : array_like
        Square matrix of size l.
    C : array_like
        k x l right-hand side.

    Returns
    -------
    np.ndarray
        The k x l solution X.

    Raises
    ------
    SingularPencil
        If the spectra of A and -B intersect.

    """
    return sylvester_from_schur(schur(A), schur(B), C)


def lyapunov_from_schur(
    sa: SchurForm, Q, transpose: bool = False, equation: Optional[str] = None
) -> np.ndarray:
    """Solve A P + P A^T + Q = 0 (or A^T P + P A + Q = 0) from schur(A)."""
    if transpose:
        P = sylvester_from_schur(sa, sa, Q, trans_a=True, equation=equation)
    else:
        P = sylvester_from_schur(sa, sa, Q, trans_b=True, equation=equation)
    return (P + P.T) / 2


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve the Lyapunov equation A P + P A^T + Q = 0.

    Parameters
    ----------
    A : array_like
        Square matrix with lambda_i(A) + lambda_j(A) != 0.
    Q : array_like
        Symmetric right-hand side.

    Returns
    -------
    np.ndarray
        The symmetric solution P.

    """
    return lyapunov_from_schur(schur(A), Q)


def expm(A, t: float = 1.0) -> np.ndarray:
    """Return the matrix exponential e^{A t}.

    Scaling and squaring with a Pade core.

    Raises
    ------
    ValueError
        If t is negative or an entry is not finite.

    """
    A = _square(A, "A")
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and nonnegative, got {t}")
    return scipy.linalg.expm(A * t)


def expm_frechet(A, E) -> np.ndarray:
    """Return the Frechet derivative L(A, E) of the matrix exponential.

    Read from the upper-right block of expm([[A, E], [0, A]]).

    Parameters
    ----------
    A : array_like
        Square matrix.
    E : array_like
        Direction, same shape as A.

    Returns
    -------
    np.ndarray
        L(A, E) = int_0^1 e^{A(1-s)} E e^{As} ds.

    """
    A = _square(A, "A")
    E = as_matrix(E, "E")
    if E.shape != A.shape:
        raise DimensionMismatch(
            f"E must have the shape of A {A.shape}, got {E.shape}"
        )
    n = A.shape[0]
    augmented = np.block([[A, E], [np.zeros_like(A), A]])
    return scipy.linalg.expm(augmented)[:n, n:]
