"""Independent checks of a reduced model.

Tangential interpolation identities at the mirrored reduced poles, the
trace identity behind them, closed-form projections of the Gramian
blocks and the bound of the output error by the H2,tau error.
"""

import logging
from itertools import permutations
from typing import Dict, List, Optional

import numpy as np
import scipy.linalg

from mortl.core.exceptions import (
    NonDiagonalizable,
    PreconditionViolated,
    RepeatedPoles,
)
from mortl.models.models import (
    AppendixVectors,
    ErrorSystemWorkspace,
    Horizon,
    InterpolationResiduals,
    SpectralDecomposition,
    StateSpaceModel,
    as_matrix,
)
from mortl.services.cost import (
    assemble_workspace,
    build_error_system,
    cost,
    gradients,
)
from mortl.services.gramians import (
    TimeLimitedModel,
    resolvent_solve,
    tl_transfer_function,
    tl_transfer_function_derivative,
)
from mortl.services.linalg import expm

logger = logging.getLogger(__name__)

LEMMA_TOL = 1e-9
POLE_GAP_TOL = 1e-8
EIGVEC_COND_MAX = 1e12


def _relative_gap(lhs, rhs) -> float:
    lhs, rhs = np.atleast_1d(lhs), np.atleast_1d(rhs)
    scale = max(1.0, float(np.linalg.norm(lhs)), float(np.linalg.norm(rhs)))
    return float(np.linalg.norm(lhs - rhs)) / scale


def lemma1_check(A, B, C, D, M, N) -> bool:
    """Check Tr(C N) = Tr(D M) for A M + M B + C = 0, N A + B N + D = 0.

    Parameters
    ----------
    A, B : array_like
        Square coefficients of sizes k and l.
    C, D : array_like
        Right-hand sides, k x l and l x k.
    M, N : array_like
        Solutions of both equations, k x l and l x k.

    Returns
    -------
    bool
        True if |Tr(C N) - Tr(D M)| <= 1e-9 (|Tr(C N)| + 1).

    Raises
    ------
    PreconditionViolated
        If M or N does not solve its equation to 1e-9.

    """
    A, B, C, D, M, N = (
        as_matrix(value, name)
        for value, name in zip((A, B, C, D, M, N), "ABCDMN")
    )
    checks = {
        "A M + M B + C": (A @ M + M @ B + C, A, M, B, C),
        "N A + B N + D": (N @ A + B @ N + D, A, N, B, D),
    }
    for label, (residual, P, S, Q, R) in checks.items():
        scale = max(
            1.0,
            np.linalg.norm(P) * np.linalg.norm(S)
            + np.linalg.norm(S) * np.linalg.norm(Q)
            + np.linalg.norm(R),
        )
        if np.linalg.norm(residual) > LEMMA_TOL * scale:
            raise PreconditionViolated(f"{label} = 0 does not hold")
    left = float(np.trace(C @ N))
    right = float(np.trace(D @ M))
    return abs(left - right) <= LEMMA_TOL * (abs(left) + 1.0)


def spectral_decomposition(red: StateSpaceModel) -> SpectralDecomposition:
    """Diagonalize A_r and project B_r and C_r on its eigenvectors.

    Raises
    ------
    RepeatedPoles
        If two eigenvalues are closer than 1e-8 max(1, |lambda|_max).
    NonDiagonalizable
        If the eigenvector matrix has condition number above 1e12.

    """
    eigenvalues, V = scipy.linalg.eig(red.A)
    r = eigenvalues.size
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    for i, j in permutations(range(r), 2):
        if abs(eigenvalues[i] - eigenvalues[j]) <= POLE_GAP_TOL * scale:
            raise RepeatedPoles(
                f"poles {eigenvalues[i]:.6g} and {eigenvalues[j]:.6g} "
                "coincide"
            )
    if np.linalg.cond(V) > EIGVEC_COND_MAX:
        raise NonDiagonalizable("eigenvector matrix is ill-conditioned")
    W = np.linalg.inv(V).T
    return SpectralDecomposition(
        eigenvalues=eigenvalues, V=V, W=W, b=W.T @ red.B, c=red.C @ V
    )


def interpolation_residuals(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    prepared: Optional[TimeLimitedModel] = None,
) -> InterpolationResiduals:
    """Check the gradients against H_tau and H_r,tau at s = -lambda_i.

    For each pole lambda_i of A_r with eigenvectors v_i, w_i:

    - right: 1/2 grad_Br^T v_i = (H_r^T - H^T)(-lambda_i) c_i
    - left: 1/2 w_i^T grad_Cr^T = b_i (H_r^T - H^T)(-lambda_i)
    - left_columns: 1/2 grad_Cr w_i = (H_r - H)(-lambda_i) b_i^T
    - bitangential: 1/2 w_i^T grad_Ar^T v_i
      = b_i (H' - H_r')^T(-lambda_i) c_i

    and for i != j, 1/2 w_i^T grad_Ar^T v_j
    = (b_i grad_Br^T v_j - w_i^T grad_Cr^T c_j) / (2 (lambda_j - lambda_i)).
    These hold for every diagonalizable reduced model; they become
    interpolation conditions when the gradients vanish.

    Returns
    -------
    InterpolationResiduals
        Relative residuals per pole and per ordered pair.

    Raises
    ------
    NonDiagonalizable, RepeatedPoles
        If A_r has no well-conditioned eigenbasis.

    """
    spectral = spectral_decomposition(red)
    ws = assemble_workspace(full, red, h, prepared)
    grad = gradients(full, red, h, ws)
    half_A, half_B, half_C = (
        grad.grad_Ar / 2,
        grad.grad_Br / 2,
        grad.grad_Cr / 2,
    )
    lam = spectral.eigenvalues
    V, W, b, c = spectral.V, spectral.W, spectral.b, spectral.c

    right: List[float] = []
    left: List[float] = []
    left_columns: List[float] = []
    bitangential: List[float] = []
    for i in range(lam.size):
        s = -lam[i]
        gap = tl_transfer_function(red, h, s, ws.expArtau) - (
            tl_transfer_function(full, h, s, ws.expAtau)
        )
        slope_gap = tl_transfer_function_derivative(
            full, h, s, ws.expAtau
        ) - tl_transfer_function_derivative(red, h, s, ws.expArtau)
        v_i, w_i, b_i, c_i = V[:, i], W[:, i], b[i], c[:, i]
        right.append(_relative_gap(half_B.T @ v_i, gap.T @ c_i))
        left.append(_relative_gap(w_i @ half_C.T, b_i @ gap.T))
        left_columns.append(_relative_gap(half_C @ w_i, gap @ b_i))
        bitangential.append(
            _relative_gap(w_i @ half_A.T @ v_i, b_i @ slope_gap.T @ c_i)
        )

    offdiagonal: Dict[str, float] = {}
    offdiagonal_printed: Dict[str, float] = {}
    for i, j in permutations(range(lam.size), 2):
        lhs = W[:, i] @ half_A.T @ V[:, j]
        numerator = b[i] @ grad.grad_Br.T @ V[:, j] - (
            W[:, i] @ grad.grad_Cr.T @ c[:, j]
        )
        key = f"{i},{j}"
        offdiagonal[key] = _relative_gap(
            lhs, numerator / (2 * (lam[j] - lam[i]))
        )
        offdiagonal_printed[key] = _relative_gap(
            lhs, numerator / (2 * (lam[i] - lam[j]))
        )

    return InterpolationResiduals(
        right=right,
        left=left,
        left_columns=left_columns,
        bitangential=bitangential,
        offdiagonal=offdiagonal,
        offdiagonal_printed=offdiagonal_printed,
    )


def appendix_vectors(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    i: int,
    ws: Optional[ErrorSystemWorkspace] = None,
) -> AppendixVectors:
    """Evaluate the Gramian blocks along the i-th eigenvector of A_r.

    With lambda = lambda_i, b_i = w_i^T B_r and c_i = C_r v_i:

    - x_i_tau = -(A + lambda I)^-1 (I - e^{lambda tau} e^{A tau}) B b_i^T
    - x_i = -(A + lambda I)^-1 B b_i^T
    - p_i_tau = -(A_r + lambda I)^-1 (I - e^{lambda tau} e^{A_r tau})
      B_r b_i^T
    - p_i = -(A_r + lambda I)^-1 B_r b_i^T
    - y_i_tau = (A^T + lambda I)^-1 (I - e^{lambda tau} e^{A^T tau})
      C^T c_i
    - q_i_tau = -(A_r^T + lambda I)^-1 (I - e^{lambda tau} e^{A_r^T tau})
      C_r^T c_i

    ``residuals`` compares them with X_tau w_i, X w_i, P_r_tau w_i,
    P_r w_i, Y_tau v_i and Q_r_tau v_i from the Sylvester solutions.

    Raises
    ------
    SingularResolvent
        If -lambda_i is an eigenvalue of A or A_r.

    """
    spectral = spectral_decomposition(red)
    if not 0 <= i < spectral.eigenvalues.size:
        raise IndexError(f"pole index {i} out of range")
    if ws is None:
        ws = assemble_workspace(full, red, h)
    lam = spectral.eigenvalues[i]
    v_i, w_i = spectral.V[:, i], spectral.W[:, i]
    b_i, c_i = spectral.b[i], spectral.c[:, i]
    decay = np.exp(lam * h.tau)

    def shifted_solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        # (M + lambda I)^-1 rhs
        return -resolvent_solve(M, -lam, rhs)

    Bb = full.B @ b_i
    Brb = red.B @ b_i
    Cc = full.C.T @ c_i
    Crc = red.C.T @ c_i
    vectors = {
        "x_i_tau": -shifted_solve(full.A, Bb - decay * (ws.expAtau @ Bb)),
        "x_i": -shifted_solve(full.A, Bb),
        "p_i_tau": -shifted_solve(red.A, Brb - decay * (ws.expArtau @ Brb)),
        "p_i": -shifted_solve(red.A, Brb),
        "y_i_tau": shifted_solve(full.A.T, Cc - decay * (ws.expAtau.T @ Cc)),
        "q_i_tau": -shifted_solve(
            red.A.T, Crc - decay * (ws.expArtau.T @ Crc)
        ),
    }
    sylvester = {
        "x_i_tau": ws.X_tau @ w_i,
        "x_i": ws.X @ w_i,
        "p_i_tau": ws.P_r_tau @ w_i,
        "p_i": ws.P_r @ w_i,
        "y_i_tau": ws.Y_tau @ v_i,
        "q_i_tau": ws.Q_r_tau @ v_i,
    }
    residuals = {
        name: _relative_gap(vectors[name], sylvester[name])
        for name in vectors
    }
    return AppendixVectors(**vectors, residuals=residuals)


def simulate_error_output(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    u: np.ndarray,
) -> np.ndarray:
    """Simulate y - y_r on a uniform grid of [0, tau] from rest.

    The input is held constant on each of the N steps and the error
    system is stepped exactly with a matrix exponential.

    Parameters
    ----------
    full, red : StateSpaceModel
        The full and reduced models.
    h : Horizon
        The time interval [0, tau].
    u : np.ndarray
        Inputs of shape (N, m), or (trials, N, m) for a batch.

    Returns
    -------
    np.ndarray
        Outputs at the N + 1 grid points, shape (N + 1, p) or
        (trials, N + 1, p).

    """
    u = np.asarray(u, dtype=float)
    batch = u.ndim == 3
    if not batch:
        u = u[None]
    trials, steps, m = u.shape
    error = build_error_system(full, red)
    if m != error.m:
        raise ValueError(f"inputs must have {error.m} channels, got {m}")
    size = error.n
    augmented = np.zeros((size + m, size + m))
    augmented[:size, :size] = error.A
    augmented[:size, size:] = error.B
    step = expm(augmented, h.tau / steps)
    Phi, Gamma = step[:size, :size], step[:size, size:]

    state = np.zeros((size, trials))
    outputs = np.empty((trials, steps + 1, error.p))
    outputs[:, 0] = 0.0
    for k in range(steps):
        state = Phi @ state + Gamma @ u[:, k].T
        outputs[:, k + 1] = (error.C @ state).T
    return outputs if batch else outputs[0]


def output_bound_margins(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    inputs: np.ndarray,
    error_norm: Optional[float] = None,
) -> np.ndarray:
    """Return ||G - G_r||_{H2,tau} - max_t ||y(t) - y_r(t)|| per input.

    Parameters
    ----------
    full, red : StateSpaceModel
        The full and reduced models.
    h : Horizon
        The time interval [0, tau].
    inputs : np.ndarray
        Piecewise-constant inputs of shape (trials, N, m).
    error_norm : float, optional
        Precomputed H2,tau norm of the error system.

    Returns
    -------
    np.ndarray
        One margin per trial; negative values violate the bound.

    """
    if error_norm is None:
        ws = assemble_workspace(full, red, h)
        error_norm = float(np.sqrt(cost(full, red, h, ws)))
    outputs = simulate_error_output(full, red, h, inputs)
    peaks = np.max(np.linalg.norm(outputs, axis=2), axis=1)
    return error_norm - peaks


def unit_energy_inputs(
    trials: int, steps: int, m: int, h: Horizon, seed: int
) -> np.ndarray:
    """Draw random piecewise-constant inputs with unit L2 norm on [0, tau]."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((trials, steps, m))
    energy = np.sum(u**2, axis=(1, 2)) * (h.tau / steps)
    return u / np.sqrt(energy)[:, None, None]


def output_bound_check(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    trials: int,
    seed: int = 0,
    steps: int = 2000,
    slack: float = 1e-6,
    input_scale: float = 1.0,
) -> bool:
    """Check max_t ||y - y_r|| <= ||G - G_r||_{H2,tau} on random inputs.

    The bound requires inputs of unit L2 norm on [0, tau]; ``input_scale``
    rescales them.

    Returns
    -------
    bool
        True if every trial satisfies the bound within ``slack``.

    """
    if trials == 0:
        return True
    inputs = input_scale * unit_energy_inputs(trials, steps, full.m, h, seed)
    margins = output_bound_margins(full, red, h, inputs)
    worst = float(np.min(margins))
    logger.debug("output bound: worst margin %.3e", worst)
    return worst >= -slack
