"""Error system, squared H2,tau error and its gradients."""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from mortl.core.exceptions import DimensionMismatch
from mortl.models.models import (
    CostGradient,
    ErrorSystemWorkspace,
    Horizon,
    SchurForm,
    StateSpaceModel,
)
from mortl.services.gramians import TimeLimitedModel
from mortl.services.linalg import (
    expm,
    expm_frechet,
    lyapunov_from_schur,
    schur,
    sylvester_from_schur,
)


def _check_pair(full: StateSpaceModel, red: StateSpaceModel) -> None:
    if full.m != red.m or full.p != red.p:
        raise DimensionMismatch(
            f"full model is {full.p}x{full.m} but reduced model is "
            f"{red.p}x{red.m}"
        )


def _prepare(
    full: StateSpaceModel,
    h: Horizon,
    prepared: Optional[TimeLimitedModel],
) -> TimeLimitedModel:
    if prepared is None:
        return TimeLimitedModel(full, h)
    if prepared.horizon != h:
        raise ValueError("prepared model does not match the horizon")
    return prepared


def build_error_system(
    full: StateSpaceModel, red: StateSpaceModel
) -> StateSpaceModel:
    """Realize G - G_r as one state-space model of order n + r.

    Parameters
    ----------
    full : StateSpaceModel
        The full-order model.
    red : StateSpaceModel
        The reduced model, with the same number of inputs and outputs.

    Returns
    -------
    StateSpaceModel
        {blkdiag(A, A_r), [B; B_r], [C, -C_r]}.

    Raises
    ------
    DimensionMismatch
        If the input or output counts differ.

    """
    _check_pair(full, red)
    return StateSpaceModel(
        A=scipy.linalg.block_diag(full.A, red.A),
        B=np.vstack([full.B, red.B]),
        C=np.hstack([full.C, -red.C]),
    )


def _solve_X_tau(
    prep: TimeLimitedModel,
    red: StateSpaceModel,
    sr: SchurForm,
    expArtau: np.ndarray,
) -> np.ndarray:
    full = prep.model
    rhs = full.B @ red.B.T - (prep.expAtau @ full.B) @ (
        expArtau @ red.B
    ).T
    return sylvester_from_schur(
        prep.schur, sr, rhs, trans_b=True, equation="X_tau"
    )


def _solve_Y_tau(
    prep: TimeLimitedModel,
    red: StateSpaceModel,
    sr: SchurForm,
    expArtau: np.ndarray,
) -> np.ndarray:
    full = prep.model
    rhs = -full.C.T @ red.C + (full.C @ prep.expAtau).T @ (
        red.C @ expArtau
    )
    return sylvester_from_schur(
        prep.schur, sr, rhs, trans_a=True, equation="Y_tau"
    )


def _solve_P_r_tau(
    red: StateSpaceModel, sr: SchurForm, expArtau: np.ndarray
) -> np.ndarray:
    EB = expArtau @ red.B
    rhs = red.B @ red.B.T - EB @ EB.T
    return lyapunov_from_schur(sr, rhs, equation="P_r_tau")


def projection_blocks(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    prepared: Optional[TimeLimitedModel] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Solve only the coupling blocks X_tau and Y_tau.

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        X_tau and Y_tau, both n x r.

    """
    _check_pair(full, red)
    prep = _prepare(full, h, prepared)
    sr = schur(red.A)
    Er = expm(red.A, h.tau)
    return _solve_X_tau(prep, red, sr, Er), _solve_Y_tau(prep, red, sr, Er)


def assemble_workspace(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    prepared: Optional[TimeLimitedModel] = None,
) -> ErrorSystemWorkspace:
    """Solve every block of the error-system Gramians.

    The time-limited blocks X_tau, P_r_tau, Y_tau and Q_r_tau partition
    the Gramians of the error system; P_r and X are their
    infinite-horizon counterparts, solved as plain linear equations
    whether or not A_r is stable.

    Parameters
    ----------
    full : StateSpaceModel
        The full-order model.
    red : StateSpaceModel
        The reduced model.
    h : Horizon
        The time interval [0, tau].
    prepared : TimeLimitedModel, optional
        Cached quantities of the full model for this horizon.

    Returns
    -------
    ErrorSystemWorkspace
        The solved blocks.

    Raises
    ------
    SingularPencil
        If one of the equations is singular; ``equation`` names it.
    DimensionMismatch
        If the input or output counts differ.

    """
    _check_pair(full, red)
    prep = _prepare(full, h, prepared)
    sr = schur(red.A)
    Er = expm(red.A, h.tau)

    X_tau = _solve_X_tau(prep, red, sr, Er)
    Y_tau = _solve_Y_tau(prep, red, sr, Er)
    P_r_tau = _solve_P_r_tau(red, sr, Er)
    CE = red.C @ Er
    Q_r_tau = lyapunov_from_schur(
        sr, red.C.T @ red.C - CE.T @ CE, transpose=True, equation="Q_r_tau"
    )
    P_r = lyapunov_from_schur(sr, red.B @ red.B.T, equation="P_r")
    X = sylvester_from_schur(
        prep.schur, sr, full.B @ red.B.T, trans_b=True, equation="X"
    )
    S_tau = X.T @ prep.expAtau.T @ full.C.T @ red.C - (
        P_r @ Er.T @ red.C.T @ red.C
    )

    return ErrorSystemWorkspace(
        P_tau=prep.gramians.P_tau,
        Q_tau=prep.gramians.Q_tau,
        X_tau=X_tau,
        P_r_tau=P_r_tau,
        Y_tau=Y_tau,
        Q_r_tau=Q_r_tau,
        P_r=P_r,
        X=X,
        S_tau=S_tau,
        expAtau=prep.expAtau,
        expArtau=Er,
    )


def cost(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    ws: ErrorSystemWorkspace,
) -> float:
    """Return J = ||G - G_r||^2 from the controllability blocks.

    Tr(C P_tau C^T - 2 C X_tau C_r^T + C_r P_r_tau C_r^T), clipped at 0.
    """
    value = (
        np.trace(full.C @ ws.P_tau @ full.C.T)
        - 2.0 * np.trace(full.C @ ws.X_tau @ red.C.T)
        + np.trace(red.C @ ws.P_r_tau @ red.C.T)
    )
    return max(float(value), 0.0)


def cost_observability(
    full: StateSpaceModel,
    red: StateSpaceModel,
    ws: ErrorSystemWorkspace,
) -> float:
    """Return J from the observability blocks.

    Tr(B^T Q_tau B + 2 B^T Y_tau B_r + B_r^T Q_r_tau B_r), unclipped.
    """
    value = (
        np.trace(full.B.T @ ws.Q_tau @ full.B)
        + 2.0 * np.trace(full.B.T @ ws.Y_tau @ red.B)
        + np.trace(red.B.T @ ws.Q_r_tau @ red.B)
    )
    return float(value)


def cost_only(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    prepared: Optional[TimeLimitedModel] = None,
) -> float:
    """Evaluate J with the two solves it needs (X_tau and P_r_tau)."""
    _check_pair(full, red)
    prep = _prepare(full, h, prepared)
    sr = schur(red.A)
    Er = expm(red.A, h.tau)
    X_tau = _solve_X_tau(prep, red, sr, Er)
    P_r_tau = _solve_P_r_tau(red, sr, Er)
    value = (
        prep.norm_squared
        - 2.0 * np.trace(full.C @ X_tau @ red.C.T)
        + np.trace(red.C @ P_r_tau @ red.C.T)
    )
    return max(float(value), 0.0)


def gradients(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    ws: ErrorSystemWorkspace,
) -> CostGradient:
    """Return J and its gradients with respect to A_r, B_r and C_r.

    grad A_r = 2 (Q_r_tau P_r + Y_tau^T X + tau L(A_r tau, S_tau)^T)
    grad B_r = 2 (Q_r_tau B_r + Y_tau^T B)
    grad C_r = 2 (C_r P_r_tau - C X_tau)

    L is the Frechet derivative of the matrix exponential.
    """
    frechet = expm_frechet(red.A * h.tau, ws.S_tau)
    grad_Ar = 2.0 * (
        ws.Q_r_tau @ ws.P_r + ws.Y_tau.T @ ws.X + h.tau * frechet.T
    )
    grad_Br = 2.0 * (ws.Q_r_tau @ red.B + ws.Y_tau.T @ full.B)
    grad_Cr = 2.0 * (red.C @ ws.P_r_tau - full.C @ ws.X_tau)
    return CostGradient(
        J=cost(full, red, h, ws),
        grad_Ar=grad_Ar,
        grad_Br=grad_Br,
        grad_Cr=grad_Cr,
    )


def cost_and_gradient(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    prepared: Optional[TimeLimitedModel] = None,
) -> CostGradient:
    """Assemble the workspace and return J with its gradients."""
    ws = assemble_workspace(full, red, h, prepared)
    return gradients(full, red, h, ws)


def h2tau_error(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    prepared: Optional[TimeLimitedModel] = None,
) -> float:
    """Return the H2,tau norm of G - G_r."""
    return float(np.sqrt(cost_only(full, red, h, prepared)))
