"""Time-limited Gramians, the H2,tau norm and H_tau(s)."""

import logging
from typing import Optional

import numpy as np

from mortl.core.exceptions import SingularResolvent
from mortl.models.models import (
    Horizon,
    SchurForm,
    StateSpaceModel,
    TimeLimitedGramianPair,
)
from mortl.services.linalg import expm, lyapunov_from_schur, schur

logger = logging.getLogger(__name__)

CLIP_TOL = 1e-12
RESOLVENT_COND_MAX = 1e14


def controllability_gramian_tl(
    model: StateSpaceModel,
    h: Horizon,
    expAtau: Optional[np.ndarray] = None,
    schur_A: Optional[SchurForm] = None,
) -> np.ndarray:
    """Compute the time-limited controllability Gramian P_tau.

    P_tau solves A P + P A^T + B B^T - e^{A tau} B B^T e^{A^T tau} = 0,
    which equals int_0^tau e^{At} B B^T e^{A^T t} dt.

    Parameters
    ----------
    model : StateSpaceModel
        The model, stable or not.
    h : Horizon
        The time interval [0, tau].
    expAtau : np.ndarray, optional
        Precomputed e^{A tau}.
    schur_A : SchurForm, optional
        Precomputed real Schur form of A.

    Returns
    -------
    np.ndarray
        The symmetric positive semidefinite n x n Gramian.

    """
    E = expm(model.A, h.tau) if expAtau is None else expAtau
    sa = schur(model.A) if schur_A is None else schur_A
    EB = E @ model.B
    rhs = model.B @ model.B.T - EB @ EB.T
    return lyapunov_from_schur(sa, rhs, equation="P_tau")


def observability_gramian_tl(
    model: StateSpaceModel,
    h: Horizon,
    expAtau: Optional[np.ndarray] = None,
    schur_A: Optional[SchurForm] = None,
) -> np.ndarray:
    """Compute the time-limited observability Gramian Q_tau.

    Q_tau solves A^T Q + Q A + C^T C - e^{A^T tau} C^T C e^{A tau} = 0.
    Arguments are those of `controllability_gramian_tl`.
    """
    E = expm(model.A, h.tau) if expAtau is None else expAtau
    sa = schur(model.A) if schur_A is None else schur_A
    CE = model.C @ E
    rhs = model.C.T @ model.C - CE.T @ CE
    return lyapunov_from_schur(sa, rhs, transpose=True, equation="Q_tau")


def time_limited_gramians(
    model: StateSpaceModel, h: Horizon
) -> TimeLimitedGramianPair:
    """Compute both time-limited Gramians with one Schur form and expm."""
    E = expm(model.A, h.tau)
    sa = schur(model.A)
    return TimeLimitedGramianPair(
        P_tau=controllability_gramian_tl(model, h, E, sa),
        Q_tau=observability_gramian_tl(model, h, E, sa),
        expAtau=E,
    )


def h2tau_norm_squared(model: StateSpaceModel, h: Horizon) -> float:
    """Return the squared H2,tau norm Tr(C P_tau C^T).

    Finite for unstable models as well.
    """
    P = controllability_gramian_tl(model, h)
    return max(float(np.trace(model.C @ P @ model.C.T)), 0.0)


def gramian_factor(G: np.ndarray, name: str = "Gramian") -> np.ndarray:
    """Return L with G = L L^T from the symmetric eigendecomposition.

    Eigenvalues below zero are clipped; a warning is logged when one is
    below -1e-12 times the largest.
    """
    values, vectors = np.linalg.eigh((G + G.T) / 2)
    top = max(float(values.max()), 0.0)
    if values.min() < -CLIP_TOL * top:
        logger.warning(
            "%s has a negative eigenvalue %.3e (largest %.3e), clipped",
            name,
            values.min(),
            top,
        )
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def tl_singular_values(pair: TimeLimitedGramianPair) -> np.ndarray:
    """Return the time-limited singular values, sorted decreasingly.

    They are the singular values of R^T L with P_tau = L L^T and
    Q_tau = R R^T.
    """
    L = gramian_factor(pair.P_tau, "P_tau")
    R = gramian_factor(pair.Q_tau, "Q_tau")
    return np.linalg.svd(R.T @ L, compute_uv=False)


def resolvent_solve(
    A: np.ndarray, s: complex, rhs: np.ndarray
) -> np.ndarray:
    """Return (sI - A)^-1 rhs, refusing numerically singular shifts."""
    shifted = s * np.eye(A.shape[0]) - A
    cond = np.linalg.cond(shifted)
    if not np.isfinite(cond) or cond > RESOLVENT_COND_MAX:
        raise SingularResolvent(f"sI - A is singular at s = {s}")
    return np.linalg.solve(shifted, rhs)


def tl_transfer_function(
    model: StateSpaceModel,
    h: Horizon,
    s: complex,
    expAtau: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Evaluate H_tau(s) = C (sI - A)^-1 (I - e^{-s tau} e^{A tau}) B.

    Parameters
    ----------
    model : StateSpaceModel
        The model.
    h : Horizon
        The time interval [0, tau].
    s : complex
        Frequency, not an eigenvalue of A.
    expAtau : np.ndarray, optional
        Precomputed e^{A tau}.

    Returns
    -------
    np.ndarray
        The complex p x m value.

    Raises
    ------
    SingularResolvent
        If sI - A is numerically singular.

    """
    E = expm(model.A, h.tau) if expAtau is None else expAtau
    s = complex(s)
    windowed = model.B - np.exp(-s * h.tau) * (E @ model.B)
    return model.C @ resolvent_solve(model.A, s, windowed)


def tl_transfer_function_derivative(
    model: StateSpaceModel,
    h: Horizon,
    s: complex,
    expAtau: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Evaluate the derivative of H_tau at s.

    -C (sI - A)^-2 (I - e^{-s tau} e^{A tau}) B
    + tau e^{-s tau} C (sI - A)^-1 e^{A tau} B
    """
    E = expm(model.A, h.tau) if expAtau is None else expAtau
    s = complex(s)
    decay = np.exp(-s * h.tau)
    EB = E @ model.B
    first = resolvent_solve(model.A, s, model.B - decay * EB)
    second = resolvent_solve(model.A, s, first)
    return model.C @ (h.tau * decay * resolvent_solve(model.A, s, EB)) - (
        model.C @ second
    )


class TimeLimitedModel:
    """A full model with its horizon-dependent quantities computed once.

    The Schur form of A, e^{A tau}, the time-limited Gramians and the
    squared H2,tau norm do not depend on the reduced model and are
    shared by every cost and gradient evaluation.

    Parameters
    ----------
    model : StateSpaceModel
        The full-order model.
    h : Horizon
        The time interval [0, tau].

    """

    def __init__(self, model: StateSpaceModel, h: Horizon):
        self.model = model
        self.horizon = h
        self.schur = schur(model.A)
        self.expAtau = expm(model.A, h.tau)
        self.gramians = TimeLimitedGramianPair(
            P_tau=controllability_gramian_tl(
                model, h, self.expAtau, self.schur
            ),
            Q_tau=observability_gramian_tl(
                model, h, self.expAtau, self.schur
            ),
            expAtau=self.expAtau,
        )
        self.norm_squared = max(
            float(
                np.trace(model.C @ self.gramians.P_tau @ model.C.T)
            ),
            0.0,
        )

    @property
    def tau(self) -> float:
        """Return the horizon length."""
        return self.horizon.tau

    @property
    def norm(self) -> float:
        """Return the H2,tau norm of the full model."""
        return float(np.sqrt(self.norm_squared))
