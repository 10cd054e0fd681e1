"""Projection initializers: time-limited balanced truncation and TSIA."""

import logging
from typing import Optional, Tuple

import numpy as np

from mortl.core.exceptions import (
    ConfigError,
    IterationDiverged,
    NonFiniteResult,
    NormalizationSingular,
    RankDeficient,
)
from mortl.models.models import (
    Horizon,
    ProjectionPair,
    ReducedModel,
    StateSpaceModel,
    TsiaConfig,
    TsiaTrace,
)
from mortl.services.cost import cost_only, projection_blocks
from mortl.services.gramians import TimeLimitedModel, gramian_factor

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12
NORMALIZATION_COND_MAX = 1e12


def _check_order(full: StateSpaceModel, r: int) -> None:
    if not 1 <= r <= full.n:
        raise ConfigError(f"order must be in [1, {full.n}], got {r}")


def project(full: StateSpaceModel, pair: ProjectionPair) -> ReducedModel:
    """Return the Petrov-Galerkin reduction (W^T A V, W^T B, C V)."""
    V, W = pair.V, pair.W
    A, B, C = W.T @ full.A @ V, W.T @ full.B, full.C @ V
    if not all(np.isfinite(M).all() for M in (A, B, C)):
        raise NonFiniteResult("the projected model has non-finite entries")
    return ReducedModel(A=A, B=B, C=C)


def tl_bt(
    full: StateSpaceModel,
    h: Horizon,
    r: int,
    prepared: Optional[TimeLimitedModel] = None,
) -> Tuple[ReducedModel, ProjectionPair]:
    """Reduce a model by balancing its time-limited Gramians.

    Parameters
    ----------
    full : StateSpaceModel
        The full-order model.
    h : Horizon
        The time interval [0, tau].
    r : int
        The reduced order, at most n.
    prepared : TimeLimitedModel, optional
        Cached Gramians of the full model for this horizon.

    Returns
    -------
    Tuple[ReducedModel, ProjectionPair]
        The reduced model and the projection that produced it.

    Raises
    ------
    RankDeficient
        If the r-th time-limited singular value is below 1e-12 times the
        largest.

    """
    _check_order(full, r)
    prep = TimeLimitedModel(full, h) if prepared is None else prepared
    L = gramian_factor(prep.gramians.P_tau, "P_tau")
    R = gramian_factor(prep.gramians.Q_tau, "Q_tau")
    U, sigma, Zt = np.linalg.svd(R.T @ L)
    if sigma[0] <= 0 or sigma[r - 1] < RANK_TOL * sigma[0]:
        raise RankDeficient(
            f"order {r} exceeds the effective rank of P_tau Q_tau "
            f"(sigma_r = {sigma[r - 1]:.3e}, sigma_1 = {sigma[0]:.3e})"
        )
    scale = 1.0 / np.sqrt(sigma[:r])
    V = (L @ Zt[:r].T) * scale
    W = (R @ U[:, :r]) * scale
    pair = ProjectionPair(V=V, W=W)
    logger.debug("TL-BT kept singular values %s", sigma[:r])
    return project(full, pair), pair


def _normalized_projection(
    X_tau: np.ndarray, Y_tau: np.ndarray
) -> ProjectionPair:
    V, _ = np.linalg.qr(X_tau)
    Qy, _ = np.linalg.qr(Y_tau)
    M = Qy.T @ V
    if np.linalg.cond(M) > NORMALIZATION_COND_MAX:
        raise NormalizationSingular(
            "Y_tau^T X_tau is singular, the subspaces are not paired"
        )
    return ProjectionPair(V=V, W=Qy @ np.linalg.inv(M).T)


def _relative_change(
    old: ReducedModel, new: ReducedModel, J_old: float, J_new: float
) -> float:
    poles_old = np.sort_complex(np.linalg.eigvals(old.A))
    poles_new = np.sort_complex(np.linalg.eigvals(new.A))
    tiny = np.finfo(float).tiny
    pole_change = np.linalg.norm(poles_new - poles_old) / max(
        np.linalg.norm(poles_old), tiny
    )
    cost_change = abs(J_new - J_old) / max(abs(J_old), tiny)
    return float(max(pole_change, cost_change))


def tl_tsia(
    full: StateSpaceModel,
    h: Horizon,
    r: int,
    init: Optional[ReducedModel] = None,
    config: Optional[TsiaConfig] = None,
    prepared: Optional[TimeLimitedModel] = None,
) -> Tuple[ReducedModel, TsiaTrace]:
    """Run the two-sided fixed-point iteration on time-limited subspaces.

    Each step solves the X_tau and Y_tau equations for the current
    reduced model, spans V by X_tau and W by Y_tau with W^T V = I and
    projects the full model. The iteration stops when the relative
    change of the poles and of J falls below ``config.tol``.

    Parameters
    ----------
    full : StateSpaceModel
        The full-order model.
    h : Horizon
        The time interval [0, tau].
    r : int
        The reduced order.
    init : ReducedModel, optional
        Starting model, the TL-BT reduction by default.
    config : TsiaConfig, optional
        Iteration settings.
    prepared : TimeLimitedModel, optional
        Cached quantities of the full model for this horizon.

    Returns
    -------
    Tuple[ReducedModel, TsiaTrace]
        The iterate with the lowest J and the iteration history.

    Raises
    ------
    IterationDiverged
        If J grows beyond ``divergence_factor`` times its initial value.
    NormalizationSingular
        If Y_tau^T X_tau is singular.

    """
    config = TsiaConfig() if config is None else config
    _check_order(full, r)
    prep = TimeLimitedModel(full, h) if prepared is None else prepared
    if init is None:
        init, _ = tl_bt(full, h, r, prep)
    if init.A.shape[0] != r:
        raise ConfigError(
            f"initial model has order {init.A.shape[0]}, expected {r}"
        )
    if config.max_iter == 0:
        return init, TsiaTrace()

    J0 = cost_only(full, init, h, prep)
    trace = TsiaTrace(costs=[J0])
    ceiling = config.divergence_factor * J0 + 1e-14 * (
        1.0 + prep.norm_squared
    )
    best, best_J = init, J0
    current, J_current = init, J0

    for iteration in range(1, config.max_iter + 1):
        X_tau, Y_tau = projection_blocks(full, current, h, prep)
        candidate = project(full, _normalized_projection(X_tau, Y_tau))
        J = cost_only(full, candidate, h, prep)
        if not np.isfinite(J) or J > ceiling:
            raise IterationDiverged(
                f"TL-TSIA cost grew from {J0:.3e} to {J:.3e} "
                f"at iteration {iteration}"
            )
        change = _relative_change(current, candidate, J_current, J)
        trace.changes.append(change)
        trace.costs.append(J)
        logger.debug(
            "TL-TSIA iteration %d: J=%.6e change=%.3e", iteration, J, change
        )
        if J < best_J:
            best, best_J = candidate, J
            trace.best_iteration = iteration
        current, J_current = candidate, J
        if change < config.tol:
            trace.converged = True
            break

    logger.info(
        "TL-TSIA finished after %d iterations (converged=%s, J=%.6e)",
        len(trace.changes),
        trace.converged,
        best_J,
    )
    return best, trace
