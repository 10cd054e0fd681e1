"""TL-H2Opt: BFGS minimization of the squared H2,tau error."""

import logging
import time
from typing import Callable, Optional, Tuple

import numpy as np

from mortl.core.exceptions import (
    DimensionMismatch,
    LineSearchFailed,
    NonFiniteResult,
    NumericalError,
)
from mortl.models.models import (
    CostGradient,
    Horizon,
    OptimizationReport,
    OptimizerConfig,
    ReducedModel,
    StateSpaceModel,
)
from mortl.services.cost import cost_and_gradient
from mortl.services.gramians import TimeLimitedModel

logger = logging.getLogger(__name__)

Dims = Tuple[int, int, int]
Evaluation = Tuple[float, Optional[np.ndarray]]


def parameter_count(dims: Dims) -> int:
    """Return r^2 + r m + p r for dims (r, m, p)."""
    r, m, p = dims
    return r * r + r * m + p * r


def pack(red: StateSpaceModel) -> np.ndarray:
    """Flatten A_r, B_r and C_r, each row-major, into one vector."""
    return np.concatenate([red.A.ravel(), red.B.ravel(), red.C.ravel()])


def pack_gradient(grad: CostGradient) -> np.ndarray:
    """Flatten a gradient in the order used by `pack`."""
    return np.concatenate(
        [grad.grad_Ar.ravel(), grad.grad_Br.ravel(), grad.grad_Cr.ravel()]
    )


def unpack(vector: np.ndarray, dims: Dims) -> ReducedModel:
    """Rebuild the reduced model packed by `pack`.

    Parameters
    ----------
    vector : np.ndarray
        Flat vector of length r^2 + r m + p r.
    dims : Tuple[int, int, int]
        The order r, the inputs m and the outputs p.

    Returns
    -------
    ReducedModel
        The reduced model.

    Raises
    ------
    DimensionMismatch
        If the vector length does not match dims.
    NonFiniteResult
        If an entry of the vector is not finite.

    """
    r, m, p = dims
    vector = np.asarray(vector, dtype=float).ravel()
    if vector.size != parameter_count(dims):
        raise DimensionMismatch(
            f"expected {parameter_count(dims)} parameters for "
            f"(r, m, p) = {dims}, got {vector.size}"
        )
    if not np.isfinite(vector).all():
        raise NonFiniteResult("the parameter vector has non-finite entries")
    A = vector[: r * r].reshape(r, r)
    B = vector[r * r : r * r + r * m].reshape(r, m)
    C = vector[r * r + r * m :].reshape(p, r)
    return ReducedModel(A=A, B=B, C=C)


def _cubic_minimizer(
    a: float, fa: float, da: float, b: float, fb: float, db: float
) -> float:
    lo, hi = min(a, b), max(a, b)
    bisection = (a + b) / 2
    if not np.all(np.isfinite([fa, da, fb, db])):
        return bisection
    d1 = da + db - 3 * (fa - fb) / (a - b)
    radicand = d1 * d1 - da * db
    if radicand < 0:
        return bisection
    d2 = np.sign(b - a) * np.sqrt(radicand)
    denominator = db - da + 2 * d2
    if denominator == 0:
        return bisection
    step = b - (b - a) * (db + d2 - d1) / denominator
    margin = 0.1 * (hi - lo)
    if not np.isfinite(step) or step < lo + margin or step > hi - margin:
        return bisection
    return float(step)


def wolfe_line_search(
    phi: Callable[[float], Evaluation],
    direction: np.ndarray,
    f0: float,
    slope0: float,
    alpha: float,
    config: OptimizerConfig,
) -> Tuple[float, float, np.ndarray]:
    """Find a step satisfying the strong Wolfe conditions.

    Bracketing followed by zoom with safeguarded cubic interpolation.
    A trial point where the cost cannot be evaluated is treated as
    +inf and the step is shrunk.

    Parameters
    ----------
    phi : Callable[[float], Tuple[float, Optional[np.ndarray]]]
        Cost and gradient at x + alpha d, (inf, None) when infeasible.
    direction : np.ndarray
        The descent direction d.
    f0 : float
        Cost at alpha = 0.
    slope0 : float
        Directional derivative at alpha = 0, negative.
    alpha : float
        First trial step.
    config : OptimizerConfig
        Wolfe constants, step floor and trial budget.

    Returns
    -------
    Tuple[float, float, np.ndarray]
        The step, the cost and the gradient there.

    Raises
    ------
    LineSearchFailed
        If the trial budget or the step floor is exhausted.

    """
    c1, c2 = config.wolfe_c1, config.wolfe_c2

    def sufficient(step: float, value: float) -> bool:
        return value <= f0 + c1 * step * slope0

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        for _ in range(config.max_line_search):
            if abs(hi - lo) < config.step_floor:
                break
            step = _cubic_minimizer(lo, f_lo, d_lo, hi, f_hi, d_hi)
            value, grad = phi(step)
            if grad is None:
                hi, f_hi, d_hi = step, np.inf, np.nan
                continue
            d_step = float(grad @ direction)
            if not sufficient(step, value) or value >= f_lo:
                hi, f_hi, d_hi = step, value, d_step
                continue
            if abs(d_step) <= -c2 * slope0:
                return step, value, grad
            if d_step * (hi - lo) >= 0:
                hi, f_hi, d_hi = lo, f_lo, d_lo
            lo, f_lo, d_lo = step, value, d_step
        raise LineSearchFailed(
            f"zoom did not find a Wolfe step in [{lo:.3e}, {hi:.3e}]"
        )

    prev, f_prev, d_prev = 0.0, f0, slope0
    first = True
    for _ in range(config.max_line_search):
        if alpha - prev < config.step_floor:
            break
        value, grad = phi(alpha)
        if grad is None:
            alpha = prev + (alpha - prev) / 2
            continue
        d_alpha = float(grad @ direction)
        if not sufficient(alpha, value) or (not first and value >= f_prev):
            return zoom(prev, f_prev, d_prev, alpha, value, d_alpha)
        if abs(d_alpha) <= -c2 * slope0:
            return alpha, value, grad
        if d_alpha >= 0:
            return zoom(alpha, value, d_alpha, prev, f_prev, d_prev)
        prev, f_prev, d_prev = alpha, value, d_alpha
        alpha *= 2
        first = False
    raise LineSearchFailed(f"no Wolfe step found, last trial {alpha:.3e}")


def tl_h2opt(
    full: StateSpaceModel,
    h: Horizon,
    init: StateSpaceModel,
    config: Optional[OptimizerConfig] = None,
    prepared: Optional[TimeLimitedModel] = None,
) -> OptimizationReport:
    """Minimize ||G - G_r||^2 over [0, tau] with BFGS.

    The reduced matrices are free parameters; A_r is not constrained to
    be stable.

    Parameters
    ----------
    full : StateSpaceModel
        The full-order model.
    h : Horizon
        The time interval [0, tau].
    init : StateSpaceModel
        Initial reduced model, e.g. from TL-BT or TL-TSIA.
    config : OptimizerConfig, optional
        Tolerances and line-search settings.
    prepared : TimeLimitedModel, optional
        Cached quantities of the full model for this horizon.

    Returns
    -------
    OptimizationReport
        The final model with the J and gradient-norm traces. A failed
        line search ends the run with ``termination == "line_search"``
        and ``flagged`` set; the model is then the last accepted iterate.

    """
    config = OptimizerConfig() if config is None else config
    prep = TimeLimitedModel(full, h) if prepared is None else prepared
    dims = (init.A.shape[0], init.B.shape[1], init.C.shape[0])
    start = time.perf_counter()

    def evaluate(vector: np.ndarray) -> Tuple[float, np.ndarray]:
        result = cost_and_gradient(full, unpack(vector, dims), h, prep)
        return result.J, pack_gradient(result)

    x = pack(init)
    J, g = evaluate(x)
    J_trace, grad_trace = [J], [float(np.max(np.abs(g)))]
    H: Optional[np.ndarray] = None
    termination = "max_iter"
    flagged = False
    iterations = 0
    logger.info(
        "TL-H2Opt started: r=%d, %d parameters, J=%.6e",
        dims[0],
        x.size,
        J,
    )

    while True:
        g_norm = float(np.max(np.abs(g)))
        if g_norm < config.grad_tol * (1.0 + abs(J)):
            termination = "gradient"
            break
        if iterations >= config.max_iter:
            break

        direction = -g if H is None else -H @ g
        slope = float(g @ direction)
        if slope >= 0:
            logger.debug("BFGS direction is not descent, reset")
            H = None
            direction = -g
            slope = float(g @ direction)
        step = config.step_init
        if H is None:
            step = min(step, 1.0 / g_norm)

        def phi(alpha: float, x=x, direction=direction) -> Evaluation:
            try:
                value, grad = evaluate(x + alpha * direction)
            except (NumericalError, ValueError, np.linalg.LinAlgError):
                return np.inf, None
            if not np.isfinite(value) or not np.all(np.isfinite(grad)):
                return np.inf, None
            return value, grad

        try:
            alpha, J_new, g_new = wolfe_line_search(
                phi, direction, J, slope, step, config
            )
        except LineSearchFailed as exc:
            logger.warning("TL-H2Opt stopped: %s", exc)
            termination = "line_search"
            flagged = True
            break

        s = alpha * direction
        y = g_new - g
        sy = float(s @ y)
        if sy > 0:
            if H is None:
                H = (sy / float(y @ y)) * np.eye(x.size)
            rho = 1.0 / sy
            V = np.eye(x.size) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        else:
            logger.debug("curvature condition failed, update skipped")

        x, J, g = x + s, J_new, g_new
        iterations += 1
        J_trace.append(J)
        grad_trace.append(float(np.max(np.abs(g))))
        logger.debug(
            "TL-H2Opt iteration %d: J=%.6e |g|=%.3e step=%.3e",
            iterations,
            J,
            grad_trace[-1],
            alpha,
        )

    seconds = time.perf_counter() - start
    logger.info(
        "TL-H2Opt finished: %s after %d iterations, J=%.6e",
        termination,
        iterations,
        J,
    )
    return OptimizationReport(
        model=unpack(x, dims),
        J_trace=J_trace,
        grad_trace=grad_trace,
        termination=termination,
        iterations=iterations,
        seconds=seconds,
        flagged=flagged,
    )
