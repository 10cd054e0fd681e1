"""Reduction runs, order sweeps and verification reports."""

import asyncio
import logging
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mortl.core.exceptions import ConfigError, MortlError, NonDiagonalizable
from mortl.models.models import (
    BenchmarkRow,
    GramianSummary,
    Horizon,
    ReducedModel,
    ReductionReport,
    RunConfig,
    StateSpaceModel,
    TimeLimitedGramianPair,
    VerificationReport,
    VerifyConfig,
)
from mortl.services.cost import (
    assemble_workspace,
    cost_and_gradient,
    gradients,
    h2tau_error,
)
from mortl.services.gramians import TimeLimitedModel, tl_singular_values
from mortl.services.optimizer import tl_h2opt
from mortl.services.reducers import tl_bt, tl_tsia
from mortl.services.verifier import (
    interpolation_residuals,
    output_bound_margins,
    unit_energy_inputs,
)

logger = logging.getLogger(__name__)

METHODS = ("tl-bt", "tl-tsia", "tl-h2opt")
INIT_METHODS = ("tl-bt", "tl-tsia")
ROW_ERRORS = (MortlError, ValueError, np.linalg.LinAlgError)


def random_model(
    n: int, m: int = 1, p: int = 1, seed: int = 0, shift: float = 0.0
) -> StateSpaceModel:
    """Draw a reproducible damped model.

    A = D + 0.1 N + shift I with D diagonal, log-spaced in [-10, -0.1],
    and N, B, C standard normal. A positive ``shift`` gives mildly
    unstable instances.

    Parameters
    ----------
    n, m, p : int
        State, input and output dimensions.
    seed : int, optional
        Seed of the generator, by default 0.
    shift : float, optional
        Diagonal shift of A, by default 0.0.

    Returns
    -------
    StateSpaceModel
        The random model.

    """
    if min(n, m, p) < 1:
        raise ConfigError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    D = np.diag(-np.logspace(1, -1, n))
    A = D + 0.1 * rng.standard_normal((n, n)) + shift * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    return StateSpaceModel(A=A, B=B, C=C)


def delta_err_pct(
    err_init: Optional[float], err_opt: Optional[float]
) -> Optional[float]:
    """Return the improvement 100 (err_init - err_opt) / err_init."""
    if err_init is None or err_opt is None:
        return None
    if err_init <= 0:
        return 0.0
    return 100.0 * (err_init - err_opt) / err_init


def initial_model(
    full: StateSpaceModel,
    h: Horizon,
    r: int,
    init_method: str,
    run_config: RunConfig,
    prep: TimeLimitedModel,
) -> ReducedModel:
    """Reduce with one of the projection initializers."""
    if init_method == "tl-bt":
        return tl_bt(full, h, r, prep)[0]
    if init_method == "tl-tsia":
        return tl_tsia(full, h, r, config=run_config.tsia, prepared=prep)[0]
    raise ConfigError(
        f"unknown initializer {init_method!r}, expected one of "
        f"{', '.join(INIT_METHODS)}"
    )


def _check_method(method: str, init_method: Optional[str]) -> None:
    if method not in METHODS:
        raise ConfigError(
            f"unknown method {method!r}, expected one of {', '.join(METHODS)}"
        )
    if method == "tl-h2opt" and init_method is None:
        raise ConfigError("tl-h2opt requires an initializer (--init)")
    if init_method is not None and init_method not in INIT_METHODS:
        raise ConfigError(
            f"unknown initializer {init_method!r}, expected one of "
            f"{', '.join(INIT_METHODS)}"
        )


def reduce_model(
    full: StateSpaceModel,
    h: Horizon,
    r: int,
    method: str,
    init_method: Optional[str] = None,
    run_config: Optional[RunConfig] = None,
    seed: Optional[int] = None,
) -> Tuple[ReducedModel, ReductionReport]:
    """Reduce a model and describe the result.

    Parameters
    ----------
    full : StateSpaceModel
        The full-order model.
    h : Horizon
        The time interval [0, tau].
    r : int
        The reduced order.
    method : str
        One of "tl-bt", "tl-tsia" and "tl-h2opt".
    init_method : str, optional
        Initializer of "tl-h2opt", "tl-bt" or "tl-tsia". TL-TSIA always
        starts from TL-BT.
    run_config : RunConfig, optional
        Tolerances, the defaults when omitted.
    seed : int, optional
        Recorded in the report for provenance.

    Returns
    -------
    Tuple[ReducedModel, ReductionReport]
        The reduced model and its report.

    Raises
    ------
    ConfigError
        If the method or the initializer is not valid.

    """
    _check_method(method, init_method)
    run_config = RunConfig() if run_config is None else run_config
    start = time.perf_counter()
    prep = TimeLimitedModel(full, h)
    logger.info("reducing n=%d to r=%d with %s", full.n, r, method)

    init_error = None
    iterations = 0
    termination = None
    J_trace: List[float] = []
    grad_trace: List[float] = []
    if method == "tl-h2opt":
        assert init_method is not None
        init = initial_model(full, h, r, init_method, run_config, prep)
        init_error = h2tau_error(full, init, h, prep)
        result = tl_h2opt(full, h, init, run_config.optimizer, prep)
        red = result.model
        iterations = result.iterations
        termination = result.termination
        J_trace, grad_trace = result.J_trace, result.grad_trace
    elif method == "tl-tsia":
        red, trace = tl_tsia(full, h, r, config=run_config.tsia, prepared=prep)
        iterations = len(trace.changes)
        termination = "converged" if trace.converged else "max_iter"
        J_trace = trace.costs
    else:
        red = tl_bt(full, h, r, prep)[0]

    final = cost_and_gradient(full, red, h, prep)
    error = float(np.sqrt(final.J))
    report = ReductionReport(
        method=method,
        init_method=init_method if method == "tl-h2opt" else None,
        tau=h.tau,
        n=full.n,
        r=r,
        J=final.J,
        error=error,
        relative_error=error / prep.norm if prep.norm > 0 else 0.0,
        full_norm=prep.norm,
        grad_norm=final.norm_inf(),
        init_error=init_error,
        delta_err_pct=delta_err_pct(init_error, error),
        iterations=iterations,
        termination=termination,
        seconds=time.perf_counter() - start,
        J_trace=J_trace,
        grad_trace=grad_trace,
        config={"tau": h.tau, "seed": seed, **run_config.model_dump()},
    )
    logger.info("reduction done: error=%.6e (%.3fs)", error, report.seconds)
    return red, report


def sweep_row(
    full: StateSpaceModel,
    h: Horizon,
    r: int,
    init_method: str,
    run_config: RunConfig,
    prep: TimeLimitedModel,
) -> BenchmarkRow:
    """Run one order of a sweep; initializer failures mark the row."""
    start = time.perf_counter()
    try:
        init = initial_model(full, h, r, init_method, run_config, prep)
        err_init = h2tau_error(full, init, h, prep)
    except ROW_ERRORS as exc:
        logger.warning("r=%d: %s failed: %s", r, init_method, exc)
        return BenchmarkRow(r=r, seconds=time.perf_counter() - start)
    try:
        result = tl_h2opt(full, h, init, run_config.optimizer, prep)
    except ROW_ERRORS as exc:
        logger.warning("r=%d: TL-H2Opt failed: %s", r, exc)
        return BenchmarkRow(
            r=r, err_init=err_init, seconds=time.perf_counter() - start
        )
    err_opt = float(np.sqrt(result.J_trace[-1]))
    row = BenchmarkRow(
        r=r,
        err_init=err_init,
        err_opt=err_opt,
        delta_err_pct=delta_err_pct(err_init, err_opt),
        iterations=result.iterations,
        seconds=time.perf_counter() - start,
    )
    logger.info(
        "r=%d: err_init=%.6e err_opt=%.6e", r, err_init, err_opt
    )
    return row


async def run_sweep(
    full: StateSpaceModel,
    h: Horizon,
    orders: Sequence[int],
    init_method: str = "tl-bt",
    run_config: Optional[RunConfig] = None,
) -> List[BenchmarkRow]:
    """Optimize every order concurrently, one worker thread per order.

    Returns
    -------
    List[BenchmarkRow]
        One row per order, sorted by r.

    Raises
    ------
    ConfigError
        If an order is not in [1, n - 1] or the initializer is unknown.

    """
    if init_method not in INIT_METHODS:
        raise ConfigError(f"unknown initializer {init_method!r}")
    orders = sorted(set(orders))
    if not orders:
        raise ConfigError("no orders to sweep")
    if orders[0] < 1 or orders[-1] >= full.n:
        raise ConfigError(
            f"orders must lie in [1, {full.n - 1}], got "
            f"{orders[0]}..{orders[-1]}"
        )
    run_config = RunConfig() if run_config is None else run_config
    prep = TimeLimitedModel(full, h)
    rows = await asyncio.gather(
        *(
            asyncio.to_thread(
                sweep_row, full, h, r, init_method, run_config, prep
            )
            for r in orders
        )
    )
    return sorted(rows, key=lambda row: row.r)


def verify_reduction(
    full: StateSpaceModel,
    red: StateSpaceModel,
    h: Horizon,
    config: Optional[VerifyConfig] = None,
    seed: int = 0,
) -> VerificationReport:
    """Check optimality, the interpolation identities and the output bound.

    A reduced model without a usable eigenbasis skips the identities
    with a warning instead of failing.
    """
    config = VerifyConfig() if config is None else config
    prep = TimeLimitedModel(full, h)
    ws = assemble_workspace(full, red, h, prep)
    grad = gradients(full, red, h, ws)
    grad_norm = grad.norm_inf()
    warnings: List[str] = []

    interpolation = None
    interpolation_ok = None
    try:
        interpolation = interpolation_residuals(full, red, h, prep)
        interpolation_ok = interpolation.max_residual() < config.identity_tol
    except NonDiagonalizable as exc:
        message = f"interpolation identities skipped: {exc}"
        logger.warning(message)
        warnings.append(message)

    worst = None
    bound_ok = True
    if config.trials > 0:
        inputs = unit_energy_inputs(
            config.trials, config.steps, full.m, h, seed
        )
        margins = output_bound_margins(
            full, red, h, inputs, float(np.sqrt(grad.J))
        )
        worst = float(np.min(margins))
        bound_ok = worst >= -config.slack

    grad_ok = grad_norm < config.grad_tol * (1.0 + grad.J)
    return VerificationReport(
        J=grad.J,
        grad_norm=grad_norm,
        grad_ok=grad_ok,
        interpolation=interpolation,
        interpolation_ok=interpolation_ok,
        warnings=warnings,
        bound_trials=config.trials,
        bound_worst_margin=worst,
        bound_ok=bound_ok,
        passed=grad_ok and interpolation_ok is not False and bound_ok,
    )


def gramians_summary(
    full: StateSpaceModel, h: Horizon
) -> Tuple[TimeLimitedGramianPair, GramianSummary]:
    """Compute the time-limited Gramians with their summary.

    ``trace_gap`` compares Tr(C P_tau C^T) with Tr(B^T Q_tau B).
    """
    prep = TimeLimitedModel(full, h)
    pair = prep.gramians
    controllability = float(np.trace(full.C @ pair.P_tau @ full.C.T))
    observability = float(np.trace(full.B.T @ pair.Q_tau @ full.B))
    gap = abs(controllability - observability) / max(
        1.0, abs(controllability)
    )
    summary = GramianSummary(
        tau=h.tau,
        n=full.n,
        h2tau_norm=prep.norm,
        trace_gap=gap,
        singular_values=tl_singular_values(pair).tolist(),
    )
    return pair, summary
