"""Routes for the API."""

from typing import Any, Dict

from fastapi import APIRouter

from mortl.models.models import (
    GramiansRequest,
    Horizon,
    ReduceRequest,
    VerifyRequest,
)
from mortl.services.harness import (
    gramians_summary,
    reduce_model,
    verify_reduction,
)

router = APIRouter()


@router.post("/gramians", name="gramians")
def gramians(request: GramiansRequest) -> Dict[str, Any]:
    """Compute the time-limited Gramians of a model.

    Parameters
    ----------
    request : GramiansRequest
        The model matrices and the horizon length.

    Returns
    -------
    Dict[str, Any]
        P_tau, Q_tau, the H2,tau norm and the time-limited singular
        values.

    """
    pair, summary = gramians_summary(
        request.model.to_model(), Horizon(tau=request.tau)
    )
    return {
        "P_tau": pair.P_tau.tolist(),
        "Q_tau": pair.Q_tau.tolist(),
        **summary.model_dump(),
    }


@router.post("/reduce", name="reduce")
def reduce(request: ReduceRequest) -> Dict[str, Any]:
    """Reduce a model.

    The initializer is ignored unless the method is "tl-h2opt".
    """
    init = request.init if request.method == "tl-h2opt" else None
    red, report = reduce_model(
        request.model.to_model(),
        Horizon(tau=request.tau),
        request.order,
        request.method,
        init,
        request.config,
    )
    return {"reduced": red.to_lists(), "report": report.model_dump()}


@router.post("/verify", name="verify")
def verify(request: VerifyRequest) -> Dict[str, Any]:
    """Verify a reduced model against the full model."""
    report = verify_reduction(
        request.model.to_model(),
        request.reduced.to_reduced(),
        Horizon(tau=request.tau),
        request.config,
        request.seed,
    )
    return report.model_dump()
