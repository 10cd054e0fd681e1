"""Main application file."""

from typing import Dict

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from mortl.api.routes import router
from mortl.core.config import Config
from mortl.core.exceptions import MortlError

app = FastAPI(title=Config.PROJECT_NAME, version=Config.VERSION)
app.include_router(router)


@app.exception_handler(MortlError)
async def mortl_error_handler(
    request: Request, exc: MortlError
) -> JSONResponse:
    """Report numerical and input failures as unprocessable requests."""
    return JSONResponse(
        status_code=422,
        content={"detail": str(exc), "error": type(exc).__name__},
    )


@app.exception_handler(ValidationError)
async def validation_error_handler(
    request: Request, exc: ValidationError
) -> JSONResponse:
    """Report matrices or horizons rejected by the domain models."""
    return JSONResponse(
        status_code=422,
        content={"detail": str(exc), "error": "ValidationError"},
    )


@app.get("/")
async def read_root() -> Dict[str, str]:
    """Handle the root endpoint of the API.

    This function returns a welcome message with the name and the
    version of the service.

    Returns
    -------
    Dict[str, str]
        A dictionary containing a welcome message, the project name
        and its version.

    """
    return {
        "message": "Welcome to mortl, time-limited model order reduction!",
        "name": Config.PROJECT_NAME,
        "version": Config.VERSION,
    }
