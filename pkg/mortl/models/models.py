"""Classes for the mortl app."""

import math
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationInfo,
    field_validator,
    model_validator,
)

from mortl.core.defaults_config import DEFAULTS


def as_matrix(value: Any, name: str = "matrix") -> np.ndarray:
    """Convert a value to a finite two-dimensional float array.

    Parameters
    ----------
    value : Any
        A scalar, a nested list or an array.
    name : str, optional
        Name used in error messages, by default "matrix".

    Returns
    -------
    np.ndarray
        A finite float array with two positive dimensions.

    Raises
    ------
    ValueError
        If the value is not two-dimensional, empty or not finite.

    """
    matrix = np.array(value, dtype=float)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2:
        raise ValueError(
            f"{name} must be two-dimensional, got shape {matrix.shape}"
        )
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise ValueError(f"{name} must have positive dimensions")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} has non-finite entries")
    return matrix


class ArrayModel(BaseModel):
    """Base model for immutable containers of numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class SchurForm(ArrayModel):
    """Model for a real Schur factorization A = Q T Q^T.

    T is quasi-upper-triangular with 1x1 and 2x2 diagonal blocks.
    """

    Q: np.ndarray
    T: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        """Read the eigenvalues from the diagonal blocks of T.

        Returns
        -------
        np.ndarray
            Complex eigenvalues, conjugate pairs adjacent.

        """
        T = self.T
        n = T.shape[0]
        values = []
        i = 0
        while i < n:
            if i + 1 < n and T[i + 1, i] != 0.0:
                values.extend(np.linalg.eigvals(T[i : i + 2, i : i + 2]))
                i += 2
            else:
                values.append(complex(T[i, i]))
                i += 1
        return np.array(values, dtype=complex)


class StateSpaceModel(ArrayModel):
    """Model for a continuous-time LTI system dx/dt = Ax + Bu, y = Cx.

    Stability is not required: the time-limited norm of an unstable
    system is finite.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @field_validator("A", "B", "C", mode="before")
    @classmethod
    def _to_matrix(cls, value: Any, info: ValidationInfo) -> np.ndarray:
        return as_matrix(value, info.field_name)

    @model_validator(mode="after")
    def _check_dimensions(self) -> "StateSpaceModel":
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            raise ValueError(
                f"C must have {n} columns, got {self.C.shape}"
            )
        return self

    @property
    def n(self) -> int:
        """Return the state dimension."""
        return self.A.shape[0]

    @property
    def m(self) -> int:
        """Return the number of inputs."""
        return self.B.shape[1]

    @property
    def p(self) -> int:
        """Return the number of outputs."""
        return self.C.shape[0]

    def transposed(self) -> "StateSpaceModel":
        """Return the dual model (A^T, C^T, B^T)."""
        return StateSpaceModel(A=self.A.T, B=self.C.T, C=self.B.T)

    def similar(self, T: np.ndarray) -> "StateSpaceModel":
        """Return the realization in the state coordinates x = T z."""
        T_inv = np.linalg.inv(T)
        return type(self)(
            A=T_inv @ self.A @ T, B=T_inv @ self.B, C=self.C @ T
        )

    def to_lists(self) -> Dict[str, List[List[float]]]:
        """Return the matrices as nested lists."""
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
        }


class ReducedModel(StateSpaceModel):
    """Model for a reduced-order system (A_r, B_r, C_r) of order r."""

    @property
    def r(self) -> int:
        """Return the reduced order."""
        return self.A.shape[0]


class Horizon(BaseModel):
    """Model for the time interval [0, tau]."""

    model_config = ConfigDict(frozen=True)

    tau: float

    @field_validator("tau")
    @classmethod
    def _check_tau(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"tau must be positive and finite, got {value}")
        return value


class TimeLimitedGramianPair(ArrayModel):
    """Model for the time-limited Gramians of a model over [0, tau]."""

    P_tau: np.ndarray
    Q_tau: np.ndarray
    expAtau: np.ndarray


class ErrorSystemWorkspace(ArrayModel):
    """Model for the blocks of the error-system Gramians.

    X_tau, P_r_tau, Y_tau and Q_r_tau are the time-limited partitions,
    P_r and X the infinite-horizon solutions entering the A_r gradient
    and S_tau the direction of the exponential derivative.
    """

    P_tau: np.ndarray
    Q_tau: np.ndarray
    X_tau: np.ndarray
    P_r_tau: np.ndarray
    Y_tau: np.ndarray
    Q_r_tau: np.ndarray
    P_r: np.ndarray
    X: np.ndarray
    S_tau: np.ndarray
    expAtau: np.ndarray
    expArtau: np.ndarray


class CostGradient(ArrayModel):
    """Model for the squared time-limited error and its gradients."""

    J: float
    grad_Ar: np.ndarray
    grad_Br: np.ndarray
    grad_Cr: np.ndarray

    def norm_inf(self) -> float:
        """Return the largest absolute gradient entry."""
        return max(
            float(np.max(np.abs(g)))
            for g in (self.grad_Ar, self.grad_Br, self.grad_Cr)
        )


class ProjectionPair(ArrayModel):
    """Model for Petrov-Galerkin projection matrices with W^T V = I."""

    V: np.ndarray
    W: np.ndarray


class OptimizerConfig(BaseModel):
    """Model for the settings of the quasi-Newton optimizer."""

    model_config = ConfigDict(extra="forbid")

    grad_tol: float = Field(DEFAULTS["optimizer"]["grad_tol"], gt=0)
    max_iter: int = Field(DEFAULTS["optimizer"]["max_iter"], ge=0)
    wolfe_c1: float = DEFAULTS["optimizer"]["wolfe_c1"]
    wolfe_c2: float = DEFAULTS["optimizer"]["wolfe_c2"]
    step_init: float = Field(DEFAULTS["optimizer"]["step_init"], gt=0)
    step_floor: float = Field(DEFAULTS["optimizer"]["step_floor"], gt=0)
    max_line_search: int = Field(
        DEFAULTS["optimizer"]["max_line_search"], gt=0
    )

    @model_validator(mode="after")
    def _check_wolfe(self) -> "OptimizerConfig":
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        return self


class TsiaConfig(BaseModel):
    """Model for the settings of the two-sided fixed-point iteration."""

    model_config = ConfigDict(extra="forbid")

    max_iter: int = Field(DEFAULTS["tsia"]["max_iter"], ge=0)
    tol: float = Field(DEFAULTS["tsia"]["tol"], gt=0)
    divergence_factor: float = Field(
        DEFAULTS["tsia"]["divergence_factor"], gt=1
    )


class VerifyConfig(BaseModel):
    """Model for the tolerances of the verification checks."""

    model_config = ConfigDict(extra="forbid")

    grad_tol: float = Field(DEFAULTS["verify"]["grad_tol"], gt=0)
    identity_tol: float = Field(DEFAULTS["verify"]["identity_tol"], gt=0)
    trials: int = Field(DEFAULTS["verify"]["trials"], ge=0)
    steps: int = Field(DEFAULTS["verify"]["steps"], gt=0)
    slack: float = Field(DEFAULTS["verify"]["slack"], ge=0)


class RunConfig(BaseModel):
    """Model for a user configuration file."""

    model_config = ConfigDict(extra="forbid")

    optimizer: OptimizerConfig = OptimizerConfig()
    tsia: TsiaConfig = TsiaConfig()
    verify: VerifyConfig = VerifyConfig()


class OptimizationReport(ArrayModel):
    """Model for the outcome of a quasi-Newton run."""

    model: ReducedModel
    J_trace: List[float]
    grad_trace: List[float]
    termination: str
    iterations: int
    seconds: float
    flagged: bool = False


class TsiaTrace(BaseModel):
    """Model for the iteration history of the fixed-point scheme."""

    changes: List[float] = []
    costs: List[float] = []
    best_iteration: int = 0
    converged: bool = False


class ReductionReport(BaseModel):
    """Model for the report written by a reduction run."""

    method: str
    init_method: Optional[str] = None
    tau: float
    n: int
    r: int
    J: float
    error: float
    relative_error: float
    full_norm: float
    grad_norm: float
    init_error: Optional[float] = None
    delta_err_pct: Optional[float] = None
    iterations: int = 0
    termination: Optional[str] = None
    seconds: float = 0.0
    J_trace: List[float] = []
    grad_trace: List[float] = []
    config: Dict[str, Any] = {}


class BenchmarkRow(BaseModel):
    """Model for one order of a sweep.

    err_init is None when the initializer failed for this order.
    """

    r: int
    err_init: Optional[float] = None
    err_opt: Optional[float] = None
    delta_err_pct: Optional[float] = None
    iterations: int = 0
    seconds: float = 0.0

    @property
    def diverged(self) -> bool:
        """Return True when the initializer failed."""
        return self.err_init is None


class ModelManifest(BaseModel):
    """Model for the JSON manifest binding the matrix files of a model."""

    name: str
    A: str
    B: str
    C: str
    tau: Optional[float] = Field(None, gt=0)


class SpectralDecomposition(ArrayModel):
    """Model for the pole-residue data of a diagonalizable A_r.

    Columns of V are right eigenvectors and columns of W left
    eigenvectors, scaled so that W^T V = I. b[i] = w_i^T B_r and
    c[:, i] = C_r v_i.
    """

    eigenvalues: np.ndarray
    V: np.ndarray
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray


class InterpolationResiduals(BaseModel):
    """Model for the residuals of the tangential interpolation identities.

    ``left`` uses the orientation w_i^T (grad_Cr)^T, ``left_columns``
    the orientation (grad_Cr) w_i. ``offdiagonal`` maps "i,j" to the
    residual of the relation between distinct poles and
    ``offdiagonal_printed`` to the same relation with the opposite
    sign of the pole difference.
    """

    right: List[float]
    left: List[float]
    left_columns: List[float]
    bitangential: List[float]
    offdiagonal: Dict[str, float]
    offdiagonal_printed: Dict[str, float]

    def max_residual(self) -> float:
        """Return the largest residual used for pass/fail."""
        values = (
            self.right
            + self.left
            + self.left_columns
            + self.bitangential
            + list(self.offdiagonal.values())
        )
        return max(values, default=0.0)


class AppendixVectors(ArrayModel):
    """Model for the closed-form projections of the Gramian blocks.

    Each vector is the product of a Gramian block with an eigenvector
    of A_r, evaluated without solving a matrix equation.
    ``residuals`` holds the relative gap to the Sylvester solutions.
    """

    x_i_tau: np.ndarray
    x_i: np.ndarray
    p_i_tau: np.ndarray
    p_i: np.ndarray
    y_i_tau: np.ndarray
    q_i_tau: np.ndarray
    residuals: Dict[str, float]


class VerificationReport(BaseModel):
    """Model for the report of the verify command."""

    J: float
    grad_norm: float
    grad_ok: bool
    interpolation: Optional[InterpolationResiduals] = None
    interpolation_ok: Optional[bool] = None
    warnings: List[str] = []
    bound_trials: int = 0
    bound_worst_margin: Optional[float] = None
    bound_ok: bool = True
    passed: bool = False


class GramianSummary(BaseModel):
    """Model for the time-limited Gramian summary of a model."""

    tau: float
    n: int
    h2tau_norm: float
    trace_gap: float
    singular_values: List[float]


class ModelPayload(BaseModel):
    """Model for matrices sent as nested JSON lists."""

    A: List[List[float]]
    B: List[List[float]]
    C: List[List[float]]

    def to_model(self) -> StateSpaceModel:
        """Return the validated state-space model."""
        return StateSpaceModel(A=self.A, B=self.B, C=self.C)

    def to_reduced(self) -> ReducedModel:
        """Return the validated reduced model."""
        return ReducedModel(A=self.A, B=self.B, C=self.C)


class GramiansRequest(BaseModel):
    """Model for a request of the time-limited Gramians."""

    model: ModelPayload
    tau: float


class ReduceRequest(BaseModel):
    """Model for a reduction request."""

    model: ModelPayload
    tau: float
    order: int = Field(..., ge=1)
    method: str = "tl-h2opt"
    init: Optional[str] = "tl-bt"
    config: RunConfig = RunConfig()


class VerifyRequest(BaseModel):
    """Model for a verification request."""

    model: ModelPayload
    reduced: ModelPayload
    tau: float
    seed: int = 0
    config: VerifyConfig = VerifyConfig()
