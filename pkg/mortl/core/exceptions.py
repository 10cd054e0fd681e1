"""Exceptions raised by mortl."""

from typing import Optional


class MortlError(Exception):
    """Base class of every error raised by mortl."""


class NumericalError(MortlError):
    """A numerical method could not deliver its result."""


class NonConvergence(NumericalError):
    """An iterative factorization exceeded its iteration cap."""


class SingularPencil(NumericalError):
    """A Sylvester or Lyapunov equation has no unique solution.

    Parameters
    ----------
    message : str
        Description of the failure.
    equation : str, optional
        Label of the offending equation, e.g. ``"X_tau"``.

    """

    def __init__(self, message: str, equation: Optional[str] = None):
        self.equation = equation
        if equation is not None:
            message = f"{equation}: {message}"
        super().__init__(message)


class SingularResolvent(NumericalError):
    """A resolvent (sI - A)^-1 was requested at an eigenvalue of A."""


class RankDeficient(NumericalError):
    """The requested order exceeds the effective rank."""


class IterationDiverged(NumericalError):
    """A fixed-point iteration left the region of useful iterates."""


class NormalizationSingular(NumericalError):
    """A Petrov-Galerkin normalization matrix is singular."""


class LineSearchFailed(NumericalError):
    """No step satisfying the Wolfe conditions was found."""


class NonFiniteResult(NumericalError):
    """A computed model has entries that are not finite."""


class NonDiagonalizable(NumericalError):
    """A reduced state matrix has no usable eigenvector basis."""


class RepeatedPoles(NonDiagonalizable):
    """A reduced state matrix has repeated eigenvalues."""


class PreconditionViolated(NumericalError):
    """Inputs of a check do not satisfy its preconditions."""


class DimensionMismatch(MortlError, ValueError):
    """Matrices have incompatible shapes."""


class ParseError(MortlError, ValueError):
    """A model file could not be parsed.

    Parameters
    ----------
    path : str
        The file that failed to parse.
    message : str
        Description of the failure.
    line : int, optional
        One-based line number of the failure when known.

    """

    def __init__(self, path: str, message: str, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = path if line is None else f"{path}:{line}"
        super().__init__(f"{where}: {message}")


class ConfigError(MortlError, ValueError):
    """Configuration values are invalid."""
