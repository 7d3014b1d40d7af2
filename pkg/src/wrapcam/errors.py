"""Exception hierarchy for the wrapcam toolkit."""
from __future__ import annotations


class WrapcamError(Exception):
    """Base class for all wrapcam errors."""


class InvalidGeometryError(WrapcamError, ValueError):
    """A geometric input is physically meaningless (non-positive radius, etc.)."""


class DegenerateTangentError(InvalidGeometryError):
    """The cam curve has a vanishing tangent vector at the requested angle."""


class DomainError(WrapcamError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class NonConvergenceError(WrapcamError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    `theta` is set when the failure happened at a known cam angle (sweeps).
    """

    def __init__(self, message: str, theta: float | None = None):
        super().__init__(message)
        self.theta = theta


class InfeasibleGeometryError(WrapcamError, RuntimeError):
    """A candidate design has no solvable contact geometry."""


class NoFeasiblePointError(WrapcamError, RuntimeError):
    """The design optimization could not produce any constraint-satisfying point."""


class MaxIterationsError(WrapcamError, RuntimeError):
    """The design optimization hit its iteration cap before converging."""


class ConfigError(WrapcamError, ValueError):
    """A run configuration file is malformed or inconsistent."""
