"""Exception hierarchy shared by all modules.

Domain violations subclass ``ValueError`` so callers that only care about bad
input can catch the builtin; numerical failures carry a residual estimate when
one is available.
"""

from __future__ import annotations


class MesoError(Exception):
    """Base class for all package errors."""


class DomainError(MesoError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class BulkExitError(DomainError):
    """A rescaled window leaves the bulk of the equilibrium measure."""


class NumericalError(MesoError, ArithmeticError):
    """A numerical procedure failed (non-convergence, loss of positivity, ...)."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual estimate {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class DiscretizationError(NumericalError):
    """A discretization is too coarse to produce meaningful output."""


class ConvergenceError(NumericalError):
    """An iteration or a refinement check did not converge."""


class EnvelopeError(NumericalError):
    """A rejection sampler's envelope failed (violated or too loose)."""


class ConfigError(MesoError):
    """An experiment configuration is malformed or out of range."""
