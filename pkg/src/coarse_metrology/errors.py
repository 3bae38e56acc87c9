"""Exception types raised across the package."""


class CoarseMetrologyError(Exception):
    """Base class for all package errors."""


class QuadratureError(CoarseMetrologyError):
    """Adaptive quadrature failed to converge or met a non-finite integrand."""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate


class BracketError(CoarseMetrologyError):
    """A root or optimum search was given a bracket that cannot contain it."""


class ProbabilityRangeError(CoarseMetrologyError):
    """A model returned a probability outside [0, 1]."""


class UnsupportedScenarioError(CoarseMetrologyError):
    """The requested state/reference combination has no defined model."""


class OracleCapError(CoarseMetrologyError):
    """Statevector oracle asked for more qubits than it is allowed to hold."""


class DivergenceError(CoarseMetrologyError):
    """No finite optimum exists (for example zero coarsening or zero dephasing)."""
