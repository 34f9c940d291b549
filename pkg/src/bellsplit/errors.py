"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented invariant (bad density matrix, out-of-range
    reflectivity, non-unitary element, malformed records, ...)."""


class FitError(RuntimeError):
    """A least-squares fit could not be performed or produced no acceptable
    solution (degenerate data, no consistent order assignment, ...)."""


class ConvergenceError(RuntimeError):
    """Iterative maximum-likelihood reconstruction failed to converge.

    Carries the best iterate found so far in ``best_rho`` and a ``diagnostics``
    dict (iterations, gradient norm, final objective).
    """

    def __init__(self, message, best_rho=None, diagnostics=None):
        super().__init__(message)
        self.best_rho = best_rho
        self.diagnostics = diagnostics or {}
