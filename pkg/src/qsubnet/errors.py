"""Exception hierarchy shared across the package."""


class QSubnetError(Exception):
    """Base class for all package errors."""


class InvalidGraphError(QSubnetError, ValueError):
    pass


class InfeasibleEdgeCountError(QSubnetError, ValueError):
    """Requested edge count cannot form a connected simple graph."""


class ResampleLimitError(QSubnetError, RuntimeError):
    """Rejection sampling for a connected graph gave up."""


class DegenerateDistributionError(QSubnetError, ValueError):
    pass


class MissingCoordinatesError(QSubnetError, ValueError):
    pass


class BackboneTooWeakError(QSubnetError, ValueError):
    """Backbone fidelity at or below 1/4 leaves the fidelity target undefined."""


class SaturationError(QSubnetError, ValueError):
    """A cost was requested at a saturated parameter (infinite resources).

    ``value`` carries the +inf sentinel.
    """

    def __init__(self, message, value=float("inf")):
        super().__init__(message)
        self.value = value


class TargetBelowBareError(QSubnetError, ValueError):
    """Multiplexed target is below the single-attempt probability (n < 1)."""


class InfeasibleError(QSubnetError):
    """The optimisation problem has no solution in the open parameter domain.

    ``status`` is ``"infeasible"`` or ``"infeasible-in-open-domain"``.
    """

    def __init__(self, message, status="infeasible"):
        super().__init__(message)
        self.status = status


class SolverError(QSubnetError, RuntimeError):
    """No candidate passed KKT verification; ``best_residual`` is reported."""

    def __init__(self, message, best_residual=float("inf")):
        super().__init__(message)
        self.best_residual = best_residual


class ConfigError(QSubnetError, ValueError):
    pass
