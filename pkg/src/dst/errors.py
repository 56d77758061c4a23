"""Exception hierarchy for the dst package."""


class DstError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(DstError, ValueError):
    """Invalid graph construction or query."""


class DuplicateEdgeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class DisconnectedError(GraphError):
    pass


class NonpositiveWeightError(GraphError):
    pass


class SameNodeError(GraphError):
    pass


class NoConvergenceError(DstError):
    """Iterative solver failed to reach its tolerance within the budget."""


class SingularError(DstError):
    """Laplacian is singular beyond its structural null space."""


class UnstableError(DstError):
    """Requested quantity is undefined because the update dynamics diverge."""


class NoInteriorOptimumError(DstError):
    """Scalar objective is monotone on the feasible interval."""


class InfeasibleStartError(DstError):
    """No strictly stable starting point exists on this edge support."""


class ScenarioError(DstError, ValueError):
    """Invalid simulation scenario configuration or file."""


class CaseDomainViolationError(DstError):
    """Simulation state left the domain of the configured nodal measure."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class NumericalBlowupError(DstError):
    """A nodal limit exceeded the magnitude guard."""

    def __init__(self, step: int, limit: float = 1e15):
        super().__init__(f"nodal limit magnitude exceeded {limit:g} at step {step}")
        self.step = step


class ZeroIdealError(DstError):
    """Over-throttling percentage is undefined when the ideal total is zero."""
