"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid source parameters, policy specification, or run configuration."""


class InvariantError(RuntimeError):
    """A state invariant was violated during a simulation run.

    Carries enough context (slot, source, state snapshot) to debug the run.
    """

    def __init__(self, message, slot=None, source=None, snapshot=None):
        super().__init__(message)
        self.slot = slot
        self.source = source
        self.snapshot = snapshot


class OptimizerError(RuntimeError):
    """The solver failed to converge. Carries the best iterate found."""

    def __init__(self, message, best_mu=None, best_objective=None):
        super().__init__(message)
        self.best_mu = best_mu
        self.best_objective = best_objective
