"""Exception types raised by the toolkit."""


class InvalidArgument(ValueError):
    """Input violates a documented precondition."""


class EstimationFailure(RuntimeError):
    """An estimator could not converge from any of its starting points."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SynthesisFailure(RuntimeError):
    """Sequence synthesis failed; the best plan found is attached."""

    def __init__(self, message, best_plan=None):
        super().__init__(message)
        self.best_plan = best_plan
