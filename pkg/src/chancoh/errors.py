class ValidationError(ValueError):
    """Input violates a documented invariant (dimensions, PSD, trace preservation, ...)."""


class SolverError(RuntimeError):
    """An optimizer hit its iteration cap or lost feasibility."""
