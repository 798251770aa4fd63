"""Exception and warning types raised by frailtymeta."""


class FrailtyDomainError(ValueError):
    """An input lies outside the domain of a model formula."""


class UndefinedCorrelationError(FrailtyDomainError):
    """A phi coefficient was requested for a degenerate indicator (q in {0, 1})."""


class UndefinedConditionalError(FrailtyDomainError):
    """A conditional probability was requested given a null conditioning event."""


class ConfigurationError(ValueError):
    """A study descriptor combines options the model cannot express."""


class DescriptorValidationError(ValueError):
    """A study descriptor failed validation.

    ``errors`` holds one ``(location, message)`` pair per problem found.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{loc}: {msg}" for loc, msg in self.errors]
        super().__init__("invalid descriptor:\n  " + "\n  ".join(lines))


class ConvergenceError(RuntimeError):
    """The equation solver failed to get anywhere near a solution.

    ``best`` is the best FitResult found (may be None) and ``trace`` the
    per-start solver records.
    """

    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace or []


class SimulationInfeasibleError(RuntimeError):
    """Rejection screening accepts too few simulated subjects."""


class BootstrapFailureError(RuntimeError):
    """Too many bootstrap replicates failed; ``partial`` holds what was collected."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NumericalClampWarning(RuntimeWarning):
    """A probability fell slightly outside [0, 1] from round-off and was clamped."""
