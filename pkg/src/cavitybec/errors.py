"""Exception and warning types shared across the package."""


class CavityBecError(Exception):
    """Base class for all package errors."""


class ValidationError(CavityBecError, ValueError):
    """Invalid user input or inconsistent configuration."""


class WorkBudgetError(CavityBecError):
    """An enumeration would exceed the configured work budget."""


class ConvergenceError(CavityBecError):
    """A series, fit, or iteration failed to reach its tolerance."""


class SolverError(CavityBecError):
    """A root solver could not bracket or finish."""


class PoleError(CavityBecError, ValueError):
    """Evaluation point too close to a pole of a special function."""


class DivergenceWarning(UserWarning):
    """Result dominated by a singular term near the edge of validity."""


class AnisotropyWarning(UserWarning):
    """Edge-length ratios are not integers; Diophantine machinery is approximate."""
