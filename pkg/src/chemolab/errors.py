"""Exception types shared across the package."""


class ChemolabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ChemolabError):
    """Invalid or missing configuration; carries the offending key path."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class SingularEvaluation(ChemolabError):
    """Motility factor evaluated where it is undefined (division by zero)."""


class SingularMotility(ChemolabError):
    """Time step attempted with s0 = 0 while the concentration touches zero."""


class NonIntegrable(ChemolabError):
    """The motility product diverges too fast at 0 for its primitive to exist."""


class DomainError(ChemolabError):
    """Arguments outside the mathematical domain of an operation."""


class NoConvergence(ChemolabError):
    """Iterative solver exhausted its budget; final residual attached."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PositivityFailure(ChemolabError):
    """Step-size halving could not keep the fields nonnegative."""
