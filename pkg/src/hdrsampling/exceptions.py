"""Exception hierarchy shared by all submodules."""


class HdrsError(Exception):
    """Base class for package errors."""


class DomainError(HdrsError, ValueError):
    """Input outside the mathematical domain of an operation."""


class BudgetExhaustedError(HdrsError, RuntimeError):
    """A sample budget ran out before the requested accuracy was reached.

    The best estimate obtained so far is kept on ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class InsufficientCoverageError(HdrsError, RuntimeError):
    """Too few Monte Carlo points fell inside the density superlevel set."""


class DimensionalityLimitError(HdrsError, RuntimeError):
    """Acceptance rate of the rejection sampler is below the configured floor."""


class TrainingError(HdrsError, RuntimeError):
    """A surrogate could not be fitted."""


class LeverageDegenerateError(HdrsError, ArithmeticError):
    """A hat-matrix diagonal entry is numerically equal to one."""


class ConditioningError(HdrsError, ArithmeticError):
    """Correlation matrix stays indefinite after the full nugget ladder."""


class UndefinedCovError(HdrsError, RuntimeError):
    """No failure was observed, so the estimator CoV is undefined."""


class DegenerateProposalError(HdrsError, RuntimeError):
    """Importance-sampling weights collapsed onto too few samples."""


class RegistryError(HdrsError, KeyError):
    """Problem registry lookup or registration failure."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
