"""Exception types shared across the package.

Every error raised on purpose by this package derives from
:class:`LabelInvError`, so callers can catch one base class at the CLI
boundary and map it to an exit code.
"""

from __future__ import annotations


class LabelInvError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LabelInvError, ValueError):
    """An input failed a shape, dtype, finiteness, or range check."""


class BudgetExhaustedError(LabelInvError, RuntimeError):
    """A counting oracle refused a query because the budget is spent.

    Attributes
    ----------
    count : int
        Queries answered before the refusal.
    budget : int
        The configured limit.
    """

    def __init__(self, count: int, budget: int, message: str | None = None):
        self.count = count
        self.budget = budget
        super().__init__(
            message or f"query budget exhausted: {count} queries answered, budget {budget}"
        )


class InitializationError(LabelInvError, RuntimeError):
    """No starting point with the target label was found within the try cap.

    Attributes
    ----------
    tries : int
        Number of candidate points that were drawn and rejected.
    """

    def __init__(self, tries: int, target_class: int | None = None):
        self.tries = tries
        self.target_class = target_class
        detail = "" if target_class is None else f" for class {target_class}"
        super().__init__(
            f"no in-class starting point{detail} after {tries} tries"
        )


class TrainingError(LabelInvError, RuntimeError):
    """A classifier finished its iteration cap below the accuracy floor."""


class DegenerateInputError(LabelInvError, ValueError):
    """A computation is undefined for the given input.

    Raised for zero-vector cosines, zero margin gradients, rank-deficient
    generator fits, and similar numerical dead ends.
    """


class ProtocolError(LabelInvError, RuntimeError):
    """The remote oracle sent a malformed or unexpected response."""


class NondeterministicOracleError(LabelInvError, RuntimeError):
    """An oracle returned different labels for the same probe point."""
