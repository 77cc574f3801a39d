"""Exception types shared across the package.

The CLI maps :class:`InvalidArgumentError` (and the other ``ValueError``
subclasses) to exit code 2 and :class:`NumericalFailureError` to exit code 1.
"""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class DegenerateInputError(ValueError):
    """Input data is valid in shape but carries no usable information."""


class IdxFormatError(ValueError):
    """An IDX file has the wrong magic number or an unexpected layout."""


class IdxConsistencyError(ValueError):
    """Image and label IDX files disagree on the item count."""


class IdxTruncatedError(OSError):
    """An IDX file ended before its header-declared payload."""


class NumericalFailureError(ArithmeticError):
    """A linear system was singular or too ill-conditioned to solve."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
