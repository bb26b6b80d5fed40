"""Exception types shared across the package."""


class SingularMatrixError(ValueError):
    """A diagonal matrix with a zero entry was used where invertibility is required."""


class OutOfDomainError(ValueError):
    """An analytic expression was evaluated outside the domain where it holds."""


class DegenerateDistributionError(ValueError):
    """An approximate softmax distribution could not be normalized.

    Carries diagnostics: the raw sum of estimates and the count of negative
    entries that produced the degenerate normalizer.
    """

    def __init__(self, message: str, raw_sum: float, negative_count: int):
        super().__init__(message)
        self.raw_sum = raw_sum
        self.negative_count = negative_count
