"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An input value is outside its allowed domain."""


class InvalidState(ValueError):
    """A channel or operator violates its physical invariants."""


class InvalidChi(InvalidState):
    """A process matrix is not positive semidefinite within tolerance."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class InsufficientData(ValueError):
    """A statistics table is missing counts required by an estimator."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class UndefinedSNR(ValueError):
    """Signal and noise probabilities are both zero."""


class ParseError(ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
