"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the admissible range of an operation."""


class OutOfDomainError(DomainError):
    """A requested sample lies outside the sampled space-time box."""


class ContractError(ValueError):
    """A documented precondition does not hold for the given input."""


class DegenerateError(ValueError):
    """The input carries no signal for the requested quantity (e.g. u == 0)."""


class ResolutionError(ValueError):
    """Too few samples to carry out a fit."""


class ShapeError(ValueError):
    """Fields that should share a grid do not."""


class ConvergenceError(RuntimeError):
    """An iteration failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SolverError(RuntimeError):
    """Time stepping produced non-finite values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class FormatError(ValueError):
    """Malformed snapshot file."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
