"""Exception types raised by the library."""


class DomainError(ValueError):
    """An input violates an operation's precondition."""


class NoSolutionError(ArithmeticError):
    """A root-finding problem has no solution on the searched range."""


class DegenerateDirectionError(DomainError):
    """Every directional derivative vanishes along the requested direction."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class UnboundedPolarError(DomainError):
    """The polar body is unbounded (support function vanishes somewhere)."""


class InsufficientDataError(DomainError):
    """Too few samples to make a decision."""


class GridFormatError(ValueError):
    """A grid or body file does not follow the text format."""
