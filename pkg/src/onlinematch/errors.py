"""Exception hierarchy shared by every module."""

from __future__ import annotations


class OnlineMatchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidNodeError(OnlineMatchError, ValueError):
    pass


class InvalidElementError(OnlineMatchError, ValueError):
    pass


class InvalidSourceError(OnlineMatchError, ValueError):
    pass


class GraphFormatError(OnlineMatchError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class BudgetExceededError(OnlineMatchError):
    """An exhaustive enumeration would exceed the caller's cap."""

    def __init__(self, cap: int, required: int, what: str = "subsets"):
        self.cap = cap
        self.required = required
        super().__init__(f"enumeration needs {required} {what}, cap is {cap}")


class CapacityError(OnlineMatchError):
    """A request list or store would grow past its capacity."""


class InfeasibleError(OnlineMatchError):
    pass


class SearchFailure(OnlineMatchError):
    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__(message)


class StackDisciplineError(OnlineMatchError):
    pass


class DuplicateTerminalError(OnlineMatchError):
    pass


class MatchingStalled(OnlineMatchError):
    """The deficient-set loop reached a fixed point without shrinking.

    This cannot happen on a graph with bounded right degree; it signals
    that the graph does not satisfy the property the matcher relies on.
    """
