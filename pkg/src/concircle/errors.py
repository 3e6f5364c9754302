"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations


class ConcircleError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(ConcircleError, ValueError):
    """An operation was called with arguments outside its contract."""


class UnsupportedDimensionError(ArgumentError):
    pass


class JetOrderError(ConcircleError):
    """A derivative was requested from a jet whose order is exhausted."""


class DomainError(ConcircleError, ArithmeticError):
    """A numeric evaluation left the real domain of an operation.

    ``func`` names the failing operation, ``value`` the offending argument,
    ``point`` the chart point (filled in by the frame builder) and ``span``
    the (start, end) source offsets of the failing sub-expression.
    """

    def __init__(self, message: str, *, func: str | None = None, value: float | None = None,
                 point=None, span: tuple[int, int] | None = None):
        super().__init__(message)
        self.message = message
        self.func = func
        self.value = value
        self.point = None if point is None else tuple(float(x) for x in point)
        self.span = span

    def with_context(self, *, point=None, span=None) -> "DomainError":
        err = type(self)(self.message, func=self.func, value=self.value,
                         point=self.point if point is None else point,
                         span=self.span if span is None else span)
        return err

    def __str__(self) -> str:
        out = self.message
        if self.span is not None:
            out += f" (source span {self.span[0]}:{self.span[1]})"
        if self.point is not None:
            out += f" at point {list(self.point)}"
        return out


class DegenerateMetricError(DomainError):
    pass


class ParseError(ConcircleError):
    """Expression syntax error; ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.message = message
        self.offset = offset


class ManifestError(ConcircleError):
    """Manifest validation failure carrying every violation found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
