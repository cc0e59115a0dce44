from __future__ import annotations

from typing import Any


class GapLabError(Exception):
    """Base error; ``diagnostics`` is serialised by the CLI on failure."""

    def __init__(self, message: str, **diagnostics: Any) -> None:
        super().__init__(message)
        self.diagnostics: dict[str, Any] = diagnostics

    def to_dict(self) -> dict[str, Any]:
        return {"error": type(self).__name__, "message": str(self), "diagnostics": self.diagnostics}


# precondition failures (CLI exit code 2)


class RangeError(GapLabError, ValueError):
    pass


class ShapeError(GapLabError, ValueError):
    pass


class ContractError(GapLabError, ValueError):
    pass


class DomainError(GapLabError, ValueError):
    pass


# computation failures (CLI exit code 3)


class SearchRangeError(GapLabError, RuntimeError):
    pass


class IntegrationError(GapLabError, RuntimeError):
    pass


class DegeneracyError(GapLabError, RuntimeError):
    def __init__(self, message: str, report: Any = None, **diagnostics: Any) -> None:
        super().__init__(message, **diagnostics)
        self.report = report


class BracketError(GapLabError, RuntimeError):
    pass


class LadderExhaustedError(GapLabError, RuntimeError):
    pass


def require_range(name: str, value: float, low: float, high: float, *, closed: bool = True) -> None:
    ok = low <= value <= high if closed else low < value < high
    if not ok:
        bracket = f"[{low}, {high}]" if closed else f"({low}, {high})"
        raise RangeError(f"{name}={value} outside admissible interval {bracket}", name=name, value=value, low=low, high=high)
