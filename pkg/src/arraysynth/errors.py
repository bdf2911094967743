"""Exception types shared across the toolkit."""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all arraysynth errors."""


class DomainError(ToolkitError, ValueError):
    """An input is outside the physical/mathematical domain of an operation."""


class RangeError(DomainError):
    """A synthesis target is unachievable; carries the achievable interval."""

    def __init__(self, message: str, achievable: tuple[float, float]):
        super().__init__(message)
        self.achievable = achievable


class ArgumentError(ToolkitError, ValueError):
    """A structurally invalid argument (wrong count, bad combination)."""


class ValidationError(ToolkitError, ValueError):
    """One or more declared invariants are violated."""

    def __init__(self, violations: list[str] | str):
        if isinstance(violations, str):
            violations = [violations]
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class ParseError(ToolkitError, ValueError):
    """Malformed input text; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AnalysisError(ToolkitError, RuntimeError):
    """A pattern or network lacks the structure an analysis requires."""


class ObjectiveEvaluationError(ToolkitError, RuntimeError):
    """Objective evaluation failed; carries the offending parameter vector."""

    def __init__(self, message: str, x):
        super().__init__(message)
        self.x = x
