"""Exception hierarchy shared by the library and the CLI.

Everything the CLI maps to exit code 1 derives from :class:`OpetriError`.
"""

from __future__ import annotations


class OpetriError(Exception):
    """Base class for domain errors."""


class ArityError(OpetriError):
    """A box's port count disagrees with the legs of the model bound to it."""


class BindingError(OpetriError):
    """A binding is missing a box or names a box the diagram does not have."""


class TypeClashError(OpetriError):
    def __init__(self, junction: str, left_type: str, right_type: str):
        self.junction = junction
        self.left_type = left_type
        self.right_type = right_type
        super().__init__(
            f"junction {junction!r} identifies places of type {left_type!r} and {right_type!r}"
        )


class TypeNetMismatchError(OpetriError):
    """Two typed nets are typed over different type nets."""


class InvalidMorphismError(OpetriError):
    def __init__(self, message: str, violations: list[str] | None = None):
        self.violations = list(violations or [])
        detail = "".join(f"\n  - {v}" for v in self.violations)
        super().__init__(message + detail)


class InvalidNetError(InvalidMorphismError):
    pass


class SearchLimitError(OpetriError):
    """Isomorphism search exceeded its node budget."""


class UwdParseError(OpetriError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{line}:{column}: {message}")


class SolverError(OpetriError):
    def __init__(self, message: str, t: float | None = None, state=None):
        self.t = t
        self.state = state
        if t is not None:
            message = f"{message} at t={t!r}"
        if state is not None:
            message = f"{message}, state={list(map(float, state))!r}"
        super().__init__(message)


class ProjectError(OpetriError):
    """A project file failed schema validation or has dangling references."""
