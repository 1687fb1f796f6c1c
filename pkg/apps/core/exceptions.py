from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence


class NematicError(Exception):
    """Base class for every error raised by the nematic apps."""


class ConfigError(NematicError, ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        self.detail = message
        if key is not None and line is not None:
            message = f"{key} (line {line}): {message}"
        elif key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class MeshError(NematicError, ValueError):
    def __init__(self, message: str, cell: Optional[int] = None, facet: Optional[int] = None):
        self.cell = cell
        self.facet = facet
        super().__init__(message)


class FieldError(NematicError, ValueError):
    pass


class CouplingError(NematicError, ValueError):
    pass


class NumericalError(NematicError, RuntimeError):
    pass


class SolverError(NumericalError):
    def __init__(self, message: str, residual_history: Sequence[float] = ()):
        self.residual_history: List[float] = list(residual_history)
        super().__init__(message)


class NonFiniteError(NumericalError):
    pass


class CFLViolation(NumericalError):
    pass


class CoercivityError(NumericalError):
    pass


class MonotonicityError(NumericalError):
    def __init__(
        self,
        step: int,
        before: float,
        after: float,
        diagnostics: Optional[Dict[str, Any]] = None,
    ):
        self.step = step
        self.before = before
        self.after = after
        self.diagnostics = dict(diagnostics or {})
        super().__init__(
            f"Energy increased at step {step}: {before!r} -> {after!r} "
            f"(diagnostics: {self.diagnostics})"
        )


class MeshFormatError(MeshError):
    """A mesh file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
