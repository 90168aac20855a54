"""Exception hierarchy shared by every stage of the toolchain."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class RmpstError(Exception):
    """Base class for all reported analysis failures."""


class UndefinedExtension(RmpstError):
    def __init__(self, var: str, reason: str = ""):
        super().__init__(f"cannot extend context with {var}: {reason}" if reason else f"cannot extend context with {var}")
        self.var = var


class TypingError(RmpstError):
    pass


class IrrelevantVariableUse(TypingError):
    def __init__(self, var: str):
        super().__init__(f"variable {var} is erased here and cannot be used")
        self.var = var


class UnboundVariable(TypingError):
    def __init__(self, var: str):
        super().__init__(f"unbound variable {var}")
        self.var = var


class SortError(TypingError):
    pass


class SolverUnavailable(RmpstError):
    pass


class ProjectionError(RmpstError):
    """Projection is undefined; `kind` is MergeFailure, ExprTypeFailure, IrrelevantVariableUse,
    FreeTypeVar or NonContractive."""

    def __init__(self, kind: str, role: str, path: tuple[str, ...], reason: str):
        where = "/".join(path) if path else "<top>"
        super().__init__(f"{kind} projecting onto {role} at {where}: {reason}")
        self.kind = kind
        self.role = role
        self.path = path
        self.reason = reason


class MergeFailure(RmpstError):
    pass


class NotProjectable(RmpstError):
    def __init__(self, failures: dict):
        lines = "; ".join(f"{r}: {e}" for r, e in sorted(failures.items()))
        super().__init__(f"protocol is not well-formed: {lines}")
        self.failures = failures


class ExplorationBudgetExceeded(RmpstError):
    def __init__(self, budget: int, partial=None):
        super().__init__(f"exploration budget of {budget} nodes exceeded")
        self.budget = budget
        self.partial = partial


class CfsmError(RmpstError):
    """Structural problem with a machine: MixedState, NonDirected, DuplicateLabel, Unreachable."""

    def __init__(self, kind: str, state: Optional[int], detail: str):
        super().__init__(f"{kind} at state {state}: {detail}")
        self.kind = kind
        self.state = state
        self.detail = detail


class CodegenError(RmpstError):
    pass


class ChooserError(CodegenError):
    """A declared chooser is not total or picks a label its guard cannot justify."""

    def __init__(self, kind: str, state: int, detail: str, model: Optional[dict] = None):
        super().__init__(f"{kind} at state {state}: {detail}")
        self.kind = kind
        self.state = state
        self.detail = detail
        self.model = model


class RuntimeViolation(RmpstError):
    """Raised by endpoints: RefinementFailed, UnknownLabel, PeerClosed or Deserialization."""

    def __init__(self, kind: str, state: Optional[int], detail: str, snapshot: Optional[dict] = None):
        super().__init__(f"{kind} at state {state}: {detail}")
        self.kind = kind
        self.state = state
        self.detail = detail
        self.snapshot = dict(snapshot or {})


@dataclass
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass
class Diagnostic:
    code: str
    message: str
    span: Optional[Span] = None
    severity: str = "error"

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity}: {self.code}: {self.message}"


class DiagnosticError(RmpstError):
    """Carries the diagnostics produced while reading a protocol."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics
