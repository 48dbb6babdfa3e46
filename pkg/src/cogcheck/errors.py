"""Exception types shared across the pipeline."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # parse | type | restriction | analysis
    code: str
    message: str
    span: Span = Span()

    def render(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.code}: {self.message}"


class AnalysisError(Exception):
    kind = "analysis"
    code = "error"

    def __init__(self, message: str, span: Span | None = None, code: str | None = None):
        super().__init__(message)
        self.message = message
        self.span = span or Span()
        if code is not None:
            self.code = code

    @property
    def diagnostics(self) -> list[Diagnostic]:
        return [Diagnostic(self.kind, self.code, self.message, self.span)]


class ParseError(AnalysisError):
    kind = "parse"
    code = "syntax"


class FrontendError(AnalysisError):
    """Carries every diagnostic found by the checker, not just the first."""

    kind = "type"

    def __init__(self, diags: list[Diagnostic]):
        first = diags[0]
        super().__init__(first.message, first.span, first.code)
        self.kind = first.kind
        self._diags = list(diags)

    @property
    def diagnostics(self) -> list[Diagnostic]:
        return list(self._diags)


class TypeCheckError(FrontendError):
    pass


class RestrictionError(FrontendError):
    kind = "restriction"


class InternalError(AnalysisError):
    code = "internal"


class UnificationError(AnalysisError):
    code = "unification"


class OccursError(UnificationError):
    kind = "restriction"
    code = "recursive-record"


class DivergenceError(AnalysisError):
    code = "divergence"


class ResourceLimit(AnalysisError):
    code = "resource-limit"


class NonlinearError(AnalysisError):
    code = "nonlinear"


class MissingMethod(AnalysisError):
    code = "missing-method"


class ShapeMismatch(AnalysisError):
    code = "shape-mismatch"
