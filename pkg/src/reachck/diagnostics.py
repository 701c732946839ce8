"""Diagnostic records shared by the checker and the command line."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .core import Span


class Code(str, Enum):
    SYNTAX = "syntax"
    UNBOUND = "unbound"
    ANNOTATION = "annotation-ill-formed"
    MISSING_ANNOTATION = "missing-annotation"
    EXPOSURE = "exposure-mismatch"
    SUBTYPE = "subtype-mismatch"
    QUALIFIER_BOUND = "qualifier-bound"
    FRESH_ESCAPE = "fresh-escape"
    CONFORMANCE = "conformance-failure"
    AVOIDANCE = "avoidance-failure"


# Coarse classes used when comparing against expected outcomes.
ESCAPE_CODES = frozenset({Code.FRESH_ESCAPE, Code.AVOIDANCE})


@dataclass
class Diagnostic:
    code: Code
    message: str
    span: Span | None = None
    rule: str = ""
    expected: str | None = None
    actual: str | None = None
    atoms: list[str] = field(default_factory=list)
    # "prelude" when the span points into the prelude rather than the checked file
    origin: str = "source"

    def to_json(self) -> dict:
        return {
            "code": self.code.value,
            "message": self.message,
            "span": list(self.span) if self.span else None,
            "rule": self.rule,
            "expected": self.expected,
            "actual": self.actual,
            "atoms": sorted(self.atoms),
            "origin": self.origin,
        }

    def render(self, source: str | None = None, filename: str = "<input>") -> str:
        where = filename
        if self.span and source is not None:
            line = source.count("\n", 0, self.span[0]) + 1
            col = self.span[0] - (source.rfind("\n", 0, self.span[0]) + 1) + 1
            where = f"{filename}:{line}:{col}"
        text = f"{where}: error[{self.code.value}] {self.message}"
        if self.rule:
            text += f" (rule {self.rule})"
        if self.expected is not None:
            text += f"\n  expected: {self.expected}"
        if self.actual is not None:
            text += f"\n  actual:   {self.actual}"
        return text


class CheckError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag
