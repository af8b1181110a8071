"""Structured diagnostics for scenario scripts.

Diagnostics are plain data, never exceptions: batch tooling records them and
moves on. Each error diagnostic carries a source span (1-based line/column,
end column exclusive) that always lies inside the text it was produced from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional


ERROR = "error"
WARNING = "warning"

# Stable diagnostic codes. Tools match on these, so they never change meaning.
LEX_UNKNOWN = "LEX_UNKNOWN"
SYNTAX = "SYNTAX"
NO_EGO = "NO_EGO"
MULTIPLE_EGO = "MULTIPLE_EGO"
DUPLICATE_SPECIFIER = "DUPLICATE_SPECIFIER"
CATALOG_UNKNOWN_CLASS = "CATALOG_UNKNOWN_CLASS"
CATALOG_UNKNOWN_BEHAVIOR = "CATALOG_UNKNOWN_BEHAVIOR"
CATALOG_UNKNOWN_WEATHER = "CATALOG_UNKNOWN_WEATHER"
CATALOG_UNKNOWN_PARAM = "CATALOG_UNKNOWN_PARAM"
CATALOG_UNKNOWN_SPECIFIER = "CATALOG_UNKNOWN_SPECIFIER"


@dataclass(frozen=True)
class Span:
    """Source range: 1-based line and column, end column exclusive."""

    line: int
    col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if self.line < 1 or self.col < 1:
            raise ValueError(f"span must be 1-based, got {self}")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # ERROR or WARNING
    code: str
    span: Span
    message: str
    hint: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "line": self.span.line,
            "col": self.span.col,
            "end_line": self.span.end_line,
            "end_col": self.span.end_col,
            "message": self.message,
            "hint": self.hint,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(", ", ": "))

    def render(self) -> str:
        """One-line human form: severity, location, code, message."""
        text = f"{self.severity}: {self.span.line}:{self.span.col}: {self.code}: {self.message}"
        if self.hint:
            text += f" (hint: {self.hint})"
        return text


def error(code: str, span: Span, message: str, hint: Optional[str] = None) -> Diagnostic:
    return Diagnostic(ERROR, code, span, message, hint)


def warning(code: str, span: Span, message: str, hint: Optional[str] = None) -> Diagnostic:
    return Diagnostic(WARNING, code, span, message, hint)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity == ERROR for d in diags)
