"""Catalog validation for parsed scripts.

Checks every object class, behavior reference, weather literal, scenario
parameter and specifier kind against a Catalog. The result is a list of
diagnostics in declaration order; an empty list means the script only uses
identifiers the catalog knows. Diagnostics are data, never exceptions.
"""

from __future__ import annotations

from typing import Optional

from . import diagnostics as diag
from .catalog import Catalog
from .diagnostics import Diagnostic, Span
from .nodes import (
    Attribute, BehaviorStmt, Call, DoStmt, Expr, Name, ScenicScript,
    StringLit, TryInterruptStmt,
)

_FALLBACK = Span(1, 1, 1, 2)


def validate(script: ScenicScript, catalog: Catalog) -> list[Diagnostic]:
    tree = script.tree
    out: list[Diagnostic] = []
    local_behaviors = {b.name for b in tree.behaviors}
    known_behaviors = local_behaviors | set(catalog.builtin_behaviors)

    for param in tree.params:
        if param.name not in catalog.param_names:
            out.append(diag.error(
                diag.CATALOG_UNKNOWN_PARAM, param.span or _FALLBACK,
                f"scenario parameter '{param.name}' is not in the catalog",
            ))
        elif param.name == "weather" and isinstance(param.value, StringLit):
            if param.value.value not in catalog.weather_values:
                out.append(diag.error(
                    diag.CATALOG_UNKNOWN_WEATHER, param.value_span or param.span or _FALLBACK,
                    f"weather '{param.value.value}' is not in the catalog",
                ))

    for behavior in tree.behaviors:
        _check_body(behavior.body, known_behaviors, out)

    for obj in tree.objects:
        if obj.class_name not in catalog.object_classes:
            out.append(diag.error(
                diag.CATALOG_UNKNOWN_CLASS, obj.class_span or obj.span or _FALLBACK,
                f"object class '{obj.class_name}' is not in the catalog",
            ))
        for spec in obj.specifiers:
            if spec.kind not in catalog.specifier_kinds:
                out.append(diag.error(
                    diag.CATALOG_UNKNOWN_SPECIFIER, spec.span or obj.span or _FALLBACK,
                    f"specifier '{spec.kind.replace('_', ' ')}' is not in the catalog",
                ))
        for prop in obj.properties:
            if prop.name != "behavior":
                continue
            name = referenced_name(prop.value)
            if name is not None and name not in known_behaviors:
                out.append(diag.error(
                    diag.CATALOG_UNKNOWN_BEHAVIOR, prop.span or obj.span or _FALLBACK,
                    f"behavior '{name}' is neither defined in the script nor a catalog built-in",
                ))

    return out


def _check_body(body: tuple[BehaviorStmt, ...], known: set[str], out: list[Diagnostic]) -> None:
    for stmt in body:
        if isinstance(stmt, DoStmt):
            name = referenced_name(stmt.call)
            if name is not None and name not in known:
                out.append(diag.error(
                    diag.CATALOG_UNKNOWN_BEHAVIOR, stmt.span or _FALLBACK,
                    f"behavior '{name}' is neither defined in the script nor a catalog built-in",
                ))
        elif isinstance(stmt, TryInterruptStmt):
            _check_body(stmt.body, known, out)
            for handler in stmt.handlers:
                _check_body(handler.body, known, out)


def referenced_name(expr: Expr) -> Optional[str]:
    """Behavior name referenced by `with behavior X(...)` / `do X(...)`."""
    if isinstance(expr, Call):
        return referenced_name(expr.func)
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, Attribute):
        return expr.attr
    return None
