"""Canonical printer for scenario trees.

Output is stable: one declaration per line, 4-space indents, declarations
grouped as params / model / behaviors / objects / requires / terminations
with one blank line between non-empty groups. Rendering a tree and parsing
the result yields an equal tree, and re-rendering that is byte-identical.
"""

from __future__ import annotations

from .nodes import (
    AngleLit, Attribute, BehaviorDecl, BehaviorStmt, BinaryOp, Call,
    DistanceExpr, DoStmt, Expr, Name, NumberLit, ObjectDecl, PropertyAssign,
    ScenarioTree, ScenicScript, Specifier, StringLit, TakeStmt,
    TryInterruptStmt, UnaryOp, VectorLit, WaitStmt,
)

_INDENT = "    "

# Higher binds tighter. Binary operators are left-associative.
_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_REL = 5  # `relative to` and `distance ...`
_PREC_ADD = 6
_PREC_MUL = 7
_PREC_NEG = 8
_PREC_POSTFIX = 9

_BIN_PREC = {
    "or": _PREC_OR, "and": _PREC_AND,
    "<": _PREC_CMP, ">": _PREC_CMP, "<=": _PREC_CMP, ">=": _PREC_CMP,
    "==": _PREC_CMP, "!=": _PREC_CMP,
    "relative to": _PREC_REL,
    "+": _PREC_ADD, "-": _PREC_ADD,
    "*": _PREC_MUL, "/": _PREC_MUL,
}


def render(script: ScenicScript) -> str:
    """Canonical text of a parsed script."""
    return render_tree(script.tree)


def render_tree(tree: ScenarioTree) -> str:
    groups: list[list[str]] = []

    if tree.params:
        groups.append([f"param {p.name} = {render_expr(p.value)}" for p in tree.params])
    if tree.model_import is not None:
        groups.append([f"model {tree.model_import.path}"])
    for behavior in tree.behaviors:
        groups.append(_render_behavior(behavior))
    if tree.objects:
        groups.append([_render_object(o) for o in tree.objects])
    if tree.requirements:
        groups.append([f"require {render_expr(r.condition)}" for r in tree.requirements])
    if tree.terminations:
        groups.append([f"terminate when {render_expr(t.condition)}" for t in tree.terminations])

    return "\n\n".join("\n".join(g) for g in groups) + "\n"


def _render_behavior(decl: BehaviorDecl) -> list[str]:
    params = ", ".join(
        p.name if p.default is None else f"{p.name} = {render_expr(p.default)}"
        for p in decl.params
    )
    lines = [f"behavior {decl.name}({params}):"]
    lines.extend(_render_body(decl.body, 1))
    return lines


def _render_body(body: tuple[BehaviorStmt, ...], depth: int) -> list[str]:
    pad = _INDENT * depth
    lines: list[str] = []
    for stmt in body:
        if isinstance(stmt, DoStmt):
            text = f"do {render_expr(stmt.call)}"
            if stmt.duration is not None:
                text += f" for {render_expr(stmt.duration.amount)} {stmt.duration.unit}"
            elif stmt.until is not None:
                text += f" until {render_expr(stmt.until)}"
            lines.append(pad + text)
        elif isinstance(stmt, TakeStmt):
            lines.append(pad + "take " + ", ".join(render_expr(a) for a in stmt.actions))
        elif isinstance(stmt, WaitStmt):
            lines.append(pad + "wait")
        elif isinstance(stmt, TryInterruptStmt):
            lines.append(pad + "try:")
            lines.extend(_render_body(stmt.body, depth + 1))
            for handler in stmt.handlers:
                lines.append(pad + f"interrupt when {render_expr(handler.condition)}:")
                lines.extend(_render_body(handler.body, depth + 1))
        else:  # pragma: no cover - exhaustive over BehaviorStmt
            raise TypeError(f"unknown behavior statement {stmt!r}")
    return lines


def _render_object(obj: ObjectDecl) -> str:
    head = f"new {obj.class_name}"
    if obj.binding is not None:
        head = f"{obj.binding} = {head}"
    clauses = [_render_clause(c) for c in obj.clauses]
    if clauses:
        return head + " " + ", ".join(clauses)
    return head


def _render_clause(clause) -> str:
    if isinstance(clause, PropertyAssign):
        return f"with {clause.name} {render_expr(clause.value)}"
    return _render_specifier(clause)


def _render_specifier(spec: Specifier) -> str:
    keyword = {
        "at": "at", "offset_by": "offset by", "ahead_of": "ahead of",
        "behind": "behind", "left_of": "left of", "right_of": "right of",
        "facing": "facing", "on": "on",
    }[spec.kind]
    parts = f"{keyword} {render_expr(spec.args[0])}"
    if len(spec.args) > 1:
        parts += f" by {render_expr(spec.args[1])}"
    return parts


def render_expr(expr: Expr, parent_prec: int = 0) -> str:
    text, prec = _expr_text(expr)
    if prec < parent_prec:
        return f"({text})"
    return text


def _expr_text(expr: Expr) -> tuple[str, int]:
    if isinstance(expr, NumberLit):
        return str(expr.value), _PREC_POSTFIX + 1
    if isinstance(expr, AngleLit):
        return f"{expr.value} deg", _PREC_POSTFIX
    if isinstance(expr, StringLit):
        escaped = expr.value.replace("\\", "\\\\").replace("'", "\\'")
        escaped = escaped.replace("\n", "\\n").replace("\t", "\\t")
        return f"'{escaped}'", _PREC_POSTFIX + 1
    if isinstance(expr, Name):
        return expr.ident, _PREC_POSTFIX + 1
    if isinstance(expr, VectorLit):
        return "(" + ", ".join(render_expr(e) for e in expr.items) + ")", _PREC_POSTFIX + 1
    if isinstance(expr, Attribute):
        return f"{render_expr(expr.base, _PREC_POSTFIX)}.{expr.attr}", _PREC_POSTFIX
    if isinstance(expr, Call):
        pieces = [render_expr(a) for a in expr.args]
        pieces += [f"{k}={render_expr(v)}" for k, v in expr.kwargs]
        return f"{render_expr(expr.func, _PREC_POSTFIX)}({', '.join(pieces)})", _PREC_POSTFIX
    if isinstance(expr, UnaryOp):
        if expr.op == "not":
            return f"not {render_expr(expr.operand, _PREC_NOT)}", _PREC_NOT
        return f"-{render_expr(expr.operand, _PREC_NEG)}", _PREC_NEG
    if isinstance(expr, BinaryOp):
        prec = _BIN_PREC[expr.op]
        left = render_expr(expr.left, prec)
        right = render_expr(expr.right, prec + 1)
        return f"{left} {expr.op} {right}", prec
    if isinstance(expr, DistanceExpr):
        target = render_expr(expr.target, _PREC_ADD)
        if expr.origin is not None:
            origin = render_expr(expr.origin, _PREC_ADD)
            return f"distance from {origin} to {target}", _PREC_REL
        return f"distance to {target}", _PREC_REL
    raise TypeError(f"unknown expression {expr!r}")  # pragma: no cover
