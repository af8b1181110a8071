"""Syntax tree for the supported scenario-language subset.

All nodes are frozen dataclasses. Source spans are carried for diagnostics
but excluded from equality, so a parsed tree compares equal to the same tree
re-parsed from its canonical rendering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import Span


def _span_field() -> Optional[Span]:
    return field(default=None, compare=False, repr=False)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NumberLit:
    value: Union[int, float]


@dataclass(frozen=True)
class AngleLit:
    """Angle literal in degrees, written `<number> deg`."""

    value: Union[int, float]


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class VectorLit:
    """Parenthesised coordinate tuple, e.g. `(3, 40)`."""

    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Attribute:
    base: "Expr"
    attr: str


@dataclass(frozen=True)
class Call:
    func: "Expr"
    args: tuple["Expr", ...] = ()
    kwargs: tuple[tuple[str, "Expr"], ...] = ()


@dataclass(frozen=True)
class UnaryOp:
    op: str  # "-" or "not"
    operand: "Expr"


@dataclass(frozen=True)
class BinaryOp:
    op: str  # arithmetic, comparison, "and"/"or", or "relative to"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class DistanceExpr:
    """`distance to X` or `distance from Y to X`."""

    target: "Expr"
    origin: Optional["Expr"] = None


Expr = Union[
    NumberLit, AngleLit, StringLit, Name, VectorLit, Attribute, Call,
    UnaryOp, BinaryOp, DistanceExpr,
]


# ---------------------------------------------------------------------------
# Behavior bodies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Duration:
    amount: Expr
    unit: str  # "seconds" or "steps"


@dataclass(frozen=True)
class DoStmt:
    call: Expr
    duration: Optional[Duration] = None
    until: Optional[Expr] = None
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class TakeStmt:
    actions: tuple[Expr, ...]


@dataclass(frozen=True)
class WaitStmt:
    pass


@dataclass(frozen=True)
class InterruptClause:
    condition: Expr
    body: tuple["BehaviorStmt", ...]


@dataclass(frozen=True)
class TryInterruptStmt:
    body: tuple["BehaviorStmt", ...]
    handlers: tuple[InterruptClause, ...]


BehaviorStmt = Union[DoStmt, TakeStmt, WaitStmt, TryInterruptStmt]


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamDecl:
    name: str
    value: Expr
    span: Optional[Span] = _span_field()
    value_span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ModelImport:
    path: str  # dotted module path
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class BehaviorParam:
    name: str
    default: Optional[Expr] = None


@dataclass(frozen=True)
class BehaviorDecl:
    name: str
    params: tuple[BehaviorParam, ...]
    body: tuple[BehaviorStmt, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Specifier:
    """Spatial specifier: kind is the snake_case keyword form (`ahead_of`)."""

    kind: str
    args: tuple[Expr, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class PropertyAssign:
    """`with <name> <expr>` clause on an object declaration."""

    name: str
    value: Expr
    span: Optional[Span] = _span_field()


ObjectClause = Union[Specifier, PropertyAssign]


@dataclass(frozen=True)
class ObjectDecl:
    binding: Optional[str]
    class_name: str
    clauses: tuple[ObjectClause, ...]
    span: Optional[Span] = _span_field()
    class_span: Optional[Span] = _span_field()

    @property
    def specifiers(self) -> tuple[Specifier, ...]:
        return tuple(c for c in self.clauses if isinstance(c, Specifier))

    @property
    def properties(self) -> tuple[PropertyAssign, ...]:
        return tuple(c for c in self.clauses if isinstance(c, PropertyAssign))

    def behavior_ref(self) -> Optional[Expr]:
        """The value of the `with behavior ...` property, if any."""
        for prop in self.properties:
            if prop.name == "behavior":
                return prop.value
        return None


@dataclass(frozen=True)
class RequireStmt:
    condition: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class TerminateStmt:
    condition: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ScenarioTree:
    params: tuple[ParamDecl, ...] = ()
    model_import: Optional[ModelImport] = None
    behaviors: tuple[BehaviorDecl, ...] = ()
    objects: tuple[ObjectDecl, ...] = ()
    requirements: tuple[RequireStmt, ...] = ()
    terminations: tuple[TerminateStmt, ...] = ()

    def object_named(self, binding: str) -> Optional[ObjectDecl]:
        for obj in self.objects:
            if obj.binding == binding:
                return obj
        return None

    @property
    def ego(self) -> Optional[ObjectDecl]:
        return self.object_named("ego")


@dataclass(frozen=True)
class ScenicScript:
    """A parsed scenario: raw source plus its tree."""

    source: str
    tree: ScenarioTree
    line_count: int  # non-blank source lines


def count_nonblank_lines(source: str) -> int:
    return sum(1 for line in source.splitlines() if line.strip())
