"""Recursive-descent parser for the supported scenario-language subset.

Grammar (informal EBNF, one declaration per logical line):

    script     = { param | model | behavior | object | require | terminate }
    param      = "param" NAME "=" expr
    model      = "model" NAME { "." NAME }
    behavior   = "behavior" NAME "(" [ bparam { "," bparam } ] ")" ":" block
    bparam     = NAME [ "=" expr ]
    block      = INDENT bstmt { bstmt } DEDENT
    bstmt      = "do" expr [ "for" expr ("seconds"|"steps") | "until" expr ]
               | "take" expr { "," expr }
               | "wait"
               | "try" ":" block { "interrupt" "when" expr ":" block }
    object     = [ NAME "=" ] "new" NAME [ clause { "," clause } ]
    clause     = specifier | "with" NAME expr
    specifier  = "at" expr | "offset" "by" expr | "on" expr | "facing" expr
               | "ahead" "of" expr [ "by" expr ] | "behind" expr [ "by" expr ]
               | "left" "of" expr [ "by" expr ] | "right" "of" expr [ "by" expr ]
    require    = "require" expr
    terminate  = "terminate" "when" expr

Expressions support numbers (with a `deg` suffix for angles), strings, names,
attribute access, calls with keyword arguments, vectors `(x, y)`, arithmetic,
comparisons, `and`/`or`/`not`, `distance to`/`distance from ... to`, and
`relative to`.

`parse` returns either a ScenicScript or a non-empty list of error
diagnostics; it never raises for bad input.
"""

from __future__ import annotations

from typing import Optional, Union

from . import diagnostics as diag
from .diagnostics import Diagnostic, Span
from .lexer import (
    DEDENT, EOF, INDENT, NAME, NEWLINE, NUMBER, OP, STRING,
    LexError, Token, tokenize,
)
from .nodes import (
    AngleLit, Attribute, BehaviorDecl, BehaviorParam, BehaviorStmt, BinaryOp,
    Call, DistanceExpr, DoStmt, Duration, Expr, InterruptClause, ModelImport,
    Name, NumberLit, ObjectClause, ObjectDecl, ParamDecl, PropertyAssign,
    RequireStmt, ScenarioTree, ScenicScript, Specifier, StringLit, TakeStmt,
    TerminateStmt, TryInterruptStmt, UnaryOp, VectorLit, WaitStmt,
    count_nonblank_lines,
)

SPECIFIER_KINDS = (
    "at", "offset_by", "ahead_of", "behind", "left_of", "right_of", "facing", "on",
)

_COMPARE_OPS = ("<", ">", "<=", ">=", "==", "!=")


class _ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


def parse(source: str) -> Union[ScenicScript, list[Diagnostic]]:
    """Parse source text; returns the script or >=1 error diagnostics."""
    try:
        tokens = tokenize(source)
    except LexError as exc:
        return [diag.error(exc.code, exc.span, exc.message)]

    parser = _Parser(tokens)
    try:
        tree = parser.parse_script()
    except _ParseError as exc:
        return [diag.error(diag.SYNTAX, exc.span, exc.message)]

    structural = _structural_check(tree)
    if structural:
        return structural
    return ScenicScript(source=source, tree=tree, line_count=count_nonblank_lines(source))


def _structural_check(tree: ScenarioTree) -> list[Diagnostic]:
    """Tree invariants that need no catalog: exactly one ego binding and no
    duplicate specifier kind per object."""
    out: list[Diagnostic] = []
    ego_decls = [o for o in tree.objects if o.binding == "ego"]
    if not ego_decls:
        out.append(diag.error(
            diag.NO_EGO, Span(1, 1, 1, 2),
            "no object is bound to the name 'ego'",
            hint="declare one object as `ego = new <Class> ...`",
        ))
    for extra in ego_decls[1:]:
        out.append(diag.error(
            diag.MULTIPLE_EGO, extra.span or Span(1, 1, 1, 2),
            "more than one object is bound to the name 'ego'",
        ))
    for obj in tree.objects:
        seen: set[str] = set()
        for spec in obj.specifiers:
            if spec.kind in seen:
                out.append(diag.error(
                    diag.DUPLICATE_SPECIFIER, spec.span or obj.span or Span(1, 1, 1, 2),
                    f"duplicate specifier '{spec.kind.replace('_', ' ')}' on the same object",
                ))
            seen.add(spec.kind)
    return out


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token access -------------------------------------------------------

    def _peek(self, offset: int = 0) -> Token:
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != EOF:
            self.pos += 1
        return tok

    def _at_name(self, value: str, offset: int = 0) -> bool:
        tok = self._peek(offset)
        return tok.type == NAME and tok.value == value

    def _at_op(self, value: str, offset: int = 0) -> bool:
        tok = self._peek(offset)
        return tok.type == OP and tok.value == value

    def _expect_op(self, value: str) -> Token:
        tok = self._peek()
        if not self._at_op(value):
            raise _ParseError(f"expected {value!r}, got {tok.value or tok.type!r}", tok.span)
        return self._advance()

    def _expect_name(self, value: Optional[str] = None) -> Token:
        tok = self._peek()
        if tok.type != NAME or (value is not None and tok.value != value):
            want = repr(value) if value else "a name"
            raise _ParseError(f"expected {want}, got {tok.value or tok.type!r}", tok.span)
        return self._advance()

    def _expect_newline(self) -> None:
        tok = self._peek()
        if tok.type != NEWLINE:
            raise _ParseError(
                f"expected end of line, got {tok.value or tok.type!r}", tok.span
            )
        self._advance()

    # -- top level -----------------------------------------------------------

    def parse_script(self) -> ScenarioTree:
        params: list[ParamDecl] = []
        model: Optional[ModelImport] = None
        behaviors: list[BehaviorDecl] = []
        objects: list[ObjectDecl] = []
        requirements: list[RequireStmt] = []
        terminations: list[TerminateStmt] = []

        while self._peek().type != EOF:
            tok = self._peek()
            if tok.type in (NEWLINE, INDENT, DEDENT):
                if tok.type == INDENT:
                    raise _ParseError("unexpected indentation", tok.span)
                self._advance()
                continue
            if tok.type != NAME:
                raise _ParseError(
                    f"expected a declaration, got {tok.value or tok.type!r}", tok.span
                )

            if tok.value == "param":
                params.append(self._parse_param())
            elif tok.value == "model":
                decl = self._parse_model()
                if model is not None:
                    raise _ParseError("more than one model import", decl.span or tok.span)
                model = decl
            elif tok.value == "behavior":
                behaviors.append(self._parse_behavior())
            elif tok.value == "require":
                requirements.append(self._parse_require())
            elif tok.value == "terminate":
                terminations.append(self._parse_terminate())
            elif tok.value == "new" or self._at_op("=", 1):
                objects.append(self._parse_object())
            else:
                raise _ParseError(
                    f"expected a declaration keyword, got {tok.value!r}", tok.span
                )

        return ScenarioTree(
            params=tuple(params),
            model_import=model,
            behaviors=tuple(behaviors),
            objects=tuple(objects),
            requirements=tuple(requirements),
            terminations=tuple(terminations),
        )

    # -- declarations ---------------------------------------------------------

    def _parse_param(self) -> ParamDecl:
        kw = self._expect_name("param")
        name = self._expect_name()
        self._expect_op("=")
        value_start = self._peek().span
        value = self._parse_expr()
        value_end = self.tokens[self.pos - 1].span
        self._expect_newline()
        return ParamDecl(
            name=name.value,
            value=value,
            span=_join(kw.span, name.span),
            value_span=_join(value_start, value_end),
        )

    def _parse_model(self) -> ModelImport:
        kw = self._expect_name("model")
        parts = [self._expect_name().value]
        while self._at_op("."):
            self._advance()
            parts.append(self._expect_name().value)
        end = self.tokens[self.pos - 1].span
        self._expect_newline()
        return ModelImport(path=".".join(parts), span=_join(kw.span, end))

    def _parse_behavior(self) -> BehaviorDecl:
        kw = self._expect_name("behavior")
        name = self._expect_name()
        self._expect_op("(")
        params: list[BehaviorParam] = []
        if not self._at_op(")"):
            while True:
                pname = self._expect_name()
                default = None
                if self._at_op("="):
                    self._advance()
                    default = self._parse_expr()
                params.append(BehaviorParam(pname.value, default))
                if self._at_op(","):
                    self._advance()
                    continue
                break
        self._expect_op(")")
        self._expect_op(":")
        body = self._parse_block()
        return BehaviorDecl(
            name=name.value, params=tuple(params), body=body,
            span=_join(kw.span, name.span),
        )

    def _parse_block(self) -> tuple[BehaviorStmt, ...]:
        self._expect_newline()
        tok = self._peek()
        if tok.type != INDENT:
            raise _ParseError("expected an indented block", tok.span)
        self._advance()
        stmts: list[BehaviorStmt] = []
        while True:
            tok = self._peek()
            if tok.type == DEDENT:
                self._advance()
                break
            if tok.type == EOF:
                raise _ParseError("unterminated block", tok.span)
            if tok.type == NEWLINE:
                self._advance()
                continue
            stmts.append(self._parse_behavior_stmt())
        if not stmts:
            raise _ParseError("empty block", tok.span)
        return tuple(stmts)

    def _parse_behavior_stmt(self) -> BehaviorStmt:
        tok = self._peek()
        if tok.type != NAME:
            raise _ParseError(
                f"expected a behavior statement, got {tok.value or tok.type!r}", tok.span
            )
        if tok.value == "do":
            self._advance()
            call_start = self._peek().span
            call = self._parse_expr()
            call_end = self.tokens[self.pos - 1].span
            duration = None
            until = None
            if self._at_name("for"):
                self._advance()
                amount = self._parse_expr()
                unit_tok = self._peek()
                if not (self._at_name("seconds") or self._at_name("steps")):
                    raise _ParseError(
                        "expected 'seconds' or 'steps' after duration", unit_tok.span
                    )
                self._advance()
                duration = Duration(amount=amount, unit=unit_tok.value)
            elif self._at_name("until"):
                self._advance()
                until = self._parse_expr()
            self._expect_newline()
            return DoStmt(
                call=call, duration=duration, until=until,
                span=_join(call_start, call_end),
            )
        if tok.value == "take":
            self._advance()
            actions = [self._parse_expr()]
            while self._at_op(","):
                self._advance()
                actions.append(self._parse_expr())
            self._expect_newline()
            return TakeStmt(actions=tuple(actions))
        if tok.value == "wait":
            self._advance()
            self._expect_newline()
            return WaitStmt()
        if tok.value == "try":
            self._advance()
            self._expect_op(":")
            body = self._parse_block()
            handlers: list[InterruptClause] = []
            while self._at_name("interrupt"):
                self._advance()
                self._expect_name("when")
                condition = self._parse_expr()
                self._expect_op(":")
                handler_body = self._parse_block()
                handlers.append(InterruptClause(condition=condition, body=handler_body))
            if not handlers:
                raise _ParseError("'try' block needs at least one 'interrupt when'", tok.span)
            return TryInterruptStmt(body=body, handlers=tuple(handlers))
        raise _ParseError(f"unknown behavior statement {tok.value!r}", tok.span)

    def _parse_object(self) -> ObjectDecl:
        binding: Optional[str] = None
        first = self._peek()
        if first.value != "new":
            binding = self._expect_name().value
            self._expect_op("=")
        kw = self._expect_name("new")
        class_tok = self._expect_name()
        clauses: list[ObjectClause] = []
        if self._peek().type != NEWLINE:
            clauses.append(self._parse_clause())
            while self._at_op(","):
                self._advance()
                clauses.append(self._parse_clause())
        self._expect_newline()
        return ObjectDecl(
            binding=binding,
            class_name=class_tok.value,
            clauses=tuple(clauses),
            span=_join(first.span, class_tok.span),
            class_span=class_tok.span,
        )

    def _parse_clause(self) -> ObjectClause:
        tok = self._peek()
        if tok.type != NAME:
            raise _ParseError(
                f"expected a specifier, got {tok.value or tok.type!r}", tok.span
            )
        if tok.value == "with":
            self._advance()
            prop = self._expect_name()
            value = self._parse_expr()
            return PropertyAssign(name=prop.value, value=value, span=_join(tok.span, prop.span))
        return self._parse_specifier()

    def _parse_specifier(self) -> Specifier:
        tok = self._advance()
        word = tok.value

        if word == "at":
            return Specifier("at", (self._parse_expr(),), span=tok.span)
        if word == "offset":
            by = self._expect_name("by")
            return Specifier("offset_by", (self._parse_expr(),), span=_join(tok.span, by.span))
        if word == "ahead":
            of = self._expect_name("of")
            return self._relative_specifier("ahead_of", _join(tok.span, of.span))
        if word == "behind":
            return self._relative_specifier("behind", tok.span)
        if word == "left":
            of = self._expect_name("of")
            return self._relative_specifier("left_of", _join(tok.span, of.span))
        if word == "right":
            of = self._expect_name("of")
            return self._relative_specifier("right_of", _join(tok.span, of.span))
        if word == "facing":
            return Specifier("facing", (self._parse_expr(),), span=tok.span)
        if word == "on":
            return Specifier("on", (self._parse_expr(),), span=tok.span)
        raise _ParseError(f"unknown specifier {word!r}", tok.span)

    def _relative_specifier(self, kind: str, span: Span) -> Specifier:
        reference = self._parse_expr()
        args: list[Expr] = [reference]
        if self._at_name("by"):
            self._advance()
            args.append(self._parse_expr())
        return Specifier(kind, tuple(args), span=span)

    def _parse_require(self) -> RequireStmt:
        kw = self._expect_name("require")
        condition = self._parse_expr()
        self._expect_newline()
        return RequireStmt(condition=condition, span=kw.span)

    def _parse_terminate(self) -> TerminateStmt:
        kw = self._expect_name("terminate")
        when = self._expect_name("when")
        condition = self._parse_expr()
        self._expect_newline()
        return TerminateStmt(condition=condition, span=_join(kw.span, when.span))

    # -- expressions -----------------------------------------------------------
    # Precedence, loosest first: or, and, not, comparison, relative-to,
    # additive, multiplicative, unary minus, postfix (attribute/call), atom.

    def _parse_expr(self) -> Expr:
        return self._parse_or()

    def _parse_or(self) -> Expr:
        left = self._parse_and()
        while self._at_name("or"):
            self._advance()
            left = BinaryOp("or", left, self._parse_and())
        return left

    def _parse_and(self) -> Expr:
        left = self._parse_not()
        while self._at_name("and"):
            self._advance()
            left = BinaryOp("and", left, self._parse_not())
        return left

    def _parse_not(self) -> Expr:
        if self._at_name("not"):
            self._advance()
            return UnaryOp("not", self._parse_not())
        return self._parse_comparison()

    def _parse_comparison(self) -> Expr:
        left = self._parse_relative()
        tok = self._peek()
        if tok.type == OP and tok.value in _COMPARE_OPS:
            self._advance()
            return BinaryOp(tok.value, left, self._parse_relative())
        return left

    def _parse_relative(self) -> Expr:
        left = self._parse_additive()
        while self._at_name("relative") and self._at_name("to", 1):
            self._advance()
            self._advance()
            left = BinaryOp("relative to", left, self._parse_additive())
        return left

    def _parse_additive(self) -> Expr:
        left = self._parse_multiplicative()
        while self._at_op("+") or self._at_op("-"):
            op = self._advance().value
            left = BinaryOp(op, left, self._parse_multiplicative())
        return left

    def _parse_multiplicative(self) -> Expr:
        left = self._parse_unary()
        while self._at_op("*") or self._at_op("/"):
            op = self._advance().value
            left = BinaryOp(op, left, self._parse_unary())
        return left

    def _parse_unary(self) -> Expr:
        if self._at_op("-"):
            self._advance()
            return UnaryOp("-", self._parse_unary())
        return self._parse_postfix()

    def _parse_postfix(self) -> Expr:
        expr = self._parse_atom()
        while True:
            if self._at_op("."):
                self._advance()
                attr = self._expect_name()
                expr = Attribute(base=expr, attr=attr.value)
                continue
            if self._at_op("("):
                expr = self._parse_call(expr)
                continue
            return expr

    def _parse_call(self, func: Expr) -> Call:
        self._expect_op("(")
        args: list[Expr] = []
        kwargs: list[tuple[str, Expr]] = []
        if not self._at_op(")"):
            while True:
                if self._peek().type == NAME and self._at_op("=", 1):
                    key = self._expect_name()
                    self._advance()  # '='
                    kwargs.append((key.value, self._parse_expr()))
                else:
                    if kwargs:
                        raise _ParseError(
                            "positional argument after keyword argument",
                            self._peek().span,
                        )
                    args.append(self._parse_expr())
                if self._at_op(","):
                    self._advance()
                    continue
                break
        self._expect_op(")")
        return Call(func=func, args=tuple(args), kwargs=tuple(kwargs))

    def _parse_atom(self) -> Expr:
        tok = self._peek()

        if tok.type == NUMBER:
            self._advance()
            value: Union[int, float] = float(tok.value) if "." in tok.value else int(tok.value)
            if self._at_name("deg"):
                self._advance()
                return AngleLit(value)
            return NumberLit(value)

        if tok.type == STRING:
            self._advance()
            return StringLit(tok.value)

        if tok.type == NAME:
            if tok.value == "distance" and (self._at_name("to", 1) or self._at_name("from", 1)):
                return self._parse_distance()
            self._advance()
            return Name(tok.value)

        if self._at_op("("):
            self._advance()
            items = [self._parse_expr()]
            while self._at_op(","):
                self._advance()
                items.append(self._parse_expr())
            self._expect_op(")")
            if len(items) == 1:
                return items[0]
            return VectorLit(tuple(items))

        raise _ParseError(
            f"expected an expression, got {tok.value or tok.type!r}", tok.span
        )

    def _parse_distance(self) -> Expr:
        self._expect_name("distance")
        if self._at_name("from"):
            self._advance()
            origin = self._parse_additive()
            self._expect_name("to")
            target = self._parse_additive()
            return DistanceExpr(target=target, origin=origin)
        self._expect_name("to")
        return DistanceExpr(target=self._parse_additive(), origin=None)


def _join(a: Span, b: Span) -> Span:
    return Span(a.line, a.col, b.end_line, b.end_col)
