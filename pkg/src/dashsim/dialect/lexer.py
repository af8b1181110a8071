"""Indentation-aware tokenizer for scenario scripts.

Block structure comes from indentation (tabs normalized to 4 spaces before
measuring). Newlines inside parentheses are suppressed so multi-line argument
lists lex as one logical line. Comments run from `#` to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Span

TAB_WIDTH = 4

NAME = "NAME"
NUMBER = "NUMBER"
STRING = "STRING"
OP = "OP"
NEWLINE = "NEWLINE"
INDENT = "INDENT"
DEDENT = "DEDENT"
EOF = "EOF"

_TWO_CHAR_OPS = ("<=", ">=", "==", "!=")
_ONE_CHAR_OPS = "=()[],.:+-*/<>"


class LexError(Exception):
    def __init__(self, message: str, span: Span, code: str = "LEX_UNKNOWN"):
        super().__init__(message)
        self.message = message
        self.span = span
        self.code = code


@dataclass(frozen=True)
class Token:
    type: str
    value: str
    span: Span

    def __repr__(self) -> str:
        return f"Token({self.type}, {self.value!r}, {self.span.line}:{self.span.col})"


def tokenize(source: str) -> list[Token]:
    """Tokenize `source`, raising LexError on an unknown character."""
    tokens: list[Token] = []
    indents = [0]
    paren_depth = 0
    lines = source.split("\n")
    line_no = 0
    pending_line = False  # a statement is open on the current logical line

    for raw_line in lines:
        line_no += 1
        line = raw_line.replace("\t", " " * TAB_WIDTH)

        i = 0
        if paren_depth == 0:
            while i < len(line) and line[i] == " ":
                i += 1
            stripped = line[i:]
            if not stripped or stripped.startswith("#"):
                continue
            _handle_indent(tokens, indents, i, line_no)
        else:
            # Continuation inside brackets: indentation is not significant.
            while i < len(line) and line[i] == " ":
                i += 1

        col = i + 1
        while i < len(line):
            ch = line[i]

            if ch == " ":
                i += 1
                col += 1
                continue

            if ch == "#":
                break

            if ch in "'\"":
                text, consumed = _lex_string(line, i, line_no, col)
                tokens.append(Token(STRING, text, Span(line_no, col, line_no, col + consumed)))
                i += consumed
                col += consumed
                pending_line = True
                continue

            if ch.isdigit() or (ch == "." and i + 1 < len(line) and line[i + 1].isdigit()):
                start = i
                while i < len(line) and line[i].isdigit():
                    i += 1
                if i < len(line) and line[i] == "." and i + 1 < len(line) and line[i + 1].isdigit():
                    i += 1
                    while i < len(line) and line[i].isdigit():
                        i += 1
                value = line[start:i]
                tokens.append(Token(NUMBER, value, Span(line_no, col, line_no, col + (i - start))))
                col += i - start
                pending_line = True
                continue

            if ch.isalpha() or ch == "_":
                start = i
                while i < len(line) and (line[i].isalnum() or line[i] == "_"):
                    i += 1
                value = line[start:i]
                tokens.append(Token(NAME, value, Span(line_no, col, line_no, col + (i - start))))
                col += i - start
                pending_line = True
                continue

            two = line[i : i + 2]
            if two in _TWO_CHAR_OPS:
                tokens.append(Token(OP, two, Span(line_no, col, line_no, col + 2)))
                i += 2
                col += 2
                pending_line = True
                continue

            if ch in _ONE_CHAR_OPS:
                if ch == "(":
                    paren_depth += 1
                elif ch == ")":
                    paren_depth = max(0, paren_depth - 1)
                tokens.append(Token(OP, ch, Span(line_no, col, line_no, col + 1)))
                i += 1
                col += 1
                pending_line = True
                continue

            raise LexError(
                f"unknown character {ch!r}",
                Span(line_no, col, line_no, col + 1),
            )

        if paren_depth == 0 and pending_line:
            tokens.append(Token(NEWLINE, "", Span(line_no, max(1, col), line_no, max(1, col) + 1)))
            pending_line = False

    end_span = _end_anchor(lines)
    if pending_line:  # unterminated bracket run-off
        tokens.append(Token(NEWLINE, "", end_span))
    while len(indents) > 1:
        indents.pop()
        tokens.append(Token(DEDENT, "", end_span))
    tokens.append(Token(EOF, "", end_span))
    return tokens


def _end_anchor(lines: list[str]) -> Span:
    """Span of the last non-blank character, so end-of-input diagnostics
    always point inside the source."""
    for line_no in range(len(lines), 0, -1):
        stripped = lines[line_no - 1].rstrip()
        if stripped:
            return Span(line_no, len(stripped), line_no, len(stripped) + 1)
    return Span(1, 1, 1, 2)


def _handle_indent(tokens: list[Token], indents: list[int], width: int, line_no: int) -> None:
    span = Span(line_no, 1, line_no, max(2, width + 1))
    if width > indents[-1]:
        indents.append(width)
        tokens.append(Token(INDENT, "", span))
        return
    while width < indents[-1]:
        indents.pop()
        tokens.append(Token(DEDENT, "", span))
    if width != indents[-1]:
        raise LexError("inconsistent indentation", span, code="SYNTAX")


def _lex_string(line: str, start: int, line_no: int, col: int) -> tuple[str, int]:
    quote = line[start]
    i = start + 1
    buf: list[str] = []
    while i < len(line):
        ch = line[i]
        if ch == "\\" and i + 1 < len(line):
            esc = line[i + 1]
            buf.append({"n": "\n", "t": "\t"}.get(esc, esc))
            i += 2
            continue
        if ch == quote:
            return "".join(buf), i - start + 1
        buf.append(ch)
        i += 1
    raise LexError(
        "unterminated string literal",
        Span(line_no, col, line_no, col + (len(line) - start)),
        code="SYNTAX",
    )
