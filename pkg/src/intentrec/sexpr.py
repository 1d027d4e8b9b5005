"""Minimal s-expression reader and printer shared by the KB, transcript and world formats."""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(Exception):
    """Raised for malformed input; carries a 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Atom:
    text: str
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return self.text


class SList(list):
    """A parenthesised list remembering where it opened."""

    def __init__(self, items=(), line: int = 0, col: int = 0):
        super().__init__(items)
        self.line = line
        self.col = col


_DELIMS = set("();")


def read_all(text: str) -> list:
    """Read every top-level form in ``text``."""
    forms = []
    stack: list[SList] = []
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c.isspace():
            advance()
        elif c == ";":
            while i < n and text[i] != "\n":
                advance()
        elif c == "(":
            stack.append(SList(line=line, col=col))
            advance()
        elif c == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, col)
            done = stack.pop()
            advance()
            (stack[-1] if stack else forms).append(done)
        else:
            start_line, start_col, start = line, col, i
            while i < n and not text[i].isspace() and text[i] not in _DELIMS:
                advance()
            atom = Atom(text[start:i], start_line, start_col)
            (stack[-1] if stack else forms).append(atom)
    if stack:
        top = stack[-1]
        raise ParseError("unclosed '('", top.line, top.col)
    return forms


def where(node) -> tuple[int | None, int | None]:
    return getattr(node, "line", None), getattr(node, "col", None)


def expect_list(node, what: str) -> SList:
    if not isinstance(node, list):
        raise ParseError(f"expected list for {what}, got {node}", *where(node))
    return node


def expect_atom(node, what: str) -> str:
    if not isinstance(node, Atom):
        raise ParseError(f"expected symbol for {what}", *where(node))
    return node.text


def expect_int(node, what: str) -> int:
    text = expect_atom(node, what)
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"expected integer for {what}, got {text!r}", *where(node)) from None
    return value


def head(node) -> str | None:
    if isinstance(node, list) and node and isinstance(node[0], Atom):
        return node[0].text
    return None


def dumps(form) -> str:
    """Print a nested structure of str/int/list as a single-line s-expression."""
    if isinstance(form, (list, tuple)):
        return "(" + " ".join(dumps(x) for x in form) + ")"
    return str(form)
