"""S-expression reader with source positions.

Symbols are case-insensitive and normalized to lower case.  Numbers are
exact rationals: integer, decimal, or p/q literals all become Fraction.
Comments run from `;` to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .errors import ParseError
from .model import SourceSpan

_DELIMS = "() \t\r\n;"


@dataclass(frozen=True)
class SAtom:
    text: str                      # normalized token text
    value: Optional[Fraction]      # set when the token is a number
    span: SourceSpan = field(compare=False)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class SList:
    items: tuple["SExpr", ...]
    span: SourceSpan = field(compare=False)

    def __str__(self) -> str:
        return "(" + " ".join(str(i) for i in self.items) + ")"


SExpr = Union[SAtom, SList]


def _try_number(text: str) -> Optional[Fraction]:
    body = text[1:] if text[:1] in "+-" else text
    if not body or not body[0].isdigit():
        return None
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        return None


class Reader:
    def __init__(self, text: str, filename: str = "<input>"):
        self.text = text
        self.filename = filename
        self.pos = 0
        self.line = 1
        self.col = 1

    def span(self) -> SourceSpan:
        return SourceSpan(self.filename, self.line, self.col)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_blank(self) -> None:
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c == ";":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            elif c.isspace():
                self._advance()
            else:
                return

    def at_eof(self) -> bool:
        self._skip_blank()
        return self.pos >= len(self.text)

    def read(self) -> SExpr:
        self._skip_blank()
        if self.pos >= len(self.text):
            raise ParseError("unexpected end of input", self.span())
        start = self.span()
        c = self.text[self.pos]
        if c == "(":
            self._advance()
            items: list[SExpr] = []
            while True:
                self._skip_blank()
                if self.pos >= len(self.text):
                    raise ParseError("unbalanced parentheses: missing ')'", start)
                if self.text[self.pos] == ")":
                    self._advance()
                    return SList(tuple(items), start)
                items.append(self.read())
        if c == ")":
            raise ParseError("unbalanced parentheses: unexpected ')'", start)
        begin = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _DELIMS:
            self._advance()
        raw = self.text[begin:self.pos]
        value = _try_number(raw)
        text = raw if value is not None else raw.lower()
        return SAtom(text, value, start)

    def read_all(self) -> list[SExpr]:
        out = []
        while not self.at_eof():
            out.append(self.read())
        return out


def read_one(text: str, filename: str = "<input>") -> SExpr:
    r = Reader(text, filename)
    expr = r.read()
    if not r.at_eof():
        raise ParseError("trailing content after expression", r.span())
    return expr


def read_all(text: str, filename: str = "<input>") -> list[SExpr]:
    return Reader(text, filename).read_all()


def expect_list(e: SExpr, what: str) -> SList:
    if not isinstance(e, SList):
        raise ParseError(f"expected {what}, found {e}", e.span)
    return e


def expect_atom(e: SExpr, what: str) -> SAtom:
    if not isinstance(e, SAtom):
        raise ParseError(f"expected {what}, found a list", e.span)
    return e


def expect_symbol(e: SExpr, what: str) -> SAtom:
    a = expect_atom(e, what)
    if a.value is not None:
        raise ParseError(f"expected {what}, found number {a.text}", a.span)
    return a


def head_is(e: SExpr, word: str) -> bool:
    return (isinstance(e, SList) and len(e.items) > 0
            and isinstance(e.items[0], SAtom) and e.items[0].text == word)
