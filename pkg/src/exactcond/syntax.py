"""Tokenizer and parser scaffolding shared by the ``.gauss`` and ``.fin`` front ends."""

from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(Exception):
    def __init__(self, line: int, col: int, expected, found: str):
        self.line = line
        self.col = col
        self.expected = sorted(set(expected))
        self.found = found
        exp = ", ".join(self.expected) if self.expected else "?"
        super().__init__(f"{line}:{col}: expected {exp}, found {found}")


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, IDENT, NEWLINE, EOF or the symbol / keyword itself
    text: str
    line: int
    col: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "NEWLINE":
            return "newline"
        return repr(self.text)


_NUM = r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_OPEN = "([{"
_CLOSE = ")]}"


def tokenize(text: str, keywords: frozenset[str], symbols: tuple[str, ...]) -> list[Token]:
    """Split source text into tokens.

    Newlines are significant only outside brackets, where they act as
    statement separators; runs of them collapse into one token.  ``#``
    starts a comment running to the end of the line.
    """
    syms = sorted(symbols, key=len, reverse=True)
    pattern = re.compile(
        rf"(?P<ws>[ \t\r\f]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|(?P<num>{_NUM})|(?P<ident>{_IDENT})|"
        + "(?P<sym>" + "|".join(re.escape(s) for s in syms) + ")"
    )
    tokens: list[Token] = []
    depth = 0
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = pattern.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(line, col, ["token"], repr(text[pos]))
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            if depth == 0 and tokens and tokens[-1].kind != "NEWLINE":
                tokens.append(Token("NEWLINE", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "num":
            tokens.append(Token("NUM", s, line, col))
        elif kind == "ident":
            tokens.append(Token(s if s in keywords else "IDENT", s, line, col))
        elif kind == "sym":
            if s in _OPEN:
                depth += 1
            elif s in _CLOSE:
                depth = max(0, depth - 1)
            tokens.append(Token(s, s, line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


_KIND_NAMES = {"NUM": "number", "IDENT": "identifier", "EOF": "end of input", "NEWLINE": "newline"}


class TokenStream:
    """Cursor over a token list with expected-set error reporting."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self._expected: set[str] = set()
        self._expected_at = -1

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def peek_at(self, k: int) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def _note(self, what: str) -> None:
        if self._expected_at != self.pos:
            self._expected_at = self.pos
            self._expected = set()
        self._expected.add(what)

    def check(self, kind: str) -> bool:
        self._note(kind)
        return self.peek.kind == kind

    def accept(self, kind: str) -> Token | None:
        if self.check(kind):
            tok = self.peek
            self.pos += 1
            return tok
        return None

    def expect(self, kind: str) -> Token:
        tok = self.accept(kind)
        if tok is None:
            self.fail()
        return tok

    def skip_newlines(self) -> None:
        while self.peek.kind == "NEWLINE":
            self.pos += 1

    def fail(self, what: str | None = None):
        if what is not None:
            self._note(what)
        tok = self.peek
        expected = self._expected if self._expected_at == self.pos else {what or "?"}
        raise ParseError(tok.line, tok.col, [_KIND_NAMES.get(e, e) for e in expected], tok.describe())

    def error(self, tok: Token, message: str):
        raise ParseError(tok.line, tok.col, [message], tok.describe())
