"""Tokenizer and block parser for ``.scn`` scenario files.

The format is line oriented::

    # comment
    keyword arg arg ...
    keyword arg ... {
        nested statements
    }

Arguments are bare words, quoted strings, numbers (decimal with optional
exponent), complex numbers written ``re+imi`` / ``imi`` and bracketed lists
``[a, b, ...]`` that may nest and may span lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from gemengelab.errors import ScenarioParseError

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN = re.compile(
    rf"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<string>"[^"\n]*")
  | (?P<complex>(?:{_NUMBER})?(?:[+-](?:\d+\.?\d*|\.\d+)?(?:[eE][+-]?\d+)?|{_NUMBER}|[+-]?)i(?![\w.-]))
  | (?P<number>{_NUMBER}(?![\w.+-]))
  | (?P<punct>[{{}}\[\],])
  | (?P<word>[A-Za-z_][\w.+-]*|[\w.+-]+)
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    value: Any
    line: int
    column: int


def _parse_complex(text: str) -> complex:
    body = text[:-1]
    m = re.fullmatch(rf"({_NUMBER})?([+-](?:\d+\.?\d*|\.\d+)?(?:[eE][+-]?\d+)?)?", body)
    if body in ("", "+"):
        return 1j
    if body == "-":
        return -1j
    if m is None:
        raise ValueError(text)
    re_part, im_part = m.group(1), m.group(2)
    if im_part is None:
        # "2.5i": the whole body is the imaginary part
        return complex(0.0, float(re_part))
    if im_part in ("+", "-"):
        im = 1.0 if im_part == "+" else -1.0
    else:
        im = float(im_part)
    return complex(float(re_part) if re_part else 0.0, im)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ScenarioParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "newline":
            tokens.append(Token("newline", raw, line, col))
            line += 1
            line_start = m.end()
        elif kind == "string":
            tokens.append(Token("word", raw[1:-1], line, col))
        elif kind == "complex":
            try:
                tokens.append(Token("number", _parse_complex(raw), line, col))
            except ValueError:
                raise ScenarioParseError(f"malformed complex number {raw!r}", line, col) from None
        elif kind == "number":
            val = float(raw)
            if re.fullmatch(r"[+-]?\d+", raw):
                val = int(raw)
            tokens.append(Token("number", val, line, col))
        elif kind == "punct":
            tokens.append(Token(raw, raw, line, col))
        elif kind == "word":
            tokens.append(Token("word", raw, line, col))
        pos = m.end()
    tokens.append(Token("eof", None, line, pos - line_start + 1))
    return tokens


@dataclass
class Node:
    """One statement: ``keyword args... [{ children }]``."""

    keyword: str
    args: list = field(default_factory=list)
    children: list["Node"] = field(default_factory=list)
    line: int = 0
    column: int = 0
    has_block: bool = False

    def find(self, keyword: str) -> list["Node"]:
        return [c for c in self.children if c.keyword == keyword]

    def first(self, keyword: str) -> "Node | None":
        found = self.find(keyword)
        return found[0] if found else None

    def error(self, message: str) -> ScenarioParseError:
        return ScenarioParseError(message, self.line, self.column)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.i += 1

    def statements(self, closing: str | None) -> list[Node]:
        out = []
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind == "eof":
                if closing is not None:
                    raise ScenarioParseError("unterminated block, expected '}'", tok.line, tok.column)
                return out
            if tok.kind == "}":
                if closing is None:
                    raise ScenarioParseError("unmatched '}'", tok.line, tok.column)
                self.take()
                return out
            out.append(self.statement())

    def statement(self) -> Node:
        tok = self.take()
        if tok.kind != "word":
            raise ScenarioParseError(f"expected a keyword, found {tok.value!r}", tok.line, tok.column)
        node = Node(tok.value, line=tok.line, column=tok.column)
        while True:
            nxt = self.peek()
            if nxt.kind in ("newline", "eof", "}"):
                return node
            if nxt.kind == "{":
                self.take()
                node.has_block = True
                node.children = self.statements("}")
                return node
            node.args.append(self.value())

    def value(self):
        tok = self.take()
        if tok.kind in ("word", "number"):
            return tok.value
        if tok.kind == "[":
            items = []
            while True:
                while self.peek().kind == "newline":
                    self.take()
                if self.peek().kind == "]":
                    self.take()
                    return items
                items.append(self.value())
                while self.peek().kind == "newline":
                    self.take()
                sep = self.take()
                if sep.kind == "]":
                    return items
                if sep.kind != ",":
                    raise ScenarioParseError(f"expected ',' or ']' in list, found {sep.value!r}", sep.line, sep.column)
        raise ScenarioParseError(f"unexpected {tok.value!r}", tok.line, tok.column)


def parse(text: str) -> Node:
    """Parse scenario text into a root node whose children are the top-level statements."""
    tokens = tokenize(text)
    root = Node("<root>", line=1, column=1, has_block=True)
    root.children = _Parser(tokens).statements(None)
    return root
