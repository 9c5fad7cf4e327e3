"""Relational text syntax for undirected wiring diagrams.

::

    # vaccination model
    uwd epi(S, I, Iv, R, V) {
      sir(S, I, R)
      viv(V, Iv, R)
      cross(S, I, Iv, V)
    }

Head variables are the outer ports.  Every distinct variable is a junction
and repeating a variable is the only way to wire ports together.  Boxes are
separated by ``;`` or newlines and ``#`` starts a comment.

Junction order is the order of first occurrence, head first.  A statement
``junction A, B;`` anywhere in the body pins ``A, B`` to the front of that
order and is also how a junction with no ports at all is written.  The
printer emits such a declaration only when first-occurrence order would
not reproduce the diagram.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

from .compose import UWD, validate_uwd
from .errors import UwdParseError

__all__ = ["parse_uwd", "print_uwd", "UwdWarning", "IDENT"]

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_TOKEN = re.compile(
    r"""
    (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<ws>[ \t\r\f\v]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){},;])
  | (?P<bad>.)
    """,
    re.VERBOSE | re.DOTALL,
)


class UwdWarning(UserWarning):
    pass


@dataclass(frozen=True)
class _Tok:
    kind: str  # ident, punct, newline, eof
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(src):
        kind = m.lastgroup
        col = m.start() - line_start + 1
        if kind == "bad":
            raise UwdParseError(f"unexpected character {m.group()!r}", line, col)
        if kind == "newline":
            toks.append(_Tok("newline", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind in ("ident", "punct"):
            toks.append(_Tok(kind, m.group(), line, col))
    toks.append(_Tok("eof", "", line, len(src) - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.pos = 0

    def peek(self, skip_newlines: bool = True) -> _Tok:
        if skip_newlines:
            while self.toks[self.pos].kind == "newline":
                self.pos += 1
        return self.toks[self.pos]

    def next(self, skip_newlines: bool = True) -> _Tok:
        tok = self.peek(skip_newlines)
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, tok: _Tok, expected: str):
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise UwdParseError(f"expected {expected}, found {found}", tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text or tok.kind == "eof":
            self.fail(tok, repr(text))
        return tok

    def ident(self) -> _Tok:
        tok = self.next()
        if tok.kind != "ident":
            self.fail(tok, "an identifier")
        return tok

    def var_list(self) -> list[_Tok]:
        self.expect("(")
        out = []
        if self.peek().text == ")":
            self.next()
            return out
        while True:
            out.append(self.ident())
            tok = self.next()
            if tok.text == ")":
                return out
            if tok.text != ",":
                self.fail(tok, "',' or ')'")

    def parse(self) -> UWD:
        kw = self.next()
        if kw.kind != "ident" or kw.text != "uwd":
            self.fail(kw, "'uwd'")
        name = self.ident().text
        head = self.var_list()
        self.expect("{")

        declared: list[str] = []
        boxes: list[tuple[str, list[str]]] = []
        box_names: set[str] = set()
        while True:
            tok = self.peek()
            if tok.text in (";",) and tok.kind == "punct":
                self.next()
                continue
            if tok.kind == "punct" and tok.text == "}":
                self.next()
                break
            if tok.kind != "ident":
                self.fail(tok, "a box or '}'")
            self.next()
            after = self.peek()
            if tok.text == "junction" and after.kind == "ident":
                names = [self.ident()]
                while self.peek(skip_newlines=False).text == ",":
                    self.next()
                    names.append(self.ident())
                for n in names:
                    if n.text in declared:
                        raise UwdParseError(f"junction {n.text!r} declared twice", n.line, n.col)
                    declared.append(n.text)
            else:
                if tok.text in box_names:
                    raise UwdParseError(f"duplicate box name {tok.text!r}", tok.line, tok.col)
                box_names.add(tok.text)
                boxes.append((tok.text, [v.text for v in self.var_list()]))
            sep = self.peek(skip_newlines=False)
            if sep.kind == "newline" or (sep.kind == "punct" and sep.text in ";}"):
                continue
            self.fail(sep, "';', newline or '}' after a statement")
        end = self.peek()
        if end.kind != "eof":
            self.fail(end, "end of input")

        outer = [v.text for v in head]
        used = {v for _, ports in boxes for v in ports}
        for v in head:
            if v.text not in used:
                warnings.warn(
                    f"{v.line}:{v.col}: head variable {v.text!r} is not wired to any box",
                    UwdWarning,
                    stacklevel=3,
                )
        return UWD.from_names(outer, boxes, junctions=declared, name=name)


def parse_uwd(src: str) -> UWD:
    """Parse UWD source text; raises :class:`UwdParseError` with a location."""
    return _Parser(src).parse()


def _natural_order(u: UWD) -> list[int]:
    order: list[int] = []
    for j in list(u.outer_ports) + [j for b in u.boxes for j in b.ports]:
        if j not in order:
            order.append(j)
    return order


def print_uwd(u: UWD) -> str:
    """Canonical source for ``u``; ``parse_uwd`` inverts it exactly."""
    bad = validate_uwd(u)
    if bad:
        raise ValueError("cannot print an invalid diagram: " + "; ".join(bad))
    names = [u.name] + [j.name for j in u.junctions] + u.box_names
    for n in names:
        if not IDENT.fullmatch(n):
            raise ValueError(f"name {n!r} is not an identifier")
    jn = [j.name for j in u.junctions]
    head = ", ".join(jn[j] for j in u.outer_ports)
    body = []
    if _natural_order(u) != list(range(len(jn))):
        body.append("junction " + ", ".join(jn) + ";")
    body += [f"{b.name}({', '.join(jn[j] for j in b.ports)});" for b in u.boxes]
    if not body:
        return f"uwd {u.name}({head}) {{}}\n"
    return f"uwd {u.name}({head}) {{\n" + "".join(f"  {line}\n" for line in body) + "}\n"
