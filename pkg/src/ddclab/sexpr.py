"""S-expression values, reader, canonical printer and hashing.

Values are plain immutable Python objects:

* ``Symbol`` -- an uppercase name (a ``str`` subclass),
* ``int`` -- a signed 64-bit integer,
* ``tuple`` -- a proper list; the empty tuple ``()`` is ``NIL``.

There is exactly one representation of NIL, so ``NIL == ()`` and structural
equality is ordinary ``==`` restricted to these three types.
"""

from __future__ import annotations

import hashlib
from typing import Union

DIGEST_ALGORITHM = "sha256"

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

NIL: tuple = ()

_DELIMS = frozenset("();'")


class ParseError(ValueError):
    """Raised for malformed S-expression text."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class Symbol(str):
    __slots__ = ()

    def __new__(cls, name: str):
        name = name.upper()
        if not name or name == "NIL" or any(c.isspace() or c in _DELIMS for c in name):
            raise ValueError(f"invalid symbol name {name!r}")
        return super().__new__(cls, name)

    def __repr__(self) -> str:
        return f"Symbol({str(self)!r})"


SExpr = Union[Symbol, int, tuple]

T = Symbol("T")
QUOTE = Symbol("QUOTE")


def sym(name: str) -> Symbol:
    return Symbol(name)


def is_symbol(x) -> bool:
    return isinstance(x, Symbol)


def is_int(x) -> bool:
    return type(x) is int


def is_list(x) -> bool:
    return isinstance(x, tuple)


def check_int(value: int) -> int:
    if not INT_MIN <= value <= INT_MAX:
        raise OverflowError(f"integer {value} outside signed 64-bit range")
    return value


# -- reader -----------------------------------------------------------------

def _tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()'":
            yield c, i
            i += 1
        else:
            start = i
            while i < n and not text[i].isspace() and text[i] not in _DELIMS:
                i += 1
            yield text[start:i], start


def _atom(tok: str, offset: int) -> SExpr:
    body = tok[1:] if tok[0] in "+-" else tok
    if body.isdigit() and body.isascii():
        try:
            return check_int(int(tok))
        except OverflowError as exc:
            raise ParseError(str(exc), offset) from None
    if tok.upper() == "NIL":
        return NIL
    return Symbol(tok)


def parse_many(text: str | bytes) -> list:
    """Parse every top-level S-expression in *text*."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    out: list = []
    stack: list[list] = []
    pending_quotes: list[int] = []   # quotes waiting on each open list
    quotes = 0

    def emit(value):
        nonlocal quotes
        while quotes:
            value = (QUOTE, value)
            quotes -= 1
        if stack:
            stack[-1].append(value)
        else:
            out.append(value)

    opens: list[int] = []
    for tok, offset in _tokenize(text):
        if tok == "(":
            stack.append([])
            opens.append(offset)
            pending_quotes.append(quotes)
            quotes = 0
        elif tok == ")":
            if not stack:
                raise ParseError("unbalanced ')'", offset)
            if quotes:
                raise ParseError("quote with nothing to quote", offset)
            items = tuple(stack.pop())
            opens.pop()
            quotes = pending_quotes.pop()
            emit(items)
        elif tok == "'":
            quotes += 1
        else:
            emit(_atom(tok, offset))
    if stack:
        raise ParseError("unbalanced '(': list never closed", opens[-1])
    if quotes:
        raise ParseError("quote at end of input", len(text))
    return out


def parse(text: str | bytes) -> SExpr:
    """Parse exactly one S-expression."""
    values = parse_many(text)
    if not values:
        raise ParseError("empty input")
    if len(values) > 1:
        raise ParseError("trailing data after first expression")
    return values[0]


# -- printers -----------------------------------------------------------------

def to_text(x: SExpr) -> str:
    """Canonical one-line text of *x* without the trailing newline."""
    if isinstance(x, tuple):
        if not x:
            return "NIL"
        return "(" + " ".join(to_text(item) for item in x) + ")"
    if isinstance(x, Symbol):
        return str(x)
    if type(x) is int:
        return str(x)
    raise TypeError(f"not an S-expression: {x!r}")


def print_canonical(x: SExpr) -> bytes:
    return (to_text(x) + "\n").encode("ascii")


def pretty(x: SExpr, width: int = 78, indent: int = 0) -> str:
    """Indented rendering for human diffs. Parses back to *x*; never hashed."""
    flat = to_text(x)
    if not isinstance(x, tuple) or not x or indent + len(flat) <= width:
        return flat
    pad = " " * (indent + 1)
    if not any(isinstance(item, tuple) and item for item in x):
        # a list of atoms: fill lines instead of one atom per line
        lines, line = [], "("
        for item in x:
            word = to_text(item)
            if len(line) > 1 and indent + len(line) + 1 + len(word) > width:
                lines.append(line)
                line = pad + word
            else:
                line += word if line.strip() in ("(", "") else " " + word
        return "\n".join(lines + [line]) + ")"
    rest = x[1:]
    head = pretty(x[0], width, indent + 1)
    # keep a short atom operand on the head line, e.g. (DEFCODE NAME
    if not isinstance(x[0], tuple) and rest and not isinstance(rest[0], tuple):
        head += " " + to_text(rest[0])
        rest = rest[1:]
    out = "(" + head
    for item in rest:
        out += "\n" + pad + pretty(item, width, indent + 1)
    return out + ")"


# -- equality and hashing -------------------------------------------------------

def sexpr_equal(a: SExpr, b: SExpr) -> bool:
    if isinstance(a, tuple):
        if not isinstance(b, tuple) or len(a) != len(b):
            return False
        return all(sexpr_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, Symbol):
        return isinstance(b, Symbol) and str(a) == str(b)
    return type(b) is int and a == b


def canonical_hash(x: SExpr) -> str:
    return hashlib.sha256(print_canonical(x)).hexdigest()


def count_nodes(x: SExpr) -> int:
    if isinstance(x, tuple):
        return 1 + sum(count_nodes(item) for item in x)
    return 1
