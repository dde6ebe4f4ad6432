"""Terms, formulas and the prover9-style ASCII syntax.

Identifiers starting with an uppercase letter are variables; everything else
(constants, functions, predicates) starts lowercase.  Operator precedence from
tightest to loosest: ``-``, ``=``/``!=``, ``&``, ``|``, ``->``; ``all X``
extends as far to the right as possible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


class FolSyntaxError(ValueError):
    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        if pos is not None:
            message = f"{message} at position {pos}"
            if text is not None:
                message += f": ...{text[max(0, pos - 20):pos + 20]!r}"
        super().__init__(message)
        self.pos = pos


# -- terms ------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Fn:
    name: str
    args: tuple

    def __str__(self):
        return f"{self.name}({','.join(map(str, self.args))})"


Term = Union[Var, Const, Fn]


# -- formulas -----------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Pred:
    name: str
    args: tuple

    def __str__(self):
        return f"{self.name}({','.join(map(str, self.args))})" if self.args else self.name


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True, slots=True)
class Neq:
    left: Term
    right: Term

    def __str__(self):
        return f"{self.left} != {self.right}"


@dataclass(frozen=True, slots=True)
class Not:
    body: "Formula"

    def __str__(self):
        return f"-{_wrap(self.body)}"


@dataclass(frozen=True, slots=True)
class And:
    parts: tuple

    def __str__(self):
        return " & ".join(_wrap(p) for p in self.parts)


@dataclass(frozen=True, slots=True)
class Or:
    parts: tuple

    def __str__(self):
        return " | ".join(_wrap(p) for p in self.parts)


@dataclass(frozen=True, slots=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_wrap(self.left)} -> {_wrap(self.right)}"


@dataclass(frozen=True, slots=True)
class ForAll:
    var: Var
    body: "Formula"

    def __str__(self):
        return f"(all {self.var} {self.body})"


@dataclass(frozen=True, slots=True)
class Bottom:
    def __str__(self):
        return "$F"


Formula = Union[Pred, Eq, Neq, Not, And, Or, Implies, ForAll, Bottom]
ATOMIC = (Pred, Eq, Neq, Bottom)


def _wrap(f) -> str:
    return str(f) if isinstance(f, (*ATOMIC, Not, ForAll)) else f"({f})"


def is_var_name(name: str) -> bool:
    return name[:1].isupper()


# -- free variables and traversal -------------------------------------------------------

def term_vars(t, out=None) -> set:
    out = set() if out is None else out
    if isinstance(t, Var):
        out.add(t)
    elif isinstance(t, Fn):
        for a in t.args:
            term_vars(a, out)
    return out


def free_vars(f, bound=frozenset()) -> set:
    if isinstance(f, Pred):
        vs = set()
        for a in f.args:
            term_vars(a, vs)
        return vs - bound
    if isinstance(f, (Eq, Neq)):
        return (term_vars(f.left) | term_vars(f.right)) - bound
    if isinstance(f, Not):
        return free_vars(f.body, bound)
    if isinstance(f, (And, Or)):
        return set().union(*(free_vars(p, bound) for p in f.parts))
    if isinstance(f, Implies):
        return free_vars(f.left, bound) | free_vars(f.right, bound)
    if isinstance(f, ForAll):
        return free_vars(f.body, bound | {f.var})
    return set()


# -- parser ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<op>->|!=|[-&|=(),.])|(?P<id>\$?[A-Za-z0-9_]+)|(?P<bad>\S))")


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            break
        if m.group("bad"):
            raise FolSyntaxError(f"unexpected character {m.group('bad')!r}", m.start("bad"), text)
        kind = "op" if m.group("op") else "id"
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, value=None):
        if self.i >= len(self.tokens):
            return None
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            return None
        return tok

    def pos(self):
        return self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)

    def error(self, message):
        raise FolSyntaxError(message, self.pos(), self.text)

    def take(self, value=None):
        tok = self.peek(value)
        if tok is None:
            self.error(f"expected {value!r}" if value else "unexpected end of input")
        self.i += 1
        return tok

    def formula(self):
        return self.implication()

    def implication(self):
        left = self.disjunction()
        if self.peek("->"):
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        parts = [self.conjunction()]
        while self.peek("|"):
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self):
        parts = [self.unary()]
        while self.peek("&"):
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self):
        tok = self.peek()
        if tok is None:
            self.error("expected a formula")
        if tok[1] == "-":
            self.take()
            return Not(self.unary())
        if tok[1] == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if tok[1] == "all":
            self.take()
            kind, name, pos = self.take()
            if kind != "id" or not is_var_name(name):
                raise FolSyntaxError(f"quantified variable must start uppercase, got {name!r}",
                                     pos, self.text)
            return ForAll(Var(name), self.formula())
        if tok[1] == "$F":
            self.take()
            return Bottom()
        return self.atom()

    def atom(self):
        start = self.pos()
        left = self.term()
        op = self.peek()
        if op and op[1] in ("=", "!="):
            self.take()
            right = self.term()
            return Eq(left, right) if op[1] == "=" else Neq(left, right)
        if isinstance(left, Var):
            raise FolSyntaxError(f"variable {left} used as a formula", start, self.text)
        return Pred(left.name, left.args if isinstance(left, Fn) else ())

    def term(self):
        kind, name, pos = self.take()
        if kind != "id" or name.startswith("$") or name == "all":
            raise FolSyntaxError(f"expected a term, got {name!r}", pos, self.text)
        if self.peek("("):
            if is_var_name(name):
                raise FolSyntaxError(f"function or predicate {name!r} must start lowercase",
                                     pos, self.text)
            self.take()
            args = [self.term()]
            while self.peek(","):
                self.take()
                args.append(self.term())
            self.take(")")
            return Fn(name, tuple(args))
        return Var(name) if is_var_name(name) else Const(name)


def parse_formula(text: str) -> Formula:
    """Parse one formula; a single trailing ``.`` is allowed."""
    p = _Parser(text)
    f = p.formula()
    if p.peek("."):
        p.take()
    if p.peek() is not None:
        p.error("trailing input after formula")
    return f


# parse_fol is the public name used by the CLI and tests
parse_fol = parse_formula


def split_statements(text: str) -> list:
    """Split text into ``.``-terminated statements, dropping ``%`` comments."""
    lines = [line.split("%", 1)[0] for line in text.splitlines()]
    body = "\n".join(lines)
    out, start, depth = [], 0, 0
    for i, c in enumerate(body):
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif c == "." and depth == 0:
            out.append(body[start:i].strip())
            start = i + 1
    if body[start:].strip():
        raise FolSyntaxError("statement without terminating '.'", start, body)
    return [s for s in out if s]
