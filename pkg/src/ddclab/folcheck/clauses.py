"""Clauses, unification, clausification and variant (renaming) checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ddclab.folcheck.syntax import (And, Bottom, Const, Eq, Fn, ForAll, Implies, Neq, Not, Or,
                                    Pred, Var, free_vars)


class UnsupportedFormula(ValueError):
    """The formula lies outside the universally quantified clausal fragment."""


@dataclass(frozen=True, slots=True)
class Literal:
    positive: bool
    atom: object        # Pred or Eq

    def negate(self) -> "Literal":
        return Literal(not self.positive, self.atom)

    def __str__(self):
        if isinstance(self.atom, Eq):
            op = "=" if self.positive else "!="
            return f"{self.atom.left} {op} {self.atom.right}"
        return str(self.atom) if self.positive else f"-{self.atom}"


@dataclass(frozen=True, slots=True)
class Clause:
    literals: tuple

    @staticmethod
    def of(literals) -> "Clause":
        seen = []
        for lit in literals:
            if lit not in seen:
                seen.append(lit)
        return Clause(tuple(seen))

    @property
    def empty(self) -> bool:
        return not self.literals

    def __str__(self):
        return " | ".join(map(str, self.literals)) if self.literals else "$F"

    def __len__(self):
        return len(self.literals)


EMPTY = Clause(())


def literal_of(f) -> Literal | None:
    if isinstance(f, (Pred, Eq)):
        return Literal(True, f)
    if isinstance(f, Neq):
        return Literal(False, Eq(f.left, f.right))
    if isinstance(f, Not):
        inner = literal_of(f.body)
        return inner.negate() if inner else None
    return None


def as_clause(f) -> Clause | None:
    """Read a formula written as a disjunction of literals; None if it is not one."""
    if isinstance(f, Bottom):
        return EMPTY
    parts = f.parts if isinstance(f, Or) else (f,)
    lits = []
    for p in parts:
        if isinstance(p, Bottom):
            continue
        lit = literal_of(p)
        if lit is None:
            return None
        lits.append(lit)
    return Clause.of(lits)


# -- substitutions ----------------------------------------------------------------------

def walk(t, s: dict):
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def substitute(t, s: dict):
    t = walk(t, s)
    if isinstance(t, Fn):
        return Fn(t.name, tuple(substitute(a, s) for a in t.args))
    return t


def subst_atom(a, s: dict):
    if isinstance(a, Eq):
        return Eq(substitute(a.left, s), substitute(a.right, s))
    return Pred(a.name, tuple(substitute(x, s) for x in a.args))


def subst_clause(c: Clause, s: dict) -> Clause:
    return Clause.of(Literal(l.positive, subst_atom(l.atom, s)) for l in c.literals)


def _occurs(v, t, s) -> bool:
    t = walk(t, s)
    if t == v:
        return True
    return isinstance(t, Fn) and any(_occurs(v, a, s) for a in t.args)


def _unify_terms(a, b, s: dict) -> dict | None:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x, s), walk(y, s)
        if x == y:
            continue
        if isinstance(x, Var):
            if _occurs(x, y, s):
                return None
            s = {**s, x: y}
        elif isinstance(y, Var):
            if _occurs(y, x, s):
                return None
            s = {**s, y: x}
        elif isinstance(x, Fn) and isinstance(y, Fn):
            if x.name != y.name or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        else:
            return None
    return s


def unify(a, b, s: dict | None = None) -> dict | None:
    """Most general unifier of two terms or two atoms, or None.

    The result is a triangular substitution; use ``resolve_subst`` for a
    fully applied one.
    """
    s = {} if s is None else s
    if isinstance(a, (Pred, Eq)) or isinstance(b, (Pred, Eq)):
        if type(a) is not type(b):
            return None
        if isinstance(a, Eq):
            return _unify_terms(Fn("=", (a.left, a.right)), Fn("=", (b.left, b.right)), s)
        if a.name != b.name or len(a.args) != len(b.args):
            return None
        return _unify_terms(Fn(a.name, a.args), Fn(b.name, b.args), s)
    return _unify_terms(a, b, s)


def resolve_subst(s: dict) -> dict:
    return {v: substitute(v, s) for v in s}


# -- variables and renaming -----------------------------------------------------------------

def atom_terms(a):
    return (a.left, a.right) if isinstance(a, Eq) else a.args


def clause_vars(c: Clause) -> list:
    out = []

    def visit(t):
        if isinstance(t, Var):
            if t not in out:
                out.append(t)
        elif isinstance(t, Fn):
            for x in t.args:
                visit(x)

    for lit in c.literals:
        for t in atom_terms(lit.atom):
            visit(t)
    return out


def rename_apart(c: Clause, tag: str) -> Clause:
    return subst_clause(c, {v: Var(f"{v.name}_{tag}") for v in clause_vars(c)})


# -- variant checks -------------------------------------------------------------------------

def _match_term(a, b, fwd: dict, back: dict) -> bool:
    if isinstance(a, Var) or isinstance(b, Var):
        if not (isinstance(a, Var) and isinstance(b, Var)):
            return False
        if fwd.get(a, b) != b or back.get(b, a) != a:
            return False
        fwd[a] = b
        back[b] = a
        return True
    if isinstance(a, Const):
        return a == b
    return (isinstance(b, Fn) and a.name == b.name and len(a.args) == len(b.args)
            and all(_match_term(x, y, fwd, back) for x, y in zip(a.args, b.args)))


def _literal_variants(a: Literal, b: Literal, fwd, back, flip_eq: bool):
    """Yield extended variable bijections under which literal a renames to b."""
    if a.positive != b.positive or type(a.atom) is not type(b.atom):
        return
    if isinstance(a.atom, Pred) and a.atom.name != b.atom.name:
        return
    lhs = atom_terms(a.atom)
    options = [atom_terms(b.atom)]
    if flip_eq and isinstance(b.atom, Eq):
        options.append((b.atom.right, b.atom.left))
    for rhs in options:
        if len(lhs) != len(rhs):
            continue
        f2, b2 = dict(fwd), dict(back)
        if all(_match_term(x, y, f2, b2) for x, y in zip(lhs, rhs)):
            yield f2, b2


def clause_variant(a: Clause, b: Clause, flip_eq: bool = False) -> bool:
    """True iff clause b is a renaming of clause a (as literal sets).

    With ``flip_eq`` each equality literal may also match with its sides swapped.
    """
    if len(a.literals) != len(b.literals):
        return False

    def search(i, remaining, fwd, back):
        if i == len(a.literals):
            return True
        for j in remaining:
            for f2, b2 in _literal_variants(a.literals[i], b.literals[j], fwd, back, flip_eq):
                if search(i + 1, remaining - {j}, f2, b2):
                    return True
        return False

    return search(0, frozenset(range(len(b.literals))), {}, {})


def formula_variant(f, g) -> bool:
    """Structural equality of two formulas up to a consistent renaming of variables."""
    fwd: dict = {}
    back: dict = {}

    def same(x, y):
        if type(x) is not type(y):
            return False
        if isinstance(x, Pred):
            return (x.name == y.name and len(x.args) == len(y.args)
                    and all(_match_term(a, b, fwd, back) for a, b in zip(x.args, y.args)))
        if isinstance(x, (Eq, Neq)):
            return _match_term(x.left, y.left, fwd, back) and _match_term(x.right, y.right, fwd, back)
        if isinstance(x, Not):
            return same(x.body, y.body)
        if isinstance(x, (And, Or)):
            return len(x.parts) == len(y.parts) and all(map(same, x.parts, y.parts))
        if isinstance(x, Implies):
            return same(x.left, y.left) and same(x.right, y.right)
        if isinstance(x, ForAll):
            return _match_term(x.var, y.var, fwd, back) and same(x.body, y.body)
        return True  # Bottom

    return same(f, g)


# -- clausification -------------------------------------------------------------------------

def _fresh(base: str, used: set) -> Var:
    for k in itertools.count(1):
        name = base if k == 1 else f"{base}{k}"
        if name not in used:
            used.add(name)
            return Var(name)
    raise AssertionError("unreachable")


def _rename_term(t, env):
    if isinstance(t, Var):
        return env.get(t, t)
    if isinstance(t, Fn):
        return Fn(t.name, tuple(_rename_term(a, env) for a in t.args))
    return t


def _nnf(f, positive: bool, env: dict, used: set):
    """Negation normal form with universal quantifiers dropped and bound variables kept apart.

    Returns a nested structure of ('and', parts), ('or', parts) and Literal.
    """
    if isinstance(f, Bottom):
        return ("or", []) if positive else ("and", [])
    if isinstance(f, (Pred, Eq, Neq)):
        if isinstance(f, Pred):
            atom = Pred(f.name, tuple(_rename_term(a, env) for a in f.args))
            lit = Literal(True, atom)
        else:
            lit = Literal(isinstance(f, Eq), Eq(_rename_term(f.left, env), _rename_term(f.right, env)))
        return lit if positive else lit.negate()
    if isinstance(f, Not):
        return _nnf(f.body, not positive, env, used)
    if isinstance(f, Implies):
        return _nnf(Or((Not(f.left), f.right)), positive, env, used)
    if isinstance(f, (And, Or)):
        conj = isinstance(f, And) == positive
        return ("and" if conj else "or", [_nnf(p, positive, env, used) for p in f.parts])
    if isinstance(f, ForAll):
        if not positive:
            raise UnsupportedFormula("negated universal (an existential) needs Skolemization")
        return _nnf(f.body, positive, {**env, f.var: _fresh(f.var.name, used)}, used)
    raise TypeError(f"not a formula: {f!r}")


def _cnf(node) -> list:
    """List of literal lists."""
    if isinstance(node, Literal):
        return [[node]]
    kind, parts = node
    if kind == "and":
        return [c for p in parts for c in _cnf(p)]
    result = [[]]
    for p in parts:
        result = [left + right for left in result for right in _cnf(p)]
    return result


def _tautology(lits) -> bool:
    return any(l.negate() in lits for l in lits)


def clausify(f) -> list:
    """Clause list logically equivalent to the universal closure of *f*."""
    used = {v.name for v in free_vars(f)}
    clauses = []
    for lits in _cnf(_nnf(f, True, {}, used)):
        c = Clause.of(lits)
        if not _tautology(c.literals) and not any(c == d for d in clauses):
            clauses.append(c)
    return clauses


def deny(goal) -> list:
    """Clauses of the negated goal; the goal must be closed."""
    if free_vars(goal):
        raise UnsupportedFormula("a goal with free variables needs Skolemization to deny")
    return clausify(Not(goal))
