"""Finite interpretations: evaluation, the cooked text format, and model search.

The search is a plain backtracking finder over the cells of the function,
constant and predicate tables.  It grounds the clauses for one domain size,
branches only on cells some still-open ground clause needs, and breaks the
symmetry between unused domain elements with the least-number heuristic.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field

from ddclab.folcheck.clauses import Clause, Literal, atom_terms, clause_vars, clausify
from ddclab.folcheck.syntax import (And, Bottom, Const, Eq, Fn, ForAll, FolSyntaxError, Implies,
                                    Neq, Not, Or, Pred, Var, free_vars)


class SignatureError(ValueError):
    """A formula uses a symbol the interpretation does not define."""


@dataclass
class Interpretation:
    domain_size: int
    constants: dict = field(default_factory=dict)      # name -> element
    functions: dict = field(default_factory=dict)      # name -> {args tuple: element}
    predicates: dict = field(default_factory=dict)     # name -> {args tuple: bool}

    def validate(self) -> None:
        n = self.domain_size
        if n < 1:
            raise ValueError("domain size must be at least 1")
        for name, v in self.constants.items():
            if not 0 <= v < n:
                raise ValueError(f"{name} = {v} is outside the domain")
        for kind, tables in (("function", self.functions), ("predicate", self.predicates)):
            for name, table in tables.items():
                arities = {len(k) for k in table}
                if len(arities) != 1:
                    raise ValueError(f"{kind} {name} has rows of different arity")
                (arity,) = arities
                expected = set(itertools.product(range(n), repeat=arity))
                if set(table) != expected:
                    missing = sorted(expected - set(table))
                    raise ValueError(f"{kind} {name} table is not total; missing {missing[:3]}")
                if kind == "function" and not all(0 <= v < n for v in table.values()):
                    raise ValueError(f"function {name} has a value outside the domain")


# -- signatures --------------------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    constants: frozenset
    functions: frozenset      # (name, arity)
    predicates: frozenset     # (name, arity)


def _collect_term(t, consts, fns):
    if isinstance(t, Const):
        consts.add(t.name)
    elif isinstance(t, Fn):
        fns.add((t.name, len(t.args)))
        for a in t.args:
            _collect_term(a, consts, fns)


def _collect(f, consts, fns, preds):
    if isinstance(f, Pred):
        preds.add((f.name, len(f.args)))
        for a in f.args:
            _collect_term(a, consts, fns)
    elif isinstance(f, (Eq, Neq)):
        _collect_term(f.left, consts, fns)
        _collect_term(f.right, consts, fns)
    elif isinstance(f, Not):
        _collect(f.body, consts, fns, preds)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            _collect(p, consts, fns, preds)
    elif isinstance(f, Implies):
        _collect(f.left, consts, fns, preds)
        _collect(f.right, consts, fns, preds)
    elif isinstance(f, ForAll):
        _collect(f.body, consts, fns, preds)
    elif isinstance(f, Clause):
        for lit in f.literals:
            _collect(lit.atom, consts, fns, preds)


def signature_of(items) -> Signature:
    consts: set = set()
    fns: set = set()
    preds: set = set()
    for item in items:
        _collect(item, consts, fns, preds)
    return Signature(frozenset(consts), frozenset(fns), frozenset(preds))


def check_signature(m: Interpretation, sig: Signature) -> None:
    missing = [c for c in sorted(sig.constants) if c not in m.constants]
    for kind, needed, tables in (("function", sig.functions, m.functions),
                                 ("predicate", sig.predicates, m.predicates)):
        for name, arity in sorted(needed):
            table = tables.get(name)
            if table is None:
                missing.append(f"{name}/{arity}")
            elif table and len(next(iter(table))) != arity:
                raise SignatureError(f"{kind} {name} has arity {len(next(iter(table)))}, used with {arity}")
    if missing:
        raise SignatureError(f"interpretation does not define: {', '.join(missing)}")


# -- evaluation --------------------------------------------------------------------------

def eval_term(t, m: Interpretation, env: dict) -> int:
    if isinstance(t, Var):
        return env[t]
    if isinstance(t, Const):
        try:
            return m.constants[t.name]
        except KeyError:
            raise SignatureError(f"constant {t.name} is not interpreted") from None
    args = tuple(eval_term(a, m, env) for a in t.args)
    try:
        return m.functions[t.name][args]
    except KeyError:
        raise SignatureError(f"function {t.name}{args} is not interpreted") from None


def _holds(f, m: Interpretation, env: dict) -> bool:
    if isinstance(f, Pred):
        args = tuple(eval_term(a, m, env) for a in f.args)
        try:
            return m.predicates[f.name][args]
        except KeyError:
            raise SignatureError(f"predicate {f.name}{args} is not interpreted") from None
    if isinstance(f, Eq):
        return eval_term(f.left, m, env) == eval_term(f.right, m, env)
    if isinstance(f, Neq):
        return eval_term(f.left, m, env) != eval_term(f.right, m, env)
    if isinstance(f, Not):
        return not _holds(f.body, m, env)
    if isinstance(f, And):
        return all(_holds(p, m, env) for p in f.parts)
    if isinstance(f, Or):
        return any(_holds(p, m, env) for p in f.parts)
    if isinstance(f, Implies):
        return not _holds(f.left, m, env) or _holds(f.right, m, env)
    if isinstance(f, ForAll):
        return all(_holds(f.body, m, {**env, f.var: d}) for d in range(m.domain_size))
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Clause):
        return any(_holds_literal(l, m, env) for l in f.literals)
    raise TypeError(f"not a formula: {f!r}")


def _holds_literal(lit: Literal, m, env) -> bool:
    return _holds(lit.atom, m, env) == lit.positive


def eval_model(f, m: Interpretation) -> bool:
    """Truth of a formula (or clause) with its free variables read universally."""
    variables = clause_vars(f) if isinstance(f, Clause) else sorted(free_vars(f), key=lambda v: v.name)
    for values in itertools.product(range(m.domain_size), repeat=len(variables)):
        if not _holds(f, m, dict(zip(variables, values))):
            return False
    return True


def verify_model(assumptions, m: Interpretation) -> bool:
    assumptions = list(assumptions)
    m.validate()
    check_signature(m, signature_of(assumptions))
    return all(eval_model(f, m) for f in assumptions)


# -- cooked text format ---------------------------------------------------------------------

def format_model(m: Interpretation) -> str:
    lines = [f"{name} = {v}." for name, v in sorted(m.constants.items())]
    for name, table in sorted(m.functions.items()):
        lines.append("")
        lines += [f"{name}({','.join(map(str, k))}) = {v}." for k, v in sorted(table.items())]
    for name, table in sorted(m.predicates.items()):
        lines.append("")
        for k, v in sorted(table.items()):
            head = "  " if v else "- "
            lines.append(f"{head}{name}({','.join(map(str, k))})." if k else f"{head}{name}.")
    return "\n".join(lines) + "\n"


_ROW = re.compile(r"(-\s*)?([a-z][A-Za-z0-9_]*)(?:\(([0-9,\s]*)\))?\s*(?:=\s*([0-9]+))?\s*\.\s*\Z")


def parse_model(text: str, domain_size: int | None = None) -> Interpretation:
    """Read the cooked format; the domain size defaults to one more than the largest element."""
    m = Interpretation(0)
    largest = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        row = _ROW.match(line)
        if not row:
            raise FolSyntaxError(f"line {lineno}: not a model row: {line!r}")
        negated, name, args, value = row.groups()
        key = tuple(int(a) for a in args.split(",")) if args is not None else ()
        largest = max([largest, *key])
        if value is not None:
            if negated:
                raise FolSyntaxError(f"line {lineno}: '-' only applies to predicate rows")
            largest = max(largest, int(value))
            if key:
                m.functions.setdefault(name, {})[key] = int(value)
            else:
                m.constants[name] = int(value)
        else:
            m.predicates.setdefault(name, {})[key] = not negated
    m.domain_size = domain_size if domain_size is not None else largest + 1
    m.validate()
    return m


# -- search ---------------------------------------------------------------------------------

def _ground_term(t, env):
    if isinstance(t, Var):
        return env[t]
    if isinstance(t, Const):
        return (t.name, ())
    return (t.name, tuple(_ground_term(a, env) for a in t.args))


def _ground(c: Clause, n: int):
    variables = clause_vars(c)
    for values in itertools.product(range(n), repeat=len(variables)):
        env = dict(zip(variables, values))
        lits = []
        for lit in c.literals:
            terms = tuple(_ground_term(t, env) for t in atom_terms(lit.atom))
            kind = "=" if isinstance(lit.atom, Eq) else lit.atom.name
            lits.append((lit.positive, kind, terms))
        yield tuple(lits)


class _Finder:
    """Backtracking with unit propagation and conflict-directed backjumping.

    Every assigned cell remembers the set of decisions it depends on; a
    failed branch reports the decisions its conflict depends on, so the
    search can jump straight past decisions that played no part in it.
    """

    def __init__(self, clauses, n: int, sig: Signature, rng: random.Random | None = None):
        self.n = n
        self.rng = rng
        self.sig = sig
        self.clauses = clauses
        self.cells: dict = {}       # ("f", name, args) / ("p", name, args) -> value
        self.reason: dict = {}      # cell -> frozenset of decision ids it depends on
        self.decisions: list = []   # ids of the decisions currently in force
        self.next_id = 0
        self.reads: list = []       # assigned cells looked at by the last evaluation
        self.pending = None         # innermost undecided cell met by the last evaluation
        self.pending_top = False    # whether that cell is the evaluated term itself
        self.undecided = 0          # undecided literals of the last open clause

    def _lookup(self, key):
        v = self.cells.get(key)
        if v is not None:
            self.reads.append(key)
        return v

    def _value(self, t, top=True):
        if type(t) is int:
            return t
        name, args = t
        vals = []
        for a in args:
            v = self._value(a, False)
            if v is None:
                return None
            vals.append(v)
        key = ("f", name, tuple(vals))
        v = self._lookup(key)
        if v is None:
            self.pending, self.pending_top = key, top
        return v

    def _literal(self, lit):
        """(truth or None, undecided cell, forcing assignment or None)."""
        positive, kind, terms = lit
        if kind != "=":
            vals = []
            for t in terms:
                v = self._value(t)
                if v is None:
                    return None, self.pending, None
                vals.append(v)
            key = ("p", kind, tuple(vals))
            truth = self._lookup(key)
            if truth is None:
                return None, key, (key, positive)
            return truth == positive, None, None
        left = self._value(terms[0])
        left_cell = (self.pending, self.pending_top)
        right = self._value(terms[1])
        right_cell = (self.pending, self.pending_top)
        if left is not None and right is not None:
            return (left == right) == positive, None, None
        if left is None and right is None:
            return None, left_cell[0], None
        known, (cell, at_top) = (left, right_cell) if right is None else (right, left_cell)
        forced = None
        if at_top:
            if positive:
                forced = (cell, known)
            elif self.n == 2:
                forced = (cell, 1 - known)
        return None, cell, forced

    def _status(self, clause):
        """(True|False|None, cell to branch on, forced assignment if the clause is unit)."""
        self.reads = []
        branch = forced = None
        undecided = 0
        for lit in clause:
            truth, cell, force = self._literal(lit)
            if truth:
                return True, None, None
            if truth is None:
                undecided += 1
                if branch is None:
                    branch, forced = cell, force
        if undecided == 0:
            return False, None, None
        self.undecided = undecided
        return None, branch, forced if undecided == 1 else None

    def _depends(self) -> frozenset:
        out: set = set()
        for cell in self.reads:
            out |= self.reason[cell]
        return frozenset(out)

    def _after(self, cell, value, top):
        """Largest element still breaking symmetry once *cell* holds *value*."""
        kind, _, args = cell
        if any(a > top for a in args):
            return self.n - 1
        if kind == "p" or value <= top:
            return top
        return value if value == top + 1 else self.n - 1

    def _choices(self, cell, top):
        kind, _, args = cell
        if kind == "p":
            values = [True, False]
        elif all(a <= top for a in args):
            # least-number heuristic: elements above top are still interchangeable
            values = range(min(self.n - 1, top + 1) + 1)
        else:
            values = range(self.n)
        values = list(values)
        if self.rng is not None:
            self.rng.shuffle(values)
        return [(v, self._after(cell, v, top)) for v in values]

    def search(self, open_clauses, top):
        """True when a model is found, else the set of decisions the failure depends on."""
        trail = []

        def undo():
            for cell in trail:
                del self.cells[cell]
                del self.reason[cell]

        while True:
            still_open = []
            branch = None
            width = 0
            changed = False
            for clause in open_clauses:
                status, cell, forced = self._status(clause)
                if status is True:
                    continue
                if status is False:
                    conflict = self._depends()
                    undo()
                    return conflict
                if forced is not None:
                    fcell, value = forced
                    self.cells[fcell] = value
                    self.reason[fcell] = self._depends()
                    trail.append(fcell)
                    top = self._after(fcell, value, top)
                    changed = True
                    continue
                still_open.append(clause)
                # branch on the most constrained open clause
                if branch is None or self.undecided < width:
                    branch, width = cell, self.undecided
            open_clauses = still_open
            if not changed:
                break
        if not open_clauses:
            return True

        decision = self.next_id
        self.next_id += 1
        choices = self._choices(branch, top)
        pruned = branch[0] == "f" and len(choices) < self.n
        failure: set = set()
        self.decisions.append(decision)
        try:
            for value, new_top in choices:
                self.cells[branch] = value
                self.reason[branch] = frozenset([decision])
                result = self.search(open_clauses, new_top)
                if result is True:
                    return True
                del self.cells[branch]
                del self.reason[branch]
                if decision not in result:
                    undo()
                    return result
                failure |= result - {decision}
        finally:
            self.decisions.pop()
        if pruned:
            # values skipped by symmetry were refuted relative to every earlier decision
            failure.update(self.decisions)
        undo()
        return frozenset(failure)

    def _fill(self, key, default):
        v = self.cells.get(key)
        if v is not None:
            return v
        if self.rng is None:
            return default
        return self.rng.random() < 0.5 if default is False else self.rng.randrange(self.n)

    def model(self) -> Interpretation:
        n = self.n
        m = Interpretation(n)
        for name in sorted(self.sig.constants):
            m.constants[name] = self._fill(("f", name, ()), 0)
        for name, arity in sorted(self.sig.functions):
            m.functions[name] = {k: self._fill(("f", name, k), 0)
                                 for k in itertools.product(range(n), repeat=arity)}
        for name, arity in sorted(self.sig.predicates):
            m.predicates[name] = {k: self._fill(("p", name, k), False)
                                  for k in itertools.product(range(n), repeat=arity)}
        return m


def find_model(clauses, n: int, rng: random.Random | None = None) -> Interpretation | None:
    """A model of the clause list with exactly *n* elements, or None.

    With *rng* the value order and the unconstrained cells are randomized, so
    repeated calls sample different models.
    """
    clauses = list(clauses)
    sig = signature_of(clauses)
    ground = [g for c in clauses for g in _ground(c, n)]
    finder = _Finder(clauses, n, sig, rng)
    if finder.search(ground, -1) is not True:
        return None
    return finder.model()


def _as_clauses(items) -> list:
    return [c for f in items for c in (clausify(f) if not isinstance(f, Clause) else [f])]


def search_model(assumptions, max_n: int = 2, min_n: int = 1) -> Interpretation | None:
    """Smallest model (domain size min_n..max_n) of the formulas, or None."""
    assumptions = list(assumptions)
    clauses = _as_clauses(assumptions)
    sig = signature_of(assumptions)
    for n in range(min_n, max_n + 1):
        m = find_model(clauses, n)
        if m is not None:
            # symbols that occur only in tautological clauses still need tables
            for name in sig.constants - set(m.constants):
                m.constants[name] = 0
            for name, arity in sig.functions:
                m.functions.setdefault(name, dict.fromkeys(itertools.product(range(n), repeat=arity), 0))
            for name, arity in sig.predicates:
                m.predicates.setdefault(name, dict.fromkeys(itertools.product(range(n), repeat=arity), False))
            if not verify_model(assumptions, m):
                raise AssertionError("model search produced an interpretation that fails evaluation")
            return m
    return None


def sample_models(premises, n: int, count: int, seed: int = 0) -> list:
    """Up to *count* randomly drawn models of the premises with *n* elements."""
    clauses = _as_clauses(premises)
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        m = find_model(clauses, n, rng)
        if m is None:
            break
        out.append(m)
    return out
