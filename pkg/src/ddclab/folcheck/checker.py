"""Proof-trace checker for prover9-style derivations.

A trace is a numbered list of steps, each carrying a formula (or clause) and
the rule that justifies it.  Every step is re-derived from its premises;
nothing is searched for beyond the finitely many ways a rule can apply to two
given clauses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ddclab.folcheck.clauses import (Clause, Literal, UnsupportedFormula, as_clause, atom_terms,
                                     clause_variant, clausify, deny, formula_variant,
                                     rename_apart, resolve_subst, subst_atom, subst_clause, unify)
from ddclab.folcheck.syntax import Eq, Fn, FolSyntaxError, Pred, Var, parse_formula, split_statements

ASSUMPTION, GOAL, CLAUSIFY, COPY_FLIP, DENY, RESOLVE, PARA = (
    "Assumption", "Goal", "Clausify", "Copy-flip", "Deny", "Resolve", "Para")
DERIVED = (CLAUSIFY, COPY_FLIP, DENY, RESOLVE, PARA)


@dataclass(frozen=True)
class Rationale:
    rule: str
    premises: tuple = ()
    label: str | None = None

    def __str__(self):
        if self.rule in (ASSUMPTION, GOAL):
            return f"{self.rule} {self.label}"
        if self.rule == COPY_FLIP:
            return f"Copy {self.premises[0]}, flip"
        return f"{self.rule} {' '.join(map(str, self.premises))}"


@dataclass(frozen=True)
class ProofStep:
    id: int
    formula: object
    rationale: Rationale

    @property
    def clause(self) -> Clause | None:
        return as_clause(self.formula)

    def __str__(self):
        return f"{self.id}. {self.formula}. {self.rationale}"


@dataclass(frozen=True)
class Problem:
    assumptions: dict           # label -> Formula, in file order
    goal_label: str
    goal: object


class StepRejected(Exception):
    def __init__(self, step_id, rule, premises, reason):
        where = f"step {step_id} ({rule}"
        where += f" {' '.join(map(str, premises))})" if premises else ")"
        super().__init__(f"{where}: {reason}")
        self.step_id = step_id
        self.rule = rule
        self.premises = tuple(premises)
        self.reason = reason


@dataclass(frozen=True)
class ProofResult:
    accepted: bool
    steps_checked: int
    rejection: StepRejected | None = None

    def __str__(self):
        if self.accepted:
            return f"accepted ({self.steps_checked} steps, ends in $F)"
        return f"rejected at {self.rejection}"


# -- file formats ---------------------------------------------------------------------------

_STATEMENT = re.compile(r"(assumption|goal)\s+([A-Za-z0-9_]+)\s*:\s*(.*)\Z", re.S)


def parse_problem(text: str) -> Problem:
    assumptions: dict = {}
    goal = None
    for stmt in split_statements(text):
        m = _STATEMENT.match(stmt)
        if not m:
            raise FolSyntaxError(f"expected 'assumption NAME: ...' or 'goal NAME: ...', got {stmt[:40]!r}")
        kind, label, body = m.groups()
        formula = parse_formula(body)
        if kind == "goal":
            if goal is not None:
                raise FolSyntaxError("a problem has exactly one goal")
            goal = (label, formula)
        else:
            if label in assumptions:
                raise FolSyntaxError(f"duplicate assumption label {label}")
            assumptions[label] = formula
    if goal is None:
        raise FolSyntaxError("problem has no goal")
    return Problem(assumptions, goal[0], goal[1])


_STEP = re.compile(r"\s*(\d+)\.\s+(.*)\.\s+(\S.*?)\s*\Z")
_RATIONALES = [
    (re.compile(r"Assumption\s+([A-Za-z0-9_]+)\Z"), ASSUMPTION),
    (re.compile(r"Goal\s+([A-Za-z0-9_]+)\Z"), GOAL),
    (re.compile(r"Clausify\s+(\d+)\Z"), CLAUSIFY),
    (re.compile(r"Copy\s+(\d+)\s*,\s*flip\Z"), COPY_FLIP),
    (re.compile(r"Deny\s+(\d+)\Z"), DENY),
    (re.compile(r"Resolve\s+(\d+)\s+(\d+)\Z"), RESOLVE),
    (re.compile(r"Para\s+(\d+)\s+(\d+)\Z"), PARA),
]


def parse_rationale(text: str) -> Rationale:
    for pattern, rule in _RATIONALES:
        m = pattern.match(text.strip())
        if m:
            if rule in (ASSUMPTION, GOAL):
                return Rationale(rule, (), m.group(1))
            return Rationale(rule, tuple(int(g) for g in m.groups()))
    raise FolSyntaxError(f"unknown rationale {text!r}")


def parse_proof(text: str) -> list[ProofStep]:
    steps = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("%", 1)[0]
        if not line.strip():
            continue
        m = _STEP.match(line)
        if not m:
            raise FolSyntaxError(f"line {lineno}: expected 'N. formula. rationale'")
        try:
            formula = parse_formula(m.group(2))
            rationale = parse_rationale(m.group(3))
        except FolSyntaxError as exc:
            raise FolSyntaxError(f"line {lineno}: {exc}") from None
        steps.append(ProofStep(int(m.group(1)), formula, rationale))
    return steps


# -- inference rules ---------------------------------------------------------------------------

def resolvents(c1: Clause, c2: Clause) -> list:
    a, b = rename_apart(c1, "1"), rename_apart(c2, "2")
    out = []
    for i, la in enumerate(a.literals):
        for j, lb in enumerate(b.literals):
            if la.positive == lb.positive:
                continue
            s = unify(la.atom, lb.atom)
            if s is None:
                continue
            s = resolve_subst(s)
            rest = a.literals[:i] + a.literals[i + 1:] + b.literals[:j] + b.literals[j + 1:]
            out.append(subst_clause(Clause(rest), s))
    return out


def _positions(t, path=()):
    """Non-variable subterms of t with their paths."""
    if isinstance(t, Var):
        return
    yield path, t
    if isinstance(t, Fn):
        for k, arg in enumerate(t.args):
            yield from _positions(arg, path + (k,))


def _replace(t, path, new):
    if not path:
        return new
    args = list(t.args)
    args[path[0]] = _replace(args[path[0]], path[1:], new)
    return Fn(t.name, tuple(args))


def _rebuild(atom, terms):
    if isinstance(atom, Eq):
        return Eq(*terms)
    return Pred(atom.name, tuple(terms))


def paramodulants(from_c: Clause, into_c: Clause) -> list:
    """All clauses obtained by rewriting a subterm of into_c with an equality of from_c."""
    a, b = rename_apart(from_c, "1"), rename_apart(into_c, "2")
    out = []
    for i, eq in enumerate(a.literals):
        if not (eq.positive and isinstance(eq.atom, Eq)):
            continue
        side_rest = a.literals[:i] + a.literals[i + 1:]
        for lhs, rhs in ((eq.atom.left, eq.atom.right), (eq.atom.right, eq.atom.left)):
            for j, target in enumerate(b.literals):
                terms = atom_terms(target.atom)
                for k, t in enumerate(terms):
                    for path, sub in _positions(t):
                        s = unify(lhs, sub)
                        if s is None:
                            continue
                        s = resolve_subst(s)
                        new_terms = list(terms)
                        new_terms[k] = _replace(t, path, rhs)
                        rewritten = Literal(target.positive, _rebuild(target.atom, new_terms))
                        lits = side_rest + b.literals[:j] + (rewritten,) + b.literals[j + 1:]
                        out.append(subst_clause(Clause(lits), s))
    return out


def flips(c: Clause) -> list:
    out = []
    for i, lit in enumerate(c.literals):
        if isinstance(lit.atom, Eq):
            flipped = Literal(lit.positive, Eq(lit.atom.right, lit.atom.left))
            out.append(Clause(c.literals[:i] + (flipped,) + c.literals[i + 1:]))
    return out


# -- checking -------------------------------------------------------------------------------

def _premise_clause(step: ProofStep, pid: int, earlier: dict) -> Clause:
    premise = earlier[pid]
    c = premise.clause
    if c is None:
        raise StepRejected(step.id, step.rationale.rule, step.rationale.premises,
                           f"premise {pid} is not a clause; clausify it first")
    return c


def check_step(step: ProofStep, earlier: dict, problem: Problem) -> None:
    """Raise StepRejected unless *step* follows from *earlier* (id -> ProofStep) by its rule."""
    r = step.rationale

    def reject(reason):
        raise StepRejected(step.id, r.rule, r.premises, reason)

    for pid in r.premises:
        if pid not in earlier:
            reject(f"premise {pid} is not an earlier step")

    if r.rule == ASSUMPTION:
        if r.label not in problem.assumptions:
            reject(f"no assumption labelled {r.label}")
        if not formula_variant(step.formula, problem.assumptions[r.label]):
            reject(f"formula differs from assumption {r.label}")
        return
    if r.rule == GOAL:
        if r.label != problem.goal_label:
            reject(f"the goal is {problem.goal_label}, not {r.label}")
        if not formula_variant(step.formula, problem.goal):
            reject("formula differs from the goal")
        return

    claimed = step.clause
    if claimed is None:
        reject("content is not a clause")

    if r.rule in (CLAUSIFY, DENY):
        premise = earlier[r.premises[0]]
        try:
            if r.rule == DENY:
                if premise.rationale.rule != GOAL:
                    reject(f"step {premise.id} is not the goal")
                candidates = deny(premise.formula)
            else:
                candidates = clausify(premise.formula)
        except UnsupportedFormula as exc:
            reject(f"unsupported rule instance: {exc}")
        if not any(clause_variant(c, claimed, flip_eq=True) for c in candidates):
            shown = "; ".join(map(str, candidates))
            reject(f"{claimed} is not among the clauses {shown}")
        return

    if r.rule == COPY_FLIP:
        source = _premise_clause(step, r.premises[0], earlier)
        options = flips(source)
        if not options:
            reject("premise has no equality to flip")
        if not any(clause_variant(c, claimed) for c in options):
            reject(f"{claimed} is not premise {r.premises[0]} with one equality flipped")
        return

    if r.rule in (RESOLVE, PARA):
        c1 = _premise_clause(step, r.premises[0], earlier)
        c2 = _premise_clause(step, r.premises[1], earlier)
        if r.rule == RESOLVE:
            candidates = resolvents(c1, c2)
            what = "resolvent"
        else:
            candidates = paramodulants(c1, c2) + paramodulants(c2, c1)
            what = "paramodulant"
        if not candidates:
            reject(f"no {what} exists between steps {r.premises[0]} and {r.premises[1]}")
        if not any(clause_variant(c, claimed) for c in candidates):
            reject(f"{claimed} does not match any of the {len(candidates)} {what}(s)")
        return

    reject(f"unsupported rule instance: {r.rule}")


def check_proof(problem: Problem, trace: list) -> ProofResult:
    earlier: dict = {}
    try:
        if not trace:
            raise StepRejected(0, "-", (), "empty trace")
        for step in trace:
            if step.id in earlier:
                raise StepRejected(step.id, step.rationale.rule, step.rationale.premises,
                                   "duplicate step id")
            check_step(step, earlier, problem)
            earlier[step.id] = step
        last = trace[-1]
        if last.clause is None or not last.clause.empty or last.rationale.rule not in DERIVED:
            raise StepRejected(last.id, last.rationale.rule, last.rationale.premises,
                               "the last step must derive the empty clause $F")
    except StepRejected as rej:
        return ProofResult(False, len(earlier), rej)
    return ProofResult(True, len(earlier))
