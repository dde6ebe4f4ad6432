"""Generators shared by the test modules."""

import random

from hypothesis import strategies as st

from ddclab import machine
from ddclab.ddc import ProgramSource
from ddclab.sexpr import NIL, QUOTE, Symbol

# one "criterion N ...: PASS/FAIL" line per acceptance test, echoed by conftest
ACCEPTANCE_LINES: list = []

# -- random S-expressions ---------------------------------------------------------------

_symbol_names = st.one_of(
    st.from_regex(r"[A-Z][A-Z0-9*+\-]{0,6}", fullmatch=True).filter(lambda s: s != "NIL"),
    st.sampled_from(["+", "-", "*", "1+", "1-", "+A", "-X1"]))
symbols = _symbol_names.map(Symbol)
ints = st.integers(min_value=-(2**63), max_value=2**63 - 1)
atoms = st.one_of(symbols, ints, st.just(NIL))
sexprs = st.recursive(atoms, lambda inner: st.lists(inner, max_size=5).map(tuple), max_leaves=40)


# -- random well-typed programs -----------------------------------------------------------
#
# Every generated function takes (N L) with N an integer and L a list.  Expressions are
# typed so the programs never hit an operator domain error; calls go to earlier functions
# only, so every program terminates.

S = Symbol
N, L = S("N"), S("L")
WORDS = [S(w) for w in ("A", "B", "FOO", "BAR", "T")]


def _quoted_list(rng):
    items = []
    for _ in range(rng.randint(0, 3)):
        items.append(rng.choice(WORDS) if rng.random() < 0.6 else rng.randint(-5, 9))
    return (QUOTE, tuple(items))


def _int_expr(rng, depth, fns):
    if depth <= 0 or rng.random() < 0.3:
        return N if rng.random() < 0.5 else rng.randint(-5, 9)
    choice = rng.randrange(5)
    if choice == 0:
        return (S(rng.choice(["1+", "1-"])), _int_expr(rng, depth - 1, fns))
    if choice == 1:
        return (S(rng.choice(["+", "-", "*"])), _int_expr(rng, depth - 1, fns),
                _int_expr(rng, depth - 1, fns))
    if choice == 2:
        return (S("LEN"), _list_expr(rng, depth - 1, fns))
    if choice == 3:
        return (S("IF"), _any_expr(rng, depth - 1, fns), _int_expr(rng, depth - 1, fns),
                _int_expr(rng, depth - 1, fns))
    return N


def _list_expr(rng, depth, fns):
    if depth <= 0 or rng.random() < 0.3:
        return L if rng.random() < 0.5 else _quoted_list(rng)
    choice = rng.randrange(6)
    if choice == 0:
        return (S("CDR"), _list_expr(rng, depth - 1, fns))
    if choice == 1:
        return (S("CONS"), _any_expr(rng, depth - 1, fns), _list_expr(rng, depth - 1, fns))
    if choice == 2:
        return (S("APPEND"), _list_expr(rng, depth - 1, fns), _list_expr(rng, depth - 1, fns))
    if choice == 3:
        return (S("LIST1"), _any_expr(rng, depth - 1, fns))
    if choice == 4:
        return (S("LIST2"), _any_expr(rng, depth - 1, fns), _any_expr(rng, depth - 1, fns))
    return (S("IF"), _any_expr(rng, depth - 1, fns), _list_expr(rng, depth - 1, fns),
            _list_expr(rng, depth - 1, fns))


def _any_expr(rng, depth, fns):
    choice = rng.randrange(8)
    if choice <= 1:
        return _int_expr(rng, depth, fns)
    if choice <= 3:
        return _list_expr(rng, depth, fns)
    if depth <= 0:
        return (QUOTE, rng.choice(WORDS))
    if choice == 4:
        return (S(rng.choice(["CAR", "CADR"])), _list_expr(rng, depth - 1, fns))
    if choice == 5:
        return (S(rng.choice(["EQUAL", "MEMBER"])), _any_expr(rng, depth - 1, fns),
                _list_expr(rng, depth - 1, fns))
    if choice == 6 and fns:
        return (rng.choice(fns), _int_expr(rng, depth - 1, fns), _list_expr(rng, depth - 1, fns))
    return (S(rng.choice(["SYMBOLP", "CONSP", "ATOM"])), _any_expr(rng, depth - 1, fns))


def random_program(seed: int, n_fns: int = 3, depth: int = 4) -> ProgramSource:
    rng = random.Random(seed)
    fns, defs = [], []
    for i in range(n_fns):
        name = S(f"F{i}")
        defs.append((S("DEFUN"), name, (N, L), _any_expr(rng, depth, fns)))
        fns.append(name)
    return ProgramSource(tuple(defs), (N, L), (fns[-1], N, L))


def random_inputs(seed: int):
    rng = random.Random(seed)
    return [rng.randint(-3, 6), _quoted_list(rng)[1]]


# -- single-token mutations of an executable ---------------------------------------------

_OPS = sorted(machine.OPERATORS)


def _code_sites(code, path):
    for k, ins in enumerate(code):
        here = path + (k,)
        if isinstance(ins, machine.If):
            yield from _code_sites(ins.then_code, here + ("then",))
            yield from _code_sites(ins.else_code, here + ("else",))
        else:
            yield here, ins


def mutation_sites(exe: machine.MachineProgram) -> list:
    sites = []
    for name, code in exe.defcodes.items():
        sites.extend(((name,) + p, ins) for p, ins in _code_sites(code, ()))
    sites.extend((("<main>",) + p, ins) for p, ins in _code_sites(exe.main_code, ()))
    return sites


def _mutate_ins(ins, rng, callees):
    if isinstance(ins, machine.PushV):
        return machine.PushV(max(0, ins.index + rng.choice([-1, 1])) if ins.index else ins.index + 1)
    if isinstance(ins, machine.Pop):
        return machine.Pop(ins.count + 1 if ins.count == 0 or rng.random() < 0.5 else ins.count - 1)
    if isinstance(ins, machine.Opr):
        same_arity = [o for o in _OPS if machine.OPERATORS[o] == machine.OPERATORS[ins.op] and o != ins.op]
        return machine.Opr(Symbol(rng.choice(same_arity)))
    if isinstance(ins, machine.Call):
        others = [c for c in callees if c != ins.fn]
        return machine.Call(rng.choice(others))
    if isinstance(ins, machine.PushC):
        c = ins.constant
        if isinstance(c, int):
            return machine.PushC(c + 1)
        if c == NIL:
            return machine.PushC(Symbol("T"))
        if isinstance(c, Symbol):
            return machine.PushC(Symbol(c + "X"))
        return machine.PushC(c[1:] if c else (Symbol("X"),))
    raise TypeError(ins)


def _replace(code, path, new):
    k = path[0]
    code = list(code)
    if len(path) == 1:
        code[k] = new
    else:
        branch, rest = path[1], path[2:]
        old = code[k]
        if branch == "then":
            code[k] = machine.If(_replace(old.then_code, rest, new), old.else_code)
        else:
            code[k] = machine.If(old.then_code, _replace(old.else_code, rest, new))
    return tuple(code)


def mutate(exe: machine.MachineProgram, rng: random.Random):
    """One single-token mutant of *exe*, with a description of what changed."""
    sites = mutation_sites(exe)
    callees = list(exe.defcodes)
    (where, *path), ins = rng.choice(sites)
    new = _mutate_ins(ins, rng, callees)
    assert new != ins
    if where == "<main>":
        mutant = machine.MachineProgram(dict(exe.defcodes), _replace(exe.main_code, path, new))
    else:
        defcodes = dict(exe.defcodes)
        defcodes[where] = _replace(defcodes[where], path, new)
        mutant = machine.MachineProgram(defcodes, exe.main_code)
    return mutant, f"{where} {path}: {ins} -> {new}"


# -- proof-trace mutations ---------------------------------------------------------------

from ddclab.folcheck import checker as _checker  # noqa: E402
from ddclab.folcheck.clauses import Clause, as_clause  # noqa: E402
from ddclab.folcheck.syntax import (And, Bottom, Const, Eq, Fn, ForAll, Implies, Neq, Not, Or,  # noqa: E402
                                    Pred, Var, parse_formula)


def map_terms(f, on_var=lambda v: v, on_const=lambda c: c):
    """Rebuild formula or term *f* with variables and constants passed through the callbacks."""
    def term(t):
        if isinstance(t, Var):
            return on_var(t)
        if isinstance(t, Const):
            return on_const(t)
        return Fn(t.name, tuple(term(a) for a in t.args))

    def form(g):
        if isinstance(g, Pred):
            return Pred(g.name, tuple(term(a) for a in g.args))
        if isinstance(g, Eq):
            return Eq(term(g.left), term(g.right))
        if isinstance(g, Neq):
            return Neq(term(g.left), term(g.right))
        if isinstance(g, Not):
            return Not(form(g.body))
        if isinstance(g, And):
            return And(tuple(form(p) for p in g.parts))
        if isinstance(g, Or):
            return Or(tuple(form(p) for p in g.parts))
        if isinstance(g, Implies):
            return Implies(form(g.left), form(g.right))
        if isinstance(g, ForAll):
            return ForAll(on_var(g.var), form(g.body))
        if isinstance(g, Bottom):
            return g
        return term(g)
    return form(f)


def constants_in(f) -> list:
    found = []

    def seen(c):
        if c.name not in found:
            found.append(c.name)
        return c
    map_terms(f, on_const=seen)
    return found


def _with(step, formula=None, rationale=None):
    return _checker.ProofStep(step.id, formula if formula is not None else step.formula,
                              rationale or step.rationale)


def _from_clause(c: Clause):
    return parse_formula(str(c))


def literal_flips(trace) -> list:
    out = []
    for k, step in enumerate(trace):
        c = as_clause(step.formula)
        if step.rationale.rule not in _checker.DERIVED or c is None or c.empty:
            continue
        for i in range(len(c.literals)):
            lits = list(c.literals)
            lits[i] = lits[i].negate()
            out.append((k, f"flip literal {i} of step {step.id}", _with(step, _from_clause(Clause(tuple(lits))))))
    return out


def premise_swaps(trace) -> list:
    out = []
    ids = [s.id for s in trace]
    for k, step in enumerate(trace):
        r = step.rationale
        for j, pid in enumerate(r.premises):
            earlier = [i for i in ids[:k] if i not in r.premises]
            for other in earlier[-2:]:
                prem = list(r.premises)
                prem[j] = other
                out.append((k, f"step {step.id} premise {pid} -> {other}",
                            _with(step, rationale=_checker.Rationale(r.rule, tuple(prem), r.label))))
    return out


def constant_renames(trace, constants) -> list:
    out = []
    for k, step in enumerate(trace):
        for name in constants_in(step.formula):
            other = next(c for c in constants if c != name)
            f = map_terms(step.formula, on_const=lambda c, n=name, o=other: Const(o) if c.name == n else c)
            out.append((k, f"step {step.id}: {name} -> {other}", _with(step, f)))
    return out


def apply_mutation(trace, k, step):
    return trace[:k] + [step] + trace[k + 1:]


def sample_mutations(trace, constants, per_kind: int, seed: int = 0) -> list:
    rng = random.Random(seed)
    picked = []
    for family in (literal_flips(trace), premise_swaps(trace), constant_renames(trace, constants)):
        picked.extend(rng.sample(family, min(per_kind, len(family))))
    return picked


def rename_vars(trace, mapping: dict):
    return [_with(s, map_terms(s.formula, on_var=lambda v: Var(mapping.get(v.name, v.name))))
            for s in trace]
