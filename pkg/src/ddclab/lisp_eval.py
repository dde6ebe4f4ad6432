"""Direct evaluator for the mini-Lisp the compilers are written in.

This is the trusted compiler platform used by DDC: it interprets compiler
source (for example ``COMPILE-PROGRAM``) without ever going through the stack
machine.  It deliberately carries its own implementation of the primitive
operators so that a defect in the VM cannot silently reappear here.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass
from typing import Sequence

from ddclab.sexpr import NIL, QUOTE, T, SExpr, Symbol, to_text

DEFAULT_FUEL = 10_000_000
DEFAULT_DEPTH = 20_000

_DEFUN = Symbol("DEFUN")
_IF = Symbol("IF")

# name -> arity; the closed operator set the compilers are allowed to use
PRIMITIVES = {
    "CAR": 1, "CDR": 1, "CADR": 1, "CADDR": 1, "CADAR": 1, "CADDAR": 1, "CADDDR": 1,
    "1-": 1, "1+": 1, "LEN": 1, "SYMBOLP": 1, "CONSP": 1, "ATOM": 1,
    "CONS": 2, "EQUAL": 2, "APPEND": 2, "MEMBER": 2, "ASSOC": 2,
    "+": 2, "-": 2, "*": 2, "LIST1": 1, "LIST2": 2,
}

_SPECIAL = {"QUOTE", "IF", "T", "NIL", "DEFUN"}


class EvalError(Exception):
    pass


class LoadError(EvalError):
    pass


class EvalFuelExhausted(EvalError):
    pass


@dataclass(frozen=True)
class Defun:
    name: Symbol
    params: tuple
    body: SExpr


@dataclass(frozen=True)
class DefunEnv:
    functions: dict     # Symbol -> Defun, in source order

    def __contains__(self, name):
        return name in self.functions


# -- loading --------------------------------------------------------------------

def _check_body(form, params, names, fname):
    if isinstance(form, Symbol):
        if form not in params and form != T:
            raise LoadError(f"{fname}: unbound variable {form}")
        return
    if not isinstance(form, tuple) or not form:
        return  # integer literal or NIL
    head = form[0]
    if head == QUOTE:
        if len(form) != 2:
            raise LoadError(f"{fname}: QUOTE takes one argument")
        return
    if head == _IF:
        if len(form) != 4:
            raise LoadError(f"{fname}: IF needs test, then and else forms")
    elif not isinstance(head, Symbol):
        raise LoadError(f"{fname}: non-symbol in call position: {to_text(head)}")
    elif head not in PRIMITIVES and head not in names:
        raise LoadError(f"{fname}: call to undefined function {head}")
    for arg in form[1:]:
        _check_body(arg, params, names, fname)


def load_defuns(defs: SExpr) -> DefunEnv:
    if not isinstance(defs, tuple):
        raise LoadError("definitions must be a list of DEFUN forms")
    functions: dict = {}
    for d in defs:
        if (not isinstance(d, tuple) or len(d) != 4 or d[0] != _DEFUN
                or not isinstance(d[1], Symbol) or not isinstance(d[2], tuple)):
            raise LoadError(f"malformed DEFUN: {to_text(d)[:60]}")
        name, params, body = d[1], d[2], d[3]
        if name in PRIMITIVES or name in _SPECIAL:
            raise LoadError(f"DEFUN {name} would shadow a primitive")
        if name in functions:
            raise LoadError(f"duplicate definition of {name}")
        if (not all(isinstance(p, Symbol) and p not in _SPECIAL for p in params)
                or len(set(params)) != len(params)):
            raise LoadError(f"{name}: bad parameter list {to_text(params)}")
        functions[name] = Defun(name, params, body)
    for fn in functions.values():
        _check_body(fn.body, fn.params, functions, fn.name)
    return DefunEnv(functions)


# -- primitives -----------------------------------------------------------------

def _fail(name, args):
    shown = " ".join(to_text(a) for a in args)
    raise EvalError(f"({name} {shown}): argument outside the operator's domain")


def _truth(flag):
    return T if flag else NIL


def _walk(path: str, x, name):
    # CADDR = car(cdr(cdr(x))): apply letters right to left
    for letter in reversed(path):
        if not isinstance(x, tuple):
            _fail(name, [x])
        if letter == "A":
            x = x[0] if x else NIL
        else:
            x = x[1:]
    return x


def _int64(v, name, args):
    if v < -(1 << 63) or v >= (1 << 63):
        raise EvalError(f"({name} ...): result {v} overflows 64 bits")
    return v


def primitive(name: str, args: list):
    match name, args:
        case ("CAR" | "CDR" | "CADR" | "CADDR" | "CADAR" | "CADDAR" | "CADDDR"), [x]:
            return _walk(name[1:-1], x, name)
        case ("1-" | "1+"), [int() as n]:
            return _int64(n - 1 if name == "1-" else n + 1, name, args)
        case ("+" | "-" | "*"), [int() as a, int() as b]:
            r = a + b if name == "+" else a - b if name == "-" else a * b
            return _int64(r, name, args)
        case "LEN", [tuple() as lst]:
            return len(lst)
        case "SYMBOLP", [x]:
            return _truth(isinstance(x, Symbol) or x == ())
        case "CONSP", [x]:
            return _truth(isinstance(x, tuple) and x != ())
        case "ATOM", [x]:
            return _truth(not isinstance(x, tuple) or x == ())
        case "CONS", [x, tuple() as lst]:
            return (x, *lst)
        case "EQUAL", [a, b]:
            return _truth(_same(a, b))
        case "APPEND", [tuple() as a, tuple() as b]:
            return a + b
        case "MEMBER", [x, tuple() as lst]:
            tail = lst
            while tail:
                if _same(tail[0], x):
                    return tail
                tail = tail[1:]
            return NIL
        case "ASSOC", [key, tuple() as alist]:
            for pair in alist:
                if pair == ():
                    continue
                if not isinstance(pair, tuple):
                    _fail(name, args)
                if _same(pair[0], key):
                    return pair
            return NIL
        case "LIST1", [x]:
            return (x,)
        case "LIST2", [x, y]:
            return (x, y)
    if name in PRIMITIVES and len(args) != PRIMITIVES[name]:
        raise EvalError(f"{name} takes {PRIMITIVES[name]} argument(s), got {len(args)}")
    _fail(name, args)


def _same(a, b) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        tx, ty = type(x), type(y)
        if tx is not ty:
            return False
        if tx is tuple:
            if len(x) != len(y):
                return False
            stack.extend(zip(x, y))
        elif x != y:
            return False
    return True


# -- evaluation -----------------------------------------------------------------

class _Evaluator:
    def __init__(self, env: DefunEnv, fuel: int, max_depth: int):
        self.functions = env.functions
        self.fuel = fuel
        self.steps = 0
        self.depth = 0
        self.max_depth = max_depth

    def _tick(self):
        if self.steps >= self.fuel:
            raise EvalFuelExhausted(f"fuel exhausted after {self.steps} steps")
        self.steps += 1

    def call(self, name, args):
        fn = self.functions.get(name)
        if fn is None:
            raise EvalError(f"undefined function {name}")
        if len(args) != len(fn.params):
            raise EvalError(f"{name} takes {len(fn.params)} argument(s), got {len(args)}")
        self._tick()
        if self.depth >= self.max_depth:
            raise EvalError(f"call depth limit {self.max_depth} exceeded in {name}")
        self.depth += 1
        try:
            return self.eval(fn.body, dict(zip(fn.params, args)))
        finally:
            self.depth -= 1

    def eval(self, form, bindings):
        if isinstance(form, Symbol):
            if form in bindings:
                return bindings[form]
            if form == T:
                return T
            raise EvalError(f"unbound variable {form}")
        if not isinstance(form, tuple) or not form:
            return form
        head = form[0]
        if head == QUOTE:
            return form[1]
        if head == _IF:
            if self.eval(form[1], bindings) != NIL:
                return self.eval(form[2], bindings)
            return self.eval(form[3], bindings)
        args = [self.eval(arg, bindings) for arg in form[1:]]
        if head in PRIMITIVES:
            self._tick()
            return primitive(head, args)
        return self.call(head, args)


def _with_deep_stack(fn):
    """Run *fn* on a thread with a large C stack and recursion limit."""
    result: dict = {}

    def target():
        try:
            result["value"] = fn()
        except BaseException as exc:  # re-raised in the caller's thread
            result["error"] = exc

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    try:
        sys.setrecursionlimit(max(old_limit, 200_000))
        threading.stack_size(512 * 1024 * 1024)
        worker = threading.Thread(target=target, name="lisp-eval")
        worker.start()
    finally:
        threading.stack_size(old_size)
    worker.join()
    sys.setrecursionlimit(old_limit)
    if "error" in result:
        raise result["error"]
    return result["value"]


def evaluate(env: DefunEnv, fn: Symbol, args: Sequence[SExpr], fuel: int = DEFAULT_FUEL,
             max_depth: int = DEFAULT_DEPTH) -> tuple[SExpr, int]:
    """Call *fn* and return ``(value, steps)``."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    ev = _Evaluator(env, fuel, max_depth)
    value = _with_deep_stack(lambda: ev.call(Symbol(fn), list(args)))
    return value, ev.steps


def eval_call(env: DefunEnv, fn: Symbol, args: Sequence[SExpr], fuel: int = DEFAULT_FUEL) -> SExpr:
    return evaluate(env, fn, args, fuel)[0]
