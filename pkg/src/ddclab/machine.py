"""Stack virtual machine for compiled Goerigk programs.

An executable is a list of ``(DEFCODE name (instr ...))`` entries followed by
one bare main instruction list.  The machine has a single value stack shared
by all calls; functions find their arguments by offset from the top and clear
them with a trailing ``(POP k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from ddclab.sexpr import NIL, T, SExpr, Symbol, check_int, sexpr_equal, to_text

DEFAULT_FUEL = 10_000_000
DEFAULT_CALL_DEPTH = 100_000


class MachineError(Exception):
    """Base class for VM load and run failures."""


class DecodeError(MachineError):
    pass


class FuelExhausted(MachineError):
    pass


class CallDepthExceeded(MachineError):
    pass


class StackError(MachineError):
    pass


class OperatorError(MachineError):
    """An operator was applied outside its domain."""


class IntegerOverflow(OperatorError):
    """Arithmetic left the signed 64-bit range."""


# -- instructions ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class PushC:
    constant: SExpr


@dataclass(frozen=True, slots=True)
class PushV:
    index: int


@dataclass(frozen=True, slots=True)
class Opr:
    op: Symbol


@dataclass(frozen=True, slots=True)
class Call:
    fn: Symbol


@dataclass(frozen=True, slots=True)
class If:
    then_code: tuple
    else_code: tuple


@dataclass(frozen=True, slots=True)
class Pop:
    count: int


Instruction = Union[PushC, PushV, Opr, Call, If, Pop]


@dataclass(frozen=True)
class MachineProgram:
    defcodes: dict          # Symbol -> tuple of Instruction, in definition order
    main_code: tuple

    def __eq__(self, other):
        if not isinstance(other, MachineProgram):
            return NotImplemented
        return sexpr_equal(encode_program(self), encode_program(other))

    def __hash__(self):
        return hash(encode_program(self))


@dataclass(frozen=True)
class RunResult:
    value: SExpr
    steps: int


# -- operators ------------------------------------------------------------------

def _need_list(op, x):
    if not isinstance(x, tuple):
        raise OperatorError(f"{op}: expected a list, got {to_text(x)}")
    return x


def _need_int(op, x):
    if type(x) is not int:
        raise OperatorError(f"{op}: expected an integer, got {to_text(x)}")
    return x


def _int64(op, value):
    try:
        return check_int(value)
    except OverflowError as exc:
        raise IntegerOverflow(f"{op}: {exc}") from None


def _car(x):
    return _need_list("CAR", x)[0] if x else NIL


def _cdr(x):
    return _need_list("CDR", x)[1:]


def _bool(flag: bool):
    return T if flag else NIL


def _member(x, lst):
    lst = _need_list("MEMBER", lst)
    for i, item in enumerate(lst):
        if sexpr_equal(item, x):
            return lst[i:]
    return NIL


def _assoc(key, alist):
    for entry in _need_list("ASSOC", alist):
        if entry == NIL:
            continue
        if sexpr_equal(_need_list("ASSOC", entry)[0], key):
            return entry
    return NIL


def _cons(x, lst):
    if not isinstance(lst, tuple):
        raise OperatorError(f"CONS: {to_text(lst)} is not a list (dotted pairs unsupported)")
    return (x,) + lst


def _arith(name, fn):
    def apply(a, b):
        return _int64(name, fn(_need_int(name, a), _need_int(name, b)))
    return apply


_UNARY = {
    "CAR": _car,
    "CDR": _cdr,
    "CADR": lambda x: _car(_cdr(x)),
    "CADDR": lambda x: _car(_cdr(_cdr(x))),
    "CADAR": lambda x: _car(_cdr(_car(x))),
    "CADDAR": lambda x: _car(_cdr(_cdr(_car(x)))),
    "CADDDR": lambda x: _car(_cdr(_cdr(_cdr(x)))),
    "1-": lambda x: _int64("1-", _need_int("1-", x) - 1),
    "1+": lambda x: _int64("1+", _need_int("1+", x) + 1),
    "LEN": lambda x: len(_need_list("LEN", x)),
    "SYMBOLP": lambda x: _bool(isinstance(x, Symbol) or x == NIL),
    "CONSP": lambda x: _bool(isinstance(x, tuple) and len(x) > 0),
    "ATOM": lambda x: _bool(not isinstance(x, tuple) or len(x) == 0),
    "LIST1": lambda x: (x,),
}

_BINARY = {
    "CONS": _cons,
    "EQUAL": lambda a, b: _bool(sexpr_equal(a, b)),
    "APPEND": lambda a, b: _need_list("APPEND", a) + _need_list("APPEND", b),
    "MEMBER": _member,
    "ASSOC": _assoc,
    "+": _arith("+", lambda a, b: a + b),
    "-": _arith("-", lambda a, b: a - b),
    "*": _arith("*", lambda a, b: a * b),
    "LIST2": lambda a, b: (a, b),
}

OPERATORS = {**{k: 1 for k in _UNARY}, **{k: 2 for k in _BINARY}}


def arity(op: str) -> int:
    try:
        return OPERATORS[op]
    except KeyError:
        raise OperatorError(f"unknown operator {op}") from None


def apply_operator(op: str, args: Sequence[SExpr]) -> SExpr:
    n = arity(op)
    if len(args) != n:
        raise OperatorError(f"{op} takes {n} argument(s), got {len(args)}")
    if n == 1:
        return _UNARY[op](args[0])
    return _BINARY[op](args[0], args[1])


# -- encoding -------------------------------------------------------------------

_PUSHC, _PUSHV, _OPR, _CALL, _IF, _POP, _DEFCODE = (
    Symbol(s) for s in ("PUSHC", "PUSHV", "OPR", "CALL", "IF", "POP", "DEFCODE")
)


def _decode_code(x, where) -> tuple:
    if not isinstance(x, tuple):
        raise DecodeError(f"{where}: instruction list expected, got {to_text(x)}")
    return tuple(_decode_instruction(item, where) for item in x)


def _nonneg_operand(ins, where):
    if len(ins) != 2 or type(ins[1]) is not int or ins[1] < 0:
        raise DecodeError(f"{where}: bad operand in {to_text(ins)}")
    return ins[1]


def _decode_instruction(ins, where) -> Instruction:
    if not isinstance(ins, tuple) or not ins or not isinstance(ins[0], Symbol):
        raise DecodeError(f"{where}: malformed instruction {to_text(ins)}")
    head = ins[0]
    if head == _PUSHC:
        if len(ins) != 2:
            raise DecodeError(f"{where}: PUSHC takes one constant")
        return PushC(ins[1])
    if head == _PUSHV:
        return PushV(_nonneg_operand(ins, where))
    if head == _POP:
        return Pop(_nonneg_operand(ins, where))
    if head == _OPR:
        if len(ins) != 2 or not isinstance(ins[1], Symbol) or ins[1] not in OPERATORS:
            raise DecodeError(f"{where}: unknown operator in {to_text(ins)}")
        return Opr(ins[1])
    if head == _CALL:
        if len(ins) != 2 or not isinstance(ins[1], Symbol):
            raise DecodeError(f"{where}: malformed CALL {to_text(ins)}")
        return Call(ins[1])
    if head == _IF:
        if len(ins) != 3:
            raise DecodeError(f"{where}: IF needs a then and an else list")
        return If(_decode_code(ins[1], where), _decode_code(ins[2], where))
    raise DecodeError(f"{where}: unknown instruction {head}")


def _calls(code):
    for ins in code:
        if isinstance(ins, Call):
            yield ins.fn
        elif isinstance(ins, If):
            yield from _calls(ins.then_code)
            yield from _calls(ins.else_code)


def decode_program(x: SExpr) -> MachineProgram:
    if not isinstance(x, tuple) or not x:
        raise DecodeError("an executable is a non-empty list")
    defcodes: dict = {}
    for entry in x[:-1]:
        if (not isinstance(entry, tuple) or len(entry) != 3 or entry[0] != _DEFCODE
                or not isinstance(entry[1], Symbol)):
            raise DecodeError(f"malformed DEFCODE entry {to_text(entry)[:60]}")
        name = entry[1]
        if name in defcodes:
            raise DecodeError(f"duplicate DEFCODE {name}")
        defcodes[name] = _decode_code(entry[2], str(name))
    main = _decode_code(x[-1], "main")
    for where, code in [*defcodes.items(), ("main", main)]:
        for target in _calls(code):
            if target not in defcodes:
                raise DecodeError(f"{where}: CALL to undefined function {target}")
    return MachineProgram(defcodes, main)


def _encode_code(code) -> tuple:
    out = []
    for ins in code:
        if isinstance(ins, PushC):
            out.append((_PUSHC, ins.constant))
        elif isinstance(ins, PushV):
            out.append((_PUSHV, ins.index))
        elif isinstance(ins, Opr):
            out.append((_OPR, ins.op))
        elif isinstance(ins, Call):
            out.append((_CALL, ins.fn))
        elif isinstance(ins, If):
            out.append((_IF, _encode_code(ins.then_code), _encode_code(ins.else_code)))
        elif isinstance(ins, Pop):
            out.append((_POP, ins.count))
        else:
            raise TypeError(f"not an instruction: {ins!r}")
    return tuple(out)


def encode_program(prog: MachineProgram) -> tuple:
    entries = [(_DEFCODE, name, _encode_code(code)) for name, code in prog.defcodes.items()]
    return tuple(entries) + (_encode_code(prog.main_code),)


# -- execution ------------------------------------------------------------------

def execute(prog: MachineProgram, inputs: Sequence[SExpr], fuel: int = DEFAULT_FUEL,
            max_depth: int = DEFAULT_CALL_DEPTH) -> RunResult:
    """Run *prog* and report the result together with the number of steps used."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    stack = list(inputs)
    defcodes = prog.defcodes
    # control stack of (code, next pc, is_call_frame)
    frames = [(prog.main_code, 0, False)]
    depth = 0
    steps = 0
    while frames:
        code, pc, is_call = frames.pop()
        if pc >= len(code):
            if is_call:
                depth -= 1
            continue
        ins = code[pc]
        frames.append((code, pc + 1, is_call))
        if steps >= fuel:
            raise FuelExhausted(f"fuel exhausted after {steps} steps")
        steps += 1
        kind = type(ins)
        if kind is PushV:
            if ins.index >= len(stack):
                raise StackError(f"PUSHV {ins.index} with stack depth {len(stack)}")
            stack.append(stack[-1 - ins.index])
        elif kind is PushC:
            stack.append(ins.constant)
        elif kind is Opr:
            n = OPERATORS[ins.op]
            if len(stack) < n:
                raise StackError(f"OPR {ins.op} needs {n} operand(s)")
            if n == 1:
                stack[-1] = _UNARY[ins.op](stack[-1])
            else:
                b = stack.pop()
                stack[-1] = _BINARY[ins.op](stack[-1], b)
        elif kind is Call:
            if depth >= max_depth:
                raise CallDepthExceeded(f"call depth limit {max_depth} exceeded in {ins.fn}")
            depth += 1
            frames.append((defcodes[ins.fn], 0, True))
        elif kind is If:
            if not stack:
                raise StackError("IF with empty stack")
            branch = ins.then_code if stack.pop() != NIL else ins.else_code
            frames.append((branch, 0, False))
        else:  # Pop
            if len(stack) < ins.count + 1:
                raise StackError(f"POP {ins.count} with stack depth {len(stack)}")
            top = stack.pop()
            if ins.count:
                del stack[-ins.count:]
            stack.append(top)
    if len(stack) != 1:
        raise StackError(f"program finished with {len(stack)} values on the stack")
    return RunResult(stack[0], steps)


def run_program(prog: MachineProgram, inputs: Sequence[SExpr], fuel: int = DEFAULT_FUEL) -> SExpr:
    return execute(prog, inputs, fuel).value
