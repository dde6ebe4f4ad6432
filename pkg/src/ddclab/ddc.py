"""Diverse double-compiling: stage1/stage2 pipeline, regeneration and bootstrap checks.

Two kinds of compiler handle exist.  A ``Trusted`` handle interprets compiler
source with the direct evaluator; a ``Machine`` handle runs a compiled
compiler executable on the stack VM.  Both map a ``ProgramSource`` to a
``MachineProgram``.
"""

from __future__ import annotations

import difflib
import logging
from dataclasses import dataclass, field
from typing import Union

from ddclab import lisp_eval, machine
from ddclab.lisp_eval import DefunEnv
from ddclab.machine import MachineProgram
from ddclab.sexpr import SExpr, Symbol, canonical_hash, pretty, sexpr_equal, to_text

log = logging.getLogger(__name__)

DEFAULT_FUEL = 10_000_000

_DEFUN = Symbol("DEFUN")
_COMPILE_PROGRAM = Symbol("COMPILE-PROGRAM")
COMPILER_VARS = (Symbol("DEFS"), Symbol("VARS"), Symbol("MAIN"))
COMPILER_MAIN = (_COMPILE_PROGRAM,) + COMPILER_VARS

# assumption labels of the formal model a failure may point at
STAGE_SUSPECTS = {
    "stage1": ["cT_compiles_sP", "definition_stage1"],
    "stage2": ["sP_portable_and_deterministic", "definition_stage2"],
}
MISMATCH_SUSPECTS = [
    "definition_cA", "cP_corresponds_to_sP", "cT_compiles_sP",
    "sP_portable_and_deterministic", "define_portable_and_deterministic",
]


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ProgramSource:
    defs: tuple
    vars: tuple
    main: SExpr

    def as_sexpr(self) -> tuple:
        return (self.defs, self.vars, self.main)

    @property
    def inputs(self) -> list:
        return [self.defs, self.vars, self.main]


def program_from_sexpr(x: SExpr) -> ProgramSource:
    """Read a program file value: either ``(DEFS VARS MAIN)`` or a bare DEFUN list.

    A bare definition list is taken to be a compiler and wrapped with the
    compiler-as-program convention.
    """
    if not isinstance(x, tuple):
        raise ValueError("a program is a list")
    if not x or (isinstance(x[0], tuple) and x[0] and x[0][0] == _DEFUN):
        return compiler_as_program(x)
    if len(x) != 3 or not isinstance(x[0], tuple) or not isinstance(x[1], tuple):
        raise ValueError("a program file is (DEFS VARS MAIN) or a list of DEFUN forms")
    return ProgramSource(x[0], x[1], x[2])


def compiler_as_program(src: Union[ProgramSource, tuple]) -> ProgramSource:
    """Wrap compiler definitions so the program compiles its own input triple."""
    defs = src.defs if isinstance(src, ProgramSource) else src
    return ProgramSource(defs, COMPILER_VARS, COMPILER_MAIN)


@dataclass(frozen=True)
class Trusted:
    env: DefunEnv


@dataclass(frozen=True)
class Machine:
    exe: MachineProgram


CompilerHandle = Union[Trusted, Machine]


def trusted_compiler(defs: tuple) -> Trusted:
    return Trusted(lisp_eval.load_defuns(defs))


# The source language and text encoding are the same everywhere in this lab,
# so converting text and retargeting are identities.  They stay as named hooks
# so each compilation visibly follows extract(converttext(run(...))).
def retarget(source: ProgramSource, target: str) -> ProgramSource:
    return source


def converttext(data: SExpr, from_env: str, to_env: str) -> SExpr:
    return data


def extract(data: SExpr) -> MachineProgram:
    return machine.decode_program(data)


@dataclass(frozen=True)
class Compilation:
    exe: MachineProgram
    steps: int


def compile_program(c: CompilerHandle, p: ProgramSource, fuel: int = DEFAULT_FUEL) -> Compilation:
    p = retarget(p, "vm")
    if isinstance(c, Trusted):
        raw, steps = lisp_eval.evaluate(c.env, _COMPILE_PROGRAM, p.inputs, fuel)
        run_env = "evaluator"
    elif isinstance(c, Machine):
        result = machine.execute(c.exe, p.inputs, fuel)
        raw, steps = result.value, result.steps
        run_env = "vm"
    else:
        raise TypeError(f"not a compiler handle: {c!r}")
    return Compilation(extract(converttext(raw, run_env, "vm")), steps)


def apply_compiler(c: CompilerHandle, p: ProgramSource, fuel: int = DEFAULT_FUEL) -> MachineProgram:
    return compile_program(c, p, fuel).exe


def exe_hash(exe: MachineProgram) -> str:
    return canonical_hash(machine.encode_program(exe))


# -- comparison -----------------------------------------------------------------

@dataclass(frozen=True)
class DefcodeDiff:
    added: list = field(default_factory=list)      # only in the executable under test
    removed: list = field(default_factory=list)    # only in stage2
    changed: list = field(default_factory=list)
    main_changed: bool = False
    order_changed: bool = False

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.changed
                    or self.main_changed or self.order_changed)

    def to_dict(self) -> dict:
        return {"added": self.added, "removed": self.removed, "changed": self.changed,
                "main_changed": self.main_changed, "order_changed": self.order_changed}


def defcode_diff(reference: MachineProgram, other: MachineProgram) -> DefcodeDiff:
    ref, oth = reference.defcodes, other.defcodes
    added = [str(n) for n in oth if n not in ref]
    removed = [str(n) for n in ref if n not in oth]
    changed = [str(n) for n in ref if n in oth and ref[n] != oth[n]]
    common_ref = [n for n in ref if n in oth]
    common_oth = [n for n in oth if n in ref]
    return DefcodeDiff(added, removed, changed,
                       reference.main_code != other.main_code,
                       common_ref != common_oth)


def line_diff(reference: MachineProgram, other: MachineProgram,
              ref_label: str = "stage2", other_label: str = "under-test") -> str:
    a = pretty(machine.encode_program(reference)).splitlines()
    b = pretty(machine.encode_program(other)).splitlines()
    return "\n".join(difflib.unified_diff(a, b, ref_label, other_label, n=3, lineterm=""))


@dataclass(frozen=True)
class DdcVerdict:
    status: str                 # "pass", "fail" or "stage-error"
    hash_under_test: str
    hash_stage2: str | None = None
    stage1_hash: str | None = None
    diff: str = ""
    defcodes: DefcodeDiff | None = None
    failed_stage: str | None = None
    error: str | None = None
    suspects: list = field(default_factory=list)
    fuel_used: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "passed": self.passed,
            "hash_under_test": self.hash_under_test,
            "hash_stage1": self.stage1_hash,
            "hash_stage2": self.hash_stage2,
            "defcode_diff": self.defcodes.to_dict() if self.defcodes else None,
            "diff": self.diff,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "suspect_assumptions": self.suspects,
            "fuel_used": self.fuel_used,
        }


def _stage(name, c, p, fuel) -> Compilation:
    try:
        return compile_program(c, p, fuel)
    except (machine.MachineError, lisp_eval.EvalError, RecursionError) as exc:
        raise StageError(name, exc) from exc


def ddc_check(c_under_test: MachineProgram, sA: ProgramSource, sP: ProgramSource,
              trusted: Trusted, fuel: int = DEFAULT_FUEL) -> DdcVerdict:
    """Compile sP with the trusted compiler, use the result to compile sA, compare."""
    if not isinstance(trusted, Trusted):
        raise TypeError("DDC needs a Trusted handle for the first stage")
    under_hash = exe_hash(c_under_test)
    fuel_used: dict = {}
    try:
        stage1 = _stage("stage1", trusted, compiler_as_program(sP), fuel)
        fuel_used["stage1"] = stage1.steps
        stage2 = _stage("stage2", Machine(stage1.exe), compiler_as_program(sA), fuel)
        fuel_used["stage2"] = stage2.steps
    except StageError as err:
        log.info("DDC %s", err)
        return DdcVerdict("stage-error", under_hash, failed_stage=err.stage, error=str(err),
                          suspects=list(STAGE_SUSPECTS[err.stage]), fuel_used=fuel_used)

    s2 = stage2.exe
    s2_hash = exe_hash(s2)
    same = sexpr_equal(machine.encode_program(s2), machine.encode_program(c_under_test))
    diff = "" if same else line_diff(s2, c_under_test)
    by_defcode = defcode_diff(s2, c_under_test)
    if not (same == (s2_hash == under_hash) == (diff == "") == by_defcode.empty):
        raise AssertionError("inconsistent comparison: equality, hashes and diff disagree")
    log.info("DDC stage1=%s stage2=%s under-test=%s", exe_hash(stage1.exe)[:12],
             s2_hash[:12], under_hash[:12])
    return DdcVerdict(
        "pass" if same else "fail", under_hash, s2_hash, exe_hash(stage1.exe),
        diff, by_defcode, suspects=[] if same else list(MISMATCH_SUSPECTS),
        fuel_used=fuel_used,
    )


def self_regeneration_check(c: MachineProgram, sA: ProgramSource, fuel: int = DEFAULT_FUEL) -> bool:
    """True iff *c* recompiles its putative source back to itself byte-for-byte.

    Output that does not even decode as an executable is a clean False; failures
    while running *c* raise StageError.
    """
    try:
        regenerated = _stage("self-regeneration", Machine(c), compiler_as_program(sA), fuel).exe
    except StageError as err:
        if isinstance(err.cause, machine.DecodeError):
            return False
        raise
    return sexpr_equal(machine.encode_program(regenerated), machine.encode_program(c))


@dataclass(frozen=True)
class BootstrapResult:
    m0: str
    m1: str
    m2: str
    passed: bool


def bootstrap_test(s: ProgramSource, trusted: CompilerHandle, fuel: int = DEFAULT_FUEL) -> BootstrapResult:
    """m0 = trusted(s); m1 = m0(s); m2 = m1(s); pass iff m1 = m2."""
    p = compiler_as_program(s)
    m0 = _stage("m0", trusted, p, fuel).exe
    m1 = _stage("m1", Machine(m0), p, fuel).exe
    m2 = _stage("m2", Machine(m1), p, fuel).exe
    return BootstrapResult(exe_hash(m0), exe_hash(m1), exe_hash(m2), m1 == m2)


def describe(exe: MachineProgram) -> str:
    return to_text(machine.encode_program(exe))
