"""Embedded compiler corpus: the correct and malicious compilers and their inputs.

The human-written listings live next to this module as ``*.lisp`` files.  The
canonical artifacts (``*.src`` program files and ``*.exe`` executables) are
derived from them and checked against ``manifest.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from ddclab import ddc
from ddclab.ddc import ProgramSource
from ddclab.machine import MachineProgram, decode_program, encode_program
from ddclab.sexpr import (DIGEST_ALGORITHM, QUOTE, SExpr, Symbol, canonical_hash, parse,
                          print_canonical)

MARKER = 2000

_DEFUN = Symbol("DEFUN")


def _listing(name: str) -> SExpr:
    return parse(resources.files(__package__).joinpath(name).read_text("ascii"))


def subst(new: SExpr, old: SExpr, tree: SExpr) -> SExpr:
    if tree == old and type(tree) is type(old):
        return new
    if isinstance(tree, tuple):
        return tuple(subst(new, old, item) for item in tree)
    return tree


@lru_cache(maxsize=None)
def correct_compiler_source() -> tuple:
    return _listing("correct_compiler.lisp")


@lru_cache(maxsize=None)
def trojan_template() -> tuple:
    """The malicious source with each self-reference replaced by the marker 2000."""
    correct = correct_compiler_source()
    login_source, subst_defun, compile_program = _listing("trojan.lisp")
    compiler_source = (_DEFUN, Symbol("COMPILER-SOURCE"), (), (QUOTE, correct))
    # drop the correct COMPILE-PROGRAM; the malicious one goes last
    return correct[:-1] + (login_source, compiler_source, subst_defun, compile_program)


@lru_cache(maxsize=None)
def incorrect_compiler_source() -> tuple:
    template = trojan_template()
    return subst(template, MARKER, template)


@lru_cache(maxsize=None)
def login_program() -> ProgramSource:
    return ddc.program_from_sexpr(_listing("login.lisp"))


@lru_cache(maxsize=None)
def factorial_program() -> ProgramSource:
    return ddc.program_from_sexpr(_listing("factorial.lisp"))


def login_source() -> tuple:
    return login_program().defs


def factorial_source() -> tuple:
    return factorial_program().defs


def correct_compiler_program() -> ProgramSource:
    return ddc.compiler_as_program(correct_compiler_source())


def incorrect_compiler_program() -> ProgramSource:
    return ddc.compiler_as_program(incorrect_compiler_source())


def trusted() -> ddc.Trusted:
    """The trusted compiler: the direct evaluator running the correct source."""
    return ddc.trusted_compiler(correct_compiler_source())


@lru_cache(maxsize=None)
def correct_compiler_executable() -> MachineProgram:
    return ddc.apply_compiler(trusted(), correct_compiler_program())


@lru_cache(maxsize=None)
def incorrect_compiler_executable() -> MachineProgram:
    return ddc.apply_compiler(trusted(), incorrect_compiler_program())


# -- artifact files -------------------------------------------------------------

@dataclass(frozen=True)
class Artifact:
    id: str
    kind: str           # "source" or "executable"
    value: SExpr
    provenance: str

    @property
    def filename(self) -> str:
        return f"{self.id}.{'src' if self.kind == 'source' else 'exe'}"

    @property
    def digest(self) -> str:
        return canonical_hash(self.value)


def artifacts() -> list[Artifact]:
    return [
        Artifact("correct", "source", correct_compiler_program().as_sexpr(),
                 "transcribed compiler listing; fixes recorded in PROVENANCE.md"),
        Artifact("correct", "executable", encode_program(correct_compiler_executable()),
                 "correct source compiled by the trusted evaluator"),
        Artifact("incorrect", "source", incorrect_compiler_program().as_sexpr(),
                 "correct source plus the trojan rules; self-reproduces via marker 2000"),
        Artifact("incorrect", "executable", encode_program(incorrect_compiler_executable()),
                 "malicious source compiled by the trusted evaluator"),
        Artifact("login", "source", login_program().as_sexpr(), "login stub (the attack's first target)"),
        Artifact("factorial", "source", factorial_program().as_sexpr(), "factorial benchmark"),
    ]


def corpus_dir() -> Path:
    return Path(str(resources.files(__package__)))


def manifest() -> dict:
    return {
        "digest_algorithm": DIGEST_ALGORITHM,
        "artifacts": {a.filename: {"kind": a.kind, "digest": a.digest, "provenance": a.provenance}
                      for a in artifacts()},
    }


def write_artifacts(directory: Path | None = None) -> None:
    directory = Path(directory or corpus_dir())
    for a in artifacts():
        (directory / a.filename).write_bytes(print_canonical(a.value))
    (directory / "manifest.json").write_text(json.dumps(manifest(), indent=2, sort_keys=True) + "\n")


def load_artifact(filename: str) -> SExpr:
    return parse((corpus_dir() / filename).read_bytes())


def load_executable(filename: str) -> MachineProgram:
    return decode_program(load_artifact(filename))
