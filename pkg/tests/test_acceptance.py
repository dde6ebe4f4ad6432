"""End-to-end acceptance criteria, each timed against its limit.

Every test records one "criterion N ...: PASS/FAIL" line; conftest prints them in the
terminal summary, and ``pytest -s`` shows them inline as well.
"""

import contextlib
import os
import random
import subprocess
import sys
import time

from ddclab import corpus, ddc, folcheck, machine
from ddclab.sexpr import Symbol, parse, print_canonical, sexpr_equal, to_text

from helpers import ACCEPTANCE_LINES, apply_mutation, constants_in, mutate, sample_mutations

S = Symbol


@contextlib.contextmanager
def criterion(n, title, limit):
    start = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - start
        ok = limit is None or elapsed < limit
        if not ok:
            raise AssertionError(f"took {elapsed:.2f}s, limit {limit}s")
    finally:
        elapsed = time.perf_counter() - start
        bound = f" (limit {limit}s)" if limit else ""
        line = f"criterion {n:2d} {title}: {'PASS' if ok else 'FAIL'} in {elapsed:.2f}s{bound}"
        ACCEPTANCE_LINES.append(line)
        print(line)


def fresh_executables():
    """Build both compiler executables from scratch, bypassing the corpus cache."""
    t = corpus.trusted()
    return (ddc.apply_compiler(t, corpus.correct_compiler_program()),
            ddc.apply_compiler(t, corpus.incorrect_compiler_program()))


OPERATORP_BLOCK = parse("""
(DEFCODE OPERATORP
  ((PUSHV 0)
   (PUSHC
    (CAR CDR CADR CADDR CADAR CADDAR CADDDR 1- 1+ LEN SYMBOLP CONSP ATOM CONS
     EQUAL APPEND MEMBER ASSOC + - * LIST1 LIST2))
   (OPR MEMBER) (POP 1)))
""")
MAIN_CODE = parse("((PUSHV 2) (PUSHV 2) (PUSHV 2) (CALL COMPILE-PROGRAM) (POP 3))")


def test_c01_self_compilation_fixpoint():
    with criterion(1, "self-compilation fixpoint", 5):
        src = corpus.correct_compiler_program()
        exe = ddc.apply_compiler(corpus.trusted(), src)
        again = ddc.apply_compiler(ddc.Machine(exe), src)
        assert print_canonical(machine.encode_program(again)) == print_canonical(machine.encode_program(exe))
        encoded = machine.encode_program(exe)
        assert sexpr_equal(encoded[0], OPERATORP_BLOCK)
        assert sexpr_equal(encoded[-1], MAIN_CODE)
        assert [str(d[1]) for d in encoded[:-1]] == ["OPERATORP", "COMPILE-FORMS", "COMPILE-FORM",
                                                    "COMPILE-DEF", "COMPILE-DEFS", "COMPILE-PROGRAM"]


def test_c02_bootstrap():
    with criterion(2, "bootstrap m1 = m2 (correct and malicious)", 10):
        for src in (corpus.correct_compiler_program(), corpus.incorrect_compiler_program()):
            r = ddc.bootstrap_test(src, corpus.trusted())
            assert r.passed and r.m1 == r.m2


def test_c03_factorial_agreement():
    good, bad = corpus.correct_compiler_executable(), corpus.incorrect_compiler_executable()
    with criterion(3, "factorial agreement", 1):
        fac = corpus.factorial_program()
        code_good = ddc.apply_compiler(ddc.Machine(good), fac)
        code_bad = ddc.apply_compiler(ddc.Machine(bad), fac)
        assert print_canonical(machine.encode_program(code_good)) == \
            print_canonical(machine.encode_program(code_bad))
        assert machine.run_program(code_good, [5]) == 120
        assert machine.run_program(code_good, [0]) == 1


def test_c04_login_divergence():
    good, bad = corpus.correct_compiler_executable(), corpus.incorrect_compiler_executable()
    with criterion(4, "login divergence", 1):
        login = corpus.login_program()
        text_good = to_text(machine.encode_program(ddc.apply_compiler(ddc.Machine(good), login)))
        text_bad = to_text(machine.encode_program(ddc.apply_compiler(ddc.Machine(bad), login)))
        assert "(THIS IS THE CORRECT LOGIN)" in text_good and "INCORRECT" not in text_good
        assert "(THIS IS THE INCORRECT LOGIN)" in text_bad


def test_c05_ddc_detection():
    with criterion(5, "DDC detects the malicious executable", 10):
        good, bad = fresh_executables()
        src = corpus.correct_compiler_program()
        v_good = ddc.ddc_check(good, src, src, corpus.trusted())
        assert v_good.passed and v_good.hash_stage2 == v_good.hash_under_test
        v_bad = ddc.ddc_check(bad, src, src, corpus.trusted())
        assert v_bad.status == "fail" and v_bad.diff
        assert {"LOGIN-SOURCE", "COMPILER-SOURCE", "SUBST"} <= set(v_bad.defcodes.added)
        assert v_bad.hash_stage2 == v_good.hash_stage2 != v_bad.hash_under_test


def test_c06_self_regeneration_insufficiency():
    with criterion(6, "self-regeneration passes for both executables", 10):
        good, bad = fresh_executables()
        src = corpus.correct_compiler_program()
        assert ddc.self_regeneration_check(good, src)
        assert ddc.self_regeneration_check(bad, src)


LENGTHS = {"p1": 19, "p2": 30, "p3": 10}


def test_c07_proof_checking():
    with criterion(7, "proofs accepted, mutations rejected", 5):
        for name in folcheck.PROBLEMS:
            problem, trace = folcheck.load_problem(name), folcheck.load_trace(name)
            result = folcheck.check_proof(problem, trace)
            assert result.accepted and result.steps_checked == LENGTHS[name]
            assert trace[-1].clause.empty
            constants = sorted({c for s in trace for c in constants_in(s.formula)})
            mutants = sample_mutations(trace, constants, per_kind=5, seed=len(trace))
            assert len(mutants) >= 10
            for k, what, step in mutants:
                r = folcheck.check_proof(problem, apply_mutation(trace, k, step))
                assert not r.accepted and r.rejection.step_id == step.id, (name, what)


def test_c08_consistency_models():
    with criterion(8, "consistency models verified and found", 30):
        for name in folcheck.PROBLEMS:
            assumptions = list(folcheck.load_problem(name).assumptions.values())
            assert folcheck.verify_model(assumptions, folcheck.load_model(name))
            found = folcheck.search_model(assumptions, max_n=2)
            assert found is not None and found.domain_size <= 2
            assert folcheck.verify_model(assumptions, found)
        contradiction = [folcheck.parse_formula("a = b"), folcheck.parse_formula("a != b")]
        assert folcheck.search_model(contradiction, max_n=2) is None


def test_c09_mutation_detection():
    with criterion(9, "random single-token mutants all caught by DDC", 60):
        good = corpus.correct_compiler_executable()
        src = corpus.correct_compiler_program()
        rng = random.Random(2024)
        seen, missed = set(), []
        while len(seen) < 50:
            mutant, what = mutate(good, rng)
            key = print_canonical(machine.encode_program(mutant))
            if key in seen:
                continue
            seen.add(key)
            if ddc.ddc_check(mutant, src, src, corpus.trusted()).passed:
                missed.append(what)
        assert not missed, missed


def _export_bytes(tmp_path, seed):
    out = tmp_path / f"export-{seed}"
    env = dict(os.environ, PYTHONHASHSEED=str(seed))
    subprocess.run([sys.executable, "-m", "ddclab", "export", str(out)], check=True, env=env,
                   capture_output=True)
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


def _demo_stdout(seed):
    env = dict(os.environ, PYTHONHASHSEED=str(seed))
    return subprocess.run([sys.executable, "-m", "ddclab", "demo", "attack"], check=True, env=env,
                          capture_output=True).stdout


def test_c10_determinism(tmp_path):
    with criterion(10, "determinism across re-runs", None):
        a, b = fresh_executables(), fresh_executables()
        assert [print_canonical(machine.encode_program(x)) for x in a] == \
            [print_canonical(machine.encode_program(x)) for x in b]
        src = corpus.correct_compiler_program()
        v1 = ddc.ddc_check(a[1], src, src, corpus.trusted()).to_dict()
        v2 = ddc.ddc_check(b[1], src, src, corpus.trusted()).to_dict()
        assert v1 == v2
        assert ddc.bootstrap_test(src, corpus.trusted()) == ddc.bootstrap_test(src, corpus.trusted())
        for name in folcheck.PROBLEMS:
            assumptions = list(folcheck.load_problem(name).assumptions.values())
            assert folcheck.format_model(folcheck.search_model(assumptions, 2)) == \
                folcheck.format_model(folcheck.search_model(assumptions, 2))
        # separate processes with different hash seeds agree byte for byte
        assert _export_bytes(tmp_path, 1) == _export_bytes(tmp_path, 2)
        assert _demo_stdout(1) == _demo_stdout(2)
