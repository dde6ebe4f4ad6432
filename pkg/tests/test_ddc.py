import random

import pytest

from ddclab import corpus, ddc, machine
from ddclab.ddc import Machine, StageError
from ddclab.sexpr import Symbol, parse, print_canonical, sexpr_equal

from helpers import mutate, random_inputs, random_program

S = Symbol


@pytest.fixture(scope="module")
def good():
    return corpus.correct_compiler_executable()


@pytest.fixture(scope="module")
def bad():
    return corpus.incorrect_compiler_executable()


@pytest.fixture(scope="module")
def src():
    return corpus.correct_compiler_program()


def test_program_from_sexpr():
    p = ddc.program_from_sexpr(parse("(((DEFUN F (X) X)) (A) (F A))"))
    assert p.vars == (S("A"),) and p.main == (S("F"), S("A"))
    bare = ddc.program_from_sexpr(corpus.correct_compiler_source())
    assert bare.vars == ddc.COMPILER_VARS and bare.main == ddc.COMPILER_MAIN
    with pytest.raises(ValueError):
        ddc.program_from_sexpr(parse("(A B)"))
    with pytest.raises(ValueError):
        ddc.program_from_sexpr(5)


def test_identity_hooks():
    p = corpus.factorial_program()
    assert ddc.retarget(p, "vm") is p
    assert ddc.converttext(p.defs, "evaluator", "vm") is p.defs


def test_apply_compiler_examples(good, bad, src):
    assert ddc.apply_compiler(Machine(good), src) == good
    code = ddc.apply_compiler(Machine(bad), corpus.login_program())
    assert "INCORRECT" in str(machine.encode_program(code))
    assert ddc.apply_compiler(corpus.trusted(), corpus.factorial_program()) == \
        ddc.apply_compiler(Machine(good), corpus.factorial_program())


def test_ddc_passes_for_correct(good, src):
    v = ddc.ddc_check(good, src, src, corpus.trusted())
    assert v.passed and v.status == "pass"
    assert v.hash_stage2 == v.hash_under_test == ddc.exe_hash(good)
    assert v.diff == "" and v.defcodes.empty and v.suspects == []


def test_ddc_fails_for_malicious(bad, src):
    v = ddc.ddc_check(bad, src, src, corpus.trusted())
    assert not v.passed and v.status == "fail"
    assert v.hash_stage2 != v.hash_under_test
    assert v.defcodes.added == ["LOGIN-SOURCE", "COMPILER-SOURCE", "SUBST"]
    assert v.defcodes.changed == ["COMPILE-PROGRAM"]
    assert "LOGIN" in v.diff
    assert v.diff.startswith("--- stage2\n+++ under-test")
    added = [l for l in v.diff.splitlines() if l.startswith("+") and not l.startswith("+++")]
    removed = [l for l in v.diff.splitlines() if l.startswith("-") and not l.startswith("---")]
    assert any("THIS IS THE INCORRECT LOGIN" in l for l in added)
    assert len(added) > len(removed)
    d = v.to_dict()
    assert d["passed"] is False and d["defcode_diff"]["added"][0] == "LOGIN-SOURCE"


def test_ddc_requires_a_trusted_handle(good, src):
    with pytest.raises(TypeError):
        ddc.ddc_check(good, src, src, Machine(good))


def test_stage_failure_is_distinct_from_fail(good, src):
    v = ddc.ddc_check(good, src, src, corpus.trusted(), fuel=50)
    assert v.status == "stage-error" and not v.passed
    assert v.failed_stage == "stage1" and "cT_compiles_sP" in v.suspects
    # a parent source that is not a compiler breaks stage1 too
    fac = ddc.ProgramSource(corpus.factorial_source(), ddc.COMPILER_VARS, ddc.COMPILER_MAIN)
    v = ddc.ddc_check(good, src, fac, corpus.trusted())
    assert v.status == "stage-error" and v.failed_stage == "stage1"


def test_stage2_failure_names_stage2(good, src):
    # stage1 compiles this parent fine, but running it yields output that is not an executable
    parent = ddc.program_from_sexpr(parse("((DEFUN COMPILE-PROGRAM (DEFS VARS MAIN) '(NOT CODE)))"))
    v = ddc.ddc_check(good, src, parent, corpus.trusted())
    assert v.status == "stage-error" and v.failed_stage == "stage2"


def test_self_regeneration(good, bad, src):
    assert ddc.self_regeneration_check(good, src)
    assert ddc.self_regeneration_check(bad, src)
    assert not ddc.self_regeneration_check(good, corpus.factorial_program())


def test_bootstrap(good):
    r = ddc.bootstrap_test(corpus.correct_compiler_program(), corpus.trusted())
    assert r.passed and r.m0 == r.m1 == r.m2 == ddc.exe_hash(good)
    r = ddc.bootstrap_test(corpus.incorrect_compiler_program(), corpus.trusted())
    assert r.passed
    with pytest.raises(StageError) as err:
        ddc.bootstrap_test(corpus.factorial_program(), corpus.trusted())
    assert err.value.stage == "m0"


def test_claimed_origin_chain_passes(src):
    # cA built from sA by a parent that was itself built from sP by another route:
    # trusted evaluator -> grandparent exe -> parent exe -> cA
    grandparent = ddc.apply_compiler(corpus.trusted(), src)
    parent = ddc.apply_compiler(Machine(grandparent), src)
    c_a = ddc.apply_compiler(Machine(parent), src)
    assert ddc.ddc_check(c_a, src, src, corpus.trusted()).passed


def test_distinct_parent_source(good, src):
    # sP differs from sA (extra unused helper) but compiles sA identically
    extra = (S("DEFUN"), S("UNUSED-HELPER"), (S("X"),), (S("1+"), S("X")))
    sp = ddc.compiler_as_program(corpus.correct_compiler_source() + (extra,))
    v = ddc.ddc_check(good, src, sp, corpus.trusted())
    assert v.passed
    # the guarantee rests on sP: with the malicious source as parent, stage1 is the
    # malicious executable, which reproduces itself, so the check passes
    v = ddc.ddc_check(corpus.incorrect_compiler_executable(), src,
                      corpus.incorrect_compiler_program(), corpus.trusted())
    assert v.passed


def test_passing_stage2_behaves_like_the_executable(good, src):
    v = ddc.ddc_check(good, src, src, corpus.trusted())
    assert v.passed
    stage1 = ddc.apply_compiler(corpus.trusted(), src)
    stage2 = ddc.apply_compiler(Machine(stage1), src)
    programs = [corpus.login_program(), corpus.factorial_program()] + [random_program(s) for s in range(5)]
    for i, p in enumerate(programs):
        a = ddc.apply_compiler(Machine(stage2), p)
        b = ddc.apply_compiler(Machine(good), p)
        assert a == b
        inputs = [5] if p is programs[1] else [] if p is programs[0] else random_inputs(i)
        assert sexpr_equal(machine.run_program(a, inputs), machine.run_program(b, inputs))


def test_single_instruction_mutant_gives_single_defcode_diff(good, src):
    rng = random.Random(7)
    for _ in range(5):
        mutant, what = mutate(good, rng)
        v = ddc.ddc_check(mutant, src, src, corpus.trusted())
        assert not v.passed, what
        d = v.defcodes
        assert len(d.changed) + int(d.main_changed) == 1 and not d.added and not d.removed, what


def test_verdict_consistency_on_mutants(good, src):
    rng = random.Random(11)
    trusted = corpus.trusted()
    for _ in range(10):
        mutant, what = mutate(good, rng)
        v = ddc.ddc_check(mutant, src, src, trusted)
        assert (v.passed, v.diff == "", v.hash_stage2 == v.hash_under_test) == (False, False, False), what


def test_determinism(good, bad, src):
    for handle_exe in (good, bad):
        a = ddc.apply_compiler(Machine(handle_exe), src)
        b = ddc.apply_compiler(Machine(handle_exe), src)
        assert print_canonical(machine.encode_program(a)) == print_canonical(machine.encode_program(b))
    v1 = ddc.ddc_check(bad, src, src, corpus.trusted())
    v2 = ddc.ddc_check(bad, src, src, corpus.trusted())
    assert v1.to_dict() == v2.to_dict()
