"""Command-line interface.

Exit status: 0 on pass/accept, 1 on a clean fail/reject, 2 on usage errors,
unreadable inputs and stage (compilation or execution) errors.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import shutil
import sys
from pathlib import Path

from ddclab import __version__, corpus, ddc, folcheck, lisp_eval, machine
from ddclab.sexpr import (DIGEST_ALGORITHM, ParseError, canonical_hash, parse, pretty,
                          print_canonical, to_text)

SCHEMA_VERSION = 1
FUEL_ENV = "DDCLAB_FUEL"

log = logging.getLogger("ddclab")


class CliError(Exception):
    """Input or stage failure; reported on stderr with exit status 2."""


def default_fuel() -> int:
    raw = os.environ.get(FUEL_ENV)
    if raw is None:
        return ddc.DEFAULT_FUEL
    try:
        fuel = int(raw)
    except ValueError:
        raise CliError(f"{FUEL_ENV} must be an integer, got {raw!r}") from None
    if fuel <= 0:
        raise CliError(f"{FUEL_ENV} must be positive")
    return fuel


def _fuel(args) -> int:
    return args.fuel if args.fuel is not None else default_fuel()


# -- input helpers ------------------------------------------------------------------

def _read_bytes(path: str, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"reading {what} {path}: {exc.strerror or exc}") from None


def read_sexpr(path: str, what: str = "file"):
    data = _read_bytes(path, what)
    try:
        return parse(data)
    except ParseError as exc:
        raise CliError(f"parsing {what} {path}: {exc}") from None


def read_program(path: str, what: str = "source") -> ddc.ProgramSource:
    try:
        return ddc.program_from_sexpr(read_sexpr(path, what))
    except ValueError as exc:
        raise CliError(f"reading {what} {path}: {exc}") from None


def read_executable(path: str, what: str = "executable") -> machine.MachineProgram:
    try:
        return machine.decode_program(read_sexpr(path, what))
    except machine.DecodeError as exc:
        raise CliError(f"decoding {what} {path}: {exc}") from None


def read_text(path: str, what: str) -> str:
    return _read_bytes(path, what).decode("ascii", errors="replace")


def _input(path: str) -> dict:
    data = Path(path).read_bytes()
    try:
        digest = canonical_hash(parse(data))
    except ParseError:
        import hashlib
        digest = hashlib.sha256(data).hexdigest()
    return {"path": path, "digest": digest}


def trusted_handle(args) -> ddc.Trusted:
    if getattr(args, "trusted_source", None):
        src = read_program(args.trusted_source, "trusted compiler source")
        try:
            return ddc.trusted_compiler(src.defs)
        except lisp_eval.LoadError as exc:
            raise CliError(f"loading trusted compiler source: {exc}") from None
    return corpus.trusted()


def write_report(path: str | None, report: dict) -> None:
    if not path:
        return
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "digest_algorithm": DIGEST_ALGORITHM,
        **report,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except ddc.StageError as exc:
        raise CliError(str(exc)) from None
    except (machine.MachineError, lisp_eval.EvalError, RecursionError) as exc:
        raise CliError(f"{name} failed: {type(exc).__name__}: {exc}") from None


# -- subcommands --------------------------------------------------------------------

def cmd_compile(args) -> int:
    source = read_program(args.source)
    if args.with_ == "trusted":
        handle = trusted_handle(args)
    else:
        handle = ddc.Machine(read_executable(args.with_, "compiler executable"))
    result = _stage("compile", ddc.compile_program, handle, source, _fuel(args))
    out = print_canonical(machine.encode_program(result.exe))
    if args.out:
        Path(args.out).write_bytes(out)
    else:
        sys.stdout.buffer.write(out)
    digest = ddc.exe_hash(result.exe)
    print(f"{DIGEST_ALGORITHM} {digest}", file=sys.stderr if not args.out else sys.stdout)
    write_report(args.report, {
        "command": "compile", "inputs": [_input(args.source)], "outcome": "ok",
        "output_digest": digest, "fuel_used": result.steps,
    })
    return 0


def cmd_run(args) -> int:
    exe = read_executable(args.exe)
    try:
        inputs = parse(args.args)
    except ParseError as exc:
        raise CliError(f"parsing --args: {exc}") from None
    if not isinstance(inputs, tuple):
        raise CliError("--args must be a list of input values, e.g. \"(5)\"")
    result = _stage("run", machine.execute, exe, inputs, _fuel(args))
    sys.stdout.write(to_text(result.value) + "\n")
    write_report(args.report, {
        "command": "run", "inputs": [_input(args.exe)], "outcome": "ok",
        "result": to_text(result.value), "fuel_used": result.steps,
    })
    return 0


def _print_verdict(v: ddc.DdcVerdict) -> None:
    print(f"verdict: {v.status}")
    print(f"under-test {DIGEST_ALGORITHM}: {v.hash_under_test}")
    if v.stage1_hash:
        print(f"stage1     {DIGEST_ALGORITHM}: {v.stage1_hash}")
    if v.hash_stage2:
        print(f"stage2     {DIGEST_ALGORITHM}: {v.hash_stage2}")
    if v.failed_stage:
        print(f"failed stage: {v.error}")
    if v.defcodes and not v.defcodes.empty:
        d = v.defcodes
        for label, names in (("added", d.added), ("removed", d.removed), ("changed", d.changed)):
            if names:
                print(f"defcodes {label}: {' '.join(names)}")
        if d.main_changed:
            print("main code changed")
        if d.order_changed:
            print("defcode order changed")
    if v.suspects:
        print(f"assumptions to re-examine: {', '.join(v.suspects)}")
    for key in sorted(v.fuel_used):
        print(f"fuel used by {key}: {v.fuel_used[key]}")


def cmd_ddc(args) -> int:
    under_test = read_executable(args.under_test, "executable under test")
    sA = read_program(args.source, "source")
    sP = read_program(args.parent, "parent source") if args.parent else sA
    verdict = ddc.ddc_check(under_test, sA, sP, trusted_handle(args), _fuel(args))
    _print_verdict(verdict)
    if verdict.diff and not args.quiet:
        print(verdict.diff)
    inputs = [_input(args.under_test), _input(args.source)]
    if args.parent:
        inputs.append(_input(args.parent))
    write_report(args.report, {"command": "ddc", "inputs": inputs, "outcome": verdict.status,
                               "verdict": verdict.to_dict()})
    if verdict.status == "stage-error":
        return 2
    return 0 if verdict.passed else 1


def cmd_selfregen(args) -> int:
    exe = read_executable(args.exe)
    source = read_program(args.source)
    ok = _stage("self-regeneration", ddc.self_regeneration_check, exe, source, _fuel(args))
    print(f"self-regeneration: {'pass' if ok else 'fail'}")
    write_report(args.report, {"command": "selfregen",
                               "inputs": [_input(args.exe), _input(args.source)],
                               "outcome": "pass" if ok else "fail"})
    return 0 if ok else 1


def cmd_bootstrap(args) -> int:
    source = read_program(args.source)
    result = _stage("bootstrap", ddc.bootstrap_test, source, trusted_handle(args), _fuel(args))
    print(f"m0 {DIGEST_ALGORITHM}: {result.m0}")
    print(f"m1 {DIGEST_ALGORITHM}: {result.m1}")
    print(f"m2 {DIGEST_ALGORITHM}: {result.m2}")
    print(f"bootstrap test: {'pass' if result.passed else 'fail'} (m1 {'=' if result.passed else '!='} m2)")
    write_report(args.report, {"command": "bootstrap", "inputs": [_input(args.source)],
                               "outcome": "pass" if result.passed else "fail",
                               "stage_hashes": {"m0": result.m0, "m1": result.m1, "m2": result.m2}})
    return 0 if result.passed else 1


def _login_text(exe) -> str:
    code = ddc.apply_compiler(ddc.Machine(exe), corpus.login_program())
    return to_text(machine.run_program(code, []))


def cmd_demo(args) -> int:
    fuel = _fuel(args)
    good = corpus.correct_compiler_executable()
    bad = corpus.incorrect_compiler_executable()
    correct_src = corpus.correct_compiler_program()
    print("== compilers built by the trusted evaluator")
    print(f"correct   {DIGEST_ALGORITHM}: {ddc.exe_hash(good)}")
    print(f"malicious {DIGEST_ALGORITHM}: {ddc.exe_hash(bad)}")

    print("== factorial")
    fac_good = ddc.apply_compiler(ddc.Machine(good), corpus.factorial_program(), fuel)
    fac_bad = ddc.apply_compiler(ddc.Machine(bad), corpus.factorial_program(), fuel)
    same_fac = fac_good == fac_bad
    print(f"identical code from both compilers: {'yes' if same_fac else 'no'}")
    print(f"fac(5) = {to_text(machine.run_program(fac_good, [5]))}")

    print("== login")
    login_good, login_bad = _login_text(good), _login_text(bad)
    print(f"correct compiler:   {login_good}")
    print(f"malicious compiler: {login_bad}")

    print("== self-regeneration against the correct source")
    regen_good = ddc.self_regeneration_check(good, correct_src, fuel)
    regen_bad = ddc.self_regeneration_check(bad, correct_src, fuel)
    print(f"correct:   {'pass' if regen_good else 'fail'}")
    print(f"malicious: {'pass' if regen_bad else 'fail'}")

    print("== diverse double-compiling")
    trusted = corpus.trusted()
    v_good = ddc.ddc_check(good, correct_src, correct_src, trusted, fuel)
    v_bad = ddc.ddc_check(bad, correct_src, correct_src, trusted, fuel)
    print(f"correct executable:   {v_good.status}")
    print(f"malicious executable: {v_bad.status}")
    _print_verdict(v_bad)
    if not args.quiet:
        print(v_bad.diff)

    expected = (same_fac and "CORRECT" in login_good and "INCORRECT" in login_bad
                and regen_good and regen_bad and v_good.passed and v_bad.status == "fail")
    print(f"== scenario reproduced: {'yes' if expected else 'no'}")
    write_report(args.report, {"command": "demo attack", "inputs": [], "outcome":
                               "pass" if expected else "fail",
                               "verdict": v_bad.to_dict()})
    return 0 if expected else 1


def _load_problem(path):
    try:
        return folcheck.parse_problem(read_text(path, "problem"))
    except folcheck.FolSyntaxError as exc:
        raise CliError(f"parsing problem {path}: {exc}") from None


def cmd_prove(args) -> int:
    problem = _load_problem(args.problem)
    try:
        trace = folcheck.parse_proof(read_text(args.trace, "trace"))
    except folcheck.FolSyntaxError as exc:
        raise CliError(f"parsing trace {args.trace}: {exc}") from None
    result = folcheck.check_proof(problem, trace)
    print(f"{args.trace}: {result}")
    write_report(args.report, {"command": "prove",
                               "inputs": [_input(args.problem), _input(args.trace)],
                               "outcome": "accepted" if result.accepted else "rejected",
                               "steps_checked": result.steps_checked,
                               "rejection": str(result.rejection) if result.rejection else None})
    return 0 if result.accepted else 1


def cmd_model_verify(args) -> int:
    problem = _load_problem(args.problem)
    try:
        model = folcheck.parse_model(read_text(args.model, "model"))
    except (folcheck.FolSyntaxError, ValueError) as exc:
        raise CliError(f"reading model {args.model}: {exc}") from None
    try:
        ok = folcheck.verify_model(problem.assumptions.values(), model)
    except folcheck.SignatureError as exc:
        raise CliError(f"model {args.model}: {exc}") from None
    failing = [label for label, f in problem.assumptions.items()
               if not folcheck.eval_model(f, model)]
    print(f"domain size {model.domain_size}: "
          f"{'all assumptions hold' if ok else 'false: ' + ', '.join(failing)}")
    write_report(args.report, {"command": "model verify",
                               "inputs": [_input(args.problem), _input(args.model)],
                               "outcome": "pass" if ok else "fail", "failing": failing})
    return 0 if ok else 1


def cmd_model_search(args) -> int:
    problem = _load_problem(args.problem)
    try:
        model = folcheck.search_model(problem.assumptions.values(), args.max_domain, args.min_domain)
    except folcheck.UnsupportedFormula as exc:
        raise CliError(f"problem {args.problem}: {exc}") from None
    if model is None:
        print(f"no model with domain size {args.min_domain}..{args.max_domain}")
    else:
        text = folcheck.format_model(model)
        if args.out:
            Path(args.out).write_text(text)
            print(f"model of domain size {model.domain_size} written to {args.out}")
        else:
            print(f"% model of domain size {model.domain_size}")
            sys.stdout.write(text)
    write_report(args.report, {"command": "model search", "inputs": [_input(args.problem)],
                               "outcome": "found" if model else "none",
                               "domain_size": model.domain_size if model else None})
    return 0 if model is not None else 1


def cmd_hash(args) -> int:
    for path in args.files:
        print(f"{canonical_hash(read_sexpr(path))}  {path}")
    return 0


def cmd_pretty(args) -> int:
    sys.stdout.write(pretty(read_sexpr(args.file)) + "\n")
    return 0


def cmd_export(args) -> int:
    root = Path(args.directory)
    (root / "corpus").mkdir(parents=True, exist_ok=True)
    (root / "proofs").mkdir(parents=True, exist_ok=True)
    corpus.write_artifacts(root / "corpus")
    for name in folcheck.PROBLEMS:
        for suffix in ("fol", "prf", "mdl"):
            shutil.copyfile(folcheck.problem_path(name, suffix), root / "proofs" / f"{name}.{suffix}")
    print(f"wrote {root / 'corpus'} and {root / 'proofs'}")
    return 0


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", metavar="R.json", help="write a JSON run report")
    fuel = argparse.ArgumentParser(add_help=False)
    fuel.add_argument("--fuel", type=int, default=None,
                      help=f"step budget per run (default ${FUEL_ENV} or {ddc.DEFAULT_FUEL})")
    trusted = argparse.ArgumentParser(add_help=False)
    trusted.add_argument("--trusted-source", metavar="SRC",
                         help="compiler source the trusted evaluator interprets "
                              "(default: the bundled correct compiler)")

    p = argparse.ArgumentParser(prog="ddclab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ddclab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log pipeline progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("compile", parents=[common, fuel, trusted], help="apply a compiler to a program")
    s.add_argument("--source", required=True)
    s.add_argument("--with", dest="with_", required=True, metavar="trusted|EXE",
                   help="'trusted' for the evaluator, or a compiler executable")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("run", parents=[common, fuel], help="execute a program on the VM")
    s.add_argument("--exe", required=True)
    s.add_argument("--args", default="()", help="input list, e.g. \"(5)\"")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("ddc", parents=[common, fuel, trusted], help="diverse double-compiling check")
    s.add_argument("--under-test", required=True)
    s.add_argument("--source", required=True)
    s.add_argument("--parent", help="parent compiler source (default: --source, self-parenting)")
    s.add_argument("-q", "--quiet", action="store_true", help="omit the line diff")
    s.set_defaults(func=cmd_ddc)

    s = sub.add_parser("selfregen", parents=[common, fuel], help="self-regeneration check")
    s.add_argument("--exe", required=True)
    s.add_argument("--source", required=True)
    s.set_defaults(func=cmd_selfregen)

    s = sub.add_parser("bootstrap", parents=[common, fuel, trusted], help="compiler bootstrap test")
    s.add_argument("--source", required=True)
    s.set_defaults(func=cmd_bootstrap)

    s = sub.add_parser("demo", parents=[common, fuel], help="run a scripted scenario")
    s.add_argument("scenario", choices=["attack"])
    s.add_argument("-q", "--quiet", action="store_true", help="omit the line diff")
    s.set_defaults(func=cmd_demo)

    s = sub.add_parser("prove", parents=[common], help="check a proof trace")
    s.add_argument("--problem", required=True)
    s.add_argument("--trace", required=True)
    s.set_defaults(func=cmd_prove)

    s = sub.add_parser("model", help="verify or search finite models")
    msub = s.add_subparsers(dest="model_command", required=True)
    m = msub.add_parser("verify", parents=[common])
    m.add_argument("--problem", required=True)
    m.add_argument("--model", required=True)
    m.set_defaults(func=cmd_model_verify)
    m = msub.add_parser("search", parents=[common])
    m.add_argument("--problem", required=True)
    m.add_argument("--max-domain", type=int, default=2)
    m.add_argument("--min-domain", type=int, default=1)
    m.add_argument("--out")
    m.set_defaults(func=cmd_model_search)

    s = sub.add_parser("hash", help="canonical hash of S-expression files")
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_hash)

    s = sub.add_parser("pretty", help="pretty-print an S-expression file")
    s.add_argument("file")
    s.set_defaults(func=cmd_pretty)

    s = sub.add_parser("export", help="write the bundled corpus and proofs to a directory")
    s.add_argument("directory")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if getattr(args, "fuel", None) is not None and args.fuel <= 0:
        parser.error("--fuel must be positive")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ddclab: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
