"""First-order proof-trace checking and finite model finding.

The bundled problems ``p1``..``p3`` hold the three DDC correspondence proofs:
``.fol`` is the assumption set and goal, ``.prf`` the step-by-step trace and
``.mdl`` a domain-2 model showing the assumptions are consistent.
"""

from importlib import resources
from pathlib import Path

from ddclab.folcheck.checker import (ProofResult, ProofStep, Problem, Rationale, StepRejected,
                                     check_proof, check_step, paramodulants, parse_problem,
                                     parse_proof, resolvents)
from ddclab.folcheck.clauses import (Clause, Literal, UnsupportedFormula, as_clause, clause_variant,
                                     clausify, deny, formula_variant, unify)
from ddclab.folcheck.models import (Interpretation, SignatureError, eval_model, find_model,
                                    format_model, parse_model, sample_models, search_model,
                                    verify_model)
from ddclab.folcheck.syntax import (And, Bottom, Const, Eq, Fn, FolSyntaxError, ForAll, Implies, Neq,
                                    Not, Or, Pred, Var, parse_fol, parse_formula)

PROBLEMS = ("p1", "p2", "p3")


def problem_path(name: str, suffix: str) -> Path:
    return Path(str(resources.files(__package__).joinpath("problems", f"{name}.{suffix}")))


def load_problem(name: str) -> Problem:
    return parse_problem(problem_path(name, "fol").read_text())


def load_trace(name: str) -> list:
    return parse_proof(problem_path(name, "prf").read_text())


def load_model(name: str) -> Interpretation:
    return parse_model(problem_path(name, "mdl").read_text())
