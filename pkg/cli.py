"""Command line interface.

    python main.py verify fixtures/example_5_1_phi.json
    python main.py contribution fixtures/example_5_2_M1.json --k 5
    python main.py selftest --instances 200 --seed 7 --json

Reports go to standard output, diagnostics and logs to standard error.
Exit codes: 0 success, 1 failed verification, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd
import sympy

from charcycle import characteristic_cycle, critical_strata, microlocal_index
from config import get_settings, use_settings
from errors import InvalidSubbundle, LefschetzError, ProblemFormatError
from euler import euler_integral, hopf_global_trace
from exact import format_scalar, rational
from lefschetz import local_contribution, pipeline_index, theta_table, verify_fixed_point_formula
from problem_io import (
    CharacteristicCycleProblem,
    ContributionProblem,
    GlobalTraceProblem,
    LocalizationProblem,
    Problem,
    VerificationProblem,
    load_problem,
)
from selftest import run_selftest
from spectral import validate_expanding, validate_shrinking

logger = logging.getLogger(__name__)


@dataclass
class CommandOutcome:
    report: Dict[str, Any]
    text: str
    exit_code: int = 0


def _expect(problem: Problem, command: str, *kinds: type) -> None:
    if not isinstance(problem, kinds):
        names = ", ".join(k.kind for k in kinds)
        raise ProblemFormatError(f"'{command}' needs a {names} problem, got {problem.kind}", element=problem.kind)


def _frame_text(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False) if not frame.empty else "(empty)"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    checked: List[str] = []
    if isinstance(problem, LocalizationProblem):
        fiber = problem.as_fiber().validate()
        checked += ["fan", "sheaf shapes and functoriality", "equivariance", "nondegenerate normal map"]
        if fiber.expanding is not None:
            if not validate_expanding(fiber.normal_map, fiber.expanding, allow_perturbation=True):
                raise InvalidSubbundle("given expanding subbundle is not valid", element=fiber.expanding.label or "expanding")
            checked.append("expanding subbundle")
        if fiber.shrinking is not None:
            if not validate_shrinking(fiber.normal_map, fiber.shrinking):
                raise InvalidSubbundle("given shrinking subbundle is not valid", element=fiber.shrinking.label or "shrinking")
            checked.append("shrinking subbundle")
    elif isinstance(problem, (ContributionProblem, VerificationProblem)):
        models = [problem.model] if isinstance(problem, ContributionProblem) else problem.components
        for model in models:
            model.validate()
        checked += [f"component {m.name}" for m in models]
        if isinstance(problem, VerificationProblem):
            checked.append("global model")
    elif isinstance(problem, GlobalTraceProblem):
        checked.append("global model")
    else:
        for name, f in problem.test_functions.items():
            critical_strata(problem.embedded, f)
            checked.append(f"test function {name}")
        checked.insert(0, "embedded complex and function")
    report = {"kind": problem.kind, "name": problem.name, "checked": checked, "status": "valid"}
    return CommandOutcome(report, f"{problem.kind} problem {problem.name or ''} is valid: " + "; ".join(checked))


def cmd_localize(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    _expect(problem, "localize", LocalizationProblem)
    result = problem.as_fiber().validate().localize(element=problem.name or None)
    text = (
        f"theta = {format_scalar(result.value)} "
        f"(expanding over {result.expanding.label or 'E'}: {format_scalar(result.expanding_value)}, "
        f"shrinking over {result.shrinking.label or 'S'}: {format_scalar(result.shrinking_value)}, "
        f"t = {result.perturbation})"
    )
    return CommandOutcome(result.to_dict(), text)


def _components(problem: Problem, command: str):
    _expect(problem, command, ContributionProblem, VerificationProblem)
    return [problem.model] if isinstance(problem, ContributionProblem) else problem.components


def cmd_local_trace(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    tables = {model.name: theta_table(model) for model in _components(problem, "local-trace")}
    report = {name: frame.to_dict(orient="records") for name, frame in tables.items()}
    text = "\n\n".join(f"{name}\n{_frame_text(frame)}" for name, frame in tables.items())
    return CommandOutcome(report, text)


def cmd_contribution(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    values = {model.name: local_contribution(model) for model in _components(problem, "contribution")}
    report = {"contributions": {name: format_scalar(v) for name, v in values.items()}}
    text = "\n".join(f"local contribution of {name} = {format_scalar(v)}" for name, v in values.items())
    return CommandOutcome(report, text)


def cmd_global_trace(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    _expect(problem, "global-trace", GlobalTraceProblem, VerificationProblem)
    model = problem.model if isinstance(problem, GlobalTraceProblem) else problem.global_model
    value = hopf_global_trace(model)
    return CommandOutcome({"global": format_scalar(value)}, f"global trace = {format_scalar(value)}")


def cmd_verify(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    _expect(problem, "verify", VerificationProblem)
    report = verify_fixed_point_formula(problem.global_model, problem.components)
    text = f"{_frame_text(report.to_frame())}\n\n{report.summary()}"
    return CommandOutcome(report.to_dict(), text, 0 if report.passed else 1)


def cmd_cc(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    _expect(problem, "cc", CharacteristicCycleProblem)
    cycle = characteristic_cycle(problem.embedded, problem.function)
    return CommandOutcome(cycle.to_dict(), _frame_text(cycle.to_frame()))


def cmd_index(problem: Problem, args: argparse.Namespace) -> CommandOutcome:
    _expect(problem, "index", CharacteristicCycleProblem, ContributionProblem)
    if isinstance(problem, CharacteristicCycleProblem):
        if not problem.test_functions:
            raise ProblemFormatError("index needs at least one test function", element=problem.name or None)
        expected = euler_integral(problem.function)
        values = {name: microlocal_index(problem.embedded, problem.function, f) for name, f in problem.test_functions.items()}
        label = "Euler integral"
    else:
        model = problem.model
        if model.embedding is None:
            raise ProblemFormatError(f"component {model.name} has no embedded refinement", element=model.name)
        expected = local_contribution(model)
        values = {name: pipeline_index(model, name) for name in model.embedding.test_functions}
        label = "local contribution"
    agree = all(sympy.expand(v - expected) == 0 for v in values.values())
    report = {
        "indices": {name: format_scalar(v) for name, v in values.items()},
        "reference": {"name": label, "value": format_scalar(expected)},
        "verdict": "PASS" if agree else "FAIL",
    }
    lines = [f"index with {name} = {format_scalar(v)}" for name, v in values.items()]
    lines.append(f"{label} = {format_scalar(expected)}, {'PASS' if agree else 'FAIL'}")
    return CommandOutcome(report, "\n".join(lines), 0 if agree else 1)


_PROBLEM_COMMANDS: Dict[str, Callable[[Problem, argparse.Namespace], CommandOutcome]] = {
    "validate": cmd_validate,
    "localize": cmd_localize,
    "local-trace": cmd_local_trace,
    "contribution": cmd_contribution,
    "global-trace": cmd_global_trace,
    "verify": cmd_verify,
    "cc": cmd_cc,
    "index": cmd_index,
}


def cmd_selftest(args: argparse.Namespace) -> CommandOutcome:
    report = run_selftest(instances=args.instances, seed=args.seed)
    lines = [_frame_text(report.to_frame())]
    for suite in report.suites:
        lines += [f"  {suite.name}: {failure}" for failure in suite.failures]
    lines.append(f"seed = {report.seed}, instances = {report.instances}, {'PASS' if report.ok else 'FAIL'}")
    return CommandOutcome(report.to_dict(), "\n".join(lines), 0 if report.ok else 1)


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a machine-readable report")
    common.add_argument("--tolerance", help="residual tolerance for floating invariant subspaces, e.g. 1/1000000")

    parser = argparse.ArgumentParser(
        prog="lefschetz-local",
        description="Local contributions to the Lefschetz fixed point formula for constructible sheaves.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    helps = {
        "validate": "check a problem file against the schema and all invariants",
        "localize": "both hyperbolic localization traces of a conic sheaf",
        "local-trace": "local trace function of a fixed component, per cell",
        "contribution": "local contribution (Euler integral of the local trace function)",
        "global-trace": "global Lefschetz number of a cellular model",
        "verify": "compare the global trace with the sum of local contributions",
        "cc": "characteristic cycle multiplicities per stratum and chamber",
        "index": "microlocal index for the shipped test functions",
    }
    for name, text in helps.items():
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("problem", help="path to a JSON problem file")
        sub.add_argument("--k", type=int, help="parameter for generator fixtures")
    selftest = commands.add_parser("selftest", parents=[common], help="fixtures and randomized property suites")
    selftest.add_argument("--instances", type=int, help="localization instances (the hyperbolic suite runs a fifth of them)")
    selftest.add_argument("--seed", type=int, help="random seed")
    return parser


def _emit(outcome: CommandOutcome, as_json: bool) -> None:
    if as_json:
        print(json.dumps(outcome.report, indent=2, default=str))
    else:
        print(outcome.text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        return 0 if not exc.code else 2

    try:
        if args.tolerance:
            tolerance = rational(args.tolerance)
            if tolerance <= 0:
                raise ProblemFormatError(f"tolerance must be positive, got {tolerance}", element="--tolerance")
            use_settings(get_settings().with_tolerance(tolerance))
        logger.info(f"Running {args.command}")
        if args.command == "selftest":
            outcome = cmd_selftest(args)
        else:
            problem = load_problem(args.problem, k=args.k)
            outcome = _PROBLEM_COMMANDS[args.command](problem, args)
    except LefschetzError as exc:
        print(exc.diagnostic(), file=sys.stderr)
        if args.json:
            print(json.dumps(exc.to_dict(), indent=2))
        logger.info(f"{args.command} failed with exit code {exc.exit_code}")
        return exc.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}: {e}")
        return 2

    _emit(outcome, args.json)
    logger.info(f"{args.command} finished with exit code {outcome.exit_code}")
    return outcome.exit_code
