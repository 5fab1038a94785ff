"""Fixture checks and randomized property suites.

``run_selftest`` is what ``main.py selftest`` executes; the test modules call
the same generators with their own instance counts.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd
import sympy
from sympy import ImmutableMatrix, Rational

from charcycle import microlocal_index
from config import get_settings
from conic import (
    ConicSheaf,
    Equivariant,
    localization_trace,
    trace_expanding,
    trace_shrinking,
    valid_expanding_subspaces,
    valid_shrinking_subspaces,
)
from errors import LefschetzError, NotConeCompatible, SingularMap
from euler import ConstructibleFn, euler_integral, hopf_global_trace
from exact import Scalar, format_scalar, gaussian
from fan import ORIGIN, ConeMapAnalysis, Fan, cone_map_analysis, cross_fan, line_fan, sector_fan, sector_rotation
from fixtures import example_5_1_components, example_5_2_M1, index_fixtures
from lefschetz import FixedComponentModel, local_contribution, pipeline_index, scaled_model, verify_fixed_point_formula
from problem_io import load_problem
from spectral import RationalMatrix, Subspace, check_nondegenerate, spectrum

logger = logging.getLogger(__name__)

LOCALIZATION_MINIMUM = 500
HYPERBOLIC_MINIMUM = 100

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"

# file -> (kind of check, expected value)
EXPECTED_FIXTURES: Dict[str, Tuple[str, object]] = {
    "example_5_1_phi.json": ("verify", ("-3", ["-4", "1"])),
    "example_5_1_psi.json": ("verify", ("-3", ["0", "-3"])),
    "example_5_2_M1.json": ("contribution", "2"),
    "example_5_2_global.json": ("global", "2"),
    "line_constant_localization.json": ("localize", "-1"),
    "cross_hyperbolic_localization.json": ("localize", "1"),
    "interval_index.json": ("index", "1"),
    "circle_index.json": ("index", "0"),
}

PERTURBATION_FACTORS = (Rational(1, 2), Rational(2, 3), Rational(3, 2), Rational(2))


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def record(self, failure: Optional[str]) -> None:
        if failure is None:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(failure)
            logger.warning(f"{self.name}: {failure}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "suite": self.name,
            "passed": self.passed,
            "failed": self.failed,
            "skipped": self.skipped,
            "failures": list(self.failures),
        }


@dataclass
class SelftestReport:
    suites: List[SuiteResult]
    seed: int
    instances: int

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.suites)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{k: v for k, v in s.to_dict().items() if k != "failures"} for s in self.suites])

    def to_dict(self) -> Dict[str, object]:
        return {
            "seed": self.seed,
            "instances": self.instances,
            "verdict": "PASS" if self.ok else "FAIL",
            "suites": [s.to_dict() for s in self.suites],
        }


# ---------------------------------------------------------------------------
# Random cone-compatible instances
# ---------------------------------------------------------------------------

_SCALES = (Rational(2), Rational(3), Rational(1, 2), Rational(1, 3), Rational(3, 2), Rational(2, 3))
_SWAP = RationalMatrix.from_rows([[0, 1], [1, 0]])


def _fan_families() -> Dict[str, Callable[[], Fan]]:
    return {
        "line": line_fan,
        "cross": cross_fan,
        "sector-3": lambda: sector_fan(3),
        "sector-5": lambda: sector_fan(5),
        "sector-6": lambda: sector_fan(6),
    }


def _power(R: RationalMatrix, j: int) -> RationalMatrix:
    result = RationalMatrix.identity(R.dim)
    for _ in range(j):
        result = R @ result
    return result


def random_map(rng: random.Random, family: str) -> RationalMatrix:
    """A nondegenerate candidate map for the fan family (not always cone compatible)."""
    s = rng.choice(_SCALES)
    sign = rng.choice((1, -1))
    if family == "line":
        return RationalMatrix.diagonal(sign * s)
    if family == "cross":
        t = rng.choice(_SCALES) * rng.choice((1, -1))
        if rng.random() < 0.5:
            return RationalMatrix.diagonal(sign * s, t)
        return RationalMatrix.from_rows([[0, sign * s], [t, 0]])
    if family == "sector-5":
        # only scalar maps permute the cones of an irregular pentagonal fan
        return RationalMatrix.diagonal(s, s)
    k = int(family.split("-")[1])
    rotation = _power(sector_rotation(k), rng.randrange(k))
    if rng.random() < 0.3:
        rotation = _SWAP @ rotation
    return rotation.scaled(sign * s)


def random_cone_map(rng: random.Random, attempts: int = 20) -> Optional[ConeMapAnalysis]:
    families = _fan_families()
    for _ in range(attempts):
        family = rng.choice(sorted(families))
        fan = families[family]()
        A = random_map(rng, family)
        if not check_nondegenerate(A):
            continue
        try:
            return cone_map_analysis(fan, A)
        except (NotConeCompatible, SingularMap):
            continue
    return None


def ray_orbits(analysis: ConeMapAnalysis) -> List[List[int]]:
    seen, orbits = set(), []
    for start in range(len(analysis.fan.rays)):
        if start in seen:
            continue
        orbit, current = [], start
        while current not in seen:
            seen.add(current)
            orbit.append(current)
            current = analysis.ray_permutation[current]
        orbits.append(orbit)
    return orbits


def cone_orbits(analysis: ConeMapAnalysis) -> List[List]:
    seen, orbits = set(), []
    for cone in analysis.fan.cones:
        if cone in seen:
            continue
        orbit, current = [], cone
        while current not in seen:
            seen.add(current)
            orbit.append(current)
            current = analysis.image(current)
        orbits.append(orbit)
    return orbits


def _random_scalar(rng: random.Random) -> Scalar:
    return gaussian(rng.choice(("1", "2", "-1", "1/2", "-3/2", "1+i", "2-i")))


def _random_block(rng: random.Random, n: int) -> ImmutableMatrix:
    return ImmutableMatrix([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)])


def zero_generization_piece(rng: random.Random, analysis: ConeMapAnalysis) -> Equivariant:
    """Stalks constant on cone orbits, all generization maps zero, random eta."""
    stalks, eta = {}, {}
    degrees = rng.sample((0, 1), rng.randint(1, 2))
    for orbit in cone_orbits(analysis):
        dims = {d: rng.randint(0, 2) for d in degrees}
        for cone in orbit:
            stalks[cone] = dims
            eta[cone] = {d: _random_block(rng, n) for d, n in dims.items() if n}
    sheaf = ConicSheaf(analysis.fan, stalks, {}, "zero-generization").validate()
    return Equivariant(sheaf, analysis, eta).validate()


def supported_piece(rng: random.Random, analysis: ConeMapAnalysis) -> Equivariant:
    """Constant sheaf on an invariant open or closed set of cones, eta a scalar."""
    fan = analysis.fan
    chosen = [ray for orbit in ray_orbits(analysis) if rng.random() < 0.5 for ray in orbit]
    closed = {ORIGIN} | {frozenset({ray}) for ray in chosen}
    kind = rng.choice(("closed", "open", "constant"))
    if kind == "closed":
        support = closed
    elif kind == "open":
        support = {c for c in fan.cones if c not in closed}
    else:
        support = set(fan.cones)
    sheaf = ConicSheaf.supported_on(fan, support, rng.choice((0, 1)), rng.randint(1, 2), name=kind)
    return Equivariant.scalar(sheaf, analysis, _random_scalar(rng))


def random_instance(rng: random.Random) -> Optional[Tuple[ConicSheaf, Equivariant]]:
    """Direct sum of one to three random pieces over a random cone-compatible map."""
    analysis = random_cone_map(rng)
    if analysis is None:
        return None
    pieces = []
    for _ in range(rng.randint(1, 3)):
        piece = zero_generization_piece(rng, analysis) if rng.random() < 0.5 else supported_piece(rng, analysis)
        if rng.random() < 0.2:
            piece = piece.shifted(1)
        pieces.append(piece)
    eta = reduce(lambda a, b: a.direct_sum(b), pieces)
    return eta.sheaf, eta


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

_SubspaceCache = Dict[Tuple[Fan, RationalMatrix], Tuple[List[Subspace], List[Subspace]]]


def _subspaces(G: ConicSheaf, eta: Equivariant, cache: _SubspaceCache) -> Tuple[List[Subspace], List[Subspace]]:
    key = (G.fan, eta.matrix)
    if key not in cache:
        cache[key] = (valid_expanding_subspaces(G, eta), valid_shrinking_subspaces(G, eta))
    return cache[key]


def check_localization_identity(
    G: ConicSheaf, eta: Equivariant, cache: Optional[_SubspaceCache] = None
) -> Tuple[Optional[List[Scalar]], Optional[str]]:
    """Every valid expanding and shrinking subbundle gives the same trace.

    Returns the computed values (None when no valid pair exists) and a failure
    message or None.
    """
    expanding, shrinking = _subspaces(G, eta, cache if cache is not None else {})
    if not expanding or not shrinking:
        return None, None
    values = [trace_expanding(G, eta, E, allow_perturbation=True) for E in expanding]
    values += [trace_shrinking(G, eta, S) for S in shrinking]
    if any(sympy.expand(v - values[0]) != 0 for v in values[1:]):
        shown = ", ".join(format_scalar(v) for v in values)
        return values, f"map {eta.matrix} on {G.fan.name}: traces disagree ({shown})"
    return values, None


def hyperbolic_index(A: RationalMatrix) -> int:
    """Lefschetz index of the isolated fixed point of a hyperbolic linear map."""
    det = (sympy.eye(A.dim) - A.entries).det()
    return 1 if det > 0 else -1


def classification_preserved(model: FixedComponentModel, t: Rational) -> bool:
    for fiber in model.fibers.values():
        scaled = fiber.normal_map.scaled(t)
        if not check_nondegenerate(scaled):
            return False
        before, after = spectrum(fiber.normal_map), spectrum(scaled)
        if before.has_ambiguity() or after.has_ambiguity() or before.classifications != after.classifications:
            return False
    return True


def component_fixtures(max_k: int = 6) -> List[FixedComponentModel]:
    models = example_5_1_components("phi") + example_5_1_components("psi")
    models += [example_5_2_M1(k) for k in range(1, max_k + 1)]
    return models


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _expected_value(path: Path, check: str, expected) -> Optional[str]:
    problem = load_problem(path)
    if check == "verify":
        report = verify_fixed_point_formula(problem.global_model, problem.components)
        got = (format_scalar(report.global_value), [format_scalar(v) for v in report.local_values.values()])
        if not report.passed:
            return f"{path.name}: {report.summary()}"
    elif check == "contribution":
        got = format_scalar(local_contribution(problem.model))
    elif check == "global":
        got = format_scalar(hopf_global_trace(problem.model))
    elif check == "localize":
        got = format_scalar(problem.as_fiber().localize(element=problem.name).value)
    else:
        values = {format_scalar(microlocal_index(problem.embedded, problem.function, f)) for f in problem.test_functions.values()}
        values.add(format_scalar(euler_integral(problem.function)))
        got = values.pop() if len(values) == 1 else sorted(values)
    if got != expected:
        return f"{path.name}: expected {expected}, got {got}"
    return None


def fixture_suite(directory: Path = FIXTURE_DIR) -> SuiteResult:
    suite = SuiteResult("fixtures")
    for file_name, (check, expected) in EXPECTED_FIXTURES.items():
        path = directory / file_name
        try:
            suite.record(_expected_value(path, check, expected))
        except LefschetzError as exc:
            suite.record(f"{file_name}: {exc.diagnostic()}")
    return suite


def localization_suite(instances: int, seed: int) -> SuiteResult:
    """Expanding and shrinking traces agree for random sheaves and all valid subbundles."""
    suite = SuiteResult("localization identity")
    rng = random.Random(seed)
    cache: _SubspaceCache = {}
    while suite.passed + suite.failed < instances:
        instance = random_instance(rng)
        if instance is None:
            suite.skipped += 1
            continue
        values, failure = check_localization_identity(*instance, cache=cache)
        if values is None:
            suite.skipped += 1
            continue
        suite.record(failure)
    return suite


def hyperbolic_suite(instances: int, seed: int) -> SuiteResult:
    """Constant sheaves: the local trace is rank * lambda * sign det(I - A)."""
    suite = SuiteResult("hyperbolic index")
    rng = random.Random(seed)
    while suite.passed + suite.failed < instances:
        analysis = random_cone_map(rng)
        if analysis is None:
            suite.skipped += 1
            continue
        degree, rank = rng.choice((0, 1)), rng.randint(1, 2)
        factor = _random_scalar(rng)
        sheaf = ConicSheaf.constant(analysis.fan, degree, rank)
        eta = Equivariant.scalar(sheaf, analysis, factor)
        expected = sympy.expand((-1) ** degree * rank * factor * hyperbolic_index(analysis.matrix))
        try:
            value = localization_trace(sheaf, eta).value
        except LefschetzError as exc:
            suite.record(f"map {analysis.matrix}: {exc.diagnostic()}")
            continue
        ok = sympy.expand(value - expected) == 0
        suite.record(None if ok else f"map {analysis.matrix}: got {format_scalar(value)}, expected {format_scalar(expected)}")
    return suite


def perturbation_suite(models: Sequence[FixedComponentModel]) -> SuiteResult:
    """Scaling every normal map by t leaves contributions unchanged when no eigenvalue changes class."""
    suite = SuiteResult("perturbation invariance")
    for model in models:
        base = local_contribution(model)
        for t in PERTURBATION_FACTORS:
            if not classification_preserved(model, t):
                suite.skipped += 1
                continue
            value = local_contribution(scaled_model(model, t))
            ok = sympy.expand(value - base) == 0
            suite.record(None if ok else f"{model.name} scaled by {t}: {format_scalar(value)} != {format_scalar(base)}")
    return suite


def pipeline_suite(models: Sequence[FixedComponentModel]) -> SuiteResult:
    """Index of the local trace function equals the local contribution."""
    suite = SuiteResult("pipeline identity")
    for model in models:
        if model.embedding is None:
            suite.skipped += 1
            continue
        contribution = local_contribution(model)
        for key in model.embedding.test_functions:
            value = pipeline_index(model, key)
            ok = sympy.expand(value - contribution) == 0
            suite.record(None if ok else f"{model.name} with {key}: index {format_scalar(value)} != {format_scalar(contribution)}")
    return suite


def index_suite(instances: int, seed: int) -> SuiteResult:
    """Index theorem for random cellular functions on the shipped embedded complexes."""
    suite = SuiteResult("index theorem")
    rng = random.Random(seed)
    fixtures = list(index_fixtures().values())
    for i in range(instances):
        X, tests = fixtures[i % len(fixtures)]
        phi = ConstructibleFn(X.complex, {cell: rng.randint(-3, 3) for cell in X.complex.cells})
        expected = euler_integral(phi)
        for name, f in tests.items():
            value = microlocal_index(X, phi, f)
            ok = sympy.expand(value - expected) == 0
            suite.record(None if ok else f"{X.name} with {name}: {format_scalar(value)} != {format_scalar(expected)}")
    return suite


def run_selftest(instances: Optional[int] = None, seed: Optional[int] = None) -> SelftestReport:
    settings = get_settings()
    instances = instances or settings.selftest_instances
    seed = settings.selftest_seed if seed is None else seed
    hyperbolic = max(1, instances // 5)
    logger.info(f"Running selftest with {instances} random instances, seed {seed}")
    if instances < LOCALIZATION_MINIMUM or hyperbolic < HYPERBOLIC_MINIMUM:
        logger.warning(
            f"Reduced run: {instances} localization and {hyperbolic} hyperbolic instances "
            f"(acceptance needs {LOCALIZATION_MINIMUM} and {HYPERBOLIC_MINIMUM})"
        )
    models = component_fixtures()
    suites = [
        fixture_suite(),
        localization_suite(instances, seed),
        hyperbolic_suite(hyperbolic, seed + 1),
        perturbation_suite(models),
        pipeline_suite(models),
        index_suite(max(1, instances // 16), seed + 2),
    ]
    report = SelftestReport(suites, seed, instances)
    logger.info(f"Selftest verdict: {'PASS' if report.ok else 'FAIL'}")
    return report
