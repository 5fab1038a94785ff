#!/usr/bin/env python3
"""Test script for reading and writing problem files"""

import json
import tempfile
import unittest
from pathlib import Path

from errors import EquivarianceViolation, ProblemFormatError
from fixtures import example_5_1
from problem_io import (
    CharacteristicCycleProblem,
    ContributionProblem,
    GlobalTraceProblem,
    LocalizationProblem,
    VerificationProblem,
    dump_problem,
    load_problem,
    parse_cone,
    parse_fiber,
    parse_problem,
    save_problem,
)
from selftest import EXPECTED_FIXTURES, FIXTURE_DIR

EXPECTED_KINDS = {
    "example_5_1_phi.json": VerificationProblem,
    "example_5_1_psi.json": VerificationProblem,
    "example_5_2_M1.json": ContributionProblem,
    "example_5_2_global.json": GlobalTraceProblem,
    "line_constant_localization.json": LocalizationProblem,
    "cross_hyperbolic_localization.json": LocalizationProblem,
    "interval_index.json": CharacteristicCycleProblem,
    "circle_index.json": CharacteristicCycleProblem,
}

LINE_PROBLEM = {
    "version": 1,
    "kind": "localization",
    "fan": {"generator": "line"},
    "sheaf": {"preset": "constant"},
    "map": [["2"]],
}


class TestShippedFixtures(unittest.TestCase):
    def test_every_fixture_loads(self):
        self.assertEqual(set(EXPECTED_KINDS), set(EXPECTED_FIXTURES))
        for file_name, kind in EXPECTED_KINDS.items():
            with self.subTest(fixture=file_name):
                self.assertIsInstance(load_problem(FIXTURE_DIR / file_name), kind)

    def test_explicit_file_matches_builder(self):
        problem = load_problem(FIXTURE_DIR / "example_5_1_phi.json")
        global_model, components = example_5_1("phi")
        self.assertEqual([m.name for m in problem.components], [m.name for m in components])
        self.assertEqual(problem.global_model.stalks, global_model.stalks)
        self.assertEqual(
            problem.components[1].fibers["Y"].normal_map, components[1].fibers["Y"].normal_map
        )

    def test_generator_parameter(self):
        self.assertEqual(load_problem(FIXTURE_DIR / "example_5_2_M1.json").name, "M1(k=3)")
        self.assertEqual(load_problem(FIXTURE_DIR / "example_5_2_M1.json", k=5).name, "M1(k=5)")

    def test_parameter_ignored_for_explicit_files(self):
        with self.assertLogs("problem_io", level="WARNING"):
            load_problem(FIXTURE_DIR / "interval_index.json", k=4)

    def test_corrupted_equivariance(self):
        with self.assertRaises(EquivarianceViolation) as caught:
            load_problem(FIXTURE_DIR / "corrupted_equivariance.json")
        self.assertEqual(caught.exception.element, "{}->{0}")


class TestRoundTrip(unittest.TestCase):
    def assertRoundTrips(self, problem):
        dumped = dump_problem(problem)
        again = parse_problem(json.loads(json.dumps(dumped)))
        self.assertEqual(type(again), type(problem))
        self.assertEqual(dump_problem(again), dumped)

    def test_explicit_fixtures(self):
        for file_name in ("example_5_1_phi.json", "cross_hyperbolic_localization.json", "circle_index.json"):
            with self.subTest(fixture=file_name):
                self.assertRoundTrips(load_problem(FIXTURE_DIR / file_name))

    def test_generated_fixtures(self):
        self.assertRoundTrips(load_problem(FIXTURE_DIR / "example_5_2_M1.json", k=2))
        self.assertRoundTrips(load_problem(FIXTURE_DIR / "example_5_2_global.json"))

    def test_save_and_load(self):
        problem = load_problem(FIXTURE_DIR / "line_constant_localization.json")
        with tempfile.TemporaryDirectory() as tmp:
            path = save_problem(problem, Path(tmp) / "nested" / "line.json")
            self.assertEqual(dump_problem(load_problem(path)), dump_problem(problem))


class TestMalformedInput(unittest.TestCase):
    def test_version_and_kind(self):
        with self.assertRaises(ProblemFormatError) as caught:
            parse_problem({**LINE_PROBLEM, "version": 2})
        self.assertEqual(caught.exception.element, "version")
        with self.assertRaises(ProblemFormatError):
            parse_problem({**LINE_PROBLEM, "kind": "sheaf"})
        with self.assertRaises(ProblemFormatError):
            parse_problem([LINE_PROBLEM])

    def test_floats_are_refused(self):
        with self.assertRaises(ProblemFormatError):
            parse_problem({**LINE_PROBLEM, "map": [[0.5]]})

    def test_generator_kind_mismatch(self):
        with self.assertRaises(ProblemFormatError):
            parse_problem({"version": 1, "kind": "global", "generator": {"name": "example_5_2_M1"}})
        with self.assertRaises(ProblemFormatError):
            parse_problem({"version": 1, "kind": "global", "generator": {"name": "nothing"}})

    def test_missing_and_broken_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ProblemFormatError):
                load_problem(Path(tmp) / "absent.json")
            broken = Path(tmp) / "broken.json"
            broken.write_text("{\"version\": 1,")
            with self.assertRaises(ProblemFormatError):
                load_problem(broken)

    def test_fiber_errors_name_the_cell(self):
        spec = {**LINE_PROBLEM, "map": [["1", "2"]]}
        with self.assertRaises(ProblemFormatError) as caught:
            parse_fiber(spec, "theta0")
        self.assertEqual(caught.exception.element, "theta0")

    def test_cone_labels(self):
        self.assertEqual(parse_cone("{0, 2}"), frozenset({0, 2}))
        self.assertEqual(parse_cone("{}"), frozenset())
        self.assertEqual(parse_cone([1]), frozenset({1}))
        with self.assertRaises(ProblemFormatError):
            parse_cone("0,1")
        with self.assertRaises(ProblemFormatError):
            parse_cone("{a}")


if __name__ == "__main__":
    unittest.main()
