#!/usr/bin/env python3
"""Test script for the selftest suites and report"""

import random
import unittest

from sympy import Rational

from config import Settings
from fan import cone_map_analysis, cross_fan
from fixtures import example_5_1_components
from selftest import (
    HYPERBOLIC_MINIMUM,
    LOCALIZATION_MINIMUM,
    SuiteResult,
    classification_preserved,
    component_fixtures,
    cone_orbits,
    fixture_suite,
    hyperbolic_index,
    perturbation_suite,
    pipeline_suite,
    random_instance,
    ray_orbits,
    run_selftest,
)
from spectral import RationalMatrix


class TestHelpers(unittest.TestCase):
    def test_hyperbolic_index(self):
        self.assertEqual(hyperbolic_index(RationalMatrix.diagonal(Rational(1, 2), 2)), -1)
        self.assertEqual(hyperbolic_index(RationalMatrix.diagonal(-1, -1)), 1)

    def test_orbits_of_a_swap(self):
        analysis = cone_map_analysis(cross_fan(), RationalMatrix.from_rows([[0, 2], [2, 0]]))
        orbits = ray_orbits(analysis)
        self.assertEqual(sorted(len(o) for o in orbits), [2, 2])
        self.assertEqual(sum(len(o) for o in cone_orbits(analysis)), 9)

    def test_classification_check(self):
        line, _ = example_5_1_components("phi")
        self.assertTrue(classification_preserved(line, Rational(3, 2)))
        self.assertFalse(classification_preserved(line, Rational(1, 4)))

    def test_random_instances_are_reproducible(self):
        first = random_instance(random.Random(3))
        second = random_instance(random.Random(3))
        self.assertIsNotNone(first)
        self.assertEqual(first[1].matrix, second[1].matrix)
        self.assertEqual(first[0].stalks, second[0].stalks)

    def test_suite_result_records_failures(self):
        suite = SuiteResult("demo")
        suite.record(None)
        with self.assertLogs("selftest", level="WARNING"):
            suite.record("broken")
        self.assertFalse(suite.ok)
        self.assertEqual(suite.to_dict()["failures"], ["broken"])


class TestSuites(unittest.TestCase):
    def test_fixture_suite(self):
        suite = fixture_suite()
        self.assertEqual(suite.failures, [])
        self.assertEqual(suite.passed, 8)

    def test_component_suites(self):
        models = component_fixtures(max_k=3)
        for suite in (perturbation_suite(models), pipeline_suite(models)):
            with self.subTest(suite=suite.name):
                self.assertEqual(suite.failures, [])
                self.assertGreater(suite.passed, 0)

    def test_default_size_meets_acceptance_minimums(self):
        instances = Settings().selftest_instances
        self.assertGreaterEqual(instances, LOCALIZATION_MINIMUM)
        self.assertGreaterEqual(instances // 5, HYPERBOLIC_MINIMUM)

    def test_component_fixtures_cover_k_up_to_six(self):
        names = [model.name for model in component_fixtures()]
        self.assertEqual([n for n in names if n.startswith("M1")], [f"M1(k={k})" for k in range(1, 7)])

    def test_small_run(self):
        with self.assertLogs("selftest", level="WARNING") as captured:
            report = run_selftest(instances=4, seed=7)
        self.assertTrue(any("Reduced run" in line for line in captured.output))
        self.assertTrue(report.ok)
        self.assertEqual(report.to_dict()["verdict"], "PASS")
        self.assertEqual(len(report.to_frame()), 6)
        self.assertEqual(list(report.to_frame().columns), ["suite", "passed", "failed", "skipped"])


if __name__ == "__main__":
    unittest.main()
