#!/usr/bin/env python3
"""Test script for conic sheaves and the two localization traces"""

import random
import unittest

import sympy
from sympy import ImmutableMatrix, Rational

from conic import (
    ConicSheaf,
    Equivariant,
    holim_weights,
    localization_trace,
    trace_expanding,
    trace_shrinking,
    valid_expanding_subspaces,
    valid_shrinking_subspaces,
)
from errors import DegenerateNormalMap, EquivarianceViolation, FunctorialityViolation, InvalidSubbundle, StalkShapeError
from fan import ORIGIN, cone_map_analysis, cross_fan, line_fan
from selftest import check_localization_identity, hyperbolic_suite, localization_suite, random_instance
from spectral import RationalMatrix, Subspace

X_AXIS = Subspace.span([[1, 0]], 2, "x-axis")
Y_AXIS = Subspace.span([[0, 1]], 2, "y-axis")


def constant_on_cross(A, value=1, degree=0, rank=1):
    analysis = cone_map_analysis(cross_fan(), A)
    sheaf = ConicSheaf.constant(analysis.fan, degree, rank)
    return sheaf, Equivariant.scalar(sheaf, analysis, value)


class TestConstantSheafValues(unittest.TestCase):
    def test_line(self):
        analysis = cone_map_analysis(line_fan(), RationalMatrix.diagonal(2))
        sheaf = ConicSheaf.constant(analysis.fan)
        self.assertEqual(localization_trace(sheaf, Equivariant.identity(sheaf, analysis)).value, -1)

    def test_cross_maps(self):
        cases = [
            (RationalMatrix.diagonal("1/2", 2), -1),
            (RationalMatrix.diagonal(-2, 2), -1),
            (RationalMatrix.from_rows([[0, 2], [2, 0]]), -1),
            (RationalMatrix.from_rows([[0, -2], [2, 0]]), 1),
            (RationalMatrix.diagonal(-1, -1), 1),
            (RationalMatrix.diagonal(-2, "1/2"), 1),
            (RationalMatrix.diagonal(2, "-1/2"), -1),
        ]
        for A, expected in cases:
            with self.subTest(map=str(A)):
                sheaf, eta = constant_on_cross(A)
                self.assertEqual(localization_trace(sheaf, eta).value, expected)

    def test_scalar_rank_and_degree(self):
        sheaf, eta = constant_on_cross(RationalMatrix.diagonal(2, "1/2"), value="1+i", degree=1, rank=2)
        self.assertEqual(sympy.expand(localization_trace(sheaf, eta).value), sympy.expand(2 * (1 + sympy.I)))

    def test_every_valid_pair_agrees(self):
        sheaf, eta = constant_on_cross(RationalMatrix.diagonal(-2, "1/2"))
        shrinking = valid_shrinking_subspaces(sheaf, eta)
        self.assertTrue(any(S.same_span(Y_AXIS) for S in shrinking))
        self.assertTrue(any(S.dim == 2 for S in shrinking))
        for S in shrinking:
            self.assertEqual(trace_shrinking(sheaf, eta, S), 1)
        for E in valid_expanding_subspaces(sheaf, eta):
            self.assertEqual(trace_expanding(sheaf, eta, E), 1)

    def test_explicit_subbundles(self):
        sheaf, eta = constant_on_cross(RationalMatrix.diagonal(-2, "1/2"))
        result = localization_trace(sheaf, eta, expanding=X_AXIS, shrinking=Subspace.whole(2))
        self.assertEqual((result.expanding_value, result.shrinking_value), (1, 1))
        self.assertEqual(result.to_dict()["value"], "1")

    def test_rotation_uses_perturbation(self):
        sheaf, eta = constant_on_cross(RationalMatrix.diagonal(-1, -1))
        result = localization_trace(sheaf, eta)
        self.assertGreater(result.perturbation, 1)


class TestOtherSheaves(unittest.TestCase):
    def setUp(self):
        self.analysis = cone_map_analysis(cross_fan(), RationalMatrix.diagonal(2, "1/2"))
        self.fan = self.analysis.fan

    def trace(self, sheaf, value=1):
        return localization_trace(sheaf, Equivariant.scalar(sheaf, self.analysis, value)).value

    def test_skyscraper_sees_only_the_origin(self):
        self.assertEqual(self.trace(ConicSheaf.skyscraper(self.fan), 3), 3)

    def test_zero_sheaf(self):
        self.assertEqual(self.trace(ConicSheaf.zero(self.fan)), 0)

    def test_shift_negates(self):
        constant = ConicSheaf.constant(self.fan)
        self.assertEqual(self.trace(constant.shifted(1)), -self.trace(constant))

    def test_direct_sum_adds(self):
        first = Equivariant.scalar(ConicSheaf.constant(self.fan), self.analysis, 2)
        second = Equivariant.scalar(ConicSheaf.skyscraper(self.fan, degree=1), self.analysis, Rational(1, 2))
        total = first.direct_sum(second).validate()
        value = localization_trace(total.sheaf, total).value
        self.assertEqual(value, -2 - Rational(1, 2))

    def test_holim_weights(self):
        weights = holim_weights(self.fan, self.fan.cones)
        self.assertEqual(weights[ORIGIN], 1)
        self.assertEqual(sum(abs(w) for w in weights.values()), 1)
        off_axis = [c for c in self.fan.cones if not c <= {0, 2}]
        self.assertEqual(sum(holim_weights(self.fan, off_axis).values()), 2)

    def test_serialization_labels(self):
        data = ConicSheaf.constant(line_fan()).to_dict()
        self.assertEqual(data["stalks"]["{}"], {"0": 1})
        self.assertEqual(data["generization"]["{}->{0}"], {"0": [["1"]]})


class TestValidation(unittest.TestCase):
    def setUp(self):
        self.analysis = cone_map_analysis(cross_fan(), RationalMatrix.diagonal(2, "1/2"))
        self.constant = ConicSheaf.constant(self.analysis.fan)

    def test_corrupted_equivariance(self):
        eta = {cone: {0: ImmutableMatrix([[1]])} for cone in self.analysis.fan.cones}
        eta[frozenset({0})] = {0: ImmutableMatrix([[2]])}
        with self.assertRaises(EquivarianceViolation) as caught:
            Equivariant(self.constant, self.analysis, eta).validate()
        self.assertEqual(caught.exception.exit_code, 2)

    def test_noncommuting_generizations(self):
        generization = dict(self.constant.generization)
        generization[(frozenset({0}), frozenset({0, 1}))] = {0: ImmutableMatrix([[2]])}
        with self.assertRaises(FunctorialityViolation):
            ConicSheaf(self.analysis.fan, self.constant.stalks, generization).validate()

    def test_wrong_shapes(self):
        generization = dict(self.constant.generization)
        generization[(ORIGIN, frozenset({0}))] = {0: ImmutableMatrix([[1, 0]])}
        with self.assertRaises(StalkShapeError):
            ConicSheaf(self.analysis.fan, self.constant.stalks, generization).validate()
        with self.assertRaises(StalkShapeError):
            ConicSheaf(self.analysis.fan, {frozenset({0, 2}): {0: 1}}).validate()

    def test_invalid_and_degenerate_inputs(self):
        eta = Equivariant.identity(self.constant, self.analysis)
        with self.assertRaises(InvalidSubbundle):
            trace_expanding(self.constant, eta, Y_AXIS)
        with self.assertRaises(InvalidSubbundle):
            trace_shrinking(self.constant, eta, X_AXIS)
        analysis = cone_map_analysis(cross_fan(), RationalMatrix.diagonal(1, 2))
        degenerate = Equivariant.identity(ConicSheaf.constant(analysis.fan), analysis)
        with self.assertRaises(DegenerateNormalMap):
            localization_trace(degenerate.sheaf, degenerate)


class TestRandomInstances(unittest.TestCase):
    def test_localization_identity_on_random_sheaves(self):
        suite = localization_suite(500, seed=11)
        self.assertEqual(suite.failures, [])
        self.assertGreaterEqual(suite.passed, 500)

    def test_hyperbolic_index(self):
        suite = hyperbolic_suite(100, seed=12)
        self.assertEqual(suite.failures, [])
        self.assertEqual(suite.passed, 100)

    def test_random_instances_are_equivariant(self):
        rng = random.Random(13)
        checked = 0
        for _ in range(40):
            instance = random_instance(rng)
            if instance is None:
                continue
            sheaf, eta = instance
            sheaf.validate()
            eta.validate()
            values, failure = check_localization_identity(sheaf, eta)
            self.assertIsNone(failure)
            checked += 1
        self.assertGreater(checked, 0)


if __name__ == "__main__":
    unittest.main()
