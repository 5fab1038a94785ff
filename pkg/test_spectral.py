#!/usr/bin/env python3
"""Test script for eigenvalue classification and subbundle validation"""

import unittest
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st
import sympy
from sympy import Rational

from errors import BoundaryAmbiguous, DegenerateNormalMap, ProblemFormatError, UnitCircleRequired
from spectral import (
    EigenClass,
    EigenEnclosure,
    RationalMatrix,
    Subspace,
    check_nondegenerate,
    minimal_expanding,
    minimal_shrinking,
    satisfies_unit_circle_condition,
    spectrum,
    split_unit_circle,
    unit_circle_perturbation,
    validate_expanding,
    validate_shrinking,
)

ROT90 = RationalMatrix.from_rows([[0, -1], [1, 0]])
FIBONACCI = RationalMatrix.from_rows([[1, 1], [1, 0]])


def companion(lower):
    """Companion matrix of x^n + c_{n-1} x^{n-1} + ... + c_0, given [c_{n-1}, ..., c_0]."""
    n = len(lower)
    rows = [[0] * n for _ in range(n)]
    for i in range(1, n):
        rows[i][i - 1] = 1
    for i, c in enumerate(reversed(lower)):
        rows[i][n - 1] = -c
    return RationalMatrix.from_rows(rows)


class TestRationalMatrix(unittest.TestCase):
    def test_entries_must_be_rational(self):
        with self.assertRaises(ProblemFormatError):
            RationalMatrix.from_rows([[0.5]])
        with self.assertRaises(ProblemFormatError):
            RationalMatrix.from_rows([[1, 2]])

    def test_parses_rational_strings(self):
        A = RationalMatrix.from_rows([["1/2", "0"], ["0", "-3"]])
        self.assertEqual(A, RationalMatrix.diagonal("1/2", -3))
        self.assertEqual(A.determinant(), Rational(-3, 2))
        self.assertEqual(A.apply((2, 1)), (1, -3))
        self.assertEqual(str(A), "[1/2 0; 0 -3]")

    def test_scaling_and_composition(self):
        self.assertEqual(ROT90 @ ROT90, RationalMatrix.diagonal(-1, -1))
        self.assertEqual(ROT90.scaled(2).rows(), [["0", "-2"], ["2", "0"]])


class TestSpectrum(unittest.TestCase):
    def test_diagonal_classification(self):
        report = spectrum(RationalMatrix.diagonal(2, "1/2", "-1/2"))
        self.assertEqual(report.dimension, 3)
        self.assertEqual(
            sorted(c.value for c in report.classifications),
            sorted([EigenClass.OUTSIDE_DISK.value, EigenClass.IN_UNIT_INTERVAL.value,
                    EigenClass.INSIDE_DISK_OFF_INTERVAL.value]),
        )
        self.assertFalse(report.has_ambiguity())

    def test_complex_pair_uses_exact_modulus(self):
        report = spectrum(ROT90.scaled(2))
        self.assertEqual(set(report.classifications), {EigenClass.OUTSIDE_DISK})
        report = spectrum(ROT90.scaled("1/2"))
        self.assertEqual(set(report.classifications), {EigenClass.INSIDE_DISK_OFF_INTERVAL})

    def test_unit_circle_eigenvalues_are_ambiguous(self):
        self.assertTrue(spectrum(ROT90).has_ambiguity())
        self.assertFalse(satisfies_unit_circle_condition(ROT90))
        with self.assertRaises(BoundaryAmbiguous):
            split_unit_circle(ROT90)

    def test_cubic_factor_is_refined(self):
        companion = RationalMatrix.from_rows([[0, 0, 2], [1, 0, 0], [0, 1, 0]])
        report = spectrum(companion)
        self.assertEqual(report.dimension, 3)
        self.assertEqual(set(report.classifications), {EigenClass.OUTSIDE_DISK})

    def test_quartic_on_the_circle_is_decided_exactly(self):
        # x^4 + 1: four primitive eighth roots of unity.
        A = companion([0, 0, 0, 1])
        report = spectrum(A, refinement_cap=8)
        self.assertEqual(len(report.eigenvalues), 4)
        self.assertTrue(all(e.modulus_side() == 0 for e in report.eigenvalues))
        self.assertEqual(set(report.classifications), {EigenClass.ON_BOUNDARY_AMBIGUOUS})
        self.assertFalse(satisfies_unit_circle_condition(A))
        self.assertEqual(unit_circle_perturbation(A), Rational(3, 2))

    def test_mixed_palindromic_quartic(self):
        # x^4 - x^3 - x^2 - x + 1: a conjugate pair on the circle and two real reciprocal roots.
        report = spectrum(companion([-1, -1, -1, 1]), refinement_cap=16)
        sides = sorted(e.modulus_side() for e in report.eigenvalues)
        self.assertEqual(sides, [-1, 0, 0, 1])
        self.assertEqual(report.count(EigenEnclosure.in_unit_interval), 1)
        self.assertEqual(report.classifications.count(EigenClass.ON_BOUNDARY_AMBIGUOUS), 2)

    def test_non_palindromic_quartic_has_no_circle_roots(self):
        report = spectrum(companion([0, 0, 0, 3]), refinement_cap=16)
        self.assertTrue(all(e.modulus_side() == 1 for e in report.eigenvalues))
        self.assertFalse(report.has_ambiguity())

    def test_nondegeneracy(self):
        self.assertFalse(check_nondegenerate(RationalMatrix.identity(2)))
        self.assertFalse(check_nondegenerate(RationalMatrix.diagonal(1, 2)))
        self.assertTrue(check_nondegenerate(RationalMatrix.diagonal(-1, 2)))
        with self.assertRaises(DegenerateNormalMap):
            minimal_shrinking(RationalMatrix.diagonal(1, 2))


class TestSubbundles(unittest.TestCase):
    def setUp(self):
        self.A = RationalMatrix.diagonal(2, "1/2")
        self.x_axis = Subspace.span([[1, 0]], 2, "x-axis")
        self.y_axis = Subspace.span([[0, 1]], 2, "y-axis")

    def test_split_is_exact(self):
        gplus, gminus = split_unit_circle(self.A)
        self.assertTrue(gplus.is_exact and gminus.is_exact)
        self.assertTrue(gplus.same_span(self.x_axis))
        self.assertTrue(gminus.same_span(self.y_axis))

    def test_minimal_subbundles(self):
        self.assertTrue(minimal_shrinking(self.A).same_span(self.y_axis))
        self.assertTrue(minimal_expanding(self.A).same_span(self.x_axis))

    def test_validation(self):
        self.assertTrue(validate_expanding(self.A, self.x_axis))
        self.assertFalse(validate_expanding(self.A, Subspace.whole(2)))
        self.assertFalse(validate_expanding(self.A, Subspace.zero(2)))
        self.assertTrue(validate_shrinking(self.A, self.y_axis))
        self.assertFalse(validate_shrinking(self.A, Subspace.whole(2)))
        self.assertFalse(validate_shrinking(self.A, Subspace.zero(2)))

    def test_non_invariant_candidate_is_refused(self):
        diagonal = Subspace.span([[1, 1]], 2)
        self.assertFalse(validate_shrinking(self.A, diagonal))
        self.assertFalse(validate_expanding(self.A, diagonal))

    def test_negative_eigenvalues_allow_larger_subbundles(self):
        A = RationalMatrix.diagonal(-2, "1/2")
        self.assertTrue(validate_shrinking(A, Subspace.whole(2)))
        self.assertTrue(validate_shrinking(A, self.y_axis))
        self.assertTrue(validate_expanding(A, self.x_axis))

    def test_wrong_dimension(self):
        with self.assertRaises(ProblemFormatError):
            validate_shrinking(self.A, Subspace.zero(3))

    def test_span_drops_dependent_vectors(self):
        S = Subspace.span([[1, 0], [2, 0], [0, 0]], 2)
        self.assertEqual(S.dim, 1)
        self.assertEqual(S.canonical_key(), self.x_axis.canonical_key())


class TestUnitCirclePerturbation(unittest.TestCase):
    def test_no_perturbation_when_off_the_circle(self):
        self.assertEqual(unit_circle_perturbation(RationalMatrix.diagonal(2, "1/2")), 1)

    def test_rotation_is_pushed_outside(self):
        t = unit_circle_perturbation(ROT90)
        self.assertGreater(t, 1)
        self.assertTrue(satisfies_unit_circle_condition(ROT90.scaled(t)))

    def test_expanding_needs_opt_in(self):
        with self.assertRaises(UnitCircleRequired):
            minimal_expanding(ROT90)
        self.assertEqual(minimal_expanding(ROT90, allow_perturbation=True).dim, 2)
        with self.assertRaises(UnitCircleRequired):
            validate_expanding(ROT90, Subspace.whole(2))
        self.assertTrue(validate_expanding(ROT90, Subspace.whole(2), allow_perturbation=True))

    def test_minus_identity(self):
        minus = RationalMatrix.diagonal(-1, -1)
        self.assertTrue(validate_shrinking(minus, Subspace.zero(2)))
        self.assertTrue(validate_shrinking(minus, Subspace.whole(2)))
        self.assertEqual(minimal_expanding(minus, allow_perturbation=True).dim, 2)


class TestFloatingSubspaces(unittest.TestCase):
    def test_straddling_factor_gives_certified_float_basis(self):
        gplus, gminus = split_unit_circle(FIBONACCI)
        self.assertFalse(gplus.is_exact)
        self.assertEqual((gplus.dim, gminus.dim), (1, 1))
        self.assertTrue(gplus.is_invariant(FIBONACCI))
        golden = (1 + 5 ** 0.5) / 2
        self.assertTrue(gplus.contains_vector([golden, 1.0]))
        self.assertFalse(gplus.contains_vector([1.0, golden]))
        self.assertLess(gplus.residual, 1e-9)

    def test_float_subbundles_validate(self):
        gplus, gminus = split_unit_circle(FIBONACCI)
        self.assertTrue(validate_expanding(FIBONACCI, gplus))
        self.assertTrue(validate_shrinking(FIBONACCI, gminus))


nonunit = st.fractions(min_value=-4, max_value=4, max_denominator=6).filter(lambda q: q != 0 and abs(q) != 1)


class TestDiagonalProperties(unittest.TestCase):
    @settings(max_examples=60, deadline=None)
    @given(st.lists(nonunit, min_size=1, max_size=3))
    def test_splitting_counts_moduli(self, diagonal):
        A = RationalMatrix.diagonal(*diagonal)
        gplus, gminus = split_unit_circle(A)
        self.assertEqual(gplus.dim, sum(1 for d in diagonal if abs(d) > 1))
        self.assertEqual(gplus.dim + gminus.dim, len(diagonal))
        self.assertTrue(validate_expanding(A, gplus))
        shrinking = minimal_shrinking(A)
        self.assertEqual(shrinking.dim, sum(1 for d in diagonal if Fraction(0) < d < 1))
        self.assertTrue(validate_shrinking(A, shrinking))


small_matrices = st.lists(
    st.lists(st.integers(min_value=-2, max_value=2), min_size=3, max_size=3), min_size=3, max_size=3
)


class TestSpectrumProperties(unittest.TestCase):
    @settings(max_examples=25, deadline=None)
    @given(small_matrices)
    def test_product_of_centers_matches_determinant(self, rows):
        A = RationalMatrix.from_rows(rows)
        report = spectrum(A)
        product, envelope, magnitude = complex(1), 1.0, 1.0
        for eigen in report.eigenvalues:
            center = complex(sympy.N(eigen.center, 30))
            for _ in range(eigen.multiplicity):
                product *= center
                envelope *= abs(center) + float(eigen.radius)
                magnitude *= abs(center)
        self.assertLessEqual(abs(product - float(A.determinant())), envelope - magnitude + 1e-9)

    @settings(max_examples=25, deadline=None)
    @given(small_matrices)
    def test_transpose_has_the_same_spectrum(self, rows):
        A = RationalMatrix.from_rows(rows)
        report, transposed = spectrum(A), spectrum(A.transpose())
        self.assertEqual(report.characteristic_polynomial, transposed.characteristic_polynomial)
        self.assertEqual(
            sorted((e.classification.value, e.multiplicity, e.is_real) for e in report.eigenvalues),
            sorted((e.classification.value, e.multiplicity, e.is_real) for e in transposed.eigenvalues),
        )


if __name__ == "__main__":
    unittest.main()
