#!/usr/bin/env python3
"""Test script for Morse multiplicities, characteristic cycles and the microlocal index"""

import itertools
import random
import unittest

import numpy as np
from scipy.optimize import linprog
from sympy import Matrix

from charcycle import (
    EmbeddedComplex,
    TestFunction,
    arrangement_samples,
    characteristic_cycle,
    critical_strata,
    microlocal_index,
    morse_multiplicity,
    sublevel_euler,
)
from errors import AmbientDimTooLarge, InvalidComplex, NonGenericCovector, NonGenericSection, NotCompact, ProblemFormatError
from euler import ConstructibleFn, euler_integral
from fixtures import filled_triangle, index_fixtures, interval_complex, local_half_planes, local_line, square_circle
from selftest import index_suite


def chamber_is_open(normals, signs):
    """Largest margin t with s_i * (h_i . y) >= t inside the unit box; the chamber exists iff t > 0."""
    dim = normals.shape[1]
    cost = np.zeros(dim + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([-(np.array(signs)[:, None] * normals), np.ones((len(signs), 1))])
    b_ub = np.zeros(len(signs))
    bounds = [(-1, 1)] * dim + [(0, 1)]
    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    return result.status == 0 and -result.fun > 1e-9


def sampled_signs(normals, dim):
    found = set()
    for y in arrangement_samples([Matrix(h) for h in normals.tolist()], dim):
        values = [sum(a * b for a, b in zip(h, y)) for h in normals.tolist()]
        if all(v != 0 for v in values):
            found.add(tuple(1 if v > 0 else -1 for v in values))
    return found


RADIUS = 0.05
DEPTH = 1e-4
PLANE_DIRECTIONS = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def sublevel_rows(X, sigma, xi):
    """Halfspaces (rows, rhs) cutting out K = box(RADIUS) cap {f <= -DEPTH} around the barycenter of sigma.

    f(x) = xi . (x - p) + |t . (x - p)| along a tangent t of sigma, so f restricted to sigma
    has a strict minimum at p.
    """
    n = X.ambient_dim
    p = np.array([float(v) for v in X.barycenter(sigma)])
    xi = np.array([float(v) for v in xi])
    slopes = [xi]
    for tangent in X.tangent_vectors(sigma):
        t = np.array([float(v) for v in tangent])
        slopes = [xi + t, xi - t]
    rows = [np.eye(n), -np.eye(n)] + [s[None, :] for s in slopes]
    rhs = [p + RADIUS, RADIUS - p] + [np.array([s @ p - DEPTH]) for s in slopes]
    return np.vstack(rows), np.concatenate(rhs)


def closed_face_meets(X, vertices, rows, rhs):
    """Whether the closed simplex on ``vertices`` meets the polytope {rows . x <= rhs}."""
    V = np.array([[float(v) for v in X.vertices[name]] for name in vertices]).T
    k = len(vertices)
    result = linprog(
        np.zeros(k), A_ub=rows @ V, b_ub=rhs, A_eq=np.ones((1, k)), b_eq=[1.0],
        bounds=[(0, None)] * k, method="highs",
    )
    return result.status == 0


def open_cell_euler(X, cell, rows, rhs, cache):
    """chi_c of the open simplex ``cell`` inside K, by inclusion-exclusion over its closed faces."""
    vertices = X.cells[cell]
    total = 0
    for size in range(1, len(vertices) + 1):
        for face in itertools.combinations(sorted(vertices), size):
            if face not in cache:
                cache[face] = closed_face_meets(X, face, rows, rhs)
            if cache[face]:
                total += (-1) ** (len(vertices) - size)
    return total


def vertex_star_case(rng):
    """A vertex of a random planar fan of edges and triangles."""
    chosen = sorted(rng.sample(range(8), rng.randint(2, 4)))
    vertices = {"o": (0, 0)}
    cells = {"o": ("o",)}
    for j, index in enumerate(chosen):
        scale = rng.choice((1, 2))
        vertices[f"v{j}"] = tuple(scale * c for c in PLANE_DIRECTIONS[index])
        cells[f"v{j}"] = (f"v{j}",)
        cells[f"e{j}"] = ("o", f"v{j}")
    for j in range(len(chosen)):
        nxt = (j + 1) % len(chosen)
        if len(chosen) == 2 and j == 1:
            break
        if (chosen[nxt] - chosen[j]) % 8 <= 3 and rng.random() < 0.7:
            cells[f"f{j}"] = (f"v{j}", f"v{nxt}")
            cells[f"t{j}"] = ("o", f"v{j}", f"v{nxt}")
    X = EmbeddedComplex(vertices, cells, name="vertex star")
    directions = [X.point(f"v{j}") for j in range(len(chosen))]
    while True:
        xi = (rng.randint(-3, 3), rng.randint(-3, 3))
        if all(xi[0] * d[0] + xi[1] * d[1] != 0 for d in directions):
            return X, "o", xi


def book_case(rng):
    """An edge of R^3 shared by several triangular pages."""
    vertices = {"a": (-1, 0, 0), "b": (1, 0, 0)}
    cells = {"a": ("a",), "b": ("b",), "s": ("a", "b")}
    pages = rng.sample(range(8), rng.randint(1, 4))
    offsets = []
    for j, index in enumerate(pages):
        dy, dz = PLANE_DIRECTIONS[index]
        scale = rng.choice((1, 2))
        offsets.append((dy, dz))
        vertices[f"c{j}"] = (rng.choice((-1, 0, 1)), scale * dy, scale * dz)
        cells[f"c{j}"] = (f"c{j}",)
        cells[f"ac{j}"] = ("a", f"c{j}")
        cells[f"bc{j}"] = ("b", f"c{j}")
        cells[f"p{j}"] = ("a", "b", f"c{j}")
    X = EmbeddedComplex(vertices, cells, name="book")
    while True:
        xi = (0, rng.randint(-3, 3), rng.randint(-3, 3))
        if all(xi[1] * dy + xi[2] * dz != 0 for dy, dz in offsets):
            return X, "s", xi


class TestMorseAgainstGeometry(unittest.TestCase):
    def check_case(self, X, sigma, xi, phi):
        rows, rhs = sublevel_rows(X, sigma, xi)
        cache = {}
        chi = {cell: open_cell_euler(X, cell, rows, rhs, cache) for cell in X.cells}
        self.assertEqual(chi[sigma], 0)
        for cell in X.cells:
            if cell not in X.star(sigma):
                self.assertEqual(chi[cell], 0, cell)

        pairings = {rho: sum(a * b for a, b in zip(xi, d)) for rho, d in X.edge_directions(sigma).items()}
        self.assertEqual(sublevel_euler(X, sigma, pairings), {tau: chi[tau] for tau in X.star(sigma)})
        expected = phi(sigma) - sum(phi(cell) * n for cell, n in chi.items())
        self.assertEqual(morse_multiplicity(X, phi, sigma, xi), expected)

    def test_random_local_configurations(self):
        rng = random.Random(41)
        cases = 0
        for build in (vertex_star_case, book_case) * 30:
            X, sigma, xi = build(rng)
            phi = ConstructibleFn(X.complex, {cell: rng.randint(-3, 3) for cell in X.cells})
            with self.subTest(case=cases, complex=X.name, xi=xi):
                self.check_case(X, sigma, xi, phi)
            cases += 1
        self.assertGreaterEqual(cases, 50)


def corner_simplex(dim):
    """The standard simplex of the given dimension with all its faces, seen from the vertex o."""
    names = ["o", "x", "y", "z"][: dim + 1]
    coords = {name: tuple(1 if i + 1 == k else 0 for i in range(dim)) for k, name in enumerate(names)}
    cells = {"".join(face): face for size in range(1, dim + 2) for face in itertools.combinations(names, size)}
    return EmbeddedComplex(coords, cells, name=f"corner {dim}-simplex")


class TestSublevelRecursion(unittest.TestCase):
    def test_all_negative_full_dimensional_cell(self):
        for dim, xi in ((1, (-2,)), (2, (-1, -2)), (3, (-1, -1, -3))):
            with self.subTest(dim=dim):
                X = corner_simplex(dim)
                pairings = {rho: sum(a * b for a, b in zip(xi, d)) for rho, d in X.edge_directions("o").items()}
                self.assertTrue(all(value < 0 for value in pairings.values()))
                chi = sublevel_euler(X, "o", pairings)
                top = max(X.cells, key=len)
                faces = [rho for rho in X.star("o") if rho != top]
                # Nonempty, so the recursion starts from 1.
                self.assertEqual(chi[top], 1 - sum(chi[rho] for rho in faces))
                self.assertEqual(chi[top], (-1) ** (dim - 1))
                rows, rhs = sublevel_rows(X, "o", xi)
                self.assertEqual(chi[top], open_cell_euler(X, top, rows, rhs, {}))

    def test_mixed_signs_cancel(self):
        triangle = corner_simplex(2)
        self.assertEqual(sublevel_euler(triangle, "o", {"ox": -1, "oy": 1})["oxy"], 0)
        self.assertEqual(sublevel_euler(triangle, "o", {"ox": 1, "oy": 1})["oxy"], 0)
        rows, rhs = sublevel_rows(triangle, "o", (-1, 1))
        self.assertEqual(open_cell_euler(triangle, "oxy", rows, rhs, {}), 0)


class TestArrangementChambers(unittest.TestCase):
    def test_samples_hit_every_chamber(self):
        rng = random.Random(21)
        cases = 0
        while cases < 60:
            dim = rng.choice((1, 2, 3))
            count = rng.randint(1, 4)
            normals = np.array([[rng.randint(-3, 3) for _ in range(dim)] for _ in range(count)])
            if not normals.any(axis=1).all():
                continue
            expected = {
                signs for signs in itertools.product((1, -1), repeat=count)
                if chamber_is_open(normals.astype(float), signs)
            }
            with self.subTest(normals=normals.tolist()):
                self.assertEqual(sampled_signs(normals, dim), expected)
            cases += 1

    def test_coordinate_arrangement(self):
        normals = np.eye(3, dtype=int)
        self.assertEqual(len(sampled_signs(normals, 3)), 8)


class TestMorseMultiplicity(unittest.TestCase):
    def test_smooth_point_of_the_line(self):
        X = local_line()
        constant = ConstructibleFn.constant(X.complex)
        self.assertEqual(morse_multiplicity(X, constant, "o", [1]), 0)
        self.assertEqual(morse_multiplicity(X, constant, "o", [-1]), 0)

    def test_boundary_of_a_half_line(self):
        X = local_line()
        half = ConstructibleFn.indicator(X.complex, ["o", "pos", "p"])
        self.assertEqual(morse_multiplicity(X, half, "o", [1]), 1)
        self.assertEqual(morse_multiplicity(X, half, "o", ["-1/2"]), 0)

    def test_edge_of_a_closed_half_plane(self):
        X = local_half_planes()
        upper = ["upper", "axis", "w", "e", "nw", "ne", "top", "west_up", "east_up"]
        phi = ConstructibleFn.indicator(X.complex, upper)
        self.assertEqual(morse_multiplicity(X, phi, "axis", [0, 1]), 1)
        self.assertEqual(morse_multiplicity(X, phi, "axis", [0, -1]), 0)
        cycle = characteristic_cycle(X, phi)
        self.assertEqual(cycle.multiplicity("axis", [0, 3]), 1)
        self.assertEqual(list(cycle.to_frame().columns), ["stratum", "signs", "covector", "multiplicity"])

    def test_nongeneric_covectors(self):
        X = interval_complex()
        phi = ConstructibleFn.constant(X.complex)
        with self.assertRaises(NonGenericCovector):
            morse_multiplicity(X, phi, "e", [1])
        with self.assertRaises(ProblemFormatError):
            morse_multiplicity(X, phi, "a", [1, 0])


class TestCharacteristicCycle(unittest.TestCase):
    def test_interval_chambers(self):
        X = interval_complex()
        cycle = characteristic_cycle(X, ConstructibleFn.constant(X.complex))
        self.assertEqual(cycle.multiplicity("a", [1]), 1)
        self.assertEqual(cycle.multiplicity("a", [-1]), 0)
        self.assertEqual(cycle.multiplicity("b", [-1]), 1)
        self.assertEqual(len(cycle.chambers["e"]), 1)
        self.assertEqual(cycle.to_dict()["chambers"][0]["stratum"], "a")

    def test_ambient_dimension_cap(self):
        X = EmbeddedComplex({"a": (0, 0, 0, 0)}, {"a": ("a",)})
        with self.assertRaises(AmbientDimTooLarge):
            characteristic_cycle(X, ConstructibleFn.constant(X.complex))

    def test_repeated_cells(self):
        with self.assertRaises(InvalidComplex):
            EmbeddedComplex({"a": (0,), "b": (1,)}, {"a": ("a",), "b": ("b",), "e": ("a", "b"), "f": ("b", "a")})


class TestMicrolocalIndex(unittest.TestCase):
    def test_shipped_complexes(self):
        expected = {"interval": 1, "circle": 0, "triangle": 1}
        for name, (X, tests) in index_fixtures().items():
            phi = ConstructibleFn.constant(X.complex)
            for key, f in tests.items():
                with self.subTest(complex=name, test_function=key):
                    self.assertEqual(microlocal_index(X, phi, f), expected[name])

    def test_critical_strata_of_a_height_function(self):
        X = filled_triangle()
        self.assertEqual(critical_strata(X, TestFunction.linear(X, (0, 1))), ["t0", "t1", "t2"])

    def test_index_theorem_on_random_functions(self):
        suite = index_suite(60, seed=22)
        self.assertEqual(suite.failures, [])
        self.assertGreater(suite.passed, 0)

    def test_indicator_of_a_vertex(self):
        X = filled_triangle()
        phi = ConstructibleFn.indicator(X.complex, ["t1"])
        f = TestFunction.linear(X, ("1/2", 1), "tilted")
        self.assertEqual(microlocal_index(X, phi, f), euler_integral(phi))

    def test_degenerate_test_function(self):
        X = square_circle()
        with self.assertRaises(NonGenericSection):
            microlocal_index(X, ConstructibleFn.constant(X.complex), TestFunction.linear(X, (1, 0), "x"))

    def test_requires_compact_complex(self):
        X = local_line()
        X_open = EmbeddedComplex(X.vertices, {"pos": ("o", "p")}, compact=False, name="open")
        with self.assertRaises(NotCompact):
            microlocal_index(X_open, ConstructibleFn.constant(X_open.complex), TestFunction.linear(X_open, (1,)))

    def test_linear_form_length(self):
        with self.assertRaises(ProblemFormatError):
            TestFunction.linear(interval_complex(), (1, 2))


if __name__ == "__main__":
    unittest.main()
