"""Characteristic cycles of constructible functions on embedded complexes.

The Morse multiplicity of phi at a stratum sigma in a conormal direction xi is

    m(sigma, xi) = phi(sigma) - sum over tau > sigma of phi(tau) * chi_c(tau cap K)

where K is a small closed ball intersected with the sublevel set {f <= -delta}
of a function with differential xi that is positive definite along sigma.
chi_c(tau cap K) only depends on the signs of xi on the edge directions of the
tangent cone of tau at sigma, which keeps the computation exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import pandas as pd
import sympy
from sympy import Matrix, Rational

from errors import (
    AmbientDimTooLarge,
    ChamberVariation,
    InvalidComplex,
    NonGenericCovector,
    NonGenericSection,
    NotCompact,
    ProblemFormatError,
)
from euler import CellComplex, ConstructibleFn
from exact import Scalar, ScalarLike, format_scalar, rational, sum_scalars

logger = logging.getLogger(__name__)

MAX_AMBIENT_DIM = 3

Covector = Tuple[Rational, ...]


@dataclass
class EmbeddedComplex:
    """Cells given as relatively open convex hulls of named rational vertices."""

    vertices: Dict[str, Tuple[Rational, ...]]
    cells: Dict[str, Tuple[str, ...]]
    compact: bool = True
    name: str = ""
    complex: CellComplex = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = {str(v): tuple(rational(x) for x in coords) for v, coords in self.vertices.items()}
        lengths = {len(coords) for coords in self.vertices.values()}
        if len(lengths) != 1:
            raise InvalidComplex("vertex coordinates have different lengths", element=self.name or None)
        self.cells = {str(c): tuple(str(v) for v in verts) for c, verts in self.cells.items()}
        for cell, verts in self.cells.items():
            if not verts:
                raise InvalidComplex(f"cell {cell} has no vertices", element=cell)
            unknown = [v for v in verts if v not in self.vertices]
            if unknown:
                raise InvalidComplex(f"cell {cell} uses unknown vertex {unknown[0]}", element=cell)
        dims = {cell: self._affine_rank(verts) for cell, verts in self.cells.items()}
        signatures = {}
        for cell, verts in self.cells.items():
            key = frozenset(verts)
            if key in signatures:
                raise InvalidComplex(f"cells {signatures[key]} and {cell} have the same vertices", element=cell)
            signatures[key] = cell
        covers = [
            (lower, upper)
            for lower, lower_verts in self.cells.items()
            for upper, upper_verts in self.cells.items()
            if dims[upper] == dims[lower] + 1 and set(lower_verts) < set(upper_verts)
        ]
        self.complex = CellComplex(list(self.cells), dims, covers, self.compact, self.name)

    @property
    def ambient_dim(self) -> int:
        return len(next(iter(self.vertices.values())))

    def _affine_rank(self, verts: Sequence[str]) -> int:
        base = Matrix(self.vertices[verts[0]])
        if len(verts) == 1:
            return 0
        return Matrix.hstack(*[Matrix(self.vertices[v]) - base for v in verts[1:]]).rank()

    def dim(self, cell: str) -> int:
        return self.complex.dim(cell)

    def point(self, vertex: str) -> Matrix:
        return Matrix(self.vertices[vertex])

    def barycenter(self, cell: str) -> Matrix:
        verts = self.cells[cell]
        total = Matrix.zeros(self.ambient_dim, 1)
        for v in verts:
            total += self.point(v)
        return total / len(verts)

    def tangent_vectors(self, cell: str) -> List[Matrix]:
        verts = self.cells[cell]
        base = self.point(verts[0])
        return [self.point(v) - base for v in verts[1:]]

    def conormal_basis(self, cell: str) -> Matrix:
        """Columns spanning the covectors that vanish on the tangent space of ``cell``."""
        tangents = self.tangent_vectors(cell)
        if not tangents:
            return Matrix.eye(self.ambient_dim)
        kernel = Matrix.hstack(*tangents).T.nullspace()
        if not kernel:
            return Matrix.zeros(self.ambient_dim, 0)
        return Matrix.hstack(*kernel)

    def edge_directions(self, sigma: str) -> Dict[str, Matrix]:
        """For each cell rho one dimension above sigma in its star: a direction pointing into rho."""
        base_verts = set(self.cells[sigma])
        anchor = self.point(self.cells[sigma][0])
        directions = {}
        for rho in sorted(self.complex.cofaces(sigma)):
            if self.dim(rho) != self.dim(sigma) + 1:
                continue
            extra = next(v for v in self.cells[rho] if v not in base_verts)
            directions[rho] = self.point(extra) - anchor
        return directions

    def star(self, sigma: str) -> List[str]:
        return sorted(self.complex.cofaces(sigma), key=lambda c: (self.dim(c), c))

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "vertices": {v: [str(x) for x in coords] for v, coords in self.vertices.items()},
            "cells": {c: list(verts) for c, verts in self.cells.items()},
            "compact": self.compact,
        }


def _pairing(xi: Sequence[Rational], vector: Matrix) -> Rational:
    return sum((a * b for a, b in zip(xi, vector)), Rational(0))


def _covector(values: Iterable[ScalarLike]) -> Covector:
    return tuple(rational(v) for v in values)


def _check_covector(X: EmbeddedComplex, sigma: str, xi: Covector) -> Dict[str, Rational]:
    if len(xi) != X.ambient_dim:
        raise ProblemFormatError(f"covector has length {len(xi)}, ambient dimension is {X.ambient_dim}", element=sigma)
    for tangent in X.tangent_vectors(sigma):
        if _pairing(xi, tangent) != 0:
            raise NonGenericCovector(f"covector does not vanish on the tangent space of {sigma}", element=sigma)
    pairings = {}
    for rho, direction in X.edge_directions(sigma).items():
        value = _pairing(xi, direction)
        if value == 0:
            raise NonGenericCovector(f"covector vanishes on the edge direction into {rho}", element=f"{sigma}->{rho}")
        pairings[rho] = value
    return pairings


def sublevel_euler(X: EmbeddedComplex, sigma: str, pairings: Mapping[str, Rational]) -> Dict[str, int]:
    """chi_c(tau cap K) for every tau in the star of sigma."""
    chi: Dict[str, int] = {}
    for tau in X.star(sigma):
        edges = [rho for rho in pairings if rho == tau or X.complex.is_face(rho, tau)]
        reaches_below = any(pairings[rho] < 0 for rho in edges)
        between = [rho for rho in chi if X.complex.is_face(rho, tau)]
        chi[tau] = int(reaches_below) - sum(chi[rho] for rho in between)
    return chi


def morse_multiplicity(X: EmbeddedComplex, phi: ConstructibleFn, sigma: str, xi: Sequence[ScalarLike]) -> Scalar:
    """Local Morse multiplicity of ``phi`` at ``sigma`` in the conormal direction ``xi``."""
    if sigma not in X.cells:
        raise ProblemFormatError(f"unknown stratum {sigma}", element=sigma)
    covector = _covector(xi)
    pairings = _check_covector(X, sigma, covector)
    chi = sublevel_euler(X, sigma, pairings)
    value = sympy.expand(phi(sigma) - sum_scalars(phi(tau) * n for tau, n in chi.items()))
    logger.debug(f"m({sigma}, {[str(x) for x in covector]}) = {format_scalar(value)}")
    return value


# ---------------------------------------------------------------------------
# Chambers
# ---------------------------------------------------------------------------

def _nonzero(vectors: Iterable[Matrix]) -> List[Matrix]:
    return [v for v in vectors if any(x != 0 for x in v)]


def _essential_samples(normals: List[Matrix], rank: int) -> List[Matrix]:
    """Interior points of every chamber of an essential central arrangement in Q^rank."""
    if rank == 1:
        return [Matrix([1]), Matrix([-1])]
    samples: List[Matrix] = []
    seen_lines = set()
    for chosen in combinations(range(len(normals)), rank - 1):
        block = Matrix.hstack(*[normals[i] for i in chosen])
        if block.rank() != rank - 1:
            continue
        line = block.T.nullspace()[0]
        key = tuple(Matrix(line / next(x for x in line if x != 0)))
        if key in seen_lines:
            continue
        seen_lines.add(key)
        for direction in (line, -line):
            samples.extend(_samples_near(normals, direction))
    return samples


def _samples_near(normals: List[Matrix], direction: Matrix) -> List[Matrix]:
    """Points next to the line ``direction`` in each chamber that touches it."""
    complement = Matrix.hstack(*direction.T.nullspace())
    local = [complement.T * h for h in normals if (h.T * direction)[0] == 0]
    points = []
    for w in arrangement_samples(local, complement.cols):
        offset = complement * w
        eta = Rational(1)
        for h in normals:
            along = (h.T * direction)[0]
            across = (h.T * offset)[0]
            if along != 0 and across != 0:
                eta = min(eta, abs(along) / (2 * abs(across)))
        points.append(direction + eta * offset)
    return points


def arrangement_samples(normals: Sequence[Matrix], dim: int) -> List[Matrix]:
    """Sample points covering every chamber of the central arrangement {h . y = 0} in Q^dim."""
    if dim == 0:
        return [Matrix.zeros(0, 1)]
    active = _nonzero(normals)
    if not active:
        first = Matrix.zeros(dim, 1)
        first[0] = 1
        return [Matrix.zeros(dim, 1), first]
    row_space = Matrix.hstack(*Matrix.hstack(*active).columnspace())
    reduced = [row_space.T * h for h in active]
    samples = _essential_samples(reduced, row_space.cols)
    return [row_space * z for z in samples]


@dataclass(frozen=True)
class ChamberMultiplicity:
    stratum: str
    signs: Tuple[int, ...]
    sample: Covector
    multiplicity: Scalar

    def to_dict(self) -> Dict[str, object]:
        return {
            "stratum": self.stratum,
            "signs": "".join("+" if s > 0 else "-" for s in self.signs) or "0",
            "covector": [str(x) for x in self.sample],
            "multiplicity": format_scalar(self.multiplicity),
        }


@dataclass
class LagrangianCycle:
    complex: EmbeddedComplex
    chambers: Dict[str, List[ChamberMultiplicity]]

    def multiplicity(self, stratum: str, xi: Sequence[ScalarLike]) -> Scalar:
        pairings = _check_covector(self.complex, stratum, _covector(xi))
        signs = tuple(1 if pairings[rho] > 0 else -1 for rho in sorted(pairings))
        for chamber in self.chambers[stratum]:
            if chamber.signs == signs:
                return chamber.multiplicity
        raise ProblemFormatError(f"no chamber with signs {signs} at {stratum}", element=stratum)

    def entries(self) -> List[ChamberMultiplicity]:
        return [c for stratum in self.complex.cells for c in self.chambers[stratum]]

    def to_dict(self) -> Dict[str, object]:
        return {"chambers": [c.to_dict() for c in self.entries()]}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.to_dict() for c in self.entries()], columns=["stratum", "signs", "covector", "multiplicity"])


def chambers_at(X: EmbeddedComplex, sigma: str) -> List[Tuple[Tuple[int, ...], List[Covector]]]:
    """Sign vectors of the chambers of generic covectors at ``sigma`` with sample covectors."""
    basis = X.conormal_basis(sigma)
    directions = X.edge_directions(sigma)
    order = sorted(directions)
    normals = [basis.T * directions[rho] for rho in order]
    grouped: Dict[Tuple[int, ...], List[Covector]] = {}
    for y in arrangement_samples(normals, basis.cols):
        xi = basis * y if basis.cols else Matrix.zeros(X.ambient_dim, 1)
        covector = tuple(Rational(x) for x in xi)
        values = [_pairing(covector, directions[rho]) for rho in order]
        if any(v == 0 for v in values):
            continue
        signs = tuple(1 if v > 0 else -1 for v in values)
        grouped.setdefault(signs, []).append(covector)
    return sorted(grouped.items())


def characteristic_cycle(X: EmbeddedComplex, phi: ConstructibleFn) -> LagrangianCycle:
    """Morse multiplicity of ``phi`` on every covector chamber of every stratum."""
    if X.ambient_dim > MAX_AMBIENT_DIM:
        raise AmbientDimTooLarge(
            f"chamber enumeration supports ambient dimension up to {MAX_AMBIENT_DIM}, got {X.ambient_dim}",
            element=X.name or None,
        )
    chambers: Dict[str, List[ChamberMultiplicity]] = {}
    for sigma in X.complex.cells:
        entries = []
        for signs, samples in chambers_at(X, sigma):
            values = [morse_multiplicity(X, phi, sigma, xi) for xi in samples]
            if any(sympy.expand(v - values[0]) != 0 for v in values[1:]):
                raise ChamberVariation(
                    f"multiplicity varies inside a chamber at {sigma}: "
                    + ", ".join(format_scalar(v) for v in values),
                    element=sigma,
                )
            entries.append(ChamberMultiplicity(sigma, signs, samples[0], values[0]))
        chambers[sigma] = entries
    return LagrangianCycle(X, chambers)


# ---------------------------------------------------------------------------
# Microlocal index
# ---------------------------------------------------------------------------

@dataclass
class TestFunction:
    """Differential data of a test function: one covector per stratum."""

    __test__ = False

    covectors: Dict[str, Covector]
    name: str = ""

    @classmethod
    def linear(cls, X: EmbeddedComplex, coefficients: Sequence[ScalarLike], name: str = "") -> "TestFunction":
        form = _covector(coefficients)
        if len(form) != X.ambient_dim:
            raise ProblemFormatError(f"linear form has length {len(form)}, ambient dimension is {X.ambient_dim}")
        return cls({cell: form for cell in X.cells}, name or "linear")

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "covectors": {c: [str(x) for x in xi] for c, xi in self.covectors.items()}}


def critical_strata(X: EmbeddedComplex, f: TestFunction) -> List[str]:
    """Strata on which the differential of ``f`` vanishes along the stratum."""
    critical = []
    for sigma in X.complex.cells:
        if sigma not in f.covectors:
            raise ProblemFormatError(f"test function has no covector on {sigma}", element=sigma)
        xi = f.covectors[sigma]
        if all(_pairing(xi, t) == 0 for t in X.tangent_vectors(sigma)):
            critical.append(sigma)
    return critical


def microlocal_index(X: EmbeddedComplex, phi: ConstructibleFn, f: TestFunction) -> Scalar:
    """Intersection number of the graph of df with the characteristic cycle of phi."""
    if not X.compact:
        raise NotCompact(f"index needs a compact complex, {X.name} is not", element=X.name or None)
    terms = []
    for sigma in critical_strata(X, f):
        try:
            terms.append(morse_multiplicity(X, phi, sigma, f.covectors[sigma]))
        except NonGenericCovector as exc:
            raise NonGenericSection(f"test function {f.name} is degenerate at {sigma}: {exc.message}", element=exc.element) from exc
    total = sum_scalars(terms)
    logger.debug(f"Index of {f.name or 'test function'} on {X.name or 'complex'}: {format_scalar(total)}")
    return total
