"""Complete simplicial fans and the cone maps acting on them.

A fan models the normal fiber of a fixed component together with its conic
stratification. Cones are frozensets of ray indices; the empty set is the
origin cone.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import sympy
from sympy import ImmutableMatrix, Matrix, Rational

from errors import (
    FanNotAdapted,
    NotComplete,
    NotConeCompatible,
    NotFaceClosed,
    NotSimplicial,
    Overlapping,
    ProblemFormatError,
    SingularMap,
)
from exact import ScalarLike, rational
from spectral import RationalMatrix, Subspace

logger = logging.getLogger(__name__)

Cone = FrozenSet[int]
Vector = Tuple[Rational, ...]

ORIGIN: Cone = frozenset()


def cone_label(cone: Iterable[int]) -> str:
    return "{" + ",".join(str(i) for i in sorted(cone)) + "}"


def _cone_order(cone: Cone) -> Tuple[int, Tuple[int, ...]]:
    return len(cone), tuple(sorted(cone))


def _positive_multiple(image: Sequence[Rational], ray: Sequence[Rational]) -> Optional[Rational]:
    """s > 0 with image = s * ray, or None."""
    pivot = next(k for k, value in enumerate(ray) if value != 0)
    scale = image[pivot] / ray[pivot]
    if scale <= 0:
        return None
    if any(image[k] != scale * ray[k] for k in range(len(ray))):
        return None
    return scale


@dataclass(frozen=True)
class Fan:
    ambient_dim: int
    rays: Tuple[Vector, ...]
    cones: Tuple[Cone, ...]
    name: str = field(default="", compare=False)

    def dim(self, cone: Cone) -> int:
        return len(cone)

    def has_cone(self, cone: Iterable[int]) -> bool:
        return frozenset(cone) in self._cone_set

    @property
    def _cone_set(self) -> FrozenSet[Cone]:
        return frozenset(self.cones)

    def cones_of_dim(self, d: int) -> List[Cone]:
        return [c for c in self.cones if len(c) == d]

    @property
    def maximal_cones(self) -> List[Cone]:
        return self.cones_of_dim(self.ambient_dim)

    def covers(self) -> List[Tuple[Cone, Cone]]:
        """Codimension-one face relations (c, c') with c a facet of c'."""
        pairs = []
        for upper in self.cones:
            for index in sorted(upper):
                pairs.append((upper - {index}, upper))
        return sorted(pairs, key=lambda pair: (_cone_order(pair[0]), _cone_order(pair[1])))

    def cofaces(self, cone: Cone, codim: int = 1) -> List[Cone]:
        return [c for c in self.cones if len(c) == len(cone) + codim and cone < c]

    def face_poset(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.cones)
        graph.add_edges_from(self.covers())
        return graph

    def ray_matrix(self, cone: Iterable[int]) -> Matrix:
        columns = [Matrix(self.rays[i]) for i in sorted(cone)]
        if not columns:
            return Matrix.zeros(self.ambient_dim, 0)
        return Matrix.hstack(*columns)

    def generic_point(self, cone: Cone) -> Vector:
        """Sum of the cone's rays: a point of its relative interior."""
        point = [Rational(0)] * self.ambient_dim
        for i in cone:
            point = [p + v for p, v in zip(point, self.rays[i])]
        return tuple(point)

    def to_dict(self) -> Dict[str, object]:
        return {
            "ambient_dim": self.ambient_dim,
            "rays": [[str(v) for v in ray] for ray in self.rays],
            "cones": [sorted(c) for c in self.cones],
        }


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_rays(rays: Sequence[Vector]) -> int:
    if not rays:
        raise NotComplete("a complete fan needs at least two rays")
    ambient_dim = len(rays[0])
    if ambient_dim == 0:
        raise ProblemFormatError("rays must have positive length")
    for index, ray in enumerate(rays):
        if len(ray) != ambient_dim:
            raise ProblemFormatError(f"ray {index} has length {len(ray)}, expected {ambient_dim}", element=f"ray {index}")
        if all(v == 0 for v in ray):
            raise ProblemFormatError(f"ray {index} is the zero vector", element=f"ray {index}")
    for i, j in itertools.combinations(range(len(rays)), 2):
        if _positive_multiple(rays[j], rays[i]) is not None:
            raise Overlapping(f"rays {i} and {j} point in the same direction", element=f"ray {j}")
    return ambient_dim


def _check_faces(rays: Sequence[Vector], cones: FrozenSet[Cone]) -> None:
    if ORIGIN not in cones:
        raise NotFaceClosed("the origin cone {} is missing", element="{}")
    used = set()
    for cone in cones:
        used |= cone
        if any(i < 0 or i >= len(rays) for i in cone):
            raise ProblemFormatError(f"cone {cone_label(cone)} references an unknown ray", element=cone_label(cone))
        if cone:
            rank = Matrix.hstack(*[Matrix(rays[i]) for i in cone]).rank()
            if rank != len(cone):
                raise NotSimplicial(f"rays of cone {cone_label(cone)} are linearly dependent", element=cone_label(cone))
        for index in cone:
            if cone - {index} not in cones:
                raise NotFaceClosed(
                    f"facet {cone_label(cone - {index})} of cone {cone_label(cone)} is missing",
                    element=cone_label(cone),
                )
    unused = sorted(set(range(len(rays))) - used)
    if unused:
        raise NotFaceClosed(f"ray {unused[0]} belongs to no cone", element=f"ray {unused[0]}")


def _wall_side(normal: Matrix, vector: Vector) -> int:
    value = sum(n * v for n, v in zip(normal, vector))
    return int(sympy.sign(value))


def _sample_points(ambient_dim: int) -> Iterable[Vector]:
    for seed in range(1, 64):
        yield tuple(
            Rational((-1) ** (i * seed) * (seed + 3 * i + 1), 7 * i + seed + 2) + Rational(i, 101)
            for i in range(ambient_dim)
        )


def _interior_count(rays: Sequence[Vector], maximal: Sequence[Cone], point: Vector) -> Optional[int]:
    """Number of cones containing ``point`` in their relative interior; None if it sits on a wall.

    Every cone must span a space that contains ``point``.
    """
    count = 0
    target = Matrix(point)
    for cone in maximal:
        basis = Matrix.hstack(*[Matrix(rays[i]) for i in sorted(cone)])
        coordinates, _ = basis.gauss_jordan_solve(target)
        if any(c == 0 for c in coordinates):
            return None
        if all(c > 0 for c in coordinates):
            count += 1
    return count


def _check_complete(ambient_dim: int, rays: Sequence[Vector], cones: FrozenSet[Cone]) -> None:
    if ambient_dim == 1:
        if len(rays) != 2:
            raise NotComplete("a complete fan on a line has exactly two opposite rays")
        return

    maximal = sorted((c for c in cones if len(c) == ambient_dim), key=_cone_order)
    if not maximal:
        raise NotComplete(f"no {ambient_dim}-dimensional cone")

    adjacency = nx.Graph()
    adjacency.add_nodes_from(maximal)
    for wall in sorted((c for c in cones if len(c) == ambient_dim - 1), key=_cone_order):
        cofaces = [c for c in maximal if wall < c]
        if len(cofaces) < 2:
            raise NotComplete(f"wall {cone_label(wall)} bounds only {len(cofaces)} maximal cone(s)", element=cone_label(wall))
        if len(cofaces) > 2:
            raise Overlapping(f"wall {cone_label(wall)} bounds {len(cofaces)} maximal cones", element=cone_label(wall))
        normal = Matrix.hstack(*[Matrix(rays[i]) for i in sorted(wall)]).T.nullspace()[0]
        sides = [_wall_side(normal, rays[next(iter(c - wall))]) for c in cofaces]
        if sides[0] == sides[1]:
            raise Overlapping(f"both cones on wall {cone_label(wall)} lie on the same side", element=cone_label(wall))
        adjacency.add_edge(*cofaces)

    if not nx.is_connected(adjacency):
        raise NotComplete("maximal cones are not connected through walls")

    for cone in sorted(cones, key=_cone_order):
        if not any(cone <= c for c in maximal):
            raise Overlapping(f"cone {cone_label(cone)} is not a face of any maximal cone", element=cone_label(cone))

    for point in _sample_points(ambient_dim):
        count = _interior_count(rays, maximal, point)
        if count is None:
            continue
        if count == 0:
            raise NotComplete(f"point {[str(v) for v in point]} is covered by no cone")
        if count > 1:
            raise Overlapping(f"point {[str(v) for v in point]} lies in {count} maximal cones")
        return
    logger.warning("No sample point avoided every wall; covering multiplicity not checked")


def build_fan(rays: Sequence[Sequence[ScalarLike]], cones: Iterable[Iterable[int]], name: str = "") -> Fan:
    """Validate raw rays and cones into a complete simplicial fan."""
    exact_rays = tuple(tuple(rational(v) for v in ray) for ray in rays)
    ambient_dim = _check_rays(exact_rays)
    cone_set = frozenset(frozenset(int(i) for i in cone) for cone in cones)
    _check_faces(exact_rays, cone_set)
    _check_complete(ambient_dim, exact_rays, cone_set)
    fan = Fan(ambient_dim, exact_rays, tuple(sorted(cone_set, key=_cone_order)), name)
    logger.debug(f"Built fan {name or '<anonymous>'}: {len(exact_rays)} rays, {len(cone_set)} cones")
    return fan


# ---------------------------------------------------------------------------
# Cone maps
# ---------------------------------------------------------------------------

def _permutation_sign(mapping: Dict[int, int]) -> int:
    seen = set()
    sign = 1
    for start in mapping:
        if start in seen:
            continue
        length = 0
        current = start
        while current not in seen:
            seen.add(current)
            current = mapping[current]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class ConeMapAnalysis:
    fan: Fan
    matrix: RationalMatrix
    ray_permutation: Tuple[int, ...]
    ray_scalings: Tuple[Rational, ...]
    permutation: Dict[Cone, Cone] = field(compare=False, hash=False)
    signs: Dict[Cone, int] = field(compare=False, hash=False)

    def image(self, cone: Cone) -> Cone:
        return self.permutation[frozenset(cone)]

    def is_fixed(self, cone: Cone) -> bool:
        return self.permutation[frozenset(cone)] == frozenset(cone)

    def fixed_cones(self) -> List[Cone]:
        return [c for c in self.fan.cones if self.is_fixed(c)]

    def to_dict(self) -> Dict[str, object]:
        return {
            "matrix": self.matrix.rows(),
            "ray_permutation": list(self.ray_permutation),
            "ray_scalings": [str(s) for s in self.ray_scalings],
            "fixed_cones": {cone_label(c): self.signs[c] for c in self.fixed_cones()},
        }


def cone_map_analysis(fan: Fan, A: RationalMatrix) -> ConeMapAnalysis:
    """How A permutes the cones of ``fan``, with orientation signs on fixed cones."""
    if A.dim != fan.ambient_dim:
        raise ProblemFormatError(f"map acts on dimension {A.dim}, fan lives in {fan.ambient_dim}")
    if A.determinant() == 0:
        raise SingularMap(f"map {A} is not invertible", element=str(A))

    targets: List[int] = []
    scalings: List[Rational] = []
    for index, ray in enumerate(fan.rays):
        image = A.apply(ray)
        for candidate, other in enumerate(fan.rays):
            scale = _positive_multiple(image, other)
            if scale is not None:
                targets.append(candidate)
                scalings.append(scale)
                break
        else:
            raise NotConeCompatible(
                f"image of ray {index} is not a positive multiple of a fan ray",
                element=f"ray {index}",
            )

    permutation: Dict[Cone, Cone] = {}
    for cone in fan.cones:
        image = frozenset(targets[i] for i in cone)
        if not fan.has_cone(image):
            raise NotConeCompatible(
                f"image of cone {cone_label(cone)} is not a cone of the fan",
                element=cone_label(cone),
            )
        permutation[cone] = image

    signs = {
        cone: _permutation_sign({i: targets[i] for i in cone})
        for cone in fan.cones
        if permutation[cone] == cone
    }
    analysis = ConeMapAnalysis(fan, A, tuple(targets), tuple(scalings), permutation, signs)
    logger.debug(f"Cone map {A}: ray permutation {targets}, {len(signs)} fixed cones")
    return analysis


# ---------------------------------------------------------------------------
# Subspaces
# ---------------------------------------------------------------------------

def subfan_of_subspace(fan: Fan, S: Subspace) -> FrozenSet[Cone]:
    """Cones whose closure lies in S; S must be exactly their union."""
    if S.ambient_dim != fan.ambient_dim:
        raise ProblemFormatError(f"subspace lives in dimension {S.ambient_dim}, fan in {fan.ambient_dim}")
    inside_rays = {i for i, ray in enumerate(fan.rays) if S.contains_vector(ray)}
    inside = frozenset(c for c in fan.cones if c <= inside_rays)
    d = S.dim
    if d == 0:
        return frozenset({ORIGIN})

    label = S.label or "subspace"
    top = [c for c in inside if len(c) == d]
    if not top:
        raise FanNotAdapted(f"no {d}-dimensional cone lies in the {label}", element=label)
    adjacency = nx.Graph()
    adjacency.add_nodes_from(top)
    for wall in (c for c in inside if len(c) == d - 1):
        bounding = [c for c in top if wall < c]
        if len(bounding) != 2:
            raise FanNotAdapted(
                f"cone {cone_label(wall)} bounds {len(bounding)} top cones inside the {label}",
                element=label,
            )
        adjacency.add_edge(*bounding)
    if not nx.is_connected(adjacency):
        raise FanNotAdapted(f"top cones inside the {label} are not connected through walls", element=label)

    if not S.is_exact:
        logger.debug(f"Skipping the covering check for the floating {label}")
        return inside
    for coefficients in _sample_points(d):
        point = tuple(S.basis * Matrix(coefficients))
        count = _interior_count(fan.rays, top, point)
        if count is None:
            continue
        if count != 1:
            raise FanNotAdapted(f"a generic point of the {label} lies in {count} of its cones", element=label)
        break
    return inside


def adapted_invariant_subspaces(fan: Fan, A: RationalMatrix) -> List[Subspace]:
    """A-invariant subspaces spanned by fan rays to which the fan is adapted, smallest first."""
    seen: Dict[Tuple, Subspace] = {}
    candidates = [Subspace.zero(fan.ambient_dim), Subspace.whole(fan.ambient_dim)]
    for size in range(1, fan.ambient_dim):
        for subset in itertools.combinations(range(len(fan.rays)), size):
            span = Subspace.span(
                [fan.rays[i] for i in subset], fan.ambient_dim, label=f"span of rays {cone_label(subset)}"
            )
            if span.dim == size:
                candidates.append(span)
    for candidate in candidates:
        key = candidate.canonical_key()
        if key in seen or not candidate.is_invariant(A):
            continue
        try:
            subfan_of_subspace(fan, candidate)
        except FanNotAdapted:
            continue
        seen[key] = candidate
    return sorted(seen.values(), key=lambda s: (s.dim, s.canonical_key()))


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def line_fan() -> Fan:
    return build_fan([[1], [-1]], [[], [0], [1]], name="line")


def cross_fan() -> Fan:
    rays = [[1, 0], [0, 1], [-1, 0], [0, -1]]
    return build_fan(rays, _cyclic_cones(4), name="cross")


def _cyclic_cones(k: int) -> List[List[int]]:
    return [[]] + [[j] for j in range(k)] + [[j, (j + 1) % k] for j in range(k)]


_LATTICE_SECTORS = {
    3: [[1, 0], [0, 1], [-1, -1]],
    4: [[1, 0], [0, 1], [-1, 0], [0, -1]],
    6: [[1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1]],
}

_SECTOR_ROTATIONS = {
    3: [[0, -1], [1, -1]],
    4: [[0, -1], [1, 0]],
    6: [[1, -1], [1, 0]],
}


def sector_fan(k: int) -> Fan:
    """Complete fan of ``k`` rays in cyclic order around the origin of the plane."""
    if k < 3:
        raise ProblemFormatError(f"a sector fan needs at least 3 rays, got {k}")
    if k in _LATTICE_SECTORS:
        rays = _LATTICE_SECTORS[k]
    else:
        rays = [
            [round(1000 * math.cos(2 * math.pi * j / k)), round(1000 * math.sin(2 * math.pi * j / k))]
            for j in range(k)
        ]
    return build_fan(rays, _cyclic_cones(k), name=f"sector-{k}")


def sector_rotation(k: int) -> RationalMatrix:
    """Rational matrix sending ray j of ``sector_fan(k)`` to ray j+1 (k in 3, 4, 6)."""
    if k not in _SECTOR_ROTATIONS:
        raise ProblemFormatError(f"no rational rotation cycles the rays of a {k}-sector fan")
    return RationalMatrix.from_rows(_SECTOR_ROTATIONS[k])
