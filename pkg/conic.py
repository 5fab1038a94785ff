"""Conic sheaf data on fans and its two hyperbolic-localization traces.

A ``ConicSheaf`` stores, per cone and cohomological degree, the dimension of
the stalk at points of the open cone, together with generization maps
stalk(c) -> stalk(c') for every facet relation c < c'. An ``Equivariant``
structure over a cone map A gives maps eta_c: stalk(c) -> stalk(pi(c)).

Only diagonal blocks (eta on fixed cones) enter the traces; generization maps
are carried so that functoriality and equivariance can be checked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx
import sympy
from sympy import ImmutableMatrix

from errors import (
    DegenerateNormalMap,
    EquivarianceViolation,
    FunctorialityViolation,
    InvalidSubbundle,
    LocalizationMismatch,
    ProblemFormatError,
    StalkShapeError,
)
from exact import (
    Scalar,
    ScalarLike,
    alternating_trace,
    block_diagonal,
    format_scalar,
    gaussian,
    identity,
    matmul,
    matrices_equal,
    matrix_rows,
    sum_scalars,
    zeros,
)
from fan import ORIGIN, Cone, ConeMapAnalysis, Fan, adapted_invariant_subspaces, cone_label, subfan_of_subspace
from spectral import (
    RationalMatrix,
    Subspace,
    check_nondegenerate,
    unit_circle_perturbation,
    validate_expanding,
    validate_shrinking,
)

logger = logging.getLogger(__name__)

StalkDims = Dict[int, int]
DegreeMaps = Dict[int, ImmutableMatrix]


@dataclass
class ConicSheaf:
    fan: Fan
    stalks: Dict[Cone, StalkDims]
    generization: Dict[Tuple[Cone, Cone], DegreeMaps] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.stalks = {
            frozenset(cone): {int(d): int(n) for d, n in dims.items() if int(n) != 0}
            for cone, dims in self.stalks.items()
        }
        self.generization = {
            (frozenset(a), frozenset(b)): {int(d): m for d, m in maps.items()}
            for (a, b), maps in self.generization.items()
        }

    # shape ----------------------------------------------------------------

    def stalk_dim(self, cone: Cone, degree: int) -> int:
        return self.stalks.get(frozenset(cone), {}).get(degree, 0)

    def degrees(self) -> List[int]:
        return sorted({d for dims in self.stalks.values() for d in dims})

    @property
    def total_dim(self) -> int:
        return sum(sum(dims.values()) for dims in self.stalks.values())

    def is_zero(self) -> bool:
        return self.total_dim == 0

    def generization_map(self, lower: Cone, upper: Cone, degree: int) -> ImmutableMatrix:
        maps = self.generization.get((frozenset(lower), frozenset(upper)), {})
        if degree in maps:
            return maps[degree]
        return zeros(self.stalk_dim(upper, degree), self.stalk_dim(lower, degree))

    def validate(self) -> "ConicSheaf":
        cones = set(self.fan.cones)
        for cone, dims in self.stalks.items():
            if cone not in cones:
                raise StalkShapeError(f"stalk given on {cone_label(cone)}, which is not a cone", element=cone_label(cone))
            if any(n < 0 for n in dims.values()):
                raise StalkShapeError(f"negative stalk dimension on {cone_label(cone)}", element=cone_label(cone))
        covers = set(self.fan.covers())
        for (lower, upper), maps in self.generization.items():
            relation = f"{cone_label(lower)}->{cone_label(upper)}"
            if (lower, upper) not in covers:
                raise StalkShapeError(f"generization {relation} is not a facet relation", element=relation)
            for degree, block in maps.items():
                expected = (self.stalk_dim(upper, degree), self.stalk_dim(lower, degree))
                if block.shape != expected:
                    raise StalkShapeError(
                        f"generization {relation} in degree {degree} has shape {block.shape}, expected {expected}",
                        element=relation,
                    )
        self._check_diamonds()
        return self

    def _check_diamonds(self) -> None:
        for top in self.fan.cones:
            for bottom in (c for c in self.fan.cones if len(c) == len(top) - 2 and c < top):
                middles = [c for c in self.fan.cones if len(c) == len(bottom) + 1 and bottom < c < top]
                for degree in self.degrees():
                    composites = [
                        matmul(self.generization_map(mid, top, degree), self.generization_map(bottom, mid, degree))
                        for mid in middles
                    ]
                    if any(not matrices_equal(composites[0], other) for other in composites[1:]):
                        relation = f"{cone_label(bottom)}->{cone_label(top)}"
                        raise FunctorialityViolation(
                            f"generization composites around {relation} disagree in degree {degree}",
                            element=relation,
                        )

    # constructors ---------------------------------------------------------

    @classmethod
    def supported_on(cls, fan: Fan, cones: Iterable[Cone], degree: int = 0, rank: int = 1, name: str = "") -> "ConicSheaf":
        """Rank ``rank`` in ``degree`` on a locally closed set of cones, identity generizations inside it."""
        support = {frozenset(c) for c in cones}
        stalks = {c: {degree: rank} for c in fan.cones if c in support}
        generization = {
            (lower, upper): {degree: identity(rank)}
            for lower, upper in fan.covers()
            if lower in support and upper in support
        }
        return cls(fan, stalks, generization, name).validate()

    @classmethod
    def constant(cls, fan: Fan, degree: int = 0, rank: int = 1) -> "ConicSheaf":
        return cls.supported_on(fan, fan.cones, degree, rank, name="constant")

    @classmethod
    def skyscraper(cls, fan: Fan, degree: int = 0, rank: int = 1) -> "ConicSheaf":
        return cls.supported_on(fan, [ORIGIN], degree, rank, name="skyscraper")

    @classmethod
    def zero(cls, fan: Fan) -> "ConicSheaf":
        return cls(fan, {}, {}, name="zero")

    def shifted(self, amount: int = 1) -> "ConicSheaf":
        """Move every stalk ``amount`` degrees (G[-amount] in degree terms)."""
        stalks = {c: {d + amount: n for d, n in dims.items()} for c, dims in self.stalks.items()}
        generization = {
            key: {d + amount: m for d, m in maps.items()} for key, maps in self.generization.items()
        }
        return ConicSheaf(self.fan, stalks, generization, f"{self.name}[{-amount}]")

    def direct_sum(self, other: "ConicSheaf") -> "ConicSheaf":
        if other.fan != self.fan:
            raise ProblemFormatError("direct sum of sheaves on different fans")
        stalks = {}
        for cone in self.fan.cones:
            dims = {}
            for degree in set(self.degrees()) | set(other.degrees()):
                total = self.stalk_dim(cone, degree) + other.stalk_dim(cone, degree)
                if total:
                    dims[degree] = total
            if dims:
                stalks[cone] = dims
        generization = {}
        for lower, upper in self.fan.covers():
            maps = {}
            for degree in set(self.degrees()) | set(other.degrees()):
                block = block_diagonal(
                    self.generization_map(lower, upper, degree), other.generization_map(lower, upper, degree)
                )
                if block.rows and block.cols:
                    maps[degree] = block
            if maps:
                generization[(lower, upper)] = maps
        return ConicSheaf(self.fan, stalks, generization, f"{self.name}+{other.name}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "stalks": {cone_label(c): {str(d): n for d, n in sorted(dims.items())} for c, dims in self.stalks.items()},
            "generization": {
                f"{cone_label(a)}->{cone_label(b)}": {str(d): matrix_rows(m) for d, m in sorted(maps.items())}
                for (a, b), maps in self.generization.items()
            },
        }


@dataclass
class Equivariant:
    """Structure maps eta_c: stalk(c) -> stalk(pi(c)) over a cone map."""

    sheaf: ConicSheaf
    analysis: ConeMapAnalysis
    eta: Dict[Cone, DegreeMaps] = field(default_factory=dict)

    def __post_init__(self):
        self.eta = {frozenset(c): {int(d): m for d, m in maps.items()} for c, maps in self.eta.items()}

    @property
    def matrix(self) -> RationalMatrix:
        return self.analysis.matrix

    def eta_map(self, cone: Cone, degree: int) -> ImmutableMatrix:
        cone = frozenset(cone)
        maps = self.eta.get(cone, {})
        if degree in maps:
            return maps[degree]
        return zeros(self.sheaf.stalk_dim(self.analysis.image(cone), degree), self.sheaf.stalk_dim(cone, degree))

    def local_trace(self, cone: Cone) -> Scalar:
        """Alternating-by-degree trace of eta on a fixed cone."""
        if not self.analysis.is_fixed(cone):
            raise ProblemFormatError(f"cone {cone_label(cone)} is not fixed by the map", element=cone_label(cone))
        return alternating_trace({d: self.eta_map(cone, d) for d in self.sheaf.degrees()})

    def validate(self) -> "Equivariant":
        if self.analysis.fan != self.sheaf.fan:
            raise ProblemFormatError("equivariant structure and sheaf live on different fans")
        for cone, maps in self.eta.items():
            if not self.sheaf.fan.has_cone(cone):
                raise StalkShapeError(f"eta given on {cone_label(cone)}, which is not a cone", element=cone_label(cone))
            image = self.analysis.image(cone)
            for degree, block in maps.items():
                expected = (self.sheaf.stalk_dim(image, degree), self.sheaf.stalk_dim(cone, degree))
                if block.shape != expected:
                    raise StalkShapeError(
                        f"eta on {cone_label(cone)} in degree {degree} has shape {block.shape}, expected {expected}",
                        element=cone_label(cone),
                    )
        for lower, upper in self.sheaf.fan.covers():
            image_lower, image_upper = self.analysis.image(lower), self.analysis.image(upper)
            for degree in self.sheaf.degrees():
                left = matmul(self.eta_map(upper, degree), self.sheaf.generization_map(lower, upper, degree))
                right = matmul(
                    self.sheaf.generization_map(image_lower, image_upper, degree), self.eta_map(lower, degree)
                )
                if not matrices_equal(left, right):
                    relation = f"{cone_label(lower)}->{cone_label(upper)}"
                    raise EquivarianceViolation(
                        f"eta does not commute with generization {relation} in degree {degree}",
                        element=relation,
                    )
        return self

    # constructors ---------------------------------------------------------

    @classmethod
    def scalar(cls, sheaf: ConicSheaf, analysis: ConeMapAnalysis, value: ScalarLike = 1) -> "Equivariant":
        """eta_c = value * identity; needs stalk(c) and stalk(pi(c)) of equal dimension."""
        factor = gaussian(value)
        eta = {}
        for cone in sheaf.fan.cones:
            image = analysis.image(cone)
            maps = {}
            for degree in sheaf.degrees():
                n = sheaf.stalk_dim(cone, degree)
                if n != sheaf.stalk_dim(image, degree):
                    raise StalkShapeError(
                        f"stalks on {cone_label(cone)} and its image {cone_label(image)} differ in degree {degree}",
                        element=cone_label(cone),
                    )
                if n:
                    maps[degree] = ImmutableMatrix(identity(n) * factor)
            if maps:
                eta[cone] = maps
        return cls(sheaf, analysis, eta).validate()

    @classmethod
    def identity(cls, sheaf: ConicSheaf, analysis: ConeMapAnalysis) -> "Equivariant":
        return cls.scalar(sheaf, analysis, 1)

    def shifted(self, amount: int = 1) -> "Equivariant":
        eta = {c: {d + amount: m for d, m in maps.items()} for c, maps in self.eta.items()}
        return Equivariant(self.sheaf.shifted(amount), self.analysis, eta)

    def direct_sum(self, other: "Equivariant") -> "Equivariant":
        if other.analysis.matrix != self.analysis.matrix:
            raise ProblemFormatError("direct sum of equivariant structures over different maps")
        degrees = set(self.sheaf.degrees()) | set(other.sheaf.degrees())
        eta = {}
        for cone in self.sheaf.fan.cones:
            maps = {}
            for degree in degrees:
                block = block_diagonal(self.eta_map(cone, degree), other.eta_map(cone, degree))
                if block.rows and block.cols:
                    maps[degree] = block
            if maps:
                eta[cone] = maps
        return Equivariant(self.sheaf.direct_sum(other.sheaf), self.analysis, eta)

    def to_dict(self) -> Dict[str, object]:
        return {
            "matrix": self.matrix.rows(),
            "eta": {
                cone_label(c): {str(d): matrix_rows(m) for d, m in sorted(maps.items())}
                for c, maps in self.eta.items()
            },
        }


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

def trace_expanding(G: ConicSheaf, eta: Equivariant, E: Subspace, allow_perturbation: bool = False) -> Scalar:
    """Hopf trace of the compactly supported cone-cell model over E."""
    A = eta.matrix
    if not validate_expanding(A, E, allow_perturbation=allow_perturbation):
        raise InvalidSubbundle(f"{E.label or 'subspace'} is not an expanding subbundle of {A}", element=E.label or None)
    inside = subfan_of_subspace(G.fan, E)
    terms = []
    for cone in sorted(inside, key=lambda c: (len(c), sorted(c))):
        if not eta.analysis.is_fixed(cone):
            continue
        value = (-1) ** len(cone) * eta.analysis.signs[cone] * eta.local_trace(cone)
        logger.debug(f"Expanding term at {cone_label(cone)}: {format_scalar(value)}")
        terms.append(value)
    return sum_scalars(terms)


def holim_weights(fan: Fan, cones: Iterable[Cone]) -> Dict[Cone, int]:
    """Signed count of chains ending at each cone: w(c) = 1 - sum of w over faces of c in the set."""
    members = sorted({frozenset(c) for c in cones}, key=lambda c: (len(c), sorted(c)))
    order = nx.DiGraph()
    order.add_nodes_from(members)
    order.add_edges_from((a, b) for a in members for b in members if a < b)
    weights: Dict[Cone, int] = {}
    for cone in nx.topological_sort(order):
        weights[cone] = 1 - sum(weights[face] for face in order.predecessors(cone))
    return weights


def poset_holim_trace(G: ConicSheaf, eta: Equivariant, Q: Iterable[Cone]) -> Scalar:
    """Trace on sections over the open conic set covered by the cones of Q."""
    fixed = [c for c in Q if eta.analysis.is_fixed(c)]
    weights = holim_weights(G.fan, fixed)
    terms = [weights[c] * eta.local_trace(c) for c in sorted(weights, key=lambda c: (len(c), sorted(c)))]
    return sum_scalars(terms)


def trace_shrinking(G: ConicSheaf, eta: Equivariant, S: Subspace) -> Scalar:
    """Trace on sections with support in S: origin stalk minus sections off S."""
    A = eta.matrix
    if not validate_shrinking(A, S):
        raise InvalidSubbundle(f"{S.label or 'subspace'} is not a shrinking subbundle of {A}", element=S.label or None)
    inside = subfan_of_subspace(G.fan, S)
    outside = [c for c in G.fan.cones if c not in inside]
    origin = eta.local_trace(ORIGIN)
    off = poset_holim_trace(G, eta, outside)
    logger.debug(f"Shrinking trace: origin {format_scalar(origin)}, complement {format_scalar(off)}")
    return sympy.expand(origin - off)


@dataclass
class LocalizationResult:
    value: Scalar
    expanding_value: Scalar
    shrinking_value: Scalar
    expanding: Subspace
    shrinking: Subspace
    perturbation: sympy.Rational

    def to_dict(self) -> Dict[str, object]:
        return {
            "value": format_scalar(self.value),
            "expanding_value": format_scalar(self.expanding_value),
            "shrinking_value": format_scalar(self.shrinking_value),
            "expanding_subbundle": self.expanding.to_dict(),
            "shrinking_subbundle": self.shrinking.to_dict(),
            "perturbation": str(self.perturbation),
        }


def valid_expanding_subspaces(G: ConicSheaf, eta: Equivariant) -> List[Subspace]:
    A = eta.matrix
    return [E for E in adapted_invariant_subspaces(G.fan, A) if validate_expanding(A, E, allow_perturbation=True)]


def valid_shrinking_subspaces(G: ConicSheaf, eta: Equivariant) -> List[Subspace]:
    A = eta.matrix
    return [S for S in adapted_invariant_subspaces(G.fan, A) if validate_shrinking(A, S)]


def localization_trace(
    G: ConicSheaf,
    eta: Equivariant,
    expanding: Optional[Subspace] = None,
    shrinking: Optional[Subspace] = None,
    element: Optional[str] = None,
) -> LocalizationResult:
    """Compute both localization traces and insist that they agree."""
    A = eta.matrix
    if not check_nondegenerate(A):
        raise DegenerateNormalMap(f"1 is an eigenvalue of {A}", element=element or str(A))
    t = unit_circle_perturbation(A)

    if expanding is None:
        candidates = valid_expanding_subspaces(G, eta)
        if not candidates:
            raise InvalidSubbundle("no fan-adapted expanding subbundle", element=element or G.name)
        expanding = candidates[0]
    if shrinking is None:
        candidates = valid_shrinking_subspaces(G, eta)
        if not candidates:
            raise InvalidSubbundle("no fan-adapted shrinking subbundle", element=element or G.name)
        shrinking = candidates[0]

    expanding_value = trace_expanding(G, eta, expanding, allow_perturbation=True)
    shrinking_value = trace_shrinking(G, eta, shrinking)
    if sympy.expand(expanding_value - shrinking_value) != 0:
        raise LocalizationMismatch(
            format_scalar(expanding_value), format_scalar(shrinking_value), element=element or G.name or None
        )
    logger.debug(
        f"Localization of {G.name or 'sheaf'} over {A}: {format_scalar(expanding_value)} "
        f"(E dim {expanding.dim}, S dim {shrinking.dim}, t = {t})"
    )
    return LocalizationResult(expanding_value, expanding_value, shrinking_value, expanding, shrinking, t)
