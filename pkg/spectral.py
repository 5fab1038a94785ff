"""Exact and certified linear algebra for normal-bundle maps.

Eigenvalues are never computed in floating point for classification: the
characteristic polynomial is built exactly, factored over Q, and every
irreducible factor's roots are isolated and refined with sympy until their
position relative to the unit circle and to the segment [0, 1] is decided
(or the refinement cap is hit, in which case the eigenvalue is reported as
ON_BOUNDARY_AMBIGUOUS).

Invariant subspaces are kernels of exact polynomials in A whenever the
selected eigenvalues are a union of whole rational factors; otherwise an
ordered real Schur decomposition gives an orthonormal float basis whose
invariance residual is recorded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import sympy
from sympy import I, ImmutableMatrix, Matrix, Poly, Rational, Symbol

from config import get_settings
from errors import BoundaryAmbiguous, DegenerateNormalMap, ProblemFormatError, UnitCircleRequired
from exact import ScalarLike, format_scalar, rational

logger = logging.getLogger(__name__)

_X = Symbol("x")


class EigenClass(str, Enum):
    IN_UNIT_INTERVAL = "IN_UNIT_INTERVAL"
    INSIDE_DISK_OFF_INTERVAL = "INSIDE_DISK_OFF_INTERVAL"
    OUTSIDE_DISK = "OUTSIDE_DISK"
    ON_BOUNDARY_AMBIGUOUS = "ON_BOUNDARY_AMBIGUOUS"


@dataclass(frozen=True)
class RationalMatrix:
    """Square matrix with exact rational entries."""

    entries: ImmutableMatrix

    def __post_init__(self):
        if not isinstance(self.entries, ImmutableMatrix):
            object.__setattr__(self, "entries", ImmutableMatrix(self.entries))
        rows, cols = self.entries.shape
        if rows != cols or rows == 0:
            raise ProblemFormatError(f"normal map must be square and non-empty, got {rows}x{cols}")
        for value in self.entries:
            if not value.is_Rational:
                raise ProblemFormatError(f"normal map entry {value} is not rational")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[ScalarLike]]) -> "RationalMatrix":
        return cls(ImmutableMatrix([[rational(v) for v in row] for row in rows]))

    @classmethod
    def diagonal(cls, *values: ScalarLike) -> "RationalMatrix":
        return cls(ImmutableMatrix(sympy.diag(*[rational(v) for v in values])))

    @classmethod
    def identity(cls, dim: int) -> "RationalMatrix":
        return cls(ImmutableMatrix.eye(dim))

    @property
    def dim(self) -> int:
        return self.entries.rows

    def scaled(self, t: ScalarLike) -> "RationalMatrix":
        return RationalMatrix(ImmutableMatrix(self.entries * rational(t)))

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix(ImmutableMatrix(self.entries * other.entries))

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(ImmutableMatrix(self.entries.T))

    def determinant(self) -> Rational:
        return Rational(self.entries.det())

    def apply(self, vector: Sequence[Rational]) -> Tuple[Rational, ...]:
        image = self.entries * Matrix(list(vector))
        return tuple(Rational(v) for v in image)

    def to_float(self) -> np.ndarray:
        return np.array(self.entries.tolist(), dtype=float)

    def rows(self) -> List[List[str]]:
        return [[str(self.entries[i, j]) for j in range(self.dim)] for i in range(self.dim)]

    def __str__(self) -> str:
        return "[" + "; ".join(" ".join(row) for row in self.rows()) + "]"


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenEnclosure:
    """One eigenvalue (with multiplicity) inside a rational disk."""

    center: sympy.Expr
    radius: Rational
    multiplicity: int
    is_real: bool
    classification: EigenClass
    factor_index: int
    real_bounds: Optional[Tuple[Rational, Rational]] = None
    modulus_sq_bounds: Tuple[Rational, Rational] = (Rational(0), Rational(0))

    def in_unit_interval(self) -> Optional[bool]:
        if not self.is_real:
            return False
        lo, hi = self.real_bounds
        if lo >= 0 and hi <= 1:
            return True
        if hi < 0 or lo > 1:
            return False
        return None

    def at_least_one(self) -> Optional[bool]:
        """Whether the eigenvalue lies in [1, +inf)."""
        if not self.is_real:
            return False
        lo, hi = self.real_bounds
        if lo >= 1:
            return True
        if hi < 1:
            return False
        return None

    def modulus_side(self) -> Optional[int]:
        """-1 inside the unit disk, +1 outside, 0 exactly on the circle."""
        lo, hi = self.modulus_sq_bounds
        if hi < 1:
            return -1
        if lo > 1:
            return 1
        if lo == hi == 1:
            return 0
        return None

    def to_dict(self) -> Dict[str, object]:
        return {
            "center": format_scalar(self.center),
            "radius": str(self.radius),
            "multiplicity": self.multiplicity,
            "real": self.is_real,
            "classification": self.classification.value,
        }


@dataclass(frozen=True)
class RationalFactor:
    polynomial: Poly
    exponent: int
    members: Tuple[int, ...]


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: Tuple[EigenEnclosure, ...]
    factors: Tuple[RationalFactor, ...]
    characteristic_polynomial: Poly

    @property
    def dimension(self) -> int:
        return sum(e.multiplicity for e in self.eigenvalues)

    @property
    def classifications(self) -> Tuple[EigenClass, ...]:
        return tuple(e.classification for e in self.eigenvalues)

    def count(self, predicate: Callable[[EigenEnclosure], Optional[bool]]) -> Optional[int]:
        total = 0
        for eigen in self.eigenvalues:
            decided = predicate(eigen)
            if decided is None:
                return None
            if decided:
                total += eigen.multiplicity
        return total

    def has_ambiguity(self) -> bool:
        return any(c is EigenClass.ON_BOUNDARY_AMBIGUOUS for c in self.classifications)

    def to_dict(self) -> Dict[str, object]:
        return {
            "characteristic_polynomial": str(self.characteristic_polynomial.as_expr()),
            "eigenvalues": [e.to_dict() for e in self.eigenvalues],
        }


def _classify(real_bounds, modulus_bounds, is_real) -> EigenClass:
    trial = EigenEnclosure(
        center=sympy.Integer(0), radius=Rational(0), multiplicity=1, is_real=is_real,
        classification=EigenClass.ON_BOUNDARY_AMBIGUOUS, factor_index=-1,
        real_bounds=real_bounds, modulus_sq_bounds=modulus_bounds,
    )
    side = trial.modulus_side()
    in_interval = trial.in_unit_interval()
    if side == 0 or side is None:
        return EigenClass.ON_BOUNDARY_AMBIGUOUS
    if in_interval is None or (trial.is_real and trial.at_least_one() is None):
        return EigenClass.ON_BOUNDARY_AMBIGUOUS
    if in_interval:
        return EigenClass.IN_UNIT_INTERVAL
    if side > 0:
        return EigenClass.OUTSIDE_DISK
    return EigenClass.INSIDE_DISK_OFF_INTERVAL


def _real_modulus_bounds(lo: Rational, hi: Rational) -> Tuple[Rational, Rational]:
    if lo >= 0:
        return lo * lo, hi * hi
    if hi <= 0:
        return hi * hi, lo * lo
    return Rational(0), max(lo * lo, hi * hi)


def _rectangle_bounds(corner_lo, corner_hi):
    ax, ay = Rational(sympy.re(corner_lo)), Rational(sympy.im(corner_lo))
    bx, by = Rational(sympy.re(corner_hi)), Rational(sympy.im(corner_hi))
    cx = min(max(Rational(0), ax), bx)
    cy = min(max(Rational(0), ay), by)
    lower = cx * cx + cy * cy
    upper = max(ax * ax, bx * bx) + max(ay * ay, by * by)
    center = sympy.expand((ax + bx) / 2 + I * (ay + by) / 2)
    radius = (bx - ax) / 2 + (by - ay) / 2
    return center, radius, (lower, upper)


def _unit_circle_root_count(factor: Poly) -> int:
    """Exact number of roots of an irreducible factor of degree >= 2 lying on |z| = 1.

    Such a factor has a unimodular root only if it is palindromic of even degree 2m.
    Then p(z) = z^m q(z + 1/z) and every real root of q in (-2, 2) gives a conjugate
    pair on the circle.
    """
    coeffs = [Rational(c) for c in factor.all_coeffs()]
    degree = len(coeffs) - 1
    if degree < 2 or degree % 2 or coeffs != coeffs[::-1]:
        return 0
    half = degree // 2
    w = Symbol("w")
    chebyshev = [sympy.Integer(2), w]
    while len(chebyshev) <= half:
        chebyshev.append(sympy.expand(w * chebyshev[-1] - chebyshev[-2]))
    reduced = coeffs[half] + sum(coeffs[half + j] * chebyshev[j] for j in range(1, half + 1))
    q = Poly(reduced, w, domain="QQ")
    # q(+-2) = 0 would put +-1 among the roots, which an irreducible factor excludes.
    return 2 * q.count_roots(-2, 2)


def _isolate_factor(factor: Poly, cap: int) -> List[Tuple[sympy.Expr, Rational, bool, Optional[Tuple], Tuple]]:
    """Enclosures (center, radius, real, real_bounds, modulus_bounds) for each root of an irreducible factor."""
    coeffs = [Rational(c) for c in factor.all_coeffs()]
    degree = factor.degree()
    if degree == 1:
        root = -coeffs[1] / coeffs[0]
        return [(root, Rational(0), True, (root, root), _real_modulus_bounds(root, root))]

    # A conjugate pair of a real quadratic a*x^2 + b*x + c has |z|^2 = c/a exactly.
    exact_modulus = None
    if degree == 2 and coeffs[1] ** 2 - 4 * coeffs[0] * coeffs[2] < 0:
        exact_modulus = coeffs[2] / coeffs[0]

    on_circle = _unit_circle_root_count(factor) if exact_modulus is None else 0

    enclosures = []
    for step in range(cap + 1):
        eps = Rational(1, 2 ** (step + 2))
        real_roots, complex_roots = factor.intervals(all=True, eps=eps, sqf=True)
        enclosures = []
        for lo, hi in real_roots:
            lo, hi = Rational(lo), Rational(hi)
            enclosures.append(((lo + hi) / 2, (hi - lo) / 2, True, (lo, hi), _real_modulus_bounds(lo, hi)))
        for corner_lo, corner_hi in complex_roots:
            center, radius, modulus = _rectangle_bounds(corner_lo, corner_hi)
            if exact_modulus is not None:
                modulus = (exact_modulus, exact_modulus)
            enclosures.append((center, radius, False, None, modulus))
        if on_circle:
            straddling = [
                index for index, (_, _, is_real, _, (lo, hi)) in enumerate(enclosures)
                if not is_real and lo <= 1 <= hi
            ]
            # Unimodular roots always straddle, so equal counts pin them down.
            if len(straddling) == on_circle:
                for index in straddling:
                    center, radius, _, _, _ = enclosures[index]
                    enclosures[index] = (center, radius, False, None, (Rational(1), Rational(1)))
        if all(
            modulus == (1, 1) or _classify(real_bounds, modulus, is_real) is not EigenClass.ON_BOUNDARY_AMBIGUOUS
            for _, _, is_real, real_bounds, modulus in enclosures
        ):
            logger.debug(f"Factor {factor.as_expr()} resolved after {step} refinements")
            return enclosures
    logger.debug(f"Factor {factor.as_expr()} still ambiguous after {cap} refinements")
    return enclosures


@lru_cache(maxsize=1024)
def _spectrum_cached(entries: ImmutableMatrix, cap: int) -> SpectrumReport:
    char_poly = Poly(Matrix(entries).charpoly(_X).as_expr(), _X, domain="QQ")
    _, factor_list = char_poly.factor_list()
    eigenvalues: List[EigenEnclosure] = []
    factors: List[RationalFactor] = []
    for index, (factor, exponent) in enumerate(factor_list):
        members = []
        for center, radius, is_real, real_bounds, modulus in _isolate_factor(factor, cap):
            members.append(len(eigenvalues))
            eigenvalues.append(EigenEnclosure(
                center=center,
                radius=radius,
                multiplicity=exponent,
                is_real=is_real,
                classification=_classify(real_bounds, modulus, is_real),
                factor_index=index,
                real_bounds=real_bounds,
                modulus_sq_bounds=modulus,
            ))
        factors.append(RationalFactor(polynomial=factor, exponent=exponent, members=tuple(members)))
    return SpectrumReport(eigenvalues=tuple(eigenvalues), factors=tuple(factors), characteristic_polynomial=char_poly)


def spectrum(A: RationalMatrix, refinement_cap: Optional[int] = None) -> SpectrumReport:
    """Certified eigenvalue enclosures of A with their classifications."""
    cap = get_settings().refinement_cap if refinement_cap is None else refinement_cap
    return _spectrum_cached(A.entries, cap)


def check_nondegenerate(A: RationalMatrix) -> bool:
    """True iff det(I - A) != 0, decided exactly."""
    return (ImmutableMatrix.eye(A.dim) - A.entries).det() != 0


def _require_nondegenerate(A: RationalMatrix) -> None:
    if not check_nondegenerate(A):
        raise DegenerateNormalMap(f"1 is an eigenvalue of {A}", element=str(A))


# ---------------------------------------------------------------------------
# Subspaces
# ---------------------------------------------------------------------------

def _tolerance() -> float:
    return float(get_settings().tolerance)


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of Q^r (or R^r), given by a basis of columns.

    Exact subspaces hold a rational r x d basis; floating ones hold an
    orthonormal basis together with the invariance residual it was certified
    with.
    """

    ambient_dim: int
    basis: Optional[ImmutableMatrix] = None
    float_basis: Optional[Tuple[Tuple[float, ...], ...]] = None
    residual: Optional[float] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.basis is None and self.float_basis is None:
            raise ProblemFormatError("subspace needs an exact or a floating basis")
        if self.basis is not None:
            if self.basis.rows != self.ambient_dim:
                raise ProblemFormatError(
                    f"subspace basis has {self.basis.rows} rows, ambient dimension is {self.ambient_dim}"
                )
            if self.basis.cols and Matrix(self.basis).rank() != self.basis.cols:
                raise ProblemFormatError("subspace basis is not linearly independent")

    # construction -----------------------------------------------------------

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ImmutableMatrix.zeros(ambient_dim, 0), label="zero")

    @classmethod
    def whole(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ImmutableMatrix.eye(ambient_dim), label="whole")

    @classmethod
    def span(cls, vectors: Sequence[Sequence[ScalarLike]], ambient_dim: int, label: str = "") -> "Subspace":
        columns = [Matrix([rational(v) for v in vector]) for vector in vectors]
        for column in columns:
            if column.rows != ambient_dim:
                raise ProblemFormatError(f"vector of length {column.rows} in ambient dimension {ambient_dim}")
        if not columns:
            return cls(ambient_dim, ImmutableMatrix.zeros(ambient_dim, 0), label=label)
        independent = Matrix.hstack(*columns).columnspace()
        if not independent:
            return cls(ambient_dim, ImmutableMatrix.zeros(ambient_dim, 0), label=label)
        return cls(ambient_dim, ImmutableMatrix(Matrix.hstack(*independent)), label=label)

    @classmethod
    def from_float(cls, basis: np.ndarray, residual: float, label: str = "") -> "Subspace":
        rows = tuple(tuple(float(v) for v in row) for row in basis)
        return cls(basis.shape[0], None, rows, residual, label)

    # queries ----------------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.basis is not None

    @property
    def dim(self) -> int:
        if self.basis is not None:
            return self.basis.cols
        return len(self.float_basis[0]) if self.float_basis else 0

    def as_float(self) -> np.ndarray:
        if self.basis is not None:
            return np.array(self.basis.tolist(), dtype=float).reshape(self.ambient_dim, self.dim)
        return np.array(self.float_basis, dtype=float).reshape(self.ambient_dim, self.dim)

    def _projection_residual(self, vectors: np.ndarray) -> float:
        if vectors.size == 0:
            return 0.0
        if self.dim == 0:
            return float(np.linalg.norm(vectors))
        q, _ = np.linalg.qr(self.as_float())
        remainder = vectors - q @ (q.T @ vectors)
        return float(np.linalg.norm(remainder))

    def contains_vector(self, vector: Sequence[ScalarLike]) -> bool:
        if self.is_exact and not any(isinstance(v, float) for v in vector):
            column = Matrix([rational(v) for v in vector])
            if self.dim == 0:
                return all(v == 0 for v in column)
            return Matrix.hstack(Matrix(self.basis), column).rank() == self.dim
        values = np.array([float(v) for v in vector], dtype=float).reshape(-1, 1)
        scale = max(1.0, float(np.linalg.norm(values)))
        return self._projection_residual(values) <= _tolerance() * scale

    def contains(self, other: "Subspace") -> bool:
        if other.dim == 0:
            return True
        if self.is_exact and other.is_exact:
            stacked = Matrix.hstack(Matrix(self.basis), Matrix(other.basis))
            return stacked.rank() == self.dim
        other_basis = other.as_float()
        return self._projection_residual(other_basis) <= _tolerance() * max(1.0, float(np.linalg.norm(other_basis)))

    def same_span(self, other: "Subspace") -> bool:
        return self.ambient_dim == other.ambient_dim and self.dim == other.dim and self.contains(other)

    def is_invariant(self, A: RationalMatrix) -> bool:
        if self.dim == 0:
            return True
        if self.is_exact:
            image = A.entries * self.basis
            return Matrix.hstack(Matrix(self.basis), Matrix(image)).rank() == self.dim
        image = A.to_float() @ self.as_float()
        scale = max(1.0, float(np.linalg.norm(A.to_float())))
        return self._projection_residual(image) <= _tolerance() * scale * max(1, self.dim)

    def restricted(self, A: RationalMatrix) -> RationalMatrix:
        """Matrix of A restricted to this (exact, invariant) subspace in its basis."""
        basis = Matrix(self.basis)
        gram = basis.T * basis
        return RationalMatrix(ImmutableMatrix(gram.inv() * basis.T * A.entries * basis))

    def restricted_eigenvalues_float(self, A: RationalMatrix) -> np.ndarray:
        q, _ = np.linalg.qr(self.as_float())
        return np.linalg.eigvals(q.T @ A.to_float() @ q)

    def canonical_key(self) -> Tuple:
        """Hashable identity of the span (exact subspaces only)."""
        if self.dim == 0:
            return (self.ambient_dim, ())
        reduced, _ = Matrix(self.basis).T.rref()
        return (self.ambient_dim, tuple(str(v) for v in reduced))

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"ambient_dim": self.ambient_dim, "dim": self.dim, "exact": self.is_exact}
        if self.is_exact:
            data["basis"] = [[str(self.basis[i, j]) for i in range(self.ambient_dim)] for j in range(self.dim)]
        else:
            data["residual"] = self.residual
        if self.label:
            data["label"] = self.label
        return data


# ---------------------------------------------------------------------------
# Spectral subspaces
# ---------------------------------------------------------------------------

def _polynomial_at(poly: Poly, A: ImmutableMatrix) -> Matrix:
    result = Matrix.zeros(A.rows, A.cols)
    identity = Matrix.eye(A.rows)
    for coefficient in poly.all_coeffs():
        result = result * A + Rational(coefficient) * identity
    return result


def _spectral_subspace(
    A: RationalMatrix,
    report: SpectrumReport,
    select: Callable[[EigenEnclosure], Optional[bool]],
    label: str,
) -> Subspace:
    chosen: List[RationalFactor] = []
    mixed = False
    for factor in report.factors:
        decisions = [select(report.eigenvalues[i]) for i in factor.members]
        if any(d is None for d in decisions):
            undecided = next(report.eigenvalues[i] for i, d in zip(factor.members, decisions) if d is None)
            raise BoundaryAmbiguous(
                f"cannot decide the {label} region for eigenvalue near {format_scalar(undecided.center)}",
                element=str(A),
            )
        if all(decisions):
            chosen.append(factor)
        elif any(decisions):
            mixed = True

    expected = report.count(select)
    if expected == 0:
        return Subspace(A.dim, ImmutableMatrix.zeros(A.dim, 0), label=label)
    if expected == A.dim:
        return Subspace(A.dim, ImmutableMatrix.eye(A.dim), label=label)

    if not mixed:
        product = Matrix.eye(A.dim)
        for factor in chosen:
            product = product * _polynomial_at(factor.polynomial, A.entries) ** factor.exponent
        kernel = product.nullspace()
        return Subspace(A.dim, ImmutableMatrix(Matrix.hstack(*kernel)), label=label)

    return _float_spectral_subspace(A, report, select, expected, label)


def _float_spectral_subspace(A, report, select, expected: int, label: str) -> Subspace:
    logger.warning(f"Irreducible factor straddles the {label} region of {A}; using a floating Schur basis")
    centers = [complex(e.center) for e in report.eigenvalues]

    def wanted(real_part, imag_part=0.0):
        value = complex(real_part, imag_part)
        nearest = min(range(len(centers)), key=lambda i: abs(centers[i] - value))
        return bool(select(report.eigenvalues[nearest]))

    dense = A.to_float()
    _, schur_vectors, sdim = scipy.linalg.schur(dense, output="real", sort=wanted)
    if sdim != expected:
        raise BoundaryAmbiguous(
            f"floating splitting found {sdim} eigenvalues in the {label} region, expected {expected}",
            element=str(A),
        )
    basis = schur_vectors[:, :sdim]
    compressed = basis.T @ dense @ basis
    residual = float(np.linalg.norm(dense @ basis - basis @ compressed))
    bound = _tolerance() * max(1.0, float(np.linalg.norm(dense)))
    if residual > bound:
        raise BoundaryAmbiguous(f"invariance residual {residual:.3e} exceeds {bound:.3e}", element=str(A))
    return Subspace.from_float(basis, residual, label=label)


def split_unit_circle(A: RationalMatrix) -> Tuple[Subspace, Subspace]:
    """(gplus, gminus): generalized eigenspaces outside / inside the unit circle."""
    report = spectrum(A)
    for eigen in report.eigenvalues:
        if eigen.modulus_side() in (0, None):
            raise BoundaryAmbiguous(
                f"eigenvalue near {format_scalar(eigen.center)} is not separated from the unit circle",
                element=str(A),
            )
    gplus = _spectral_subspace(A, report, lambda e: e.modulus_side() == 1, "gplus")
    gminus = _spectral_subspace(A, report, lambda e: e.modulus_side() == -1, "gminus")
    return gplus, gminus


def satisfies_unit_circle_condition(A: RationalMatrix) -> bool:
    return all(e.modulus_side() in (-1, 1) for e in spectrum(A).eigenvalues)


def minimal_shrinking(A: RationalMatrix) -> Subspace:
    """Sum of generalized eigenspaces for eigenvalues in [0, 1]."""
    _require_nondegenerate(A)
    return _spectral_subspace(A, spectrum(A), EigenEnclosure.in_unit_interval, "minimal shrinking")


def unit_circle_perturbation(A: RationalMatrix, max_steps: Optional[int] = None) -> Rational:
    """Rational t > 1 such that tA avoids the unit circle without moving any other eigenvalue's region.

    Returns 1 when A already satisfies the unit-circle condition.
    """
    if satisfies_unit_circle_condition(A):
        return Rational(1)
    base = spectrum(A)
    in_interval = base.count(EigenEnclosure.in_unit_interval)
    inside = base.count(lambda e: e.modulus_side() == -1 and not e.in_unit_interval())
    if in_interval is None:
        raise BoundaryAmbiguous("cannot classify eigenvalues against [0, 1]", element=str(A))
    steps = get_settings().refinement_cap if max_steps is None else max_steps
    for step in range(1, steps + 1):
        t = 1 + Rational(1, 2 ** step)
        candidate = A.scaled(t)
        if not check_nondegenerate(candidate) or not satisfies_unit_circle_condition(candidate):
            continue
        report = spectrum(candidate)
        if report.count(EigenEnclosure.in_unit_interval) != in_interval:
            continue
        if report.count(lambda e: e.modulus_side() == -1 and not e.in_unit_interval()) != inside:
            continue
        logger.info(f"Unit-circle condition fails for {A}; using t = {t}")
        return t
    raise UnitCircleRequired(f"no admissible scaling moves the spectrum of {A} off the unit circle", element=str(A))


def minimal_expanding(A: RationalMatrix, allow_perturbation: bool = False) -> Subspace:
    """gplus of A, or of tA for the perturbation t when A meets the unit circle."""
    _require_nondegenerate(A)
    if satisfies_unit_circle_condition(A):
        return split_unit_circle(A)[0]
    if not allow_perturbation:
        raise UnitCircleRequired(
            f"minimal expanding subbundle needs an eigenvalue-free unit circle, {A} has eigenvalues on it",
            element=str(A),
        )
    return split_unit_circle(A.scaled(unit_circle_perturbation(A)))[0]


def _restricted_avoids(A: RationalMatrix, S: Subspace, hits: Callable[[EigenEnclosure], Optional[bool]],
                       float_hits: Callable[[complex, float], Optional[bool]], what: str) -> bool:
    if S.dim == 0:
        return True
    if S.is_exact:
        report = spectrum(S.restricted(A))
        for eigen in report.eigenvalues:
            decided = hits(eigen)
            if decided is None:
                raise BoundaryAmbiguous(
                    f"cannot decide whether eigenvalue near {format_scalar(eigen.center)} lies in {what}",
                    element=S.label or None,
                )
            if decided:
                return False
        return True
    tolerance = _tolerance() * max(1.0, float(np.linalg.norm(A.to_float())))
    for value in S.restricted_eigenvalues_float(A):
        decided = float_hits(complex(value), tolerance)
        if decided is None:
            raise BoundaryAmbiguous(f"floating eigenvalue {value} too close to {what}", element=S.label or None)
        if decided:
            return False
    return True


def _float_in_ray(value: complex, tol: float) -> Optional[bool]:
    if abs(value.imag) > tol:
        return False
    if value.real >= 1 + tol:
        return True
    if value.real < 1 - tol:
        return False
    return None


def _float_in_interval(value: complex, tol: float) -> Optional[bool]:
    if abs(value.imag) > tol:
        return False
    if tol <= value.real <= 1 - tol:
        return True
    if value.real < -tol or value.real > 1 + tol:
        return False
    return None


def validate_shrinking(A: RationalMatrix, S: Subspace) -> bool:
    """Invariant, contains the minimal shrinking subbundle, spectrum on S avoids [1, +inf)."""
    _require_nondegenerate(A)
    if S.ambient_dim != A.dim:
        raise ProblemFormatError(f"subspace lives in dimension {S.ambient_dim}, map in {A.dim}")
    if not S.is_invariant(A):
        logger.debug(f"Shrinking candidate {S.to_dict()} is not invariant")
        return False
    if not S.contains(minimal_shrinking(A)):
        logger.debug(f"Shrinking candidate {S.to_dict()} misses the minimal shrinking subbundle")
        return False
    return _restricted_avoids(A, S, EigenEnclosure.at_least_one, _float_in_ray, "[1, +inf)")


def validate_expanding(A: RationalMatrix, E: Subspace, allow_perturbation: bool = False) -> bool:
    """Invariant, contains the minimal expanding subbundle, spectrum on E avoids [0, 1]."""
    _require_nondegenerate(A)
    if E.ambient_dim != A.dim:
        raise ProblemFormatError(f"subspace lives in dimension {E.ambient_dim}, map in {A.dim}")
    if not E.is_invariant(A):
        logger.debug(f"Expanding candidate {E.to_dict()} is not invariant")
        return False
    if not E.contains(minimal_expanding(A, allow_perturbation=allow_perturbation)):
        logger.debug(f"Expanding candidate {E.to_dict()} misses the minimal expanding subbundle")
        return False
    return _restricted_avoids(A, E, EigenEnclosure.in_unit_interval, _float_in_interval, "[0, 1]")
