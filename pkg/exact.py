"""Exact scalars and small matrices.

Scalars are sympy expressions of the form ``a + b*I`` with rational ``a`` and
``b`` (Gaussian rationals), always kept expanded so that structural equality
is value equality. Matrices are ``sympy.ImmutableMatrix`` over those scalars.
Files carry rationals as ``"p/q"`` strings and Gaussian rationals as
``"a/b+c/d i"``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Tuple, Union

import sympy
from sympy import I, ImmutableMatrix, Integer, Rational

from errors import ProblemFormatError

Scalar = sympy.Expr
ScalarLike = Union[int, str, Fraction, Rational, sympy.Expr]

_RATIONAL_TOKEN = r"\d+(?:/\d+)?"
_GAUSSIAN_RE = re.compile(
    rf"^(?P<re>[+-]?{_RATIONAL_TOKEN})?"
    rf"(?:(?P<sign>[+-])?\s*(?P<im>{_RATIONAL_TOKEN})?\s*(?P<unit>i))?$"
)

ZERO = Integer(0)
ONE = Integer(1)


def rational(value: ScalarLike) -> Rational:
    """Coerce ``value`` to an exact rational; floats are refused."""
    if isinstance(value, bool):
        raise ProblemFormatError(f"expected a rational, got boolean {value!r}")
    if isinstance(value, float):
        raise ProblemFormatError(f"floating point value {value!r} is not allowed; use a 'p/q' string")
    if isinstance(value, Fraction):
        return Rational(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if not re.fullmatch(rf"[+-]?{_RATIONAL_TOKEN}", text):
            raise ProblemFormatError(f"malformed rational {value!r}")
        return Rational(text)
    result = sympy.sympify(value)
    if not result.is_Rational:
        raise ProblemFormatError(f"expected a rational, got {value!r}")
    return result


def parse_gaussian(text: str) -> Scalar:
    """Parse ``"a/b+c/d i"``, ``"3/4"``, ``"-2 i"`` or ``"i"``."""
    compact = text.strip().replace(" ", "")
    match = _GAUSSIAN_RE.match(compact)
    if not compact or match is None:
        raise ProblemFormatError(f"malformed complex rational {text!r}")
    real_part = Rational(match.group("re")) if match.group("re") else ZERO
    imag_part = ZERO
    if match.group("unit"):
        magnitude = Rational(match.group("im")) if match.group("im") else ONE
        if match.group("sign") is None and match.group("re") is not None:
            # "2i" parsed with "2" as the real token
            magnitude, real_part = real_part, ZERO
        imag_part = -magnitude if match.group("sign") == "-" else magnitude
    return sympy.expand(real_part + I * imag_part)


def gaussian(value: ScalarLike) -> Scalar:
    """Coerce ``value`` to an expanded Gaussian rational."""
    if isinstance(value, str):
        return parse_gaussian(value)
    if isinstance(value, (bool, float)):
        raise ProblemFormatError(f"expected an exact scalar, got {value!r}")
    if isinstance(value, Fraction):
        return rational(value)
    result = sympy.expand(sympy.sympify(value))
    real_part, imag_part = result.as_real_imag()
    if not (real_part.is_Rational and imag_part.is_Rational):
        raise ProblemFormatError(f"expected a Gaussian rational, got {value!r}")
    return result


def parts(value: Scalar) -> Tuple[Rational, Rational]:
    real_part, imag_part = sympy.expand(value).as_real_imag()
    return Rational(real_part), Rational(imag_part)


def format_scalar(value: ScalarLike) -> str:
    """Exact text form: ``"3/4"``, ``"-2"``, ``"1/2+3/4 i"``."""
    real_part, imag_part = parts(gaussian(value))
    if imag_part == 0:
        return str(real_part)
    sign = "-" if imag_part < 0 else "+"
    return f"{real_part}{sign}{abs(imag_part)} i"


def is_zero(value: Scalar) -> bool:
    return sympy.expand(value) == 0


def matrix(rows: Sequence[Sequence[ScalarLike]], shape: Tuple[int, int] = None) -> ImmutableMatrix:
    """Gaussian-rational matrix from nested rows; ``shape`` is needed for empty matrices."""
    converted = [[gaussian(entry) for entry in row] for row in rows]
    if shape is not None:
        n_rows, n_cols = shape
        if len(converted) != n_rows or any(len(row) != n_cols for row in converted):
            raise ProblemFormatError(f"matrix does not have shape {n_rows}x{n_cols}")
        if n_rows == 0 or n_cols == 0:
            return ImmutableMatrix.zeros(n_rows, n_cols)
    elif not converted:
        raise ProblemFormatError("empty matrix without an explicit shape")
    widths = {len(row) for row in converted}
    if len(widths) != 1:
        raise ProblemFormatError("ragged matrix rows")
    return ImmutableMatrix(converted)


def rational_matrix(rows: Sequence[Sequence[ScalarLike]]) -> ImmutableMatrix:
    return ImmutableMatrix([[rational(entry) for entry in row] for row in rows])


def zeros(n_rows: int, n_cols: int) -> ImmutableMatrix:
    return ImmutableMatrix.zeros(n_rows, n_cols)


def identity(n: int) -> ImmutableMatrix:
    if n == 0:
        return ImmutableMatrix.zeros(0, 0)
    return ImmutableMatrix.eye(n)


def matmul(left: ImmutableMatrix, right: ImmutableMatrix) -> ImmutableMatrix:
    if left.cols != right.rows:
        raise ProblemFormatError(f"cannot compose {left.rows}x{left.cols} with {right.rows}x{right.cols}")
    if left.rows == 0 or right.cols == 0 or left.cols == 0:
        return zeros(left.rows, right.cols)
    return ImmutableMatrix((left * right).expand())


def matrices_equal(left: ImmutableMatrix, right: ImmutableMatrix) -> bool:
    if left.shape != right.shape:
        return False
    return all(sympy.expand(a - b) == 0 for a, b in zip(left, right))


def trace(square: ImmutableMatrix) -> Scalar:
    return sympy.expand(sum((square[i, i] for i in range(square.rows)), ZERO))


def alternating_trace(by_degree: Mapping[int, ImmutableMatrix]) -> Scalar:
    """Σ_j (−1)^j tr(M_j)."""
    total = ZERO
    for degree, block in by_degree.items():
        value = trace(block)
        total += value if degree % 2 == 0 else -value
    return sympy.expand(total)


def block_diagonal(left: ImmutableMatrix, right: ImmutableMatrix) -> ImmutableMatrix:
    rows = left.rows + right.rows
    cols = left.cols + right.cols
    if rows == 0 or cols == 0:
        return zeros(rows, cols)
    return ImmutableMatrix(_block(left, right))


def _block(left: ImmutableMatrix, right: ImmutableMatrix):
    out = sympy.zeros(left.rows + right.rows, left.cols + right.cols)
    for i in range(left.rows):
        for j in range(left.cols):
            out[i, j] = left[i, j]
    for i in range(right.rows):
        for j in range(right.cols):
            out[left.rows + i, left.cols + j] = right[i, j]
    return out


def matrix_rows(value: ImmutableMatrix) -> list:
    """Rows as exact strings, for JSON."""
    return [[format_scalar(value[i, j]) for j in range(value.cols)] for i in range(value.rows)]


def sum_scalars(values: Iterable[Scalar]) -> Scalar:
    return sympy.expand(sum(values, ZERO))
