# backend/core/normbound/moments.py

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .hermite import hermite_coefficients

logger = logging.getLogger(__name__)

Matrix = List[List[Fraction]]


class MomentSource(Enum):
    """Where a moment vector came from"""
    NORMAL = "normal"
    USER = "user-supplied"


class SingularHankelError(ZeroDivisionError):
    """The Hankel matrix (or its leading cofactor) is singular."""


def normal_moment(order: int) -> Fraction:
    """E Z^order for Z ~ N(0, 1): zero for odd order, (order-1)!! otherwise."""
    if not isinstance(order, int) or order < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {order!r}")
    if order % 2:
        return Fraction(0)
    return Fraction(math.prod(range(order - 1, 0, -2)))


@dataclass(frozen=True)
class MomentVector:
    """Target moments M_1..M_len; values[j-1] holds M_j."""
    values: Tuple[Fraction, ...]
    source: MomentSource = MomentSource.USER

    def __post_init__(self):
        if self.source is MomentSource.NORMAL:
            for j, value in enumerate(self.values, start=1):
                if value != normal_moment(j):
                    raise ValueError(f"M_{j} = {value} is not the normal moment {normal_moment(j)}")

    def __len__(self):
        return len(self.values)

    def moment(self, order: int) -> Fraction:
        """M_order with M_0 = 1."""
        if order == 0:
            return Fraction(1)
        if order > len(self.values):
            raise ValueError(f"M_{order} requested but only {len(self.values)} moments available")
        return self.values[order - 1]

    def half_even(self, count: int) -> "MomentVector":
        """M_2/2, ..., M_{2 count}/2: targets of the squared-variable problem."""
        return MomentVector(tuple(self.moment(2 * i) / 2 for i in range(1, count + 1)),
                            MomentSource.USER)

    def as_floats(self) -> List[float]:
        return [float(v) for v in self.values]

    @classmethod
    def normal(cls, count: int) -> "MomentVector":
        return cls(tuple(normal_moment(j) for j in range(1, count + 1)), MomentSource.NORMAL)

    @classmethod
    def from_values(cls, values: Sequence) -> "MomentVector":
        return cls(tuple(Fraction(v) for v in values), MomentSource.USER)


@dataclass(frozen=True)
class HankelMatrix:
    """Even-moment Hankel matrix; entry (i, j) = M_{2(i+j)}, i, j = 0..order."""
    order: int
    entries: Tuple[Tuple[Fraction, ...], ...]

    def rows(self) -> Matrix:
        return [list(row) for row in self.entries]

    def minor(self, row: int, col: int) -> Matrix:
        """Entries with one row and one column deleted."""
        return [[v for j, v in enumerate(r) if j != col]
                for i, r in enumerate(self.entries) if i != row]

    def is_symmetric(self) -> bool:
        size = self.order + 1
        return all(self.entries[i][j] == self.entries[j][i] for i in range(size) for j in range(size))


def hankel_matrix(m: int, moments: Optional[MomentVector] = None) -> HankelMatrix:
    """
    Hankel matrix of even moments, size (m+1) x (m+1)

    Args:
        m: order, >= 1
        moments: target moments with at least 4m entries; normal moments if None

    Returns:
        HankelMatrix with M_0 = 1 in the corner and M_{4m} opposite
    """
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"Hankel order must be a positive integer, got {m!r}")
    if moments is None:
        moments = MomentVector.normal(4 * m)
    entries = tuple(
        tuple(moments.moment(2 * (i + j)) for j in range(m + 1))
        for i in range(m + 1)
    )
    return HankelMatrix(order=m, entries=entries)


def bareiss_determinant(matrix: Sequence[Sequence]) -> Fraction:
    """Determinant by Bareiss' fraction-free elimination, exact."""
    a = [[Fraction(v) for v in row] for row in matrix]
    n = len(a)
    if n == 0:
        return Fraction(1)
    if any(len(row) != n for row in a):
        raise ValueError("determinant needs a square matrix")
    sign = 1
    previous = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]) / previous
        previous = a[k][k]
    return sign * a[n - 1][n - 1]


def leading_principal_minors(h: HankelMatrix) -> List[Fraction]:
    rows = h.rows()
    return [bareiss_determinant([row[:size] for row in rows[:size]])
            for size in range(1, h.order + 2)]


def solve_rational(matrix: Sequence[Sequence], rhs: Sequence) -> List[Fraction]:
    """Exact solution of a square linear system by Gauss-Jordan over Fraction."""
    n = len(matrix)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for k in range(n):
        pivot = next((i for i in range(k, n) if a[i][k] != 0), None)
        if pivot is None:
            raise ZeroDivisionError(f"singular system at column {k}")
        a[k], a[pivot] = a[pivot], a[k]
        lead = a[k][k]
        a[k] = [v / lead for v in a[k]]
        for i in range(n):
            if i != k and a[i][k] != 0:
                factor = a[i][k]
                a[i] = [v - factor * w for v, w in zip(a[i], a[k])]
    return [row[n] for row in a]


def _check_even_k(k: int) -> None:
    if not isinstance(k, int) or k < 2 or k % 2:
        raise ValueError(f"k must be an even positive integer, got {k!r}")


def lindsay_bound(k: int, moments: Optional[MomentVector] = None) -> Fraction:
    """
    1 / (H^{-1})_{0,0} for the Hankel matrix matching k even moments

    The Hankel order is k/2, so the entries span exactly M_0..M_{2k}.
    The inverse corner is the (0,0) cofactor over the determinant, giving
    det(H) / det(H without row 0 and column 0).

    Args:
        k: number of matched even moments, even
        moments: moment vector with at least 2k entries; normal if None

    Returns:
        Exact rational bound on p0
    """
    _check_even_k(k)
    h = hankel_matrix(k // 2, moments)
    determinant = bareiss_determinant(h.rows())
    cofactor = bareiss_determinant(h.minor(0, 0))
    if determinant == 0 or cofactor == 0:
        raise SingularHankelError(f"Hankel matrix of order {h.order} is singular")
    logger.debug("k=%d: det=%s cofactor=%s", k, determinant, cofactor)
    return determinant / cofactor


def s_from_hermite(k: int) -> Fraction:
    """
    The quantity s with r* = (1 - s/M_{2k}) / 2, from He_{k+2} coefficients

    With a_i the coefficient of x^{2i+2} in He_{k+2},
    s = M_{2k} * sum_{i=0}^{k/2} (i+1) a_i M_{2i} / a_0.
    """
    _check_even_k(k)
    p = hermite_coefficients(k + 2)
    a = [p.coefficients[2 * i + 2] for i in range(k // 2 + 1)]
    paired = sum(Fraction((i + 1) * a_i) * normal_moment(2 * i) for i, a_i in enumerate(a))
    return normal_moment(2 * k) * paired / a[0]


def orthogonality_check(ell: int, i: int) -> Fraction:
    """sum_j M_{2j+2i} He_{2ell+2i+2}[x^{2j}]; zero by orthogonality."""
    if ell < 0 or i < 0:
        raise ValueError(f"indices must be nonnegative, got ell={ell}, i={i}")
    degree = 2 * ell + 2 * i + 2
    p = hermite_coefficients(degree)
    return sum(
        (normal_moment(2 * j + 2 * i) * p.coefficients[2 * j] for j in range(degree // 2 + 1)),
        Fraction(0),
    )
