# backend/core/normbound/hermite.py

import logging
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence, Tuple, Union

from .settings import DEFAULT_TOLERANCES, MAX_HERMITE_DEGREE, Tolerances

logger = logging.getLogger(__name__)

Coefficient = Union[int, Fraction]

_EPS = sys.float_info.epsilon


class RootFindingError(RuntimeError):
    """Root isolation or refinement failed for a polynomial of a given degree."""

    def __init__(self, degree: int, message: str):
        super().__init__(f"root finding failed for degree {degree}: {message}")
        self.degree = degree


@dataclass(frozen=True)
class HermitePolynomial:
    """Probabilists' Hermite polynomial He_n with exact integer coefficients.

    coefficients[i] is the coefficient of x**i.
    """
    degree: int
    coefficients: Tuple[int, ...]

    def __post_init__(self):
        if len(self.coefficients) != self.degree + 1:
            raise ValueError(
                f"He_{self.degree} needs {self.degree + 1} coefficients, got {len(self.coefficients)}"
            )
        if self.coefficients[-1] != 1:
            raise ValueError(f"He_{self.degree} must be monic")

    def square_variable_coefficients(self) -> Tuple[int, ...]:
        """Coefficients of Q where He_n(x) = x**(n % 2) * Q(x**2)."""
        return self.coefficients[self.degree % 2::2]

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True)
class RootSquares:
    """Squares of the positive roots of an odd Hermite polynomial, ascending."""
    degree: int
    values: Tuple[float, ...]
    residuals: Tuple[float, ...]

    def __len__(self):
        return len(self.values)

    def nodes(self) -> Tuple[float, ...]:
        """Positive roots themselves."""
        return tuple(math.sqrt(u) for u in self.values)


def _check_degree(n: int) -> None:
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"Hermite degree must be a nonnegative integer, got {n!r}")
    if n > MAX_HERMITE_DEGREE:
        raise ValueError(f"Hermite degree {n} exceeds the supported maximum {MAX_HERMITE_DEGREE}")


@lru_cache(maxsize=None)
def _recursion_coefficients(n: int) -> Tuple[int, ...]:
    if n == 0:
        return (1,)
    if n == 1:
        return (0, 1)
    current = _recursion_coefficients(n - 1)
    previous = _recursion_coefficients(n - 2)
    # He_n = x He_{n-1} - (n-1) He_{n-2}
    coefficients = [0] + list(current)
    for i, c in enumerate(previous):
        coefficients[i] -= (n - 1) * c
    return tuple(coefficients)


def hermite_coefficients(n: int) -> HermitePolynomial:
    """
    Exact coefficients of He_n from the three-term recursion

    Args:
        n: degree, 0 <= n <= MAX_HERMITE_DEGREE

    Returns:
        HermitePolynomial of degree n
    """
    _check_degree(n)
    return HermitePolynomial(degree=n, coefficients=_recursion_coefficients(n))


def explicit_coefficients(n: int) -> HermitePolynomial:
    """He_n from the closed form (-1)^m n! / (m! 2^m (n-2m)!) at x**(n-2m)."""
    _check_degree(n)
    coefficients = [0] * (n + 1)
    for m in range(n // 2 + 1):
        coefficients[n - 2 * m] = (
            (-1) ** m * math.factorial(n) // (math.factorial(m) * 2 ** m * math.factorial(n - 2 * m))
        )
    return HermitePolynomial(degree=n, coefficients=tuple(coefficients))


def horner(coefficients: Sequence[Coefficient], x):
    """Horner evaluation; exact for int/Fraction x, float otherwise."""
    result = 0
    for c in reversed(coefficients):
        result = result * x + c
    return result


def evaluate(p: HermitePolynomial, x):
    return horner(p.coefficients, x)


def evaluate_in_square_variable(p: HermitePolynomial, u):
    """Q(u) for He_n(x) = x**(n % 2) * Q(x**2)."""
    return horner(p.square_variable_coefficients(), u)


class _ExactPolynomial:
    """Integer-scaled copy of a polynomial, evaluated exactly at binary floats."""

    def __init__(self, coefficients: Sequence[Coefficient]):
        fractions = [Fraction(c) for c in coefficients]
        common = 1
        for c in fractions:
            common = common * c.denominator // math.gcd(common, c.denominator)
        self.integers = [int(c * common) for c in fractions]

    def evaluate(self, u: float) -> Tuple[int, int]:
        """Integers proportional to P(u) and to sum |c_i| |u|^i, sharing one positive factor."""
        numerator, denominator = float(u).as_integer_ratio()
        magnitude = abs(numerator)
        value = self.integers[-1]
        scale = abs(value)
        power = denominator
        for c in reversed(self.integers[:-1]):
            value = value * numerator + c * power
            scale = scale * magnitude + abs(c) * power
            power *= denominator
        return value, scale

    def residual(self, u: float) -> Tuple[int, float]:
        """Sign-carrying value and the relative backward error |P(u)| / sum |c_i| |u|^i."""
        value, scale = self.evaluate(u)
        return value, abs(value) / scale if scale else 0.0


def _horner_with_derivative(coefficients: Sequence[float], x: float) -> Tuple[float, float, float]:
    """Value, derivative and the magnitude sum sum |c_i| |x|^i at x."""
    value = 0.0
    derivative = 0.0
    scale = 0.0
    ax = abs(x)
    for c in reversed(coefficients):
        derivative = derivative * x + value
        value = value * x + c
        scale = scale * ax + abs(c)
    return value, derivative, scale


def _newton_step(coefficients: Sequence[float], x: float) -> float:
    """Float Newton proposal from x, or nan where rounding swamps the value."""
    value, derivative, scale = _horner_with_derivative(coefficients, x)
    noise = 4.0 * len(coefficients) * _EPS * scale
    if not (math.isfinite(value) and math.isfinite(derivative)) or derivative == 0.0 or abs(value) <= noise:
        return math.nan
    return x - value / derivative


def _refine(exact: _ExactPolynomial, floats: Sequence[float], lo: float, hi: float, positive_lo: bool,
            tolerance: float, max_iterations: int, degree: int) -> Tuple[float, float]:
    """Newton steps inside a sign-change bracket, bisection when a step leaves it.

    Bracket signs and residuals come from exact evaluation; floats only propose steps.
    """
    x = 0.5 * (lo + hi)
    for iteration in range(max_iterations):
        value, residual = exact.residual(x)
        if residual <= tolerance:
            polished = _newton_step(floats, x)
            if lo <= polished <= hi:
                _, polished_residual = exact.residual(polished)
                if polished_residual < residual:
                    x, residual = polished, polished_residual
            logger.debug("degree %d root %.17g converged after %d steps", degree, x, iteration)
            return x, residual
        if (value > 0) == positive_lo:
            lo = x
        else:
            hi = x
        if hi <= math.nextafter(lo, math.inf):
            residual, x = min((exact.residual(u)[1], u) for u in (lo, hi))
            if residual <= tolerance:
                return x, residual
            raise RootFindingError(degree, f"bracket collapsed at {x:.17g} with residual {residual:.3e} "
                                           f"above tolerance {tolerance:.3e}")
        step = _newton_step(floats, x)
        x = step if lo < step < hi else 0.5 * (lo + hi)
    raise RootFindingError(degree, f"no convergence in [{lo:.17g}, {hi:.17g}] after {max_iterations} steps")


def real_roots(coefficients: Sequence[Coefficient], lower: float, upper: float,
               tolerance: float = DEFAULT_TOLERANCES.root_tolerance,
               max_iterations: int = DEFAULT_TOLERANCES.root_max_iterations,
               grid_points: int = 0) -> List[Tuple[float, float]]:
    """
    Real roots of a polynomial inside (lower, upper]

    Sign changes are bracketed on a geometric grid using exact evaluation of
    the coefficients, and each bracket is refined by bisection-safeguarded
    Newton steps.

    Args:
        coefficients: exact (int or Fraction) coefficients, index i for u**i
        lower: positive left end of the search interval
        upper: right end of the search interval
        tolerance: relative backward error |P(u)| / sum |c_i| |u|^i to accept
        max_iterations: refinement cap per root
        grid_points: grid size; 0 picks 64 * degree + 256

    Returns:
        Ascending list of (root, residual) pairs

    Raises:
        RootFindingError: a root cannot be refined to the tolerance
    """
    degree = len(coefficients) - 1
    if lower <= 0 or upper <= lower:
        raise ValueError(f"need 0 < lower < upper, got ({lower}, {upper})")
    if degree < 1:
        return []
    exact = _ExactPolynomial(coefficients)
    floats = [float(c) for c in coefficients]
    count = grid_points or 64 * degree + 256
    ratio = (upper / lower) ** (1.0 / (count - 1))
    grid = [lower * ratio ** i for i in range(count - 1)] + [upper]

    roots: List[Tuple[float, float]] = []
    previous_u = grid[0]
    previous_value, _ = exact.evaluate(previous_u)
    for u in grid[1:]:
        value, _ = exact.evaluate(u)
        if value == 0:
            roots.append((u, 0.0))
        elif previous_value != 0 and (value > 0) != (previous_value > 0):
            roots.append(_refine(exact, floats, previous_u, u, previous_value > 0,
                                 tolerance, max_iterations, degree))
        previous_u, previous_value = u, value
    logger.debug("degree %d: %d roots in (%g, %g]", degree, len(roots), lower, upper)
    return roots


def nonzero_root_squares(n: int, tolerance: float = DEFAULT_TOLERANCES.root_tolerance,
                         tolerances: Tolerances = DEFAULT_TOLERANCES) -> RootSquares:
    """
    Squares of the positive roots of He_n for odd n

    Args:
        n: odd degree >= 3
        tolerance: relative backward error accepted per root

    Returns:
        RootSquares with exactly (n - 1) / 2 ascending values
    """
    if not isinstance(n, int) or n < 3 or n % 2 == 0:
        raise ValueError(f"nonzero_root_squares needs an odd degree >= 3, got {n!r}")
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    p = hermite_coefficients(n)
    expected = (n - 1) // 2
    found = real_roots(p.square_variable_coefficients(), 1.0 / (64 * n), 4.0 * n,
                       tolerance=tolerance, max_iterations=tolerances.root_max_iterations)
    if len(found) != expected:
        raise RootFindingError(n, f"isolated {len(found)} root squares, expected {expected}")
    values = tuple(u for u, _ in found)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise RootFindingError(n, "root squares are not strictly increasing")
    return RootSquares(degree=n, values=values, residuals=tuple(r for _, r in found))


def evaluate_recurrence(n: int, x: float) -> float:
    """He_n(x) in floating point by the three-term recursion."""
    previous, current = 1.0, x
    if n == 0:
        return previous
    for m in range(1, n):
        previous, current = current, x * current - m * previous
    return current


def gauss_weight(n: int, x: float) -> float:
    """Weight of the n-point probabilists' Gauss-Hermite rule at node x.

    w = (n-1)! / (n He_{n-1}(x)^2), normalised so the weights sum to one.
    """
    if n < 1:
        raise ValueError(f"rule size must be positive, got {n}")
    value = evaluate_recurrence(n - 1, x)
    return math.factorial(n - 1) / n / value / value
