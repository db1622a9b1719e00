# backend/core/normbound/matching.py

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .moments import MomentVector
from .settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

Moments = Union[MomentVector, Sequence[float]]


@dataclass(frozen=True)
class Support:
    """Distinct nonzero mass points x_1..x_n (signed allowed)."""
    points: Tuple[float, ...]

    def __post_init__(self):
        points = tuple(float(x) for x in self.points)
        object.__setattr__(self, "points", points)
        if not points:
            raise ValueError("support needs at least one point")
        if any(x == 0.0 for x in points):
            raise ValueError("support points must be nonzero")
        if len(set(points)) != len(points):
            raise ValueError(f"support points must be distinct, got {points}")

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def is_positive_increasing(self) -> bool:
        return self.points[0] > 0 and all(b > a for a, b in zip(self.points, self.points[1:]))


@dataclass(frozen=True)
class MatchResult:
    """Probabilities p_1..p_n reproducing M_1..M_n on a support.

    Probabilities may be negative; r is their sum and p0 = 1 - r.
    """
    probabilities: Tuple[float, ...]
    r: float
    condition_estimate: float
    residual: float
    method: str
    warnings: Tuple[str, ...] = field(default=())

    @property
    def p0(self) -> float:
        return 1.0 - self.r

    def as_array(self) -> np.ndarray:
        return np.array(self.probabilities, dtype=float)


@dataclass(frozen=True)
class PartialsResult:
    """dr*/dy_j with their signs; sign 0 marks an indeterminate entry."""
    values: Tuple[float, ...]
    signs: Tuple[int, ...]
    indeterminate: Tuple[int, ...]

    @property
    def alternates(self) -> bool:
        if self.indeterminate:
            return False
        return all(a == -b for a, b in zip(self.signs, self.signs[1:]))

    @property
    def first_sign(self) -> int:
        return self.signs[0]


def _moment_floats(moments: Moments, count: int) -> np.ndarray:
    values = moments.as_floats() if isinstance(moments, MomentVector) else [float(m) for m in moments]
    if len(values) != count:
        raise ValueError(f"need exactly {count} moments for a support of size {count}, got {len(values)}")
    return np.array(values, dtype=float)


def elementary_symmetric(values: Sequence[float]) -> np.ndarray:
    """e_0..e_n of the values by incremental product expansion."""
    values = np.asarray(values, dtype=float)
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return e


def leave_one_out_symmetric(values: Sequence[float], j: int) -> np.ndarray:
    """e_0..e_{n-1} of the values with entry j deleted."""
    values = np.asarray(values, dtype=float)
    if not 0 <= j < len(values):
        raise IndexError(f"index {j} out of range for {len(values)} values")
    return elementary_symmetric(np.delete(values, j))


def _reproduction_residual(x: np.ndarray, probabilities: Sequence[float], target: np.ndarray) -> float:
    return max(
        abs(math.fsum(p * xj ** i for p, xj in zip(probabilities, x)) - target[i - 1])
        for i in range(1, len(x) + 1)
    )


def solve_probabilities(support: Support, moments: Moments,
                        tolerances: Tolerances = DEFAULT_TOLERANCES) -> MatchResult:
    """
    Explicit Vandermonde-inverse solution of sum_j p_j x_j^i = M_i, i = 1..n

    With x_0 = 0 and phi_j = 1 / prod_{k != j, k = 0..n} (x_k - x_j),
    p_j = phi_j * sum_i (-1)^i M_i e_{n-i}(x without x_j).

    Args:
        support: n distinct nonzero points
        moments: M_1..M_n
        tolerances: condition_cap decides when a warning is attached

    Returns:
        MatchResult with a running-error condition estimate
    """
    x = support.as_array()
    n = len(x)
    target = _moment_floats(moments, n)
    signs = np.array([(-1.0) ** i for i in range(1, n + 1)])

    probabilities: List[float] = []
    amplification = np.zeros(n)
    for j in range(n):
        others = np.delete(x, j)
        e = elementary_symmetric(others)
        e_abs = elementary_symmetric(np.abs(others))
        # psi_i = (-1)^i e_{n-i}(~x_j), i = 1..n
        psi = signs * e[n - 1::-1]
        phi = 1.0 / (-x[j] * np.prod(others - x[j]))
        probabilities.append(phi * math.fsum(psi * target))
        amplification[j] = abs(phi) * math.fsum(np.abs(target) * e_abs[n - 1::-1])

    powers = np.abs(x)[None, :] ** np.arange(1, n + 1)[:, None]
    scale = max(1.0, float(np.max(np.abs(target))), float(np.max(powers @ amplification)))
    condition = n * n * scale

    warnings: Tuple[str, ...] = ()
    if condition > tolerances.condition_cap:
        message = f"condition estimate {condition:.3e} exceeds cap {tolerances.condition_cap:.3e}"
        logger.warning(message)
        warnings = (message,)

    return MatchResult(
        probabilities=tuple(probabilities),
        r=math.fsum(probabilities),
        condition_estimate=condition,
        residual=_reproduction_residual(x, probabilities, target),
        method="closed_form",
        warnings=warnings,
    )


def solve_probabilities_direct(support: Support, moments: Moments) -> MatchResult:
    """Dense LU solve of V22 p = M; the in-repo oracle for solve_probabilities."""
    x = support.as_array()
    n = len(x)
    target = _moment_floats(moments, n)
    v22 = x[None, :] ** np.arange(1, n + 1)[:, None]
    probabilities = np.linalg.solve(v22, target)
    return MatchResult(
        probabilities=tuple(float(p) for p in probabilities),
        r=math.fsum(probabilities),
        condition_estimate=float(np.linalg.cond(v22)),
        residual=_reproduction_residual(x, probabilities, target),
        method="direct_lu",
    )


def probability_sum(support: Support, moments: Moments) -> float:
    """r = sum_i (-1)^{i+1} M_i e_{n-i}(x) / prod x, without a per-point solve."""
    x = support.as_array()
    n = len(x)
    target = _moment_floats(moments, n)
    e = elementary_symmetric(x)
    signs = np.array([(-1.0) ** (i + 1) for i in range(1, n + 1)])
    return math.fsum(signs * target * e[n - 1::-1]) / float(np.prod(x))


def r_star_partials(support: Support, moments: Moments) -> PartialsResult:
    """
    Analytic dr*/dy_j on a positive increasing support

    Factoring 1/y_j out of r* leaves A_j / (y_j prod_{i != j} y_i) + g(~y_j)
    with A_j = sum_i (-1)^{i+1} M_i e_{n-i}(~y_j) free of y_j, so
    dr*/dy_j = -A_j / (y_j^2 prod_{i != j} y_i).

    Entries whose A_j vanishes to rounding (p_j = 0) are indeterminate.
    """
    if not support.is_positive_increasing():
        raise ValueError("r_star_partials needs strictly positive increasing support points")
    y = support.as_array()
    n = len(y)
    target = _moment_floats(moments, n)
    signs = np.array([(-1.0) ** (i + 1) for i in range(1, n + 1)])

    values: List[float] = []
    sign_list: List[int] = []
    indeterminate: List[int] = []
    for j in range(n):
        others = np.delete(y, j)
        e = elementary_symmetric(others)
        terms = signs * target * e[n - 1::-1]
        a_j = math.fsum(terms)
        derivative = -a_j / (y[j] ** 2 * float(np.prod(others)))
        values.append(derivative)
        if abs(a_j) <= 64 * np.finfo(float).eps * float(np.sum(np.abs(terms))):
            indeterminate.append(j)
            sign_list.append(0)
        else:
            sign_list.append(1 if derivative > 0 else -1)
    if indeterminate:
        logger.warning("indeterminate dr*/dy_j signs at positions %s", indeterminate)
    return PartialsResult(tuple(values), tuple(sign_list), tuple(indeterminate))


def r_star_partials_fd(support: Support, moments: Moments, relative_step: float = 1e-6) -> Tuple[float, ...]:
    """Central finite differences of probability_sum, step relative_step * y_j."""
    y = list(support.points)
    partials = []
    for j, yj in enumerate(y):
        h = relative_step * abs(yj)
        up = Support(tuple(y[:j] + [yj + h] + y[j + 1:]))
        down = Support(tuple(y[:j] + [yj - h] + y[j + 1:]))
        partials.append((probability_sum(up, moments) - probability_sum(down, moments)) / (2 * h))
    return tuple(partials)
