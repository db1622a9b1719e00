# backend/core/normbound/extremal.py

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .hermite import RootFindingError, gauss_weight, nonzero_root_squares, real_roots
from .matching import Support, probability_sum, r_star_partials, solve_probabilities
from .moments import MomentVector, lindsay_bound, normal_moment, s_from_hermite, solve_rational
from .settings import DEFAULT_TOLERANCES, MAX_EVEN_K, Tolerances

logger = logging.getLogger(__name__)


class MassMethod(Enum):
    """How the side masses of the even construction are obtained"""
    CHRISTOFFEL = "christoffel"
    VANDERMONDE = "vandermonde"


class ConstructionError(RuntimeError):
    """The even-k construction produced an invalid distribution."""


@dataclass(frozen=True)
class SymmetricDistribution:
    """
    Mass q_j at each of +t_j and -t_j plus mass p0 at zero.

    r* = sum q_j is the mass on the positive half-line, p0 = 1 - 2 r*
    and the c.d.f. at zero is 1 - r*.
    """
    positive_nodes: Tuple[float, ...]
    side_masses: Tuple[float, ...]
    center_mass: float
    matched_even_moments: int

    def __post_init__(self):
        if len(self.positive_nodes) != len(self.side_masses):
            raise ValueError("positive_nodes and side_masses differ in length")
        if any(t <= 0 for t in self.positive_nodes):
            raise ValueError("positive_nodes must be positive")
        if any(b <= a for a, b in zip(self.positive_nodes, self.positive_nodes[1:])):
            raise ValueError("positive_nodes must be strictly increasing")
        if any(q <= 0 for q in self.side_masses):
            raise ValueError("side_masses must be positive")
        if not -1e-12 <= self.center_mass <= 1 + 1e-12:
            raise ValueError(f"center mass {self.center_mass} outside [0, 1]")

    @property
    def r_star(self) -> float:
        return math.fsum(self.side_masses)

    @property
    def p0(self) -> float:
        return self.center_mass

    @property
    def node_squares(self) -> Tuple[float, ...]:
        return tuple(t * t for t in self.positive_nodes)

    def atoms(self) -> List[Tuple[float, float]]:
        """(location, mass) pairs sorted by location."""
        negative = [(-t, q) for t, q in zip(reversed(self.positive_nodes), reversed(self.side_masses))]
        positive = list(zip(self.positive_nodes, self.side_masses))
        return negative + [(0.0, self.center_mass)] + positive

    def cdf(self, x: float) -> float:
        return math.fsum(mass for location, mass in self.atoms() if location <= x)


def _check_even(k: int) -> None:
    if not isinstance(k, int) or k < 2 or k % 2 or k > MAX_EVEN_K:
        raise ValueError(f"k must be an even integer in [2, {MAX_EVEN_K}], got {k!r}")


def _check_odd(k: int) -> None:
    if not isinstance(k, int) or k < 3 or k % 2 == 0:
        raise ValueError(f"k must be an odd integer >= 3, got {k!r}")


def extremal_even(k: int, masses: MassMethod = MassMethod.CHRISTOFFEL,
                  tolerances: Tolerances = DEFAULT_TOLERANCES) -> SymmetricDistribution:
    """
    Least-favorable symmetric distribution matching k even normal moments

    Nodes are the positive roots of He_{k+1}; the side masses are the even
    Gauss-Hermite weights, either from the Christoffel formula or from the
    closed-form matching solve in u = t^2 against M_2/2..M_k/2.

    Args:
        k: even number of matched even moments, 2 <= k <= 40
        masses: MassMethod.CHRISTOFFEL or MassMethod.VANDERMONDE
        tolerances: root tolerance and condition cap

    Returns:
        SymmetricDistribution with p0 = 1 - 2 r*
    """
    _check_even(k)
    method = MassMethod(masses)
    squares = nonzero_root_squares(k + 1, tolerance=tolerances.root_tolerance, tolerances=tolerances)
    nodes = squares.nodes()

    if method is MassMethod.CHRISTOFFEL:
        side = [gauss_weight(k + 1, t) for t in nodes]
    else:
        target = MomentVector.normal(k).half_even(k // 2)
        side = list(solve_probabilities(Support(squares.values), target, tolerances).probabilities)

    if any(q <= 0 for q in side):
        raise ConstructionError(f"k={k}: nonpositive side mass in {side}")
    p0 = 1.0 - 2.0 * math.fsum(side)
    logger.debug("k=%d: p0=%.17g via %s", k, p0, method.value)
    return SymmetricDistribution(tuple(nodes), tuple(side), p0, k)


def deviation_at_zero(d: SymmetricDistribution) -> float:
    """F(0) - Phi(0) = (1 - r*) - 1/2."""
    return 0.5 - d.r_star


def moment_residuals(d: SymmetricDistribution, count: Optional[int] = None) -> List[float]:
    """Relative residuals of sum_j q_j t_j^{2i} = M_{2i}/2 for i = 1..count."""
    count = d.matched_even_moments if count is None else count
    residuals = []
    for i in range(1, count + 1):
        target = float(normal_moment(2 * i)) / 2
        achieved = math.fsum(q * t ** (2 * i) for t, q in zip(d.positive_nodes, d.side_masses))
        residuals.append(abs(achieved - target) / target)
    return residuals


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    passed: bool


@dataclass(frozen=True)
class HalfBoundReport:
    """Float-versus-exact comparison of the even construction with the bound."""
    k: int
    p0: float
    bound: Fraction
    r_star: float
    s_hermite: Fraction
    s_symmetric: float
    deviation: float
    checks: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def verify_half_bound(k: int, tolerances: Tolerances = DEFAULT_TOLERANCES,
                      distribution: Optional[SymmetricDistribution] = None) -> HalfBoundReport:
    """
    Check p0 = bound, r* = (1 - s/M_{2k})/2 with s computed two ways,
    and deviation = bound/2

    The elementary-symmetric path evaluates the closed-form mass sum on
    the computed root squares against M_2/2..M_k/2.
    """
    _check_even(k)
    d = distribution or extremal_even(k, tolerances=tolerances)
    bound = lindsay_bound(k)
    m_2k = normal_moment(2 * k)

    s_hermite = s_from_hermite(k)
    target = MomentVector.normal(k).half_even(k // 2)
    r_closed = probability_sum(Support(d.node_squares), target)
    s_symmetric = float(m_2k) * (1.0 - 2.0 * r_closed)
    deviation = deviation_at_zero(d)

    tol = tolerances.identity_tolerance
    residuals = {
        "p0_vs_bound": abs(d.p0 - float(bound)),
        "s_hermite_vs_symmetric": abs(s_symmetric - float(s_hermite)) / abs(float(s_hermite)),
        "r_star_vs_s_identity": abs(d.r_star - float((1 - s_hermite / m_2k) / 2)),
        "deviation_vs_half_bound": abs(deviation - float(bound) / 2),
    }
    checks = tuple(CheckResult(name, value, value <= tol) for name, value in residuals.items())
    for check in checks:
        if not check.passed:
            logger.warning("k=%d: %s residual %.3e above %.1e", k, check.name, check.residual, tol)
    return HalfBoundReport(k, d.p0, bound, d.r_star, s_hermite, s_symmetric, deviation, checks)


@dataclass(frozen=True)
class OddCaseRecord:
    """One schedule entry of the odd-k escape-to-infinity sweep (squared variable)."""
    largest_square: float
    feasible: bool
    free_squares: Tuple[float, ...] = ()
    masses: Tuple[float, ...] = ()
    r_star: float = math.nan
    p0: float = math.nan
    tail_mass: float = math.nan
    tail_bound: float = math.nan
    moment_residual: float = math.nan
    partial_largest: float = math.nan
    constrained_slope: float = math.nan
    diagnostics: str = ""

    @property
    def largest_node(self) -> float:
        return math.sqrt(self.largest_square)


@dataclass(frozen=True)
class OddCaseSweep:
    k: int
    schedule: Tuple[float, ...]
    records: Tuple[OddCaseRecord, ...]
    target_bound: Fraction

    def feasible_records(self) -> List[OddCaseRecord]:
        return [record for record in self.records if record.feasible]

    def p0_column(self) -> List[float]:
        return [record.p0 for record in self.feasible_records()]


def _free_node_polynomial(k: int, largest_square: Fraction) -> List[Fraction]:
    """
    Monic pi of degree (k-1)/2 orthogonal to lower powers under
    L[f] = E[f(Z^2) Z^2 (T - Z^2)]; its zeros are the free node squares.
    """
    m = (k - 1) // 2

    def functional(power: int) -> Fraction:
        return largest_square * normal_moment(2 * power + 2) - normal_moment(2 * power + 4)

    matrix = [[functional(l + j) for l in range(m)] for j in range(m)]
    rhs = [-functional(m + j) for j in range(m)]
    return solve_rational(matrix, rhs) + [Fraction(1)]


def _solve_configuration(k: int, largest_square: float,
                         tolerances: Tolerances) -> Tuple[Tuple[float, ...], Tuple[float, ...], str]:
    """Free node squares and masses for one largest node square; diagnostics if none."""
    m = (k - 1) // 2
    exact_t = Fraction(largest_square)
    try:
        coefficients = _free_node_polynomial(k, exact_t)
    except ZeroDivisionError:
        return (), (), "orthogonality system is singular"
    try:
        found = real_roots(coefficients, largest_square * 1e-12, largest_square,
                           tolerance=tolerances.root_tolerance,
                           max_iterations=tolerances.root_max_iterations)
    except RootFindingError as exc:
        return (), (), str(exc)
    free = tuple(u for u, _ in found if u < largest_square)
    if len(free) != m:
        return free, (), f"found {len(free)} of {m} free node squares in (0, {largest_square:g})"
    target = MomentVector.normal(k + 1).half_even((k + 1) // 2)
    result = solve_probabilities(Support(free + (largest_square,)), target, tolerances)
    return free, result.probabilities, ""


def _r_star_at(k: int, largest_square: float, tolerances: Tolerances) -> float:
    _, masses, diagnostics = _solve_configuration(k, largest_square, tolerances)
    return math.fsum(masses) if not diagnostics else math.nan


def _sweep_entry(k: int, largest_square: float, tolerances: Tolerances) -> OddCaseRecord:
    free, masses, diagnostics = _solve_configuration(k, largest_square, tolerances)
    if diagnostics:
        logger.warning("k=%d T=%g infeasible: %s", k, largest_square, diagnostics)
        return OddCaseRecord(largest_square, False, free_squares=free, diagnostics=diagnostics)

    r_star = math.fsum(masses)
    p0 = 1.0 - 2.0 * r_star
    support = free + (largest_square,)
    residual = max(
        abs(math.fsum(q * u ** i for q, u in zip(masses, support)) - float(normal_moment(2 * i)) / 2)
        / (float(normal_moment(2 * i)) / 2)
        for i in range(1, k + 1)
    )
    tail_bound = float(normal_moment(2 * k)) / 2 / largest_square ** k

    problems = []
    if any(q <= 0 for q in masses):
        problems.append("nonpositive mass")
    if p0 < 0:
        problems.append(f"p0 = {p0:.3e} < 0")
    if problems:
        logger.warning("k=%d T=%g infeasible: %s", k, largest_square, ", ".join(problems))
        return OddCaseRecord(largest_square, False, free_squares=free, masses=masses,
                             r_star=r_star, p0=p0, diagnostics=", ".join(problems))

    target = MomentVector.normal(k + 1).half_even((k + 1) // 2)
    partial = r_star_partials(Support(support), target).values[-1]
    h = 1e-4 * largest_square
    slope = (_r_star_at(k, largest_square + h, tolerances)
             - _r_star_at(k, largest_square - h, tolerances)) / (2 * h)

    return OddCaseRecord(
        largest_square=largest_square,
        feasible=True,
        free_squares=free,
        masses=masses,
        r_star=r_star,
        p0=p0,
        tail_mass=masses[-1],
        tail_bound=tail_bound,
        moment_residual=residual,
        partial_largest=partial,
        constrained_slope=slope,
    )


def auto_schedule(k: int, count: int = 12) -> List[float]:
    """Geometric largest-square schedule from 4 u_max to 1e4 u_max, u_max from He_k."""
    _check_odd(k)
    if count < 2:
        raise ValueError(f"schedule needs at least two entries, got {count}")
    u_max = nonzero_root_squares(k).values[-1]
    lower, upper = 4.0 * u_max, 1e4 * u_max
    ratio = (upper / lower) ** (1.0 / (count - 1))
    return [lower * ratio ** i for i in range(count - 1)] + [upper]


def odd_case_sweep(k: int, largest_node_schedule: Sequence[float],
                   tolerances: Tolerances = DEFAULT_TOLERANCES,
                   max_workers: int = 1) -> OddCaseSweep:
    """
    Escape-to-infinity study for an odd number k of matched even moments

    For each scheduled largest node square T the remaining (k-1)/2 node
    squares and all masses are solved so that M_2/2..M_{2k}/2 all hold.

    Args:
        k: odd number of matched even moments, >= 3
        largest_node_schedule: increasing largest node squares T
        tolerances: numerical knobs
        max_workers: entries are independent; >1 evaluates them in a thread pool

    Returns:
        OddCaseSweep with records in schedule order
    """
    _check_odd(k)
    schedule = tuple(float(t) for t in largest_node_schedule)
    if not schedule:
        raise ValueError("schedule is empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    u_max = nonzero_root_squares(k).values[-1]
    if schedule[0] <= u_max:
        raise ValueError(
            f"schedule must start above the largest node square {u_max:.6g} of the k={k - 1} extremal"
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            records = list(executor.map(lambda t: _sweep_entry(k, t, tolerances), schedule))
    else:
        records = [_sweep_entry(k, t, tolerances) for t in schedule]

    sweep = OddCaseSweep(k, schedule, tuple(records), lindsay_bound(k - 1))
    logger.info("k=%d sweep: %d of %d records feasible", k, len(sweep.feasible_records()), len(records))
    return sweep
