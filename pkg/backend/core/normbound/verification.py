# backend/core/normbound/verification.py

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Tuple

import numpy as np

from .extremal import auto_schedule, extremal_even, odd_case_sweep, verify_half_bound
from .hermite import explicit_coefficients, hermite_coefficients, nonzero_root_squares
from .matching import Support, r_star_partials, solve_probabilities, solve_probabilities_direct
from .moments import (MomentVector, hankel_matrix, leading_principal_minors, lindsay_bound,
                      orthogonality_check, solve_rational)
from .optimization.lp_oracle import GridLP, LPStatus, build_grid, solve_lp, symmetry_report
from .settings import DEFAULT_TOLERANCES, VERIFY_KMAX_RANGE, Tolerances

logger = logging.getLogger(__name__)

FORMULA_INSTANCES = 1000
ALTERNATION_INSTANCES = 200
SEED = 20150101
FORMULA_THRESHOLD = 1e-10


@dataclass(frozen=True)
class SuiteRow:
    name: str
    passed: bool
    residual: float


def check_regeneration(max_degree: int = 40) -> SuiteRow:
    mismatches = sum(
        hermite_coefficients(n).coefficients != explicit_coefficients(n).coefficients
        for n in range(max_degree + 1)
    )
    return SuiteRow("hermite_regeneration", mismatches == 0, float(mismatches))


def check_orthogonality(max_degree: int = 24) -> SuiteRow:
    worst = 0.0
    for ell in range(max_degree // 2):
        for i in range(max_degree // 2):
            if 2 * ell + 2 * i + 2 <= max_degree:
                worst = max(worst, abs(float(orthogonality_check(ell, i))))
    return SuiteRow("orthogonality", worst == 0.0, worst)


def check_hankel_definite(max_order: int = 8) -> SuiteRow:
    failures = sum(
        any(minor <= 0 for minor in leading_principal_minors(hankel_matrix(m)))
        for m in range(1, max_order + 1)
    )
    return SuiteRow("hankel_positive_definite", failures == 0, float(failures))


def random_instance(rng: np.random.Generator, max_size: int = 8) -> Support:
    """Support of n <= max_size distinct points in [-10, 10] minus (-0.1, 0.1)."""
    n = int(rng.integers(1, max_size + 1))
    while True:
        points = rng.uniform(0.1, 10.0, n) * rng.choice([-1.0, 1.0], n)
        if len(set(points)) == n:
            return Support(tuple(points))


def _relative_gap(values: np.ndarray, reference: np.ndarray) -> float:
    """max |values - reference| / max |reference|; absolute when the reference is all zero."""
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(reference))):
        return math.inf
    gap = float(np.max(np.abs(values - reference)))
    size = float(np.max(np.abs(reference)))
    return gap / size if size > 0 else gap


def exact_probabilities(support: Support, target: MomentVector) -> np.ndarray:
    """Masses of sum_j p_j x_j^i = M_i solved in Fraction arithmetic, rounded once."""
    points = [Fraction(x) for x in support.points]
    matrix = [[x ** i for x in points] for i in range(1, len(points) + 1)]
    return np.array([float(p) for p in solve_rational(matrix, target.values)])


def formula_discrepancy(support: Support) -> Tuple[float, float]:
    """
    Closed-form vs LU discrepancy and the threshold it must meet

    Where the two float solvers disagree beyond the threshold, the exact
    rational solution decides and the closed form's own error is returned.
    Non-finite output gives an infinite discrepancy.
    """
    target = MomentVector.normal(len(support))
    closed = solve_probabilities(support, target).as_array()
    direct = solve_probabilities_direct(support, target).as_array()
    discrepancy = _relative_gap(closed, direct)
    if not discrepancy <= FORMULA_THRESHOLD:
        discrepancy = _relative_gap(closed, exact_probabilities(support, target))
    return discrepancy, FORMULA_THRESHOLD


def check_formula_vs_oracle(instances: int = FORMULA_INSTANCES) -> SuiteRow:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(instances):
        discrepancy, threshold = formula_discrepancy(random_instance(rng))
        if not discrepancy <= threshold:
            return SuiteRow("formula_vs_lu_oracle", False, discrepancy)
        worst = max(worst, discrepancy)
    return SuiteRow("formula_vs_lu_oracle", True, worst)


def perturbed_quadrature_support(rng: np.random.Generator, max_size: int = 4) -> Tuple[Support, MomentVector]:
    """Gauss-Hermite node squares jittered by up to 15%, with the matching half moments."""
    n = int(rng.integers(1, max_size + 1))
    base = nonzero_root_squares(2 * n + 1).values
    jittered = sorted(u * rng.uniform(0.85, 1.15) for u in base)
    return Support(tuple(jittered)), MomentVector.normal(2 * n).half_even(n)


def check_sign_alternation(instances: int = ALTERNATION_INSTANCES) -> SuiteRow:
    rng = np.random.default_rng(SEED + 1)
    tested = failures = 0
    while tested < instances:
        support, target = perturbed_quadrature_support(rng)
        if not support.is_positive_increasing():
            continue
        if any(p <= 0 for p in solve_probabilities(support, target).probabilities):
            continue
        tested += 1
        failures += not r_star_partials(support, target).alternates
    return SuiteRow("partial_sign_alternation", failures == 0, float(failures))


def check_lp_oracle(k: int, tolerances: Tolerances) -> SuiteRow:
    d = extremal_even(k, tolerances=tolerances)
    problem = GridLP.for_moments(build_grid(5.0, 40, d.positive_nodes), k)
    solution = solve_lp(problem, tolerances)
    if solution.status is not LPStatus.OPTIMAL:
        return SuiteRow(f"lp_oracle_k{k}", False, math.inf)
    gap = abs(solution.objective - d.p0)
    report = symmetry_report(solution, tolerances)
    ok = gap <= 1e-9 and report.passed and solution.objective <= float(lindsay_bound(k)) + 1e-9
    return SuiteRow(f"lp_oracle_k{k}", ok, gap)


def check_odd_limit(k: int = 3) -> SuiteRow:
    sweep = odd_case_sweep(k, auto_schedule(k))
    p0 = sweep.p0_column()
    target = float(sweep.target_bound)
    increasing = all(b > a for a, b in zip(p0, p0[1:]))
    below = all(value < target for value in p0)
    gap = target - p0[-1] if p0 else math.inf
    return SuiteRow(f"odd_limit_k{k}", bool(p0) and increasing and below and gap <= 0.01, gap)


def run_suite(k_max: int = 8, tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[SuiteRow]:
    """
    Full invariant suite up to k_max

    Args:
        k_max: largest even k for the half-bound rows, within VERIFY_KMAX_RANGE
        tolerances: numerical knobs

    Returns:
        Rows in a fixed order
    """
    low, high = VERIFY_KMAX_RANGE
    if not low <= k_max <= high:
        raise ValueError(f"k_max must lie in [{low}, {high}], got {k_max}")

    checks: List[Callable[[], SuiteRow]] = [
        check_regeneration,
        check_orthogonality,
        check_hankel_definite,
        check_formula_vs_oracle,
        check_sign_alternation,
    ]
    rows = [check() for check in checks]
    for k in range(2, k_max + 1, 2):
        report = verify_half_bound(k, tolerances)
        rows.append(SuiteRow(f"half_bound_k{k}", report.passed,
                             max(check.residual for check in report.checks)))
    for k in (2, 4):
        if k <= k_max:
            rows.append(check_lp_oracle(k, tolerances))
    if k_max >= 4:
        rows.append(check_odd_limit(3))
    logger.info("suite: %d of %d rows passed", sum(row.passed for row in rows), len(rows))
    return rows
