# backend/core/normbound/optimization/lp_oracle.py

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..moments import normal_moment
from ..settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

DUPLICATE_TOLERANCE = 1e-12


class LPStatus(Enum):
    """Outcome of a grid LP solve"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


class GridSpacing(Enum):
    UNIFORM = "uniform"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class GridLP:
    """
    Maximize the mass at 0 over nonnegative masses on a symmetric grid
    subject to total mass 1 and sum_i p_i x_i^j = M_j for j = 1..2k.
    """
    grid: Tuple[float, ...]
    k: int
    moments: Tuple[float, ...]

    def __post_init__(self):
        grid = tuple(float(x) for x in self.grid)
        object.__setattr__(self, "grid", grid)
        if len(self.moments) != 2 * self.k:
            raise ValueError(f"need {2 * self.k} moments for k={self.k}, got {len(self.moments)}")
        if 0.0 not in grid:
            raise ValueError("grid must contain 0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be sorted with distinct points")
        if any(a != -b for a, b in zip(grid, reversed(grid))):
            raise ValueError("grid must be symmetric about 0")

    @classmethod
    def for_moments(cls, grid: Sequence[float], k: int) -> "GridLP":
        """Problem matching the first 2k normal moments (odd ones are zero)."""
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        return cls(tuple(grid), k, tuple(float(normal_moment(j)) for j in range(1, 2 * k + 1)))

    @property
    def zero_index(self) -> int:
        return self.grid.index(0.0)

    def scaled_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        """Rows 1, x^1..x^{2k}, row j divided by max|x|^j."""
        x = np.array(self.grid)
        extent = float(np.max(np.abs(x)))
        powers = np.arange(0, 2 * self.k + 1)
        scale = extent ** powers
        a = x[None, :] ** powers[:, None] / scale[:, None]
        b = np.concatenate(([1.0], np.array(self.moments))) / scale
        return a, b


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    grid: Tuple[float, ...]
    masses: Tuple[float, ...]
    objective: float
    residual: float
    active_support: Tuple[float, ...]
    pivots: int
    problem: Optional[GridLP] = None


@dataclass(frozen=True)
class SymmetryReport:
    raw_asymmetry: float
    asymmetry: float
    symmetrized: bool
    residual: float
    objective: float
    passed: bool


def build_grid(extent: float, count: int, include: Sequence[float] = (),
               spacing: GridSpacing = GridSpacing.UNIFORM) -> Tuple[float, ...]:
    """
    Symmetric grid: 0, +-count points up to extent, plus +-include

    Args:
        extent: largest grid magnitude, > 0
        count: positive points before inclusion, >= 3
        include: extra magnitudes (e.g. extremal nodes), symmetrized
        spacing: uniform (extent * i / count) or geometric down to extent / 100

    Returns:
        Sorted tuple; points within 1e-12 of each other are merged
    """
    if extent <= 0:
        raise ValueError(f"extent must be positive, got {extent}")
    if count < 3:
        raise ValueError(f"count must be at least 3, got {count}")
    spacing = GridSpacing(spacing)
    if spacing is GridSpacing.UNIFORM:
        positive = [extent * i / count for i in range(1, count + 1)]
    else:
        positive = list(np.geomspace(extent / 100.0, extent, count))
    positive += [abs(float(v)) for v in include if v != 0]

    merged: List[float] = []
    for v in sorted(positive):
        if merged and v - merged[-1] <= DUPLICATE_TOLERANCE:
            continue
        merged.append(v)
    return tuple([-v for v in reversed(merged)] + [0.0] + merged)


class DenseSimplex:
    """Two-phase tableau simplex with Bland's anti-cycling rule (minimization)."""

    def __init__(self, a: np.ndarray, b: np.ndarray, c: np.ndarray,
                 pivot_tolerance: float = 1e-11, max_pivots: int = 100000):
        self.a = np.array(a, dtype=float)
        self.b = np.array(b, dtype=float)
        self.c = np.array(c, dtype=float)
        self.pivot_tolerance = pivot_tolerance
        self.max_pivots = max_pivots
        self.pivots = 0

        m, n = self.a.shape
        self.num_structural = n
        negative = self.b < 0
        self.a[negative] *= -1
        self.b[negative] *= -1
        # [A | I | b] with the cost row appended below
        self.tableau = np.zeros((m + 1, n + m + 1))
        self.tableau[:m, :n] = self.a
        self.tableau[:m, n:n + m] = np.eye(m)
        self.tableau[:m, -1] = self.b
        self.basis = list(range(n, n + m))
        self.kept_rows = list(range(m))

    def _pivot(self, row: int, col: int) -> None:
        t = self.tableau
        t[row] /= t[row, col]
        for i in range(t.shape[0]):
            if i != row and t[i, col] != 0.0:
                t[i] -= t[i, col] * t[row]
        self.basis[row] = col
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise RuntimeError(f"simplex exceeded {self.max_pivots} pivots")

    def _set_cost(self, cost: np.ndarray) -> None:
        t = self.tableau
        t[-1] = 0.0
        t[-1, :len(cost)] = cost
        for i, j in enumerate(self.basis):
            if j < len(cost) and cost[j] != 0.0:
                t[-1] -= cost[j] * t[i]

    def _bland(self, allowed: int) -> str:
        t = self.tableau
        tol = self.pivot_tolerance
        while True:
            reduced = t[-1, :allowed]
            entering = np.flatnonzero(reduced < -tol)
            if entering.size == 0:
                return "optimal"
            col = int(entering[0])
            column = t[:-1, col]
            rows = np.flatnonzero(column > tol)
            if rows.size == 0:
                return "unbounded"
            ratios = t[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            row = int(min(ties, key=lambda i: self.basis[i]))
            self._pivot(row, col)

    def _drive_out_artificials(self) -> None:
        n = self.num_structural
        row = 0
        while row < self.tableau.shape[0] - 1:
            if self.basis[row] >= n:
                candidates = np.flatnonzero(np.abs(self.tableau[row, :n]) > self.pivot_tolerance)
                if candidates.size:
                    self._pivot(row, int(candidates[0]))
                else:
                    # redundant constraint
                    self.tableau = np.delete(self.tableau, row, axis=0)
                    del self.basis[row]
                    del self.kept_rows[row]
                    continue
            row += 1

    def solve(self, feasibility_tolerance: float = 1e-9) -> Tuple[LPStatus, np.ndarray]:
        m, n = self.a.shape
        phase_one = np.concatenate((np.zeros(n), np.ones(m)))
        self._set_cost(phase_one)
        self._bland(n + m)
        infeasibility = -self.tableau[-1, -1]
        if infeasibility > feasibility_tolerance:
            logger.info("phase one ended with infeasibility %.3e", infeasibility)
            return LPStatus.INFEASIBLE, np.zeros(n)
        self._drive_out_artificials()

        self._set_cost(self.c)
        status = self._bland(n)
        if status == "unbounded":
            raise RuntimeError("grid LP reported unbounded; masses are bounded so this is a numerical failure")

        x = np.zeros(n)
        basic = [j for j in self.basis if j < n]
        rows = [i for i, j in enumerate(self.basis) if j < n]
        x[basic] = self.tableau[rows, -1]
        # re-solve the basic masses from the original rows
        refined, *_ = np.linalg.lstsq(self.a[self.kept_rows][:, basic], self.b[self.kept_rows], rcond=None)
        if np.all(refined >= -1e-12):
            x[basic] = refined
        return LPStatus.OPTIMAL, x


def _scaled_residual(problem: GridLP, masses: np.ndarray) -> float:
    a, b = problem.scaled_constraints()
    return float(np.max(np.abs(a @ masses - b)))


def solve_lp(problem: GridLP, tolerances: Tolerances = DEFAULT_TOLERANCES) -> LPSolution:
    """
    Maximize the mass at 0 on the grid by dense simplex

    Args:
        problem: GridLP
        tolerances: pivot, feasibility and active-mass thresholds

    Returns:
        LPSolution; status INFEASIBLE when the grid cannot match the moments
    """
    a, b = problem.scaled_constraints()
    c = np.zeros(len(problem.grid))
    c[problem.zero_index] = -1.0
    simplex = DenseSimplex(a, b, c, pivot_tolerance=tolerances.lp_pivot_tolerance)
    status, masses = simplex.solve(tolerances.lp_feasibility_tolerance)
    logger.debug("grid LP k=%d on %d points: %s after %d pivots",
                 problem.k, len(problem.grid), status.value, simplex.pivots)
    if status is LPStatus.INFEASIBLE:
        return LPSolution(status, problem.grid, tuple(masses), float("nan"), float("nan"), (),
                          simplex.pivots, problem)
    active = tuple(x for x, p in zip(problem.grid, masses) if p > tolerances.lp_active_threshold)
    return LPSolution(
        status=status,
        grid=problem.grid,
        masses=tuple(float(p) for p in masses),
        objective=float(masses[problem.zero_index]),
        residual=_scaled_residual(problem, masses),
        active_support=active,
        pivots=simplex.pivots,
        problem=problem,
    )


def symmetry_report(solution: LPSolution, tolerances: Tolerances = DEFAULT_TOLERANCES) -> SymmetryReport:
    """
    Asymmetry max |mass(x) - mass(-x)| of an optimal solution

    Masses are first replaced by their x/-x averages when that keeps the
    solution feasible (a degenerate tie). The objective is the mass at
    zero, which is its own mirror, so averaging never changes it.
    """
    if solution.status is not LPStatus.OPTIMAL or solution.problem is None:
        raise ValueError("symmetry report needs an optimal solution with its problem")
    masses = np.array(solution.masses)
    mirrored = masses[::-1]
    raw = float(np.max(np.abs(masses - mirrored)))

    averaged = 0.5 * (masses + mirrored)
    averaged_residual = _scaled_residual(solution.problem, averaged)
    zero = solution.problem.zero_index
    tie = averaged_residual <= tolerances.lp_feasibility_tolerance and float(np.min(averaged)) >= -1e-12
    used = averaged if tie else masses
    residual = averaged_residual if tie else _scaled_residual(solution.problem, masses)
    asymmetry = float(np.max(np.abs(used - used[::-1])))
    passed = asymmetry <= tolerances.symmetry_tolerance and residual <= tolerances.lp_feasibility_tolerance
    return SymmetryReport(raw, asymmetry, tie, residual, float(used[zero]), passed)


def refinement_study(k: int, extent: float, counts: Sequence[int],
                     include: Sequence[float] = (),
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[Tuple[int, LPSolution]]:
    """LP optimum on uniform grids of each size; doubling counts gives nested grids."""
    results = []
    for count in counts:
        problem = GridLP.for_moments(build_grid(extent, count, include), k)
        solution = solve_lp(problem, tolerances)
        print(f"  k={k} count={count}: {solution.status.value}, objective={solution.objective:.12f}")
        results.append((count, solution))
    return results
