import dataclasses
import math

import numpy as np
import pytest

from backend.core.normbound.extremal import extremal_even
from backend.core.normbound.moments import lindsay_bound
from backend.core.normbound.optimization.lp_oracle import (DenseSimplex, GridLP, GridSpacing, LPStatus,
                                                          build_grid, refinement_study, solve_lp,
                                                          symmetry_report)


def test_uniform_grid():
    grid = build_grid(3.0, 3)
    assert grid == (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)


def test_grid_includes_and_merges_extra_points():
    grid = build_grid(3.0, 3, include=[math.sqrt(3), -2.0, 2.0 + 1e-14])
    assert len(grid) == 9
    assert math.sqrt(3) in grid and -math.sqrt(3) in grid
    assert grid == tuple(sorted(grid))


def test_geometric_grid():
    grid = build_grid(5.0, 10, spacing=GridSpacing.GEOMETRIC)
    positive = [x for x in grid if x > 0]
    assert positive[0] == pytest.approx(0.05)
    assert positive[-1] == pytest.approx(5.0)
    assert len(grid) == 21


@pytest.mark.parametrize("extent, count", [(0.0, 10), (-1.0, 10), (5.0, 2)])
def test_grid_validation(extent, count):
    with pytest.raises(ValueError):
        build_grid(extent, count)


def test_problem_validation():
    with pytest.raises(ValueError):
        GridLP.for_moments((-1.0, 1.0), 1)
    with pytest.raises(ValueError):
        GridLP.for_moments((-2.0, 0.0, 1.0), 1)
    with pytest.raises(ValueError):
        GridLP.for_moments((0.0, -1.0, 1.0), 1)
    with pytest.raises(ValueError):
        GridLP.for_moments((-1.0, 0.0, 1.0), 0)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_lp_recovers_extremal_distribution(k):
    d = extremal_even(k)
    problem = GridLP.for_moments(build_grid(5.0, 40, d.positive_nodes), k)
    solution = solve_lp(problem)
    assert solution.status is LPStatus.OPTIMAL
    assert abs(solution.objective - d.p0) <= 1e-9
    assert solution.residual <= 1e-9

    nodes = [-t for t in reversed(d.positive_nodes)] + [0.0] + list(d.positive_nodes)
    assert solution.active_support == pytest.approx(tuple(nodes))

    report = symmetry_report(solution)
    assert report.passed
    assert report.asymmetry <= 1e-8
    assert len(solution.active_support) <= 2 * k + 1


@pytest.mark.parametrize("k, count", [(2, 7), (2, 25), (3, 30), (4, 17)])
def test_objective_never_exceeds_bound(k, count):
    problem = GridLP.for_moments(build_grid(6.0, count), k)
    solution = solve_lp(problem)
    if solution.status is LPStatus.OPTIMAL:
        bound = lindsay_bound(k if k % 2 == 0 else k - 1)
        assert solution.objective <= float(bound) + 1e-9


def test_infeasible_grid():
    # every point within 0.5 of zero cannot reach variance 1
    problem = GridLP.for_moments(build_grid(0.5, 5), 2)
    solution = solve_lp(problem)
    assert solution.status is LPStatus.INFEASIBLE
    assert math.isnan(solution.objective)
    with pytest.raises(ValueError):
        symmetry_report(solution)


def test_lp_is_deterministic():
    problem = GridLP.for_moments(build_grid(5.0, 30), 2)
    first = solve_lp(problem)
    second = solve_lp(problem)
    assert first.masses == second.masses
    assert first.pivots == second.pivots


def test_dense_simplex_small_problem():
    # min -x1 - x2  s.t.  x1 + 2 x2 + s = 4,  3 x1 + x2 + t = 6
    a = np.array([[1.0, 2.0, 1.0, 0.0], [3.0, 1.0, 0.0, 1.0]])
    b = np.array([4.0, 6.0])
    c = np.array([-1.0, -1.0, 0.0, 0.0])
    status, x = DenseSimplex(a, b, c).solve()
    assert status is LPStatus.OPTIMAL
    assert x[:2] == pytest.approx([1.6, 1.2])


def test_dense_simplex_redundant_rows():
    a = np.array([[1.0, 1.0], [2.0, 2.0]])
    b = np.array([1.0, 2.0])
    c = np.array([1.0, 0.0])
    status, x = DenseSimplex(a, b, c).solve()
    assert status is LPStatus.OPTIMAL
    assert x == pytest.approx([0.0, 1.0])


def test_refinement_study_is_monotone_on_nested_grids(capsys):
    results = refinement_study(2, 6.0, [6, 12, 24])
    objectives = [solution.objective for _, solution in results if solution.status is LPStatus.OPTIMAL]
    assert objectives
    assert all(b >= a - 1e-12 for a, b in zip(objectives, objectives[1:]))
    assert all(value <= 2 / 3 + 1e-9 for value in objectives)
    assert "count=24" in capsys.readouterr().out


def test_symmetry_report_fails_on_perturbed_masses():
    d = extremal_even(2)
    solution = solve_lp(GridLP.for_moments(build_grid(5.0, 40, d.positive_nodes), 2))
    masses = list(solution.masses)
    masses[solution.grid.index(d.positive_nodes[0])] += 1e-4
    report = symmetry_report(dataclasses.replace(solution, masses=tuple(masses)))
    assert not report.passed
    assert not report.symmetrized
    assert report.raw_asymmetry == pytest.approx(1e-4)


def test_symmetry_report_averages_a_feasible_asymmetric_tie():
    # matches M_1..M_4 in units of 1/288; mirror differences (10, -8, 2) cancel both odd moments
    solution = solve_lp(GridLP.for_moments(build_grid(4.0, 4), 2))
    assert solution.status is LPStatus.OPTIMAL
    masses = [0.0] * len(solution.grid)
    for x, units in [(-3.0, 1), (-2.0, 16), (-1.0, 73), (0.0, 104), (1.0, 83), (2.0, 8), (3.0, 3)]:
        masses[solution.grid.index(x)] = units / 288
    tied = dataclasses.replace(solution, masses=tuple(masses), objective=104 / 288)
    report = symmetry_report(tied)
    assert report.symmetrized
    assert report.passed
    assert report.raw_asymmetry == pytest.approx(10 / 288)
    assert report.asymmetry <= 1e-15
    assert report.objective == pytest.approx(13 / 36)


def test_grid_without_extremal_nodes_stays_below_bound():
    # optimum brackets sqrt(3) with its two grid neighbours
    objectives = []
    for count in (20, 40, 80, 160):
        solution = solve_lp(GridLP.for_moments(build_grid(5.0, count), 2))
        assert solution.status is LPStatus.OPTIMAL
        objectives.append(solution.objective)
    assert objectives == pytest.approx([0.6644006, 0.6657409, 0.6663036, 0.6665594], abs=1e-6)
    assert all(value < 2 / 3 for value in objectives)
    assert all(b > a for a, b in zip(objectives, objectives[1:]))
