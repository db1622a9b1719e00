import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss
from numpy.testing import assert_allclose

from backend.core.normbound.extremal import (MassMethod, SymmetricDistribution, auto_schedule,
                                             deviation_at_zero, extremal_even, moment_residuals,
                                             odd_case_sweep, verify_half_bound)
from backend.core.normbound.moments import lindsay_bound


def test_two_moment_extremal():
    d = extremal_even(2)
    assert_allclose(d.positive_nodes, [math.sqrt(3)], rtol=1e-14)
    assert_allclose(d.side_masses, [1 / 6], rtol=1e-13)
    assert d.p0 == pytest.approx(2 / 3, abs=1e-14)
    assert d.cdf(0.0) == pytest.approx(5 / 6)
    assert d.cdf(-2.0) == 0.0
    assert d.cdf(10.0) == pytest.approx(1.0)
    assert [x for x, _ in d.atoms()] == pytest.approx([-math.sqrt(3), 0.0, math.sqrt(3)])


@pytest.mark.parametrize("k, p0", [
    (2, Fraction(2, 3)),
    (4, Fraction(8, 15)),
    (6, Fraction(16, 35)),
    (8, lindsay_bound(8)),
])
def test_center_mass_equals_bound(k, p0):
    d = extremal_even(k)
    assert abs(d.p0 - float(p0)) <= 1e-10
    assert abs(deviation_at_zero(d) - float(p0) / 2) <= 1e-10


@pytest.mark.parametrize("k", [2, 4, 6, 8, 12, 20])
def test_matches_gauss_hermite_rule(k):
    nodes, weights = hermegauss(k + 1)
    weights = weights / weights.sum()
    positive = nodes > 1e-8
    d = extremal_even(k)
    assert_allclose(d.positive_nodes, nodes[positive], rtol=1e-10)
    assert_allclose(d.side_masses, weights[positive], rtol=1e-8)


@pytest.mark.parametrize("k", [2, 4, 6, 8, 10, 12])
def test_mass_methods_agree(k):
    christoffel = extremal_even(k, MassMethod.CHRISTOFFEL)
    vandermonde = extremal_even(k, "vandermonde")
    assert_allclose(christoffel.side_masses, vandermonde.side_masses, rtol=1e-9)


@pytest.mark.parametrize("k", [2, 4, 8, 12])
def test_all_even_moments_matched(k):
    assert max(moment_residuals(extremal_even(k))) <= 1e-10


@pytest.mark.parametrize("k", range(2, 14, 2))
def test_half_bound_report_passes(k):
    report = verify_half_bound(k)
    assert report.passed, report.checks
    assert report.bound == lindsay_bound(k)
    assert report.s_symmetric == pytest.approx(float(report.s_hermite), rel=1e-10)


def test_half_bound_report_flags_a_wrong_distribution():
    d = extremal_even(4)
    skewed = SymmetricDistribution(d.positive_nodes, (d.side_masses[0] * 1.01, d.side_masses[1]),
                                   1 - 2 * (d.side_masses[0] * 1.01 + d.side_masses[1]), 4)
    report = verify_half_bound(4, distribution=skewed)
    assert not report.passed
    failed = {check.name for check in report.checks if not check.passed}
    assert "p0_vs_bound" in failed


@pytest.mark.parametrize("k", [0, 3, 7, 42, 2.0])
def test_even_construction_rejects_bad_k(k):
    with pytest.raises(ValueError):
        extremal_even(k)


def test_distribution_validation():
    with pytest.raises(ValueError):
        SymmetricDistribution((1.0, 0.5), (0.1, 0.1), 0.8, 2)
    with pytest.raises(ValueError):
        SymmetricDistribution((1.0,), (0.1, 0.1), 0.8, 2)
    with pytest.raises(ValueError):
        SymmetricDistribution((1.0,), (-0.1,), 1.2, 2)


def test_odd_sweep_three_moments():
    sweep = odd_case_sweep(3, [25.0, 100.0, 1e4])
    assert sweep.target_bound == Fraction(2, 3)
    assert all(record.feasible for record in sweep.records)
    assert_allclose(sweep.p0_column(), [0.637333, 0.659860, 0.666600], atol=2e-5)

    p0 = sweep.p0_column()
    assert all(b > a for a, b in zip(p0, p0[1:]))
    assert all(value < 2 / 3 for value in p0)
    assert 2 / 3 - p0[-1] <= 0.01

    last = sweep.records[-1]
    assert abs(last.free_squares[0] - 3.0) <= 0.05
    assert abs(last.masses[0] - 1 / 6) <= 0.01
    for record in sweep.records:
        assert record.tail_mass <= record.tail_bound * (1 + 1e-9)
        assert record.moment_residual <= 1e-9
        assert record.constrained_slope < 0
        assert record.partial_largest > 0


def test_odd_sweep_closed_form_free_node():
    record = odd_case_sweep(3, [25.0]).records[0]
    assert record.free_squares[0] == pytest.approx(3 * 20 / 22, rel=1e-12)


def test_odd_sweep_flags_infeasible_entries():
    sweep = odd_case_sweep(3, [4.0, 25.0])
    first, second = sweep.records
    assert not first.feasible
    assert first.diagnostics
    assert second.feasible
    assert sweep.p0_column() == [second.p0]


@pytest.mark.parametrize("schedule", [[], [100.0, 25.0], [2.0, 25.0], [25.0, 25.0]])
def test_odd_sweep_schedule_validation(schedule):
    with pytest.raises(ValueError):
        odd_case_sweep(3, schedule)


def test_odd_sweep_needs_odd_k():
    with pytest.raises(ValueError):
        odd_case_sweep(4, [25.0])


def test_auto_schedule():
    schedule = auto_schedule(3)
    assert len(schedule) == 12
    assert schedule[0] == pytest.approx(12.0)
    assert schedule[-1] == pytest.approx(3e4)
    assert all(b > a for a, b in zip(schedule, schedule[1:]))


def test_default_sweep_reaches_target():
    p0 = odd_case_sweep(3, auto_schedule(3)).p0_column()
    assert all(b > a for a, b in zip(p0, p0[1:]))
    assert 2 / 3 - p0[-1] <= 0.01


def test_five_moment_sweep_approaches_four_moment_bound():
    sweep = odd_case_sweep(5, auto_schedule(5))
    p0 = sweep.p0_column()
    assert p0
    assert abs(p0[-1] - 8 / 15) <= 0.02


def test_threaded_sweep_matches_serial():
    schedule = auto_schedule(3, 6)
    serial = odd_case_sweep(3, schedule)
    threaded = odd_case_sweep(3, schedule, max_workers=3)
    assert np.array_equal(serial.p0_column(), threaded.p0_column())
