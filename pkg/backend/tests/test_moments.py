from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

from backend.core.normbound.moments import (MomentSource, MomentVector, SingularHankelError,
                                            bareiss_determinant, hankel_matrix, leading_principal_minors,
                                            lindsay_bound, normal_moment, orthogonality_check,
                                            s_from_hermite, solve_rational)


@pytest.mark.parametrize("order, expected", [
    (0, 1), (1, 0), (2, 1), (3, 0), (4, 3), (6, 15), (8, 105), (12, 10395),
])
def test_normal_moments(order, expected):
    assert normal_moment(order) == expected


def test_normal_moment_rejects_bad_order():
    with pytest.raises(ValueError):
        normal_moment(-2)
    with pytest.raises(ValueError):
        normal_moment(1.5)


def test_moment_vector_normal():
    m = MomentVector.normal(4)
    assert m.values == (0, 1, 0, 3)
    assert m.source is MomentSource.NORMAL
    assert m.moment(0) == 1
    assert m.half_even(2).values == (Fraction(1, 2), Fraction(3, 2))
    with pytest.raises(ValueError):
        m.moment(5)


def test_moment_vector_normal_source_is_checked():
    with pytest.raises(ValueError):
        MomentVector((Fraction(0), Fraction(2)), MomentSource.NORMAL)
    user = MomentVector.from_values(["0", "2", "1/3"])
    assert user.source is MomentSource.USER
    assert user.values[2] == Fraction(1, 3)


def test_hankel_entries():
    assert hankel_matrix(1).rows() == [[1, 1], [1, 3]]
    h = hankel_matrix(2)
    assert h.rows() == [[1, 1, 3], [1, 3, 15], [3, 15, 105]]
    assert h.is_symmetric()
    assert h.minor(0, 0) == [[3, 15], [15, 105]]


def test_hankel_order_must_be_positive():
    with pytest.raises(ValueError):
        hankel_matrix(0)


def test_determinants_by_hand():
    assert bareiss_determinant(hankel_matrix(2).rows()) == 48
    assert bareiss_determinant(hankel_matrix(2).minor(0, 0)) == 90
    assert bareiss_determinant(hankel_matrix(3).rows()) == 34560
    assert bareiss_determinant(hankel_matrix(3).minor(0, 0)) == 75600


def test_bareiss_pivoting_and_singularity():
    assert bareiss_determinant([[0, 1], [1, 0]]) == -1
    assert bareiss_determinant([[1, 2], [2, 4]]) == 0
    assert bareiss_determinant([]) == 1
    with pytest.raises(ValueError):
        bareiss_determinant([[1, 2, 3], [4, 5, 6]])


def test_bareiss_matches_numpy_on_integer_matrices():
    rng = np.random.default_rng(7)
    for _ in range(20):
        size = int(rng.integers(1, 7))
        matrix = rng.integers(-9, 10, (size, size))
        assert bareiss_determinant(matrix.tolist()) == round(np.linalg.det(matrix))


def test_hankel_matrices_are_positive_definite():
    for m in range(1, 9):
        minors = leading_principal_minors(hankel_matrix(m))
        assert len(minors) == m + 1
        assert all(minor > 0 for minor in minors)
    assert leading_principal_minors(hankel_matrix(1)) == [1, 2]


@pytest.mark.parametrize("k, expected", [
    (2, Fraction(2, 3)),
    (4, Fraction(8, 15)),
    (6, Fraction(16, 35)),
])
def test_lindsay_bound_values(k, expected):
    assert lindsay_bound(k) == expected


@pytest.mark.parametrize("k", [2, 4, 8, 12, 20])
def test_lindsay_bound_is_central_quadrature_weight(k):
    nodes, weights = hermegauss(k + 1)
    center = weights[np.argmin(np.abs(nodes))] / weights.sum()
    assert abs(float(lindsay_bound(k)) - center) < 1e-12


@pytest.mark.parametrize("k", [0, 3, -2, 5])
def test_lindsay_bound_needs_even_k(k):
    with pytest.raises(ValueError):
        lindsay_bound(k)


def test_singular_hankel_is_reported():
    point_mass = MomentVector.from_values([0, 0, 0, 0])
    with pytest.raises(SingularHankelError):
        lindsay_bound(2, point_mass)


def test_lindsay_bound_with_user_moments():
    # symmetric +-1 with mass 1/2 each: no room for mass at zero beyond 0
    rademacher = MomentVector.from_values([0, 1, 0, 1, 0, 1, 0, 1])
    with pytest.raises(SingularHankelError):
        lindsay_bound(2, rademacher)
    scaled = MomentVector.from_values([0, 1, 0, 2])
    assert lindsay_bound(2, scaled) == Fraction(1, 2)


@pytest.mark.parametrize("k, s", [(2, 2), (4, 56)])
def test_s_from_hermite_values(k, s):
    assert s_from_hermite(k) == s


@pytest.mark.parametrize("k", range(2, 14, 2))
def test_s_over_top_moment_is_the_bound(k):
    assert s_from_hermite(k) / normal_moment(2 * k) == lindsay_bound(k)


def test_orthogonality_checks_vanish():
    for ell in range(12):
        for i in range(12):
            if 2 * ell + 2 * i + 2 <= 24:
                assert orthogonality_check(ell, i) == 0


def test_orthogonality_check_rejects_negative_indices():
    with pytest.raises(ValueError):
        orthogonality_check(-1, 0)


def test_solve_rational():
    solution = solve_rational([[2, 1], [1, 3]], [3, 5])
    assert solution == [Fraction(4, 5), Fraction(7, 5)]
    with pytest.raises(ZeroDivisionError):
        solve_rational([[1, 2], [2, 4]], [1, 2])
