import logging

import pytest

from backend.core.normbound.settings import DEFAULT_TOLERANCES, Tolerances, configure_logging
from backend.core.normbound.utils import (format_decimal, format_rational, format_scientific, parse_rational,
                                          rounded, significant)


def test_overrides_ignore_none():
    tolerances = DEFAULT_TOLERANCES.with_overrides(root_tolerance=None, condition_cap=1e6)
    assert tolerances.condition_cap == 1e6
    assert tolerances.root_tolerance == DEFAULT_TOLERANCES.root_tolerance
    assert DEFAULT_TOLERANCES.condition_cap == Tolerances().condition_cap


def test_overrides_must_be_positive():
    with pytest.raises(ValueError):
        DEFAULT_TOLERANCES.with_overrides(root_tolerance=0.0)


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("NORMBOUND_LOG_LEVEL", "info")
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    root.handlers = []
    try:
        configure_logging(verbosity=1)
        assert root.level == logging.DEBUG
    finally:
        root.handlers = handlers
        root.setLevel(level)


@pytest.mark.parametrize("text, value", [("2/3", "2/3"), ("4", "4"), ("0.25", "1/4"), ("-6/4", "-3/2")])
def test_rationals_round_trip(text, value):
    assert format_rational(parse_rational(text)) == value


def test_parse_rational_rejects_garbage():
    with pytest.raises(ValueError):
        parse_rational("two thirds")
    with pytest.raises(ValueError):
        parse_rational("1/0")


def test_fixed_formats():
    assert format_decimal(2 / 3) == "0.666666666666667"
    assert format_scientific(1 / 3) == "3.333333333333333e-01"


@pytest.mark.parametrize("value, text", [(1e-20 / 3, "3.33333333333333e-21"), (-0.0, "0"), (3.0, "3")])
def test_decimals_keep_significant_digits(value, text):
    assert format_decimal(value) == text


def test_significant_rounding_keeps_small_values():
    assert significant(1.2345678901234567e-30) == 1.23456789012346e-30
    assert rounded([2 / 3, 1e-40]) == [0.666666666666667, 1e-40]
