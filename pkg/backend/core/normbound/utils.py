# backend/core/normbound/utils.py

from fractions import Fraction
from typing import Sequence, Union

Number = Union[int, float, Fraction]


def format_rational(value: Fraction) -> str:
    """Exact "p/q"; integers print without a denominator."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Number) -> str:
    """15 significant digits; small masses keep their exponent."""
    return "%.15g" % (float(value) + 0.0)


def format_scientific(value: Number) -> str:
    return "%.15e" % float(value)


def parse_rational(text: str) -> Fraction:
    """Parse "3", "2/3" or "0.25" exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def parse_float_list(text: str) -> list:
    """Comma-separated floats, e.g. "25,100,1e4"."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ValueError(f"not a comma-separated list of numbers: {text!r}") from exc


def significant(value: Number, digits: int = 15) -> float:
    return float("%.*g" % (digits, float(value)))


def rounded(values: Sequence[Number], digits: int = 15) -> list:
    return [significant(v, digits) for v in values]
