"""Exact rational helpers and their "p/q" text form."""

from __future__ import annotations

from fractions import Fraction
from typing import Union

RationalLike = Union[Fraction, int, str]


def to_fraction(value: RationalLike) -> Fraction:
    """Coerce an int, Fraction or "p/q" string to a Fraction.

    Floats are refused so that no binary rounding sneaks into exact paths.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational string")
        try:
            return Fraction(text)
        except ValueError:
            raise ValueError(f"malformed rational {value!r}") from None
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def format_fraction(value: Fraction | int) -> str:
    """Lowest-terms text: "2/3", "1", "-1/4"."""
    q = Fraction(value)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
