"""Exact reward values: rationals extended with +infinity."""

from __future__ import annotations

from fractions import Fraction
from typing import Union


class Infinity:
    """The +infinity reward. Absorbing under addition, larger than any rational."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __mul__(self, other):
        if other == 0:
            raise ValueError("0 * inf is undefined")
        return self

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("pwnet.inf")

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return other is self

    def __gt__(self, other) -> bool:
        return other is not self

    def __ge__(self, other) -> bool:
        return True

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()

Value = Union[Fraction, Infinity]


def format_value(v) -> str:
    """Render a value as ``p/q``, ``n`` or ``inf``."""
    if v is INF:
        return "inf"
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def parse_value(text: str) -> Value:
    text = text.strip()
    if text == "inf":
        return INF
    return Fraction(text)
