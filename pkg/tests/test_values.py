from fractions import Fraction

import pytest

from pwnet.values import INF, Infinity, format_value, parse_value


def test_infinity_is_singleton_and_absorbing():
    assert Infinity() is INF
    assert INF + Fraction(3) is INF and Fraction(3) + INF is INF
    assert INF * 2 is INF
    with pytest.raises(ValueError):
        _ = INF * 0


def test_infinity_order():
    assert INF > Fraction(10 ** 9) and Fraction(10 ** 9) < INF
    assert not INF < INF and INF >= INF
    assert max(Fraction(1), INF) is INF


def test_format_and_parse():
    assert format_value(Fraction(6, 4)) == "3/2"
    assert format_value(Fraction(5)) == "5"
    assert format_value(INF) == "inf"
    for v in (Fraction(3, 7), Fraction(0), INF):
        assert parse_value(format_value(v)) == v
