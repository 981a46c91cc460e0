"""Exact arithmetic, extended values, and rational text round trips."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutlearn.rationals import (
    INF,
    NEG_INF,
    InfinityArithmeticError,
    ext_add,
    ext_div,
    ext_mul,
    ext_neg,
    ext_sub,
    format_ext,
    format_rational,
    frac_ceil,
    frac_floor,
    frac_part,
    is_finite,
    is_integral,
    parse_ext,
    parse_rational,
)

rationals = st.fractions(
    min_value=-(10**9), max_value=10**9, max_denominator=10**6
)


@given(rationals, rationals)
def test_exact_add_sub_roundtrip(p, q):
    assert (p + q) - q == p


@given(rationals, rationals)
def test_exact_mul_div_roundtrip(p, q):
    if q != 0:
        assert (p * q) / q == p


@given(rationals)
def test_frac_part_range(a):
    f = frac_part(a)
    assert 0 <= f < 1
    assert (f == 0) == is_integral(a)
    assert frac_floor(a) + f == a


@given(rationals)
def test_floor_ceil_bracket(a):
    assert frac_floor(a) <= a <= frac_ceil(a)
    assert frac_ceil(a) - frac_floor(a) in (0, 1)


def test_infinity_rules():
    assert ext_add(INF, Fraction(5)) == INF
    assert ext_add(NEG_INF, Fraction(5)) == NEG_INF
    assert ext_sub(Fraction(0), INF) == NEG_INF
    assert ext_mul(Fraction(-2), INF) == NEG_INF
    assert ext_neg(NEG_INF) == INF
    assert ext_div(INF, Fraction(-1)) == NEG_INF


def test_indeterminate_forms_raise():
    with pytest.raises(InfinityArithmeticError):
        ext_add(INF, NEG_INF)
    with pytest.raises(InfinityArithmeticError):
        ext_sub(INF, INF)
    with pytest.raises(InfinityArithmeticError):
        ext_mul(Fraction(0), INF)


def test_parse_rational_forms():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational("-7") == Fraction(-7)
    assert parse_rational("0.25") == Fraction(1, 4)
    assert parse_rational("1.5") == Fraction(3, 2)


def test_parse_rational_rejects_scientific():
    with pytest.raises(ValueError):
        parse_rational("1e3")
    with pytest.raises(ValueError):
        parse_rational("2.5E-1")


@given(rationals)
def test_format_parse_roundtrip(a):
    assert parse_rational(format_rational(a)) == a


def test_ext_text_roundtrip():
    for value in (INF, NEG_INF, Fraction(5, 3), Fraction(-2)):
        assert parse_ext(format_ext(value)) == value
    assert not is_finite(parse_ext("inf"))
