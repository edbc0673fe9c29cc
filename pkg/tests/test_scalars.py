from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cstar.errors import DivisionByZero, ParseError
from cstar.scalars import (
    Dyadic,
    GaussianRational,
    RationalQuaternion,
    format_scalar,
    parse_dyadic,
    parse_scalar,
    rational_sqrt_bounds,
    scalar_arith,
    to_float,
)

rationals = st.fractions(max_denominator=50).filter(lambda x: abs(x) < 1000)
quats = st.builds(RationalQuaternion, rationals, rationals, rationals, rationals)


def test_examples():
    assert scalar_arith(Fraction(1, 2), Fraction(1, 3), "add") == Fraction(5, 6)
    ij = RationalQuaternion(0, 1, 1, 0)
    assert scalar_arith(ij, ij, "abs2") == 2
    assert scalar_arith(GaussianRational(1, 1), GaussianRational(1, -1), "mul") == 2


def test_to_float_contract():
    v, err = to_float(Fraction(1, 3))
    assert abs(v[0] - 1 / 3) <= err <= 2**-52 * (1 / 3)
    assert to_float(Fraction(0)) == ((0.0,), 0.0)
    assert to_float(Fraction(5, 8)) == ((0.625,), 0.0)


def test_division_by_zero():
    with pytest.raises(DivisionByZero):
        scalar_arith(GaussianRational(1), GaussianRational(0), "div")
    with pytest.raises(DivisionByZero):
        RationalQuaternion(0).inverse()


def test_dyadic():
    d = Dyadic(6, -3)
    assert (d.mantissa, d.exponent) == (3, -2)
    assert d.to_fraction() == Fraction(3, 4)
    assert parse_dyadic("3/2^2") == d
    with pytest.raises(ParseError):
        parse_dyadic("1/3")
    assert format_scalar(Dyadic(1, -30)) == "1/2^30"


def test_parse_and_format_roundtrip():
    for text, ring in [("1/2", "R"), ("1/2+3i", "C"), ("1-1/2i+j-3k", "H"), ("-i", "C")]:
        x = parse_scalar(text, ring)
        assert parse_scalar(format_scalar(x), ring) == x
    with pytest.raises(ParseError):
        parse_scalar("1+j", "C")


def test_sqrt_bounds():
    assert rational_sqrt_bounds(Fraction(9, 4)) == (Fraction(3, 2), Fraction(3, 2))
    lo, hi = rational_sqrt_bounds(Fraction(2), 40)
    assert lo * lo <= 2 <= hi * hi and hi - lo <= Fraction(1, 2**39)


@given(rationals, rationals)
def test_rational_cancellation(x, y):
    assert (x + y) - y == x


@given(quats, quats)
def test_quaternion_norm_multiplicative(p, q):
    assert (p * q).abs2() == p.abs2() * q.abs2()


@given(quats, quats)
def test_quaternion_conj_antihomomorphism(p, q):
    assert (p * q).conj() == q.conj() * p.conj()


@given(quats)
def test_quaternion_inverse(p):
    if p:
        assert p * p.inverse() == RationalQuaternion(1)
