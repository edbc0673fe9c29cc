from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cstar.abelian import (
    FiniteMetricSpace,
    UnitInterval,
    c0_norm,
    f_eval,
    parse_f_poly,
    parse_finite_metric,
)
from cstar.errors import CoverFailure, MissingGenerator, ParseError
from cstar.starpoly import StarPolynomial
from oracles import C0_POLYS, c0_brute_force


def test_f_eval_examples():
    P = FiniteMetricSpace([[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    assert f_eval(P, 0, 0, 10) == 1
    assert f_eval(P, 0, 1, 10) == Fraction(1, 2)
    assert f_eval(P, 0, 2, 10) == Fraction(1, 4)


def test_c0_examples():
    one = FiniteMetricSpace([[0]])
    k = 8
    assert abs(c0_norm(one, parse_f_poly("f1", one), k) - 1) < Fraction(1, 2**k)
    assert c0_norm(one, StarPolynomial.zero("Q"), k) == 0
    two = FiniteMetricSpace([[0, 1], [1, 0]])
    assert abs(c0_norm(two, parse_f_poly("f1", two), k) - 1) < Fraction(1, 2**k)
    # f1 - f2 on two points: |1 - 1/2| = 1/2 at both
    assert abs(c0_norm(two, parse_f_poly("f1 - f2", two), k) - Fraction(1, 2)) < Fraction(1, 2**k)


def test_missing_point():
    two = FiniteMetricSpace([[0, 1], [1, 0]])
    with pytest.raises((MissingGenerator, ParseError)):
        c0_norm(two, parse_f_poly("f3", UnitInterval()), 4)


def test_cover_failure():
    class Bad(UnitInterval):
        def cover(self, center, radius, i):
            return [(0, Fraction(1))]

    with pytest.raises(CoverFailure):
        c0_norm(Bad(), parse_f_poly("f1", Bad()), 4)


@pytest.mark.parametrize("text,fn", C0_POLYS)
def test_unit_interval_against_grid(text, fn):
    X = UnitInterval()
    k = 8
    r = c0_norm(X, parse_f_poly(text, X), k)
    assert abs(float(r) - c0_brute_force(fn, [0.0, 1.0])) <= 2 * 2.0**-k


def test_unit_interval_inner_points():
    X = UnitInterval()
    # f3 sits at 1/2, f4 at 1/4
    q = parse_f_poly("f3 f4 - 1/2*f1", X)
    r = c0_norm(X, q, 7)
    ref = c0_brute_force(lambda a, b, c: b * c - a / 2, [0.0, 0.5, 0.25])
    assert abs(float(r) - ref) <= 2 * 2.0**-7


def test_unit_interval_points():
    X = UnitInterval()
    assert [X.point(i) for i in range(6)] == [0, 1, Fraction(1, 2), Fraction(1, 4), Fraction(3, 4), Fraction(1, 8)]
    for i in range(40):
        assert X.index_of(X.point(i)) == i


def test_cover_radius_and_coverage():
    X = UnitInterval()
    balls = X.cover(2, Fraction(1, 4), 5)
    assert all(r <= Fraction(1, 32) for _, r in balls)
    centers = sorted(X.point(c) for c, _ in balls)
    for t in np.linspace(0.25, 0.75, 101):
        assert min(abs(float(c) - t) for c in centers) < 1 / 32


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_lipschitz(n, z, w):
    X = UnitInterval()
    d = X.distance(z, w, 20)
    assert abs(f_eval(X, n, z, 20) - f_eval(X, n, w, 20)) <= d


def test_parse_finite_metric():
    P = parse_finite_metric("3\n1 2\n1  # last row\n")
    assert P.table[0][2] == 2 and P.table[2][1] == 1
    with pytest.raises(ParseError):
        parse_finite_metric("3\n1 2\n")
    with pytest.raises(ParseError):
        parse_finite_metric("2\n-1\n")
