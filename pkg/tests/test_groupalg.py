import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cstar._random import stream
from cstar.errors import BadTable, BallOverflow, ParseError
from cstar.groupalg import (
    FreeGroup,
    GroupAlgebraElement,
    builtin_group,
    parse_element,
    parse_group,
    parse_group_word,
    random_word,
    reduced_norm_lower,
    reduced_norm_upper_free,
    universal_norm_lower_1d,
    universal_norm_upper,
    word_identity_gap,
)
from oracles import kesten, path_top_eigenvalue, truncated_generator_sum_norm



def _s3_table():
    perms = [(0, 1, 2), (1, 0, 2), (0, 2, 1), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    idx = {p: i for i, p in enumerate(perms)}
    return [[idx[tuple(p[q[i]] for i in range(3))] for q in perms] for p in perms]


def test_builtin_examples():
    F = builtin_group("free(2)")
    assert F.reduce((1, 2, -1, -2)) == (1, 2, -1, -2)
    A = builtin_group("free_abelian(2)")
    assert A.reduce((1, 2, -1, -2)) == ()
    C = builtin_group("cyclic(3)")
    assert C.reduce((1, 1, 1)) == ()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=12), st.lists(st.sampled_from([1, -1, 2, -2]), max_size=12))
def test_reduce_invariants(u, v):
    for G in (builtin_group("free(2)"), builtin_group("free_abelian(2)"), builtin_group("cyclic(5)")):
        ru, rv = G.reduce(u), G.reduce(v)
        assert G.reduce(ru) == ru
        assert G.reduce(tuple(u) + tuple(v)) == G.reduce(ru + rv)
        assert G.is_identity(u) == (ru == ())


def test_finite_group():
    table = _s3_table()
    G = builtin_group("finite", table, [1, 2])
    assert G.is_identity((1, 1))
    assert G.is_identity((1, 2) * 3)
    assert not G.is_identity((1, 2))
    x = parse_element("a + b", G)
    # a + b in C*(S3): the trivial representation gives 2, the largest value
    assert reduced_norm_lower(G, x, 3).lo > 2 - 1e-6
    assert universal_norm_lower_1d(x) == 2


def test_bad_table():
    bad = [[0, 1], [1, 1]]
    with pytest.raises(BadTable):
        builtin_group("finite", bad)
    nonassoc = [[0, 1, 2], [1, 0, 0], [2, 0, 0]]
    with pytest.raises(BadTable):
        builtin_group("finite", nonassoc)


@pytest.mark.parametrize("radius", [1, 2, 3, 4, 5])
def test_free_lower_against_bfs_oracle(radius):
    F = FreeGroup(2)
    x = parse_element("a + a' + b + b'", F)
    lo = float(reduced_norm_lower(F, x, max(radius, 1)).lo)
    ref = truncated_generator_sum_norm(2, radius)
    assert lo <= ref + 1e-12
    assert ref - lo < 1e-6


def test_z_path_graph():
    Z = builtin_group("free_abelian(1)")
    x = parse_element("a + a'", Z)
    for R in (5, 20, 60):
        lo = float(reduced_norm_lower(Z, x, R).lo)
        assert lo <= path_top_eigenvalue(2 * R + 1) + 1e-12
        assert path_top_eigenvalue(2 * R + 1) - lo < 1e-5


def test_monotone_in_radius():
    F = FreeGroup(2)
    x = parse_element("a b + 1/2*b' - a'", F)
    prev = Fraction(0)
    for R in range(2, 7):
        lo = reduced_norm_lower(F, x, R).lo
        assert lo >= prev - Fraction(1, 2**20)
        assert lo <= universal_norm_upper(x)
        prev = lo


def test_identity_is_one():
    F = FreeGroup(2)
    for R in (0, 3):
        assert abs(reduced_norm_lower(F, parse_element("e", F), R).lo - 1) < Fraction(1, 2**30)


def test_universal_upper_examples():
    F = FreeGroup(2)
    assert universal_norm_upper(parse_element("a + a' + b + b'", F)) == 4
    assert universal_norm_upper(GroupAlgebraElement(F, {})) == 0
    assert universal_norm_upper(parse_element("1/2*e", F)) == Fraction(1, 2)


def test_universal_lower_examples():
    F = FreeGroup(2)
    assert universal_norm_lower_1d(parse_element("a + a' + b + b'", F)) == 4
    Z = builtin_group("free_abelian(1)")
    assert universal_norm_lower_1d(parse_element("a + a'", Z)) == 2
    assert universal_norm_lower_1d(parse_element("a - e", Z)) == 2
    C3 = builtin_group("cyclic(3)")
    # characters of Z/3 send a to a cube root of unity: |1 + w + w^2| is 0 or 3
    assert universal_norm_lower_1d(parse_element("e + a + a a", C3)) == 3


def test_word_gap_examples():
    A = builtin_group("free_abelian(2)")
    F = builtin_group("free(2)")
    assert word_identity_gap(A, (1, 2, -1, -2)).verdict == "zero"
    r = word_identity_gap(F, (1, 2, -1, -2))
    assert r.verdict == "at_least_sqrt2" and r.certificate == 2
    assert word_identity_gap(F, ()).verdict == "zero"


def test_word_gap_certificate_matches_reduced_norm():
    # ‖(w - e) δ_e‖ = √2 is a lower bound; the truncation sees it too
    F = FreeGroup(2)
    rng = stream(7, 1)
    for _ in range(10):
        w = F.reduce(random_word(rng, 2, 6))
        if not w:
            continue
        x = GroupAlgebraElement(F, {w: 1, (): -1})
        assert reduced_norm_lower(F, x, len(w)).lo >= math.sqrt(2) - 1e-6


def test_ball_overflow():
    F = FreeGroup(3)
    with pytest.raises(BallOverflow):
        reduced_norm_lower(F, parse_element("a", F), 12, cap=10_000)


def test_reduced_upper_free():
    F = FreeGroup(2)
    x = parse_element("a + a' + b + b'", F)
    up = reduced_norm_upper_free(x)
    assert up >= kesten(2)
    assert up < 3.5
    assert up >= reduced_norm_lower(F, x, 8).lo
    y = parse_element("a", F)
    assert reduced_norm_upper_free(y) >= 1
    assert reduced_norm_upper_free(parse_element("a", builtin_group("cyclic(3)"))) is None


def test_reduced_upper_covers_samples():
    # random elements: the upper bound must dominate the truncation bound
    F = FreeGroup(2)
    rng = stream(11, 2)
    for _ in range(8):
        terms = {}
        for _ in range(3):
            w = F.reduce(random_word(rng, 2, int(rng.integers(0, 4))))
            terms[w] = Fraction(int(rng.integers(-3, 4)), 2)
        x = GroupAlgebraElement(F, terms)
        if not x.terms:
            continue
        assert reduced_norm_upper_free(x) >= reduced_norm_lower(F, x, 6).lo


def test_complex_coefficients():
    Z = builtin_group("free_abelian(1)")
    x = parse_element("i*a - i*a'", Z)
    # i(s - s^-1) is self-adjoint with spectrum [-2, 2]
    lo = float(reduced_norm_lower(Z, x, 40).lo)
    assert 1.99 < lo <= 2
    assert universal_norm_lower_1d(x) >= Fraction(199, 100)


def test_parse_group():
    assert parse_group("kind: free\nrank: 3").g == 3
    assert parse_group("kind: cyclic\norder: 4\n").reduce((1,) * 4) == ()
    table = "\n".join(" ".join(map(str, row)) for row in _s3_table())
    G = parse_group("kind: finite\ngenerators: 1 2\ntable:\n" + table)
    assert G.is_identity((2, 2))
    with pytest.raises(ParseError):
        parse_group("kind: nope")
    with pytest.raises(ParseError):
        parse_group("kind: free")
    assert parse_group_word("a b'", FreeGroup(2)) == (1, -2)
    with pytest.raises(ParseError):
        parse_element("a + z", FreeGroup(2))
