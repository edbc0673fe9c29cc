import itertools
from fractions import Fraction

import pytest

from cstar.errors import MissingGenerator, ParseError
from cstar.matrep import Matrix, Representation
from cstar.presentation import (
    Budget,
    ball_intersects_kernel,
    ball_verdict,
    build_contraction,
    build_cuntz,
    build_rotation,
    builtin_presentation,
    check_representation,
    closed_ball_misses_kernel,
    norm_bracket,
    norm_lower_search,
    norm_upper_stream,
    parse_presentation,
    with_relations,
)
from cstar.scalars import Dyadic
from cstar.starpoly import Relation, StarPolynomial

SMALL = Budget(dims=(1, 2), restarts=2, iters=100)


def test_contraction_builders():
    P = build_contraction(1)
    rels = P.relation_list(10)
    assert len(rels) == 1 and rels[0].bound == Dyadic(1)
    assert build_contraction(0).relation_list(10) == []
    inf = build_contraction(None)
    first = list(itertools.islice(inf.relations(), 5))
    assert [r.poly.generators() for r in first] == [[j] for j in range(5)]


def test_cuntz_relations():
    P = build_cuntz(2)
    rels = P.relation_list(100)
    assert Relation(P.parse("s1' s1 - 1"), Dyadic(0)) in rels
    assert Relation(P.parse("s1 s1' + s2 s2' - 1"), Dyadic(0)) in rels
    inf = build_cuntz(None)
    rels = inf.relation_list(200)
    assert all(len(r.poly.terms) <= 2 for r in rels)  # no sum relation
    assert Relation(inf.parse("s2' s1"), Dyadic(0)) in rels


def test_rotation_degenerate_oracle():
    P = build_rotation(lambda k: (1, 0))
    rels = [r for r in P.relation_list(40) if len(r.poly.terms) == 2 and 0 not in r.poly.generators()]
    assert rels[0].poly == P.parse("u v - v u")
    assert [r.bound for r in rels[:3]] == [Dyadic(1), Dyadic(1, -1), Dyadic(1, -2)]


def test_check_representation_examples():
    P = build_contraction(1)
    shift = Representation({0: Matrix.from_entries("C", [[0, 1], [0, 0]])})
    assert check_representation(P, shift).verdicts[0].status == "satisfied"
    big = Representation({0: Matrix.identity("C", 2).scale(2)})
    v = check_representation(P, big).verdicts[0]
    assert v.status == "violated" and abs(v.amount - 1) < 1e-9
    C = build_cuntz(2)
    rep = Representation(
        {0: Matrix.identity("C", 2), 1: Matrix.unit("C", 2, 0, 0), 2: Matrix.unit("C", 2, 1, 1)}
    )
    assert not check_representation(C, rep).ok


def test_lower_search_examples():
    P = build_contraction(1)
    assert norm_lower_search(P, P.parse("c1"), (1,), 2, 50).lo > 1 - 2**-20
    assert norm_lower_search(P, P.parse("c1 + c1'"), (1, 2), 2, 100).lo > 2 - 2**-20
    Q = build_contraction(2)
    assert norm_lower_search(Q, Q.parse("2 c1 c2 + c1'"), (1, 2), 2, 100).lo > 3 - 2**-20


def test_upper_stream_examples():
    P = build_contraction(1)
    assert next(norm_upper_stream(P, P.parse("c1"))) == 1
    C = build_cuntz(2)
    assert list(norm_upper_stream(C, C.parse("s1' s1 - 1")))[-1] == 0
    assert list(norm_upper_stream(P, StarPolynomial.zero("Q(i)"))) == [0]


def test_bracket_examples():
    P = build_contraction(1)
    b = norm_bracket(P, P.parse("c1 + c1'"), SMALL)
    assert b.lo >= 2 - Fraction(1, 2**10) and b.hi == 2
    Q = build_contraction(2)
    b = norm_bracket(Q, Q.parse("c1 c2 - c2 c1"), SMALL)
    assert b.lo >= Fraction(199, 100) and b.hi <= 2
    b = norm_bracket(P, StarPolynomial.zero("Q(i)"), SMALL)
    assert (b.lo, b.hi) == (0, 0)


# closed forms in C(K,1): the norm is the sup over contractions, attained at scalars
CONTRACTION_ORACLE = [("c1", 1), ("c1 + c1'", 2), ("c1 - c1'", 2), ("c1 c1'", 1), ("c1 c1", 1), ("3 c1 - c1'", 4)]


@pytest.mark.parametrize("text,value", CONTRACTION_ORACLE)
def test_soundness_sandwich(text, value):
    P = build_contraction(1)
    b = norm_bracket(P, P.parse(text), SMALL)
    assert b.lo <= value <= b.hi
    assert value - b.lo < 1e-6


def test_monotone_in_budget():
    Q = build_contraction(2)
    p = Q.parse("c1 c2' + 1/2 c2 c1 c1")
    small = norm_bracket(Q, p, Budget(dims=(1, 2), restarts=1, iters=60, rewrite_steps=4))
    big = norm_bracket(Q, p, Budget(dims=(1, 2, 3), restarts=3, iters=60, rewrite_steps=64))
    assert big.lo >= small.lo and big.hi <= small.hi


def test_witness_validity_and_determinism():
    Q = build_contraction(2)
    p = Q.parse("c1 c2 - c2 c1")
    a = norm_bracket(Q, p, SMALL)
    b = norm_bracket(Q, p, SMALL)
    assert (a.lo, a.hi, a.witness_dim) == (b.lo, b.hi, b.witness_dim)
    assert check_representation(Q, a.witness, slack=2**-20).ok


def test_ball_queries():
    P = build_contraction(1)
    zero = StarPolynomial.zero("Q(i)")
    c1 = P.parse("c1")
    assert ball_intersects_kernel(P, zero, Fraction(1, 2), SMALL) == "yes"
    assert closed_ball_misses_kernel(P, zero, Fraction(1, 2), SMALL) == "no"
    killed = with_relations(P, [Relation(c1, Dyadic(0))])
    assert ball_intersects_kernel(killed, killed.parse("c1"), Fraction(1, 2), SMALL) == "yes"
    assert ball_intersects_kernel(P, c1, Fraction(1, 2), SMALL) == "no"
    assert closed_ball_misses_kernel(P, c1, Fraction(1, 2), SMALL) == "yes"
    # radius equal to the norm: the lower bound never reaches 1 exactly
    assert ball_intersects_kernel(P, c1, 1, SMALL) == "unknown"


def test_ball_verdicts_never_contradict():
    P = build_contraction(2)
    for text in ["c1", "c1 c2 - c2 c1", "c1 + c1' - c2"]:
        b = norm_bracket(P, P.parse(text), SMALL)
        for r in [Fraction(1, 4), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(5, 2)]:
            meets = ball_verdict(b, r, "open")
            misses = ball_verdict(b, r, "closed")
            assert not (meets == "yes" and misses == "yes")


def test_parse_presentation():
    text = """
    field: C
    generators: 2
    names: a b
    bound *: 1
    relation: norm(a b - b a) <= 1/2^3
    relation: a' = a
    """
    P = parse_presentation(text)
    assert P.names[1] == "b"
    rels = P.relation_list(20)
    assert Relation(P.parse("a b - b a"), Dyadic(1, -3)) in rels
    b = norm_bracket(P, P.parse("a b - b a"), SMALL)
    assert b.hi <= Fraction(1, 8)
    with pytest.raises(ParseError):
        parse_presentation("field: Q\n")
    with pytest.raises(ParseError):
        builtin_presentation("cuntz(1)")


def test_missing_generator():
    P = build_contraction(1)
    with pytest.raises(MissingGenerator):
        P.bound(3)
