"""Sup norms in C_0(X) for computably proper metric spaces.

The algebra is generated by the functions ``f_n(z) = 1/(1 + d(x_n, z))``
attached to the special points ``x_n`` of the space.  A polynomial in the
``f_n`` (generator index n, printed ``f{n+1}``) has its sup norm computed by
evaluating it on the centers of a fine cover of a compact set outside of
which it is uniformly small.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import CoverFailure, MissingGenerator, ParseError
from .scalars import GaussianRational, parse_rational, rational_sqrt_bounds
from .starpoly import StarPolynomial, modulus_of_continuity, parse_poly

Ball = Tuple[int, Fraction]  # (center point index, radius)


class ProperMetricPresentation:
    """A metric space with special points, approximable distances and covers."""

    #: number of special points, or None when there are infinitely many
    size: Optional[int] = None

    def distance(self, i: int, j: int, k: int) -> Fraction:
        """A rational within 2**-k of d(x_i, x_j)."""
        raise NotImplementedError

    def cover(self, center: int, radius: Fraction, i: int) -> List[Ball]:
        """Open balls of radius at most 2**-i covering the closed ball around x_center."""
        raise NotImplementedError

    def names(self):
        return _FNames(self.size)


class _FNames:
    def __init__(self, size):
        self.size = size

    def __getitem__(self, i):
        if self.size is not None and i >= self.size:
            raise IndexError(i)
        return f"f{i + 1}"

    def index(self, name):
        if name.startswith("f") and name[1:].isdigit() and int(name[1:]) >= 1:
            i = int(name[1:]) - 1
            if self.size is None or i < self.size:
                return i
        raise ValueError(name)

    def __contains__(self, name):
        try:
            self.index(name)
            return True
        except ValueError:
            return False


class FiniteMetricSpace(ProperMetricPresentation):
    """Finitely many points with an exact rational distance table."""

    def __init__(self, table: Sequence[Sequence]):
        n = len(table)
        self.table = [[Fraction(x) for x in row] for row in table]
        for row in self.table:
            if len(row) != n:
                raise ValueError("distance table must be square")
        for a in range(n):
            if self.table[a][a] != 0:
                raise ValueError("distance from a point to itself must be 0")
            for b in range(n):
                if self.table[a][b] != self.table[b][a] or self.table[a][b] < 0:
                    raise ValueError("distance table must be symmetric and nonnegative")
        self.size = n

    def distance(self, i, j, k):
        return self.table[i][j]

    def cover(self, center, radius, i):
        r = Fraction(1, 2**i)
        return [(p, r) for p in range(self.size) if self.table[center][p] <= radius]


def parse_finite_metric(text: str) -> FiniteMetricSpace:
    """Point count followed by the upper-triangular distances, row by row."""
    toks = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        toks.extend(line.split())
    if not toks:
        raise ParseError("empty metric file")
    try:
        n = int(toks[0])
    except ValueError:
        raise ParseError("first token must be the point count") from None
    need = n * (n - 1) // 2
    if len(toks) - 1 != need:
        raise ParseError(f"expected {need} distances, got {len(toks) - 1}")
    vals = [parse_rational(t) for t in toks[1:]]
    table = [[Fraction(0)] * n for _ in range(n)]
    it = iter(vals)
    for a in range(n):
        for b in range(a + 1, n):
            table[a][b] = table[b][a] = next(it)
    try:
        return FiniteMetricSpace(table)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


class UnitInterval(ProperMetricPresentation):
    """[0, 1] with special points 0, 1, 1/2, 1/4, 3/4, 1/8, ... and dyadic grid covers."""

    size = None

    @staticmethod
    def point(i: int) -> Fraction:
        if i == 0:
            return Fraction(0)
        if i == 1:
            return Fraction(1)
        # indices at level L run from 2^(L-1) + 1 to 2^L
        L = 1
        while i > 2**L:
            L += 1
        m = 2 * (i - 2 ** (L - 1) - 1) + 1
        return Fraction(m, 2**L)

    @staticmethod
    def index_of(x: Fraction) -> int:
        x = Fraction(x)
        if x == 0:
            return 0
        if x == 1:
            return 1
        den = x.denominator
        if not 0 < x < 1 or den & (den - 1):
            raise ValueError(f"{x} is not a special point")
        L = den.bit_length() - 1
        return 2 ** (L - 1) + 1 + (x.numerator - 1) // 2

    def distance(self, i, j, k):
        return abs(self.point(i) - self.point(j))

    def cover(self, center, radius, i):
        c = self.point(center)
        step = Fraction(1, 2**i)
        lo = max(Fraction(0), c - radius)
        hi = min(Fraction(1), c + radius)
        a = (lo / step).__floor__()
        b = (hi / step).__ceil__()
        return [(self.index_of(t * step), step) for t in range(max(a, 0), min(b, 2**i) + 1)]


def f_eval(P: ProperMetricPresentation, n: int, z: int, k: int) -> Fraction:
    """A rational within 2**-k of 1/(1 + d(x_n, x_z))."""
    d = P.distance(n, z, k + 2)
    if d < 0:
        d = Fraction(0)
    return 1 / (1 + d)


def _abs_bounds(v) -> Tuple[Fraction, Fraction]:
    if isinstance(v, GaussianRational):
        return rational_sqrt_bounds(v.abs2(), 64)
    v = abs(v)
    return v, v


def _evaluate_scalar(q: StarPolynomial, values: dict):
    total = 0
    for w, c in q.terms.items():
        t = c
        for i, _ in w:  # the f_n are real, so stars are immaterial
            t = t * values[i]
        total = total + t
    return total


def c0_norm(P: ProperMetricPresentation, q: StarPolynomial, k: int) -> Fraction:
    """A rational r with |‖q(f)‖_∞ - r| < 2**-k."""
    if q.is_zero():
        return Fraction(0)
    gens = q.generators()
    if P.size is not None and gens[-1] >= P.size:
        raise MissingGenerator(f"the space has no point {gens[-1] + 1}")
    # |f_n| <= 1, so j controls the oscillation of q on balls of radius 2^-j
    j = modulus_of_continuity(q, 1, k + 1)
    M = int(q.coefficient_sum().__ceil__())
    radius = Fraction(M * 2 ** (k + 1))
    # the f-values are only known approximately: precision jj keeps the
    # evaluation error of q below 2^-(k+3) (arguments stay below 2)
    jj = modulus_of_continuity(q, 2, k + 3)
    scale = Fraction(1, 2**j)
    N = Fraction(0)
    seen = set()
    for g in gens:
        for center, rad in P.cover(g, radius, j):
            if rad > scale:
                raise CoverFailure(f"cover returned a ball of radius {rad} > 2^-{j}")
            if center in seen:
                continue
            seen.add(center)
            vals = {h: f_eval(P, h, center, jj) for h in gens}
            lo, _ = _abs_bounds(_evaluate_scalar(q, vals))
            if lo > N:
                N = lo
    # N <= ‖q‖ + 2^-(k+3) and ‖q‖ <= N + 2^-(k+1) + 2^-(k+3)
    return N + Fraction(1, 2 ** (k + 2))


def parse_f_poly(text: str, P: ProperMetricPresentation, ring: str = "Q") -> StarPolynomial:
    return parse_poly(text, P.names(), ring)
