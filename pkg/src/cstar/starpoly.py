"""Noncommutative *-polynomials with no constant term.

A word is a tuple of letters ``(index, starred)``; generator indices are
0-based internally and print as ``x1, x2, ...`` unless names are supplied.
Coefficients live in Q (``ring='Q'``) or Q(i) (``ring='Q(i)'``).
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import MissingBound, MissingGenerator, ParseError, RingMismatch, SizeMismatch
from .matrep import EPS, Matrix, Representation, frob
from .scalars import Dyadic, GaussianRational, as_fraction, format_scalar

Letter = Tuple[int, bool]
Word = Tuple[Letter, ...]

RINGS = ("Q", "Q(i)")


def word_key(w: Word):
    return (len(w), w)


def star_word(w: Word) -> Word:
    return tuple((i, not s) for i, s in reversed(w))


def _coerce(c, ring: str):
    if ring == "Q":
        if isinstance(c, GaussianRational):
            if c.im:
                raise RingMismatch("complex coefficient in a rational polynomial")
            return c.re
        return as_fraction(c)
    if isinstance(c, GaussianRational):
        return c
    return GaussianRational(as_fraction(c))


def _abs_upper(c) -> Fraction:
    """A rational upper bound for |c|."""
    if isinstance(c, GaussianRational):
        n = c.abs2()
        if n == 0:
            return Fraction(0)
        num = n.numerator * n.denominator
        r = math.isqrt(num)
        if r * r < num:
            r += 1
        return Fraction(r, n.denominator)
    return abs(c)


class StarPolynomial:
    """Immutable element of the free *-algebra without unit."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Word, object]] = None, ring: str = "Q"):
        if ring not in RINGS:
            raise ValueError(f"unknown coefficient ring {ring!r}")
        clean: Dict[Word, object] = {}
        for w, c in (terms or {}).items():
            w = tuple((int(i), bool(s)) for i, s in w)
            if not w:
                raise ValueError("constant terms are not allowed")
            c = _coerce(c, ring)
            if c:
                clean[w] = c
        self.ring = ring
        self.terms = dict(sorted(clean.items(), key=lambda kv: word_key(kv[0])))
        self._hash = None

    # constructors
    @classmethod
    def zero(cls, ring: str = "Q") -> "StarPolynomial":
        return cls({}, ring)

    @classmethod
    def gen(cls, i: int, starred: bool = False, ring: str = "Q") -> "StarPolynomial":
        return cls({((i, starred),): 1}, ring)

    @classmethod
    def monomial(cls, word: Word, coeff=1, ring: str = "Q") -> "StarPolynomial":
        return cls({tuple(word): coeff}, ring)

    # structure
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, StarPolynomial):
            return NotImplemented
        if self.ring != other.ring:
            return False
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, tuple(self.terms.items())))
        return self._hash

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def generators(self) -> List[int]:
        return sorted({i for w in self.terms for i, _ in w})

    def coefficient_sum(self) -> Fraction:
        """Upper bound for the sum of the absolute values of the coefficients."""
        return sum((_abs_upper(c) for c in self.terms.values()), Fraction(0))

    def leading(self) -> Tuple[Word, object]:
        w = max(self.terms, key=word_key)
        return w, self.terms[w]

    # arithmetic
    def _same(self, other):
        if not isinstance(other, StarPolynomial):
            raise TypeError("expected a StarPolynomial")
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    def __add__(self, other):
        self._same(other)
        t = dict(self.terms)
        for w, c in other.terms.items():
            t[w] = t[w] + c if w in t else c
        return StarPolynomial(t, self.ring)

    def __neg__(self):
        return StarPolynomial({w: -c for w, c in self.terms.items()}, self.ring)

    def __sub__(self, other):
        self._same(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, StarPolynomial):
            return self.scale(other)
        self._same(other)
        t: Dict[Word, object] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                c = c1 * c2
                t[w] = t[w] + c if w in t else c
        return StarPolynomial(t, self.ring)

    def __rmul__(self, c):
        return self.scale(c)

    def scale(self, c) -> "StarPolynomial":
        c = _coerce(c, self.ring)
        return StarPolynomial({w: c * x for w, x in self.terms.items()}, self.ring)

    def star(self) -> "StarPolynomial":
        t = {}
        for w, c in self.terms.items():
            t[star_word(w)] = c.conj() if isinstance(c, GaussianRational) else c
        return StarPolynomial(t, self.ring)

    def to_ring(self, ring: str) -> "StarPolynomial":
        if ring == self.ring:
            return self
        return StarPolynomial(self.terms, ring)

    def __repr__(self):
        return f"StarPolynomial({format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)


def poly_arith(lhs: StarPolynomial, rhs=None, op: str = "add") -> StarPolynomial:
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        if not isinstance(rhs, StarPolynomial):
            raise TypeError("mul expects two polynomials; use scale for scalars")
        return lhs * rhs
    if op == "star":
        return lhs.star()
    if op == "scale":
        return lhs.scale(rhs)
    raise ValueError(f"unknown polynomial operation {op!r}")


@dataclass(frozen=True)
class Relation:
    """The statement ‖poly‖ <= bound."""

    poly: StarPolynomial
    bound: Dyadic

    def __post_init__(self):
        if not isinstance(self.bound, Dyadic):
            object.__setattr__(self, "bound", Dyadic.from_fraction(self.bound))
        if self.bound < 0:
            raise ValueError("relation bounds must be nonnegative")

    def is_equality(self) -> bool:
        return self.bound == 0


# -- rendering ---------------------------------------------------------------


def default_names(n: int) -> List[str]:
    return [f"x{i + 1}" for i in range(n)]


def _letter_name(i: int, names) -> str:
    if names is not None:
        try:
            return names[i]
        except (IndexError, KeyError):
            pass
    return f"x{i + 1}"


def format_word(w: Word, names=None) -> str:
    return " ".join(_letter_name(i, names) + ("'" if s else "") for i, s in w)


def format_poly(p: StarPolynomial, names=None) -> str:
    if not p.terms:
        return "0"
    parts = []
    for w, c in p.terms.items():
        ws = format_word(w, names)
        if isinstance(c, GaussianRational):
            if c.im == 0:
                c = c.re
            elif c.re == 0:
                coef = format_scalar(c.im) + "i" if c.im != 1 else "i"
                if c.im == -1:
                    coef = "-i"
                parts.append(("+", f"{coef} * {ws}") if not coef.startswith("-") else ("-", f"{coef[1:]} * {ws}"))
                continue
            else:
                parts.append(("+", f"({format_scalar(c)}) * {ws}"))
                continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        parts.append((sign, ws if a == 1 else f"{format_scalar(a)} * {ws}"))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+(?:\^\d+)?)?)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


class _Parser:
    def __init__(self, text, names, ring, unit_index):
        self.toks = []
        for m in _TOKEN.finditer(text):
            num, name, op = m.groups()
            if num is not None:
                self.toks.append(("num", num))
            elif name is not None:
                self.toks.append(("name", name))
            elif op is not None and not op.isspace():
                self.toks.append(("op", op))
        self.pos = 0
        self.names = names
        self.ring = ring
        self.unit = unit_index

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.pos += 1
        return t

    def expect(self, op):
        t = self.take()
        if t != ("op", op):
            raise ParseError(f"expected {op!r}, got {t[1]!r}")

    # grammar: expr := term (('+'|'-') term)* ; term := factor ('*'? factor)*
    def expr(self):
        neg = False
        if self.peek() in (("op", "-"), ("op", "+")):
            neg = self.take()[1] == "-"
        val = self.term()
        if neg:
            val = val.negate()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            val = val.add(rhs.negate() if op == "-" else rhs)
        return val

    def term(self):
        val = self.factor()
        while True:
            t = self.peek()
            if t == ("op", "*"):
                self.take()
                val = val.mul(self.factor())
            elif t[0] in ("num", "name") or t == ("op", "("):
                val = val.mul(self.factor())
            else:
                return val

    def factor(self):
        val = self.atom()
        while self.peek() == ("op", "'"):
            self.take()
            val = val.star()
        return val

    def atom(self):
        kind, tok = self.take()
        if kind == "num":
            return _Partial.scalar(_parse_num(tok), self.ring)
        if kind == "name":
            if tok == "i":
                if self.ring != "Q(i)":
                    raise ParseError("the imaginary unit needs complex coefficients")
                return _Partial.scalar(GaussianRational(0, 1), self.ring)
            return _Partial.gen(self._index(tok), self.ring)
        if (kind, tok) == ("op", "("):
            v = self.expr()
            self.expect(")")
            return v
        raise ParseError(f"unexpected token {tok!r}")

    def _index(self, name):
        if self.names is not None and name in self.names:
            return self.names.index(name)
        m = re.fullmatch(r"x(\d+)", name)
        if m and int(m.group(1)) >= 1 and self.names is None:
            return int(m.group(1)) - 1
        raise ParseError(f"unknown generator {name!r}")


def _parse_num(tok: str) -> Fraction:
    if "/" not in tok:
        return Fraction(int(tok))
    a, b = tok.split("/", 1)
    if "^" in b:
        base, e = b.split("^", 1)
        d = int(base) ** int(e)
    else:
        d = int(b)
    if d == 0:
        raise ParseError("zero denominator")
    return Fraction(int(a), d)


class _Partial:
    """A polynomial plus a pending constant term used during parsing."""

    __slots__ = ("poly", "const")

    def __init__(self, poly, const):
        self.poly = poly
        self.const = const

    @classmethod
    def scalar(cls, c, ring):
        return cls(StarPolynomial.zero(ring), _coerce(c, ring))

    @classmethod
    def gen(cls, i, ring):
        return cls(StarPolynomial.gen(i, ring=ring), _coerce(0, ring))

    def add(self, o):
        return _Partial(self.poly + o.poly, self.const + o.const)

    def negate(self):
        return _Partial(-self.poly, -self.const)

    def mul(self, o):
        return _Partial(
            self.poly * o.poly + o.poly.scale(self.const) + self.poly.scale(o.const),
            self.const * o.const,
        )

    def star(self):
        c = self.const.conj() if isinstance(self.const, GaussianRational) else self.const
        return _Partial(self.poly.star(), c)


def parse_poly(
    text: str,
    names: Optional[Sequence[str]] = None,
    ring: str = "Q",
    unit_index: Optional[int] = None,
) -> StarPolynomial:
    """Parse an expression such as ``1/2 * x1 x2' - 3/4 * x2``.

    Bare constants are allowed only when ``unit_index`` names a unit
    generator; they become multiples of that generator.
    """
    if "i" in (names or ()):
        raise ParseError("a generator may not be named 'i'")
    if names is not None and not hasattr(names, "index"):
        names = list(names)
    p = _Parser(text, names, ring, unit_index)
    if not p.toks:
        raise ParseError("empty expression")
    val = p.expr()
    if p.pos != len(p.toks):
        raise ParseError(f"unexpected trailing input {p.peek()[1]!r}")
    poly = val.poly
    if val.const:
        if unit_index is None:
            raise ParseError("constant terms need a unit generator")
        poly = poly + StarPolynomial.gen(unit_index, ring=ring).scale(val.const)
    return poly


# -- evaluation --------------------------------------------------------------


def _as_rep(assignment) -> Representation:
    if isinstance(assignment, Representation):
        return assignment
    return Representation(assignment)


def evaluate(p: StarPolynomial, assignment, n: Optional[int] = None, ring: Optional[str] = None) -> Matrix:
    """Evaluate ``p`` at matrices; exact when every used matrix is exact.

    Numeric results carry ``err``, an operator-norm bound on the distance to
    the exact value of ``p`` at the (exact) inputs the floats stand for.
    """
    rep = _as_rep(assignment)
    if n is None:
        n = rep.n
    if ring is None:
        ring = rep.ring
    if rep.mats and (rep.n != n or rep.ring != ring):
        raise SizeMismatch("assignment does not match the requested size or ring")
    if p.ring == "Q(i)" and ring != "C":
        raise RingMismatch(f"complex coefficients cannot be evaluated over {ring}")
    used = p.generators()
    for i in used:
        if i not in rep:
            raise MissingGenerator(f"no matrix for generator {i + 1}")
    if not p.terms:
        return Matrix.zeros(ring, n, exact=all(rep[i].exact for i in rep) if rep.mats else True)
    exact = all(rep[i].exact for i in used)
    if exact:
        return _evaluate_exact(p, rep, n, ring)
    return _evaluate_numeric(p, rep, n, ring)


def _evaluate_exact(p, rep, n, ring):
    cache: Dict[Word, Matrix] = {}
    adj: Dict[int, Matrix] = {}

    def letter(i, s):
        if not s:
            return rep[i]
        if i not in adj:
            adj[i] = rep[i].adjoint()
        return adj[i]

    def prod(w):
        if w in cache:
            return cache[w]
        if len(w) == 1:
            m = letter(*w[0])
        else:
            m = prod(w[:-1]) @ letter(*w[-1])
        cache[w] = m
        return m

    total = Matrix.zeros(ring, n)
    for w, c in p.terms.items():
        total = total + prod(w).scale(c)
    return total


def _evaluate_numeric(p, rep, n, ring):
    work = {i: rep[i].numeric() for i in p.generators()}
    W = {i: m.working() for i, m in work.items()}
    Wadj = {i: w.conj().T for i, w in W.items()}
    norms = {i: frob(m) for i, m in work.items()}
    errs = {i: m.err for i, m in work.items()}
    dim = W[next(iter(W))].shape[0]
    cache: Dict[Word, np.ndarray] = {}

    def prod(w):
        if w in cache:
            return cache[w]
        i, s = w[-1]
        last = Wadj[i] if s else W[i]
        m = last if len(w) == 1 else prod(w[:-1]) @ last
        cache[w] = m
        return m

    total = np.zeros((dim, dim), dtype=complex)
    err = 0.0
    csum = 0.0
    for w, c in p.terms.items():
        if isinstance(c, GaussianRational):
            cz = complex(float(c.re), float(c.im))
        else:
            cz = float(c)
        total += cz * prod(w)
        ac = abs(cz) * (1 + 2 * EPS)
        nom = 1.0
        pert = 1.0
        for i, _ in w:
            nom *= norms[i]
            pert *= norms[i] + errs[i]
        gamma = 2 * (len(w) + 1) * (dim + 2) * EPS
        err += ac * ((pert - nom) + gamma * pert)
        csum += ac * pert
    err += (len(p.terms) + 2) * EPS * csum
    if ring == "R":
        return Matrix("R", total.real, err)
    return Matrix.from_working(ring, total, err)


# -- bounds ------------------------------------------------------------------


def modulus_of_continuity(p: StarPolynomial, M, k: int) -> int:
    """Smallest j such that 2**-j-closeness of arguments (all norms <= M) keeps
    ‖p(v) - p(w)‖ < 2**-k, from the Lipschitz bound Σ|c| d M^(d-1)."""
    M = as_fraction(M)
    if M <= 0:
        raise ValueError("M must be positive")
    L = Fraction(0)
    for w, c in p.terms.items():
        d = len(w)
        L += _abs_upper(c) * d * M ** (d - 1)
    if L == 0:
        return 0
    # need L * 2^-j < 2^-k, i.e. 2^j > L * 2^k
    target = L * Fraction(2) ** k
    j = 0
    while Fraction(2) ** j <= target:
        j += 1
    return j


def l1_norm_bound(p: StarPolynomial, generator_bounds: Mapping[int, object]) -> Fraction:
    total = Fraction(0)
    for w, c in p.terms.items():
        t = _abs_upper(c)
        for i, _ in w:
            if i not in generator_bounds:
                raise MissingBound(f"no bound for generator {i + 1}")
            t *= as_fraction(generator_bounds[i])
        total += t
    return total


# -- rational points ---------------------------------------------------------


def _height(c: Fraction) -> int:
    return max(abs(c.numerator), c.denominator)


def rational_points(n_generators: Optional[int] = None, ring: str = "Q") -> Iterator[StarPolynomial]:
    """Enumerate rational monomials ``c * w`` fairly.

    Items of total size s = degree + largest generator index + coefficient
    height are listed before any item of size s + 1; n_generators=None
    means infinitely many generators.  Every rational point is a finite sum
    of enumerated items.
    """
    for size in itertools.count(3):
        for deg in range(1, size):
            for top in range(1, size - deg + 1):
                if n_generators is not None and top > n_generators:
                    break
                h = size - deg - top
                if h < 1:
                    continue
                coeffs = _coeffs_of_height(h, ring)
                for w in _words_with_max(deg, top):
                    for c in coeffs:
                        yield StarPolynomial({w: c}, ring)


def _coeffs_of_height(h: int, ring: str):
    vals = []
    for den in range(1, h + 1):
        for num in range(-h, h + 1):
            f = Fraction(num, den)
            if f and _height(f) == h and f.denominator == den:
                vals.append(f)
    if ring == "Q":
        return vals
    out = [GaussianRational(v) for v in vals] + [GaussianRational(0, v) for v in vals]
    return out


def _words_with_max(deg: int, top: int):
    letters = [(i, s) for i in range(top) for s in (False, True)]
    for w in itertools.product(letters, repeat=deg):
        if max(i for i, _ in w) == top - 1:
            yield w
