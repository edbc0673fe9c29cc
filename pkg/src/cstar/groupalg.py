"""Norms in group C*-algebras.

Group words are tuples of nonzero integers: ``g + 1`` is the generator g and
``-(g + 1)`` its inverse.  In text, generators are the letters a, b, c, d, f,
g, ... (``e`` is reserved for the identity) and ``'`` marks an inverse.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse

from ._random import DEFAULT_SEED, stream
from .errors import BadTable, BallOverflow, ParseError
from .scalars import GaussianRational, as_fraction, rational_sqrt_bounds
from .starpoly import _abs_upper, parse_poly

GWord = Tuple[int, ...]
LETTERS = "abcdfghijklmnopqrstuvwxyz"
DEFAULT_BALL_CAP = 2**21


def letter_name(g: int) -> str:
    return LETTERS[g] if g < len(LETTERS) else f"a{g}"


def format_group_word(w: GWord) -> str:
    if not w:
        return "e"
    return " ".join(letter_name(abs(x) - 1) + ("'" if x < 0 else "") for x in w)


def invert(w: GWord) -> GWord:
    return tuple(-x for x in reversed(w))


class GroupOracle:
    """A finitely generated group with solvable word problem."""

    kind = "group"
    g = 0

    def reduce(self, w: Iterable[int]) -> GWord:
        raise NotImplementedError

    def is_identity(self, w: Iterable[int]) -> bool:
        return not self.reduce(w)

    def multiply(self, u: GWord, v: GWord) -> GWord:
        return self.reduce(tuple(u) + tuple(v))

    def relators(self) -> List[GWord]:
        """Words equal to the identity that generate all relations."""
        return []

    def describe(self) -> str:
        return self.kind


class FreeGroup(GroupOracle):
    def __init__(self, k: int):
        if k < 0:
            raise ValueError("rank must be nonnegative")
        self.g = k
        self.kind = "free"

    def reduce(self, w):
        out: List[int] = []
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def describe(self):
        return f"free({self.g})"


class FreeAbelianGroup(GroupOracle):
    def __init__(self, d: int):
        if d < 0:
            raise ValueError("rank must be nonnegative")
        self.g = d
        self.kind = "free_abelian"

    def exponents(self, w) -> List[int]:
        e = [0] * self.g
        for x in w:
            e[abs(x) - 1] += 1 if x > 0 else -1
        return e

    def reduce(self, w):
        out: List[int] = []
        for i, k in enumerate(self.exponents(w)):
            out.extend([i + 1 if k > 0 else -(i + 1)] * abs(k))
        return tuple(out)

    def relators(self):
        return [(i + 1, j + 1, -(i + 1), -(j + 1)) for i in range(self.g) for j in range(i + 1, self.g)]

    def describe(self):
        return f"free_abelian({self.g})"


class CyclicGroup(GroupOracle):
    def __init__(self, n: int):
        if n < 1:
            raise ValueError("order must be positive")
        self.n = n
        self.g = 1
        self.kind = "cyclic"

    def reduce(self, w):
        e = sum(1 if x > 0 else -1 for x in w) % self.n
        return (1,) * e

    def relators(self):
        return [(1,) * self.n]

    def describe(self):
        return f"cyclic({self.n})"


class FiniteGroup(GroupOracle):
    """A group given by its multiplication table and a list of generators."""

    def __init__(self, table: Sequence[Sequence[int]], generators: Sequence[int]):
        m = len(table)
        t = np.array(table, dtype=int) if m else np.zeros((0, 0), dtype=int)
        if t.shape != (m, m) or m == 0:
            raise BadTable("table must be a nonempty square array")
        if t.min() < 0 or t.max() >= m:
            raise BadTable("table entries out of range")
        perm = np.arange(m)
        ident = [i for i in range(m) if np.array_equal(t[i], perm) and np.array_equal(t[:, i], perm)]
        if not ident:
            raise BadTable("no identity element")
        for i in range(m):
            if len(set(t[i])) != m or len(set(t[:, i])) != m:
                raise BadTable("some element is not invertible")
        # associativity: (ab)c = a(bc)
        left = t[t[:, :, None], np.arange(m)[None, None, :]]  # (ab)c
        right = t[np.arange(m)[:, None, None], t[None, :, :]]  # a(bc)
        if not np.array_equal(left, right):
            raise BadTable("table is not associative")
        self.table = t
        self.e = ident[0]
        self.inv = [int(np.where(t[i] == self.e)[0][0]) for i in range(m)]
        for x in generators:
            if not 0 <= x < m:
                raise BadTable(f"generator {x} is not an element")
        self.gens = list(generators)
        self.g = len(self.gens)
        self.kind = "finite"
        self._canon = self._shortlex_words()

    def element(self, w) -> int:
        x = self.e
        for s in w:
            gen = self.gens[abs(s) - 1]
            x = int(self.table[x, gen if s > 0 else self.inv[gen]])
        return x

    def _letters(self):
        out = []
        for i in range(self.g):
            out.extend([i + 1, -(i + 1)])
        return out

    def _shortlex_words(self) -> Dict[int, GWord]:
        canon = {self.e: ()}
        queue = deque([self.e])
        while queue:
            x = queue.popleft()
            for s in self._letters():
                gen = self.gens[abs(s) - 1]
                y = int(self.table[x, gen if s > 0 else self.inv[gen]])
                if y not in canon:
                    canon[y] = canon[x] + (s,)
                    queue.append(y)
        return canon

    def reduce(self, w):
        return self._canon[self.element(w)]

    def relators(self):
        rels = []
        for x, wx in self._canon.items():
            for s in self._letters():
                wy = self._canon[self.element(wx + (s,))]
                rels.append(wx + (s,) + invert(wy))
        return rels

    def describe(self):
        return f"finite(order {len(self.table)})"


def builtin_group(kind: str, param=None, generators=None) -> GroupOracle:
    """``free(k)``, ``free_abelian(d)``, ``cyclic(n)`` or ``finite`` (param = table)."""
    if param is None and "(" in kind:
        m = re.fullmatch(r"\s*(\w+)\(\s*(\d+)\s*\)\s*", kind)
        if not m:
            raise ParseError(f"cannot parse group {kind!r}")
        kind, param = m.group(1), int(m.group(2))
    if kind == "free":
        return FreeGroup(int(param))
    if kind == "free_abelian":
        return FreeAbelianGroup(int(param))
    if kind == "cyclic":
        return CyclicGroup(int(param))
    if kind == "finite":
        if generators is None:
            generators = list(range(len(param)))
        return FiniteGroup(param, generators)
    raise ParseError(f"unknown group kind {kind!r}")


def parse_group(text: str) -> GroupOracle:
    """Group file: ``kind:`` plus ``rank:``, ``order:`` or a ``table:`` block."""
    fields: Dict[str, str] = {}
    table: List[List[int]] = []
    in_table = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if in_table and ":" not in line:
            try:
                table.append([int(t) for t in line.split()])
            except ValueError:
                raise ParseError(f"bad table row {line!r}") from None
            continue
        if ":" not in line:
            raise ParseError(f"expected 'key: value', got {line!r}")
        key, val = (s.strip() for s in line.split(":", 1))
        in_table = key == "table"
        if in_table and val:
            table.append([int(t) for t in val.split()])
        elif not in_table:
            fields[key] = val
    kind = fields.get("kind")
    try:
        if kind in ("free", "free_abelian"):
            return builtin_group(kind, int(fields["rank"]))
        if kind == "cyclic":
            return builtin_group(kind, int(fields["order"]))
        if kind == "finite":
            gens = [int(t) for t in fields["generators"].split()] if "generators" in fields else None
            return builtin_group("finite", table, gens)
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, BadTable):
            raise
        raise ParseError(str(exc)) from None
    raise ParseError(f"unknown group kind {kind!r}")


# -- group algebra elements ------------------------------------------------------


class GroupAlgebraElement:
    """Finite sum of group elements with rational or Gaussian rational coefficients."""

    def __init__(self, G: GroupOracle, terms: Dict[GWord, object]):
        clean: Dict[GWord, object] = {}
        for w, c in terms.items():
            w = G.reduce(w)
            clean[w] = clean[w] + c if w in clean else c
        self.terms = {w: c for w, c in sorted(clean.items(), key=lambda kv: (len(kv[0]), kv[0])) if c}
        self.G = G

    @property
    def complex(self) -> bool:
        return any(isinstance(c, GaussianRational) and c.im for c in self.terms.values())

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{format_group_word(w)}" if c != 1 else format_group_word(w) for w, c in self.terms.items())


def group_names(g: int) -> List[str]:
    return ["e"] + [letter_name(i) for i in range(g)]


def parse_element(text: str, G: GroupOracle) -> GroupAlgebraElement:
    """Parse e.g. ``1/2*a b' + e``."""
    names = group_names(G.g)
    p = parse_poly(text, names, "Q(i)", unit_index=0)
    terms: Dict[GWord, object] = {}
    for w, c in p.terms.items():
        gw = tuple((-(i) if s else i) for i, s in w if i != 0)
        gw = G.reduce(gw)
        c = c.re if c.im == 0 else c
        terms[gw] = terms[gw] + c if gw in terms else c
    return GroupAlgebraElement(G, terms)


def universal_norm_upper(x: GroupAlgebraElement) -> Fraction:
    return sum((_abs_upper(c) for c in x.terms.values()), Fraction(0))


def _reduced_words(k: int, length: int):
    """All reduced words of length at most ``length`` in the free group of rank k."""
    out = [()]
    frontier = [()]
    for _ in range(length):
        nxt = []
        for w in frontier:
            for x in range(1, k + 1):
                for y in (x, -x):
                    if not w or w[-1] != -y:
                        nxt.append(w + (y,))
        out.extend(nxt)
        frontier = nxt
    return out


def reduced_norm_upper_free(x: GroupAlgebraElement, grid: int = 64) -> Optional[Fraction]:
    """Schur-test upper bound for the reduced norm on a free group.

    With weights h(w) = ρ^|w| the bound is sqrt(α β), where α and β are the
    largest row and column sums of |x| against h.  Both only depend on prefixes
    of length at most the longest term, so they are maxima over a finite set.
    Returns None for other groups.
    """
    G = x.G
    if not isinstance(G, FreeGroup):
        return None
    if not x.terms:
        return Fraction(0)
    L = max(len(w) for w in x.terms)
    words = _reduced_words(G.g, L)
    terms = [(w, invert(w), _abs_upper(c)) for w, c in x.terms.items()]
    # exponent shifts |g^-1 u| - |u| and |g u| - |u| for every prefix u
    rows = [[len(G.reduce(gi + u)) - len(u) for _, gi, _ in terms] for u in words]
    cols = [[len(G.reduce(g + u)) - len(u) for g, _, _ in terms] for u in words]
    best = None
    for j in range(1, grid + 1):
        rho = Fraction(j, grid)
        alpha = max(sum(c * rho**d for (_, _, c), d in zip(terms, r)) for r in rows)
        beta = max(sum(c * rho**d for (_, _, c), d in zip(terms, r)) for r in cols)
        _, hi = rational_sqrt_bounds(alpha * beta, 40)
        if best is None or hi < best:
            best = hi
    return best


# -- balls ----------------------------------------------------------------------


def free_ball_size(k: int, radius: int) -> int:
    if k == 0:
        return 1
    return 1 + sum(2 * k * (2 * k - 1) ** (L - 1) for L in range(1, radius + 1))


class _FreeBall:
    """Reduced words of length <= radius stored as a prepend tree.

    Letter l in 0..2k-1 stands for generator l // 2, inverted when l is odd.
    Node w = s.rest has ``first[w] = s`` and ``rest[w] = rest``;
    ``children[w, s]`` is the node s.w, or -1 outside the ball.
    """

    def __init__(self, k: int, radius: int):
        nl = 2 * k
        size = free_ball_size(k, radius)
        self.first = np.full(size, -1, dtype=np.int64)
        self.rest = np.full(size, -1, dtype=np.int64)
        self.children = np.full((size, max(nl, 1)), -1, dtype=np.int64)
        self.k = k
        nxt = 1
        level = np.array([0], dtype=np.int64)
        for _ in range(radius):
            new_levels = []
            for s in range(nl):
                par = level[self.first[level] != (s ^ 1)]
                ids = np.arange(nxt, nxt + len(par), dtype=np.int64)
                nxt += len(par)
                self.children[par, s] = ids
                self.first[ids] = s
                self.rest[ids] = par
                new_levels.append(ids)
            level = np.concatenate(new_levels) if new_levels else np.zeros(0, dtype=np.int64)
        self.size = nxt

    def left_multiply(self, letters: Sequence[int]) -> np.ndarray:
        """Node of h.w for every node w (-1 when outside the ball)."""
        cur = np.arange(self.size, dtype=np.int64)
        for s in reversed(letters):
            ok = cur >= 0
            c = cur[ok]
            cancel = self.first[c] == (s ^ 1)
            out = np.where(cancel, self.rest[c], self.children[c, s])
            cur = cur.copy()
            cur[ok] = out
        return cur


def _letter_code(x: int) -> int:
    return 2 * (abs(x) - 1) + (1 if x < 0 else 0)


def _generic_ball(G: GroupOracle, radius: int, cap: int) -> Dict[GWord, int]:
    index = {(): 0}
    frontier = [()]
    letters = []
    for i in range(G.g):
        letters.extend([i + 1, -(i + 1)])
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for s in letters:
                v = G.reduce(w + (s,))
                if v not in index:
                    index[v] = len(index)
                    if len(index) > cap:
                        raise BallOverflow(f"ball exceeds the cap of {cap} elements")
                    nxt.append(v)
        frontier = nxt
    return index


def truncated_operator(G: GroupOracle, x: GroupAlgebraElement, radius: int, cap: int = DEFAULT_BALL_CAP,
                       fast: bool = True):
    """Sparse matrix of left multiplication by x compressed to the ball."""
    cols_all, rows_all, vals_all = [], [], []
    if fast and isinstance(G, FreeGroup):
        size = free_ball_size(G.g, radius)
        if size > cap:
            raise BallOverflow(f"ball of radius {radius} has {size} elements, cap is {cap}")
        ball = _FreeBall(G.g, radius)
        n = ball.size
        for w, c in x.terms.items():
            img = ball.left_multiply([_letter_code(s) for s in w])
            ok = np.nonzero(img >= 0)[0]
            cols_all.append(ok)
            rows_all.append(img[ok])
            vals_all.append(np.full(len(ok), c, dtype=object))
    else:
        index = _generic_ball(G, radius, cap)
        n = len(index)
        words = list(index)
        for w, c in x.terms.items():
            rows, cols = [], []
            for k, v in enumerate(words):
                r = index.get(G.reduce(w + v))
                if r is not None:
                    rows.append(r)
                    cols.append(k)
            rows_all.append(np.array(rows, dtype=np.int64))
            cols_all.append(np.array(cols, dtype=np.int64))
            vals_all.append(np.full(len(rows), c, dtype=object))
    return n, rows_all, cols_all, vals_all


def _scaled_integer_parts(x: GroupAlgebraElement):
    den = 1
    for c in x.terms.values():
        if isinstance(c, GaussianRational):
            den = math.lcm(den, c.re.denominator, c.im.denominator)
        else:
            den = math.lcm(den, as_fraction(c).denominator)
    parts = []
    for c in x.terms.values():
        if isinstance(c, GaussianRational):
            parts.append((int(c.re * den), int(c.im * den)))
        else:
            parts.append((int(as_fraction(c) * den), 0))
    return den, parts


@dataclass
class ReducedBound:
    lo: Fraction
    ball_size: int
    rayleigh: Fraction  # certified ‖xξ‖²/‖ξ‖²


def _sum_squares(y: np.ndarray) -> int:
    """Exact sum of squares of an int64 vector with |y| < 2^31."""
    sq = y * y
    hi = int(np.sum(sq >> 31))
    lo = int(np.sum(sq & ((1 << 31) - 1)))
    return (hi << 31) + lo


def reduced_norm_lower(
    G: GroupOracle,
    x: GroupAlgebraElement,
    radius: int,
    cap: int = DEFAULT_BALL_CAP,
    iters: int = 500,
    seed: int = DEFAULT_SEED,
    fast: bool = True,
) -> ReducedBound:
    """Certified lower bound for the reduced norm via the ball of the given radius."""
    if not x.terms:
        return ReducedBound(Fraction(0), 1, Fraction(0))
    longest = max(len(w) for w in x.terms)
    if radius < longest:
        raise ValueError(f"radius {radius} is shorter than the longest term ({longest})")
    n, rows, cols, vals = truncated_operator(G, x, radius, cap, fast)
    den, parts = _scaled_integer_parts(x)
    is_complex = any(im for _, im in parts)
    r_all = np.concatenate(rows)
    c_all = np.concatenate(cols)
    re_all = np.concatenate([np.full(len(r), p[0], dtype=np.int64) for r, p in zip(rows, parts)])
    im_all = np.concatenate([np.full(len(r), p[1], dtype=np.int64) for r, p in zip(rows, parts)])
    Tre = scipy.sparse.csr_matrix((re_all, (r_all, c_all)), shape=(n, n), dtype=np.int64)
    Tim = scipy.sparse.csr_matrix((im_all, (r_all, c_all)), shape=(n, n), dtype=np.int64)
    Tf = Tre.astype(float) + (1j * Tim.astype(float) if is_complex else 0)
    Tf = scipy.sparse.csr_matrix(Tf)
    TfH = Tf.conj().T.tocsr()

    rng = stream(seed, n, radius)
    v = 1.0 + 1e-3 * rng.standard_normal(n)
    if is_complex:
        v = v.astype(complex)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = TfH @ (Tf @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        v = w / nw
    # round the direction to an integer vector and certify exactly; the
    # integer scale keeps every entry of T xi below 2^31 in absolute value
    row_sum = int(abs(Tre).sum(axis=1).max()) + (int(abs(Tim).sum(axis=1).max()) if is_complex else 0)
    bits = min(24, (2**29 // max(row_sum, 1)).bit_length() - 1)
    if bits < 1:
        raise OverflowError("coefficients too large for the integer certificate")
    scale = 2**bits / max(float(np.max(np.abs(v))), 1e-300)
    xr = np.rint(np.real(v) * scale).astype(np.int64)
    xi = np.rint(np.imag(v) * scale).astype(np.int64) if is_complex else np.zeros(n, dtype=np.int64)
    yr = Tre @ xr - Tim @ xi
    yi = Tre @ xi + Tim @ xr
    num = _sum_squares(np.asarray(yr, dtype=np.int64)) + _sum_squares(np.asarray(yi, dtype=np.int64))
    dnm = _sum_squares(xr) + _sum_squares(xi)
    if dnm == 0:
        return ReducedBound(Fraction(0), n, Fraction(0))
    rq = Fraction(num, dnm * den * den)
    lo, _ = rational_sqrt_bounds(rq, 40)
    return ReducedBound(lo, n, rq)


# -- one-dimensional representations -----------------------------------------------


def _exponent_sums(w: GWord, g: int) -> List[int]:
    e = [0] * g
    for x in w:
        e[abs(x) - 1] += 1 if x > 0 else -1
    return e


def universal_norm_lower_1d(x: GroupAlgebraElement, G: Optional[GroupOracle] = None, m: int = 12) -> Fraction:
    """Max of |χ(x)| over characters χ with values in the m-th roots of unity."""
    G = G or x.G
    if not x.terms:
        return Fraction(0)
    g = G.g
    if g == 0:
        return _exact_abs_lower(sum(x.terms.values(), 0))
    while m > 4 and m**g > 20000:
        m -= 4
    rel_exps = np.array([_exponent_sums(r, g) for r in G.relators()], dtype=np.int64).reshape(-1, g)
    term_exps = np.array([_exponent_sums(w, g) for w in x.terms], dtype=np.int64).reshape(-1, g)
    combos = np.array(np.meshgrid(*[np.arange(m)] * g, indexing="ij")).reshape(g, -1).T
    ok = np.all((combos @ rel_exps.T) % m == 0, axis=1) if len(rel_exps) else np.ones(len(combos), bool)
    combos = combos[ok]
    coeffs = list(x.terms.values())
    best = Fraction(0)
    # characters with values in {1, i, -1, -i} are evaluated exactly
    q = m // 4
    exact_rows = combos[np.all(combos % q == 0, axis=1)] // q if m % 4 == 0 else np.zeros((0, g), int)
    powers = [GaussianRational(1), GaussianRational(0, 1), GaussianRational(-1), GaussianRational(0, -1)]
    for t in exact_rows:
        ks = (term_exps @ t) % 4
        val = GaussianRational(0)
        for c, k in zip(coeffs, ks):
            val = val + powers[int(k)] * c
        lo = _exact_abs_lower(val)
        if lo > best:
            best = lo
    cz = np.array([complex(float(c.re), float(c.im)) if isinstance(c, GaussianRational) else float(c) for c in coeffs])
    angles = (combos @ term_exps.T) % m
    vals = np.abs(np.exp(2j * np.pi * angles / m) @ cz)
    err = 8 * (len(coeffs) + 4) * np.finfo(float).eps * float(np.sum(np.abs(cz))) + 1e-300
    fb = float(np.max(vals)) - err
    if fb > 0:
        cand = Fraction(math.floor(fb * 2**40), 2**40)
        if cand > best:
            best = cand
    return best


def _exact_abs_lower(v) -> Fraction:
    if isinstance(v, GaussianRational):
        lo, _ = rational_sqrt_bounds(v.abs2(), 40)
        return lo
    return abs(as_fraction(v))


@dataclass
class GapResult:
    verdict: str  # zero | at_least_sqrt2
    certificate: Fraction  # ‖(w - e) δ_e‖² in ℓ²(G)


def word_identity_gap(G: GroupOracle, w: Iterable[int]) -> GapResult:
    """‖w - e‖ is 0 when w = e and at least √2 otherwise."""
    if G.is_identity(w):
        return GapResult("zero", Fraction(0))
    # (w - e) δ_e = δ_w - δ_e with w != e, whose squared norm is 2
    return GapResult("at_least_sqrt2", Fraction(2))


def random_word(rng: np.random.Generator, g: int, length: int) -> GWord:
    letters = rng.integers(1, g + 1, size=length) * rng.choice([-1, 1], size=length)
    return tuple(int(x) for x in letters)


def parse_group_word(text: str, G: GroupOracle) -> GWord:
    x = parse_element(text, G)
    if len(x.terms) != 1 or next(iter(x.terms.values())) != 1:
        raise ParseError("expected a single group word")
    return next(iter(x.terms))
