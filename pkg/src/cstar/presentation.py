"""Presented C*-algebras and certified norm brackets.

A presentation lists generators, a bound for every generator and a (possibly
infinite) stream of relations ``‖p‖ <= d``.  The norm of a *-polynomial in
the universal algebra is bracketed from both sides:

* from below, by searching for matrix representations that satisfy the
  relations and evaluating the polynomial there;
* from above, by a sound rewrite calculus: triangle inequality, exact
  substitution along equality relations, and division by norm relations.
"""

from __future__ import annotations

import itertools
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ._random import DEFAULT_SEED, stream
from .errors import MissingBound, MissingGenerator, ParseError
from .matrep import Matrix, Representation, op_norm
from .scalars import Dyadic, GaussianRational, as_fraction, parse_dyadic
from .starpoly import (
    Relation,
    StarPolynomial,
    Word,
    evaluate,
    format_poly,
    format_word,
    parse_poly,
    word_key,
)

FEASIBILITY_SLACK = Fraction(1, 2**20)


class Names:
    """Generator names: a fixed list, optionally followed by ``prefix<k>``."""

    def __init__(self, fixed: Sequence[str] = (), prefix: Optional[str] = None, first: int = 1,
                 count: Optional[int] = None):
        self.fixed = list(fixed)
        self.prefix = prefix
        self.first = first
        self.count = count

    def __getitem__(self, i: int) -> str:
        if i < len(self.fixed):
            return self.fixed[i]
        if self.prefix is None or (self.count is not None and i >= self.count):
            raise IndexError(i)
        return f"{self.prefix}{i - len(self.fixed) + self.first}"

    def index(self, name: str) -> int:
        if name in self.fixed:
            return self.fixed.index(name)
        if self.prefix is not None:
            m = re.fullmatch(re.escape(self.prefix) + r"(\d+)", name)
            if m:
                i = int(m.group(1)) - self.first + len(self.fixed)
                if i >= len(self.fixed) and (self.count is None or i < self.count):
                    return i
        raise ValueError(name)

    def __contains__(self, name) -> bool:
        try:
            self.index(name)
            return True
        except ValueError:
            return False


class Presentation:
    """Generators, per-generator bounds and a relation stream.

    ``n_generators`` is None for countably many generators.  ``relation_source``
    is a zero-argument callable returning a fresh iterator over all relations
    (generator bounds included).
    """

    def __init__(
        self,
        field: str,
        n_generators: Optional[int],
        names: Names,
        bound: Callable[[int], Optional[Dyadic]],
        relation_source: Callable[[], Iterator[Relation]],
        unit: Optional[int] = None,
        title: str = "",
    ):
        if field not in ("R", "C"):
            raise ValueError("field must be R or C")
        self.field = field
        self.n_generators = n_generators
        self.names = names
        self._bound = bound
        self._source = relation_source
        self.unit = unit
        self.title = title

    @property
    def coeff_ring(self) -> str:
        return "Q(i)" if self.field == "C" else "Q"

    def bound(self, i: int) -> Dyadic:
        if self.n_generators is not None and not 0 <= i < self.n_generators:
            raise MissingGenerator(f"no generator with index {i}")
        b = self._bound(i)
        if b is None:
            raise MissingBound(f"generator {self.names[i]} has no bound")
        return b

    def relations(self) -> Iterator[Relation]:
        return self._source()

    def relation_list(self, budget: int) -> List[Relation]:
        return list(itertools.islice(self.relations(), budget))

    def parse(self, text: str) -> StarPolynomial:
        return parse_poly(text, self.names, self.coeff_ring, self.unit)

    def format(self, p: StarPolynomial) -> str:
        return format_poly(p, self.names)

    def __repr__(self):
        n = "omega" if self.n_generators is None else self.n_generators
        return f"Presentation({self.title or 'custom'}, field={self.field}, generators={n})"


def _gen(i, starred=False, ring="Q"):
    return StarPolynomial.gen(i, starred, ring)


def iden_relations(e: int, xs: Iterable[int], ring: str) -> Iterator[Relation]:
    """e e = e, e* = e, and e x = x e = x for every x."""
    E = _gen(e, ring=ring)
    zero = Dyadic(0)
    yield Relation(E * E - E, zero)
    yield Relation(E.star() - E, zero)
    for x in xs:
        X = _gen(x, ring=ring)
        yield Relation(E * X - X, zero)
        yield Relation(X * E - X, zero)


# -- builders ----------------------------------------------------------------


def build_contraction(n: Optional[int], field: str = "C") -> Presentation:
    """Generators c1..cn (n=None: infinitely many) subject only to ‖c_j‖ <= 1."""
    ring = "Q(i)" if field == "C" else "Q"
    one = Dyadic(1)

    def source():
        js = range(n) if n is not None else itertools.count()
        for j in js:
            yield Relation(_gen(j, ring=ring), one)

    def bound(i):
        return one

    title = f"contraction({'omega' if n is None else n})"
    return Presentation(field, n, Names((), "c", 1, n), bound, source, None, title)


def build_cuntz(n: Optional[int], field: str = "C") -> Presentation:
    """Generators 1, s1..sn with the unit relations and s_i* s_j = δ_ij 1.

    The unit has index 0 and s_i has index i.  For finite n the relation
    s1 s1* + ... + sn sn* = 1 is added; n=None gives the infinite version.
    """
    if n is not None and n < 2:
        raise ValueError("Cuntz presentations need n >= 2")
    ring = "Q(i)" if field == "C" else "Q"
    one = Dyadic(1)
    zero = Dyadic(0)
    count = None if n is None else n + 1

    def rel(i, j):
        r = _gen(i, True, ring) * _gen(j, ring=ring)
        if i == j:
            r = r - _gen(0, ring=ring)
        return Relation(r, zero)

    def source():
        yield Relation(_gen(0, ring=ring), one)
        if n is not None:
            for i in range(1, n + 1):
                yield Relation(_gen(i, ring=ring), one)
            yield from iden_relations(0, range(1, n + 1), ring)
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    yield rel(i, j)
            total = StarPolynomial.zero(ring)
            for i in range(1, n + 1):
                total = total + _gen(i, ring=ring) * _gen(i, True, ring)
            yield Relation(total - _gen(0, ring=ring), zero)
            return
        yield from iden_relations(0, (), ring)
        # interleave so that every relation appears after finitely many steps
        for m in itertools.count(1):
            yield Relation(_gen(m, ring=ring), one)
            E, S = _gen(0, ring=ring), _gen(m, ring=ring)
            yield Relation(E * S - S, zero)
            yield Relation(S * E - S, zero)
            for i in range(1, m + 1):
                yield rel(i, m)
                if i != m:
                    yield rel(m, i)

    def bound(i):
        return one

    title = f"cuntz({'inf' if n is None else n})"
    return Presentation(field, count, Names(["1"], "s", 1, count), bound, source, 0, title)


def build_rotation(theta_oracle: Callable[[int], Tuple[object, object]]) -> Presentation:
    """Generators 1, u, v (indices 0, 1, 2): unitaries with ‖uv - (a_k + i b_k) vu‖ <= 2^(1-k)."""
    ring = "Q(i)"
    one = Dyadic(1)
    zero = Dyadic(0)
    E, U, V = (_gen(i, ring=ring) for i in range(3))

    def source():
        for i in range(3):
            yield Relation(_gen(i, ring=ring), one)
        yield from iden_relations(0, (1, 2), ring)
        for X in (U, V):
            yield Relation(X.star() * X - E, zero)
            yield Relation(X * X.star() - E, zero)
        for k in itertools.count(1):
            a, b = theta_oracle(k)
            lam = GaussianRational(as_fraction(a), as_fraction(b))
            yield Relation(U * V - (V * U).scale(lam), Dyadic(1, 1 - k))

    return Presentation("C", 3, Names(["1", "u", "v"]), lambda i: one, source, 0, "rotation")


def with_relations(P: Presentation, extra: Sequence[Relation], title: str = "") -> Presentation:
    """The quotient of P by finitely many extra relations (listed first)."""
    extra = list(extra)

    def source():
        yield from extra
        yield from P.relations()

    def bound(i):
        b = P._bound(i)
        for r in extra:
            if r.poly.terms == StarPolynomial.gen(i, ring=r.poly.ring).terms and (b is None or r.bound < b):
                b = r.bound
        return b

    return Presentation(P.field, P.n_generators, P.names, bound, source, P.unit, title or P.title + "+")


# -- presentation files --------------------------------------------------------


def parse_presentation(text: str) -> Presentation:
    """Parse the line-oriented presentation format.

    ::

        field: C
        generators: 2            (or: omega)
        names: a b               (optional)
        unit: e                  (optional; adds the unit relations)
        bound 1: 1               (index or name; 'bound *:' sets a default)
        relation: norm(a b - b a) <= 1/2^3
        relation: a' a = e
    """
    field_ = None
    count: Optional[int] = -1
    names_list: Optional[List[str]] = None
    unit_name = None
    bounds: Dict[str, Dyadic] = {}
    default_bound = None
    rel_lines: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError(f"line {lineno}: expected 'key: value'")
        key, val = (s.strip() for s in line.split(":", 1))
        if key == "field":
            if val not in ("R", "C"):
                raise ParseError(f"line {lineno}: field must be R or C")
            field_ = val
        elif key == "generators":
            if val in ("omega", "ω"):
                count = None
            else:
                try:
                    count = int(val)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad generator count {val!r}") from None
        elif key == "names":
            names_list = val.split()
        elif key == "unit":
            unit_name = val
        elif key.startswith("bound"):
            target = key[5:].strip()
            if target == "*":
                default_bound = parse_dyadic(val)
            else:
                bounds[target] = parse_dyadic(val)
        elif key == "relation":
            rel_lines.append(val)
        else:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
    if field_ is None:
        raise ParseError("missing 'field:' line")
    if count == -1:
        raise ParseError("missing 'generators:' line")
    if names_list is not None:
        if count is None or len(names_list) != count:
            raise ParseError("names must list every generator of a finite presentation")
        names = Names(names_list)
    else:
        names = Names((), "x", 1, count)
    ring = "Q(i)" if field_ == "C" else "Q"
    unit = None
    if unit_name is not None:
        try:
            unit = names.index(unit_name)
        except ValueError:
            raise ParseError(f"unknown unit generator {unit_name!r}") from None

    def resolve(t):
        if t.isdigit():
            i = int(t) - 1
            if count is not None and not 0 <= i < count:
                raise ParseError(f"bound for missing generator {t}")
            return i
        try:
            return names.index(t)
        except ValueError:
            raise ParseError(f"bound for unknown generator {t!r}") from None

    bound_map = {resolve(t): b for t, b in bounds.items()}
    if count is not None:
        missing = [names[i] for i in range(count) if i not in bound_map and default_bound is None]
        if missing:
            raise ParseError(f"generators without a bound: {', '.join(missing)}")
    elif default_bound is None:
        raise ParseError("an omega presentation needs 'bound *:'")

    relations: List[Relation] = []
    for val in rel_lines:
        m = re.fullmatch(r"norm\((.*)\)\s*<=\s*(\S+)", val)
        if m:
            poly = parse_poly(m.group(1), names, ring, unit)
            relations.append(Relation(poly, parse_dyadic(m.group(2))))
            continue
        if "=" in val:
            lhs, rhs = val.split("=", 1)
            poly = parse_poly(lhs, names, ring, unit) - parse_poly(rhs, names, ring, unit)
            relations.append(Relation(poly, Dyadic(0)))
            continue
        raise ParseError(f"cannot parse relation {val!r}")

    def bound(i):
        return bound_map.get(i, default_bound)

    def source():
        idx = range(count) if count is not None else itertools.count()
        if count is None:
            # bounds of the finitely many named generators, then the rest lazily
            for r in relations:
                yield r
            for i in idx:
                yield Relation(_gen(i, ring=ring), bound(i))
            return
        for i in idx:
            yield Relation(_gen(i, ring=ring), bound(i))
        if unit is not None:
            yield from iden_relations(unit, [i for i in range(count) if i != unit], ring)
        yield from relations

    return Presentation(field_, count, names, bound, source, unit, "file")


def builtin_presentation(spec: str, field: str = "C") -> Presentation:
    """``contraction(n)``, ``contraction(omega)``, ``cuntz(n)`` or ``cuntz(inf)``."""
    m = re.fullmatch(r"\s*(contraction|cuntz)\(\s*(\w+)\s*\)\s*", spec)
    if not m:
        raise ParseError(f"unknown builtin presentation {spec!r}")
    kind, arg = m.groups()
    if arg in ("omega", "inf", "infinity"):
        n = None
    else:
        try:
            n = int(arg)
        except ValueError:
            raise ParseError(f"bad parameter {arg!r}") from None
    if kind == "contraction":
        return build_contraction(n, field)
    if n is not None and n < 2:
        raise ParseError("cuntz(n) needs n >= 2")
    return build_cuntz(n, field)


# -- checking representations --------------------------------------------------


@dataclass
class RelationVerdict:
    relation: Relation
    norm_lo: float
    norm_hi: float
    status: str  # satisfied | within_slack | violated
    amount: float  # margin when satisfied, excess otherwise


@dataclass
class CheckReport:
    verdicts: List[RelationVerdict]
    ok: bool


def _relation_norm(r: Relation, rep: Representation, n: int, ring: str):
    m = evaluate(r.poly, rep, n, ring)
    if m.exact:
        iv = op_norm(m, tol=2.0**-30)
    else:
        iv = op_norm(m, tol=max(2.0**-30, 4 * m.err))
    return iv


def check_representation(
    P: Presentation, rep: Representation, slack=FEASIBILITY_SLACK, relation_budget: int = 256
) -> CheckReport:
    slack_f = float(as_fraction(slack))
    rels = P.relation_list(relation_budget)
    n, ring = rep.n, rep.ring
    verdicts = []
    ok = True
    for r in rels:
        for i in r.poly.generators():
            if i not in rep:
                raise MissingGenerator(f"no matrix for generator {P.names[i]}")
        iv = _relation_norm(r, rep, n, ring)
        b = float(r.bound)
        # a bound lying inside the norm enclosure counts as met: exact
        # relations like ‖c‖ <= 1 for a partial isometry are attained
        if iv.hi <= b or iv.lo <= b <= iv.hi:
            v = RelationVerdict(r, iv.lo, iv.hi, "satisfied", max(b - iv.hi, 0.0))
        elif iv.hi <= b + slack_f:
            v = RelationVerdict(r, iv.lo, iv.hi, "within_slack", iv.hi - b)
        else:
            v = RelationVerdict(r, iv.lo, iv.hi, "violated", iv.lo - b if iv.lo > b else iv.hi - b)
            ok = False
        verdicts.append(v)
    return CheckReport(verdicts, ok)


# -- lower bounds by search ------------------------------------------------------


class _Compiled:
    """Fast numeric evaluation and gradients of a polynomial."""

    def __init__(self, p: StarPolynomial, pos: Dict[int, int]):
        self.terms = []
        for w, c in p.terms.items():
            cz = complex(float(c.re), float(c.im)) if isinstance(c, GaussianRational) else float(c)
            self.terms.append((cz, [(pos[i], s) for i, s in w]))

    def value(self, X, Xh):
        out = None
        for c, letters in self.terms:
            m = None
            for g, s in letters:
                f = Xh[g] if s else X[g]
                m = f if m is None else m @ f
            out = c * m if out is None else out + c * m
        return out

    def grad(self, X, Xh, Y, G):
        """Accumulate into G the gradient of Re tr(Y* q(X))."""
        Yh = Y.conj().T
        n = Y.shape[0]
        ident = np.eye(n)
        for c, letters in self.terms:
            k = len(letters)
            mats = [Xh[g] if s else X[g] for g, s in letters]
            pre = [ident]
            for m in mats[:-1]:
                pre.append(pre[-1] @ m)
            suf = [ident] * k
            for t in range(k - 2, -1, -1):
                suf[t] = mats[t + 1] @ suf[t + 1]
            for t, (g, s) in enumerate(letters):
                A, B = pre[t], suf[t]
                if s:
                    G[g] += c * (B @ Yh @ A)
                else:
                    G[g] += np.conj(c) * (A.conj().T @ Y @ B.conj().T)


def generator_closure(p: StarPolynomial, relations: Sequence[Relation]) -> List[int]:
    gens = set(p.generators())
    changed = True
    while changed:
        changed = False
        for r in relations:
            rg = set(r.poly.generators())
            if rg & gens and not rg <= gens:
                gens |= rg
                changed = True
    return sorted(gens)


@dataclass
class LowerResult:
    lo: Fraction
    witness: Optional[Representation]
    dim: int = 0
    diagnostic: str = ""


def _floor_dyadic(x: float, bits: int = 40) -> Fraction:
    if x <= 0:
        return Fraction(0)
    return Fraction(math.floor(x * 2**bits), 2**bits)


def _clip(X, bound, field):
    u, s, vh = np.linalg.svd(X)
    s = np.minimum(s, bound)
    out = (u * s) @ vh
    return out.real.copy() if field == "R" else out


def _search_task(P, p, gens, rels, n, restart, iters, seed, slack):
    field_ = P.field
    rng = stream(seed, n, restart)
    pos = {g: k for k, g in enumerate(gens)}
    bounds = [float(P.bound(g)) for g in gens]
    target = _Compiled(p, pos)
    eq_rels = []
    norm_rels = []
    for r in rels:
        w = list(r.poly.terms)
        if len(w) == 1 and len(w[0]) == 1:
            continue  # generator bounds are enforced by clipping
        (eq_rels if r.is_equality() else norm_rels).append((_Compiled(r.poly, pos), float(r.bound)))

    def draw(b):
        if field_ == "R":
            X = rng.standard_normal((n, n))
        else:
            X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        s = np.linalg.norm(X, 2)
        return X * (b * rng.uniform(0.5, 1.0) / s) if s > 0 else X

    X = [draw(b) for b in bounds]

    def adj(X):
        return [x.conj().T for x in X]

    def sigma1(X):
        Q = target.value(X, adj(X))
        return float(np.linalg.norm(Q, 2))

    def violation(X):
        Xh = adj(X)
        tot = 0.0
        for comp, _ in eq_rels:
            R = comp.value(X, Xh)
            tot += 0.5 * float(np.vdot(R, R).real)
        for comp, d in norm_rels:
            s = float(np.linalg.norm(comp.value(X, Xh), 2))
            if s > d:
                tot += 0.5 * (s - d) ** 2
        return tot

    def correct(X, steps):
        if not eq_rels and not norm_rels:
            return X
        for _ in range(steps):
            phi = violation(X)
            if phi < 1e-26:
                break
            Xh = adj(X)
            G = [np.zeros_like(x, dtype=complex) for x in X]
            for comp, _ in eq_rels:
                comp.grad(X, Xh, comp.value(X, Xh), G)
            for comp, d in norm_rels:
                Q = comp.value(X, Xh)
                u, s, vh = np.linalg.svd(Q)
                if s[0] > d:
                    comp.grad(X, Xh, (s[0] - d) * np.outer(u[:, 0], vh[0]), G)
            if field_ == "R":
                G = [g.real for g in G]
            gn = sum(float(np.vdot(g, g).real) for g in G)
            if gn == 0:
                break
            t = phi / gn
            for _ in range(30):
                Y = [_clip(x - t * g, b, field_) for x, g, b in zip(X, G, bounds)]
                if violation(Y) < phi:
                    X = Y
                    break
                t /= 2
            else:
                break
        return X

    X = [_clip(x, b, field_) for x, b in zip(X, bounds)]
    X = correct(X, 20)
    f = sigma1(X)
    step = 0.25 * max(bounds + [1e-300])
    for _ in range(iters):
        Xh = adj(X)
        Q = target.value(X, Xh)
        u, s, vh = np.linalg.svd(Q)
        G = [np.zeros_like(x, dtype=complex) for x in X]
        target.grad(X, Xh, np.outer(u[:, 0], vh[0]), G)
        if field_ == "R":
            G = [g.real for g in G]
        gn = math.sqrt(sum(float(np.vdot(g, g).real) for g in G))
        if gn == 0:
            break
        Y = [_clip(x + (step / gn) * g, b, field_) for x, g, b in zip(X, G, bounds)]
        Y = correct(Y, 3)
        fy = sigma1(Y)
        if fy >= f:
            X, f = Y, fy
            step = min(step * 1.5, 4 * max(bounds))
        else:
            step *= 0.5
            if step < 1e-14:
                break
    X = correct(X, 200)
    return _certify(P, p, gens, rels, X, n, slack)


def _certify(P, p, gens, rels, X, n, slack):
    ring = P.field
    mats = {}
    for g, x in zip(gens, X):
        b = float(P.bound(g))
        x = x * (1 - 2.0**-40) if b > 0 else np.zeros_like(x)
        m = Matrix(ring, x.real if ring == "R" else x)
        for _ in range(40):
            if op_norm(m, tol=1.0).hi <= b:
                break
            m = Matrix(ring, m.data * (1 - 2.0**-30))
        else:
            return None
        mats[g] = m
    rep = Representation(mats)
    report = check_representation(P, rep, slack, len(rels)) if rels else CheckReport([], True)
    if not report.ok:
        return None
    val = evaluate(p, rep, n, ring)
    iv = op_norm(val, tol=1.0)
    return max(iv.lo, 0.0), rep


@dataclass(frozen=True)
class Budget:
    dims: Tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    restarts: int = 4
    iters: int = 200
    rewrite_steps: int = 64
    relation_budget: int = 256
    seed: int = DEFAULT_SEED
    threads: int = 1


def norm_lower_search(
    P: Presentation,
    p: StarPolynomial,
    dims: Sequence[int] = Budget.dims,
    restarts: int = Budget.restarts,
    iters: int = Budget.iters,
    seed: int = DEFAULT_SEED,
    relation_budget: int = Budget.relation_budget,
    threads: int = 1,
    slack=FEASIBILITY_SLACK,
) -> LowerResult:
    """Best certified lower bound over seeded searches in the given dimensions.

    Relations beyond the first ``relation_budget`` of the stream are not
    checked, so for infinite relation streams the bound is relative to that
    prefix.
    """
    dims = list(dims)
    if not dims:
        raise ValueError("dims must be nonempty")
    if p.is_zero():
        return LowerResult(Fraction(0), None, 0, "zero polynomial")
    for g in p.generators():
        P.bound(g)
    rels_all = P.relation_list(relation_budget)
    gens = generator_closure(p, rels_all)
    gset = set(gens)
    rels = [r for r in rels_all if set(r.poly.generators()) <= gset and r.poly.generators()]
    tasks = [(n, r) for n in dims for r in range(restarts)]

    def run(task):
        n, r = task
        return _search_task(P, p, gens, rels, n, r, iters, seed, slack)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    best = None
    for (n, r), res in zip(tasks, results):
        if res is None:
            continue
        if best is None or res[0] > best[0][0]:
            best = (res, n)
    if best is None:
        return LowerResult(Fraction(0), None, 0, "no feasible point found")
    (val, rep), n = best
    return LowerResult(_floor_dyadic(val), rep, n, "")


# -- upper bounds by rewriting -----------------------------------------------------


class _WordBounds:
    def __init__(self, P: Presentation, rels: Sequence[Relation]):
        self.P = P
        self.known: Dict[Word, Fraction] = {}
        for r in rels:
            if len(r.poly.terms) == 1:
                (w, c), = r.poly.terms.items()
                a = abs(c.re) if isinstance(c, GaussianRational) and c.im == 0 else None
                if isinstance(c, GaussianRational) and a is None:
                    n2 = c.abs2()
                    # |c| >= floor-sqrt lower bound keeps the bound sound
                    num = n2.numerator * n2.denominator
                    a = Fraction(math.isqrt(num), n2.denominator)
                    if a == 0:
                        continue
                elif not isinstance(c, GaussianRational):
                    a = abs(c)
                b = r.bound.to_fraction() / a
                for ww in (w, tuple((i, not s) for i, s in reversed(w))):
                    if ww not in self.known or b < self.known[ww]:
                        self.known[ww] = b
        self.memo: Dict[Word, Fraction] = {}

    def __call__(self, w: Word) -> Fraction:
        if not w:
            return Fraction(1)
        if w in self.memo:
            return self.memo[w]
        best = self.known.get(w)
        if len(w) == 1:
            gb = self.P.bound(w[0][0]).to_fraction()
            best = gb if best is None else min(best, gb)
        for k in range(1, len(w)):
            v = self(w[:k]) * self(w[k:])
            if best is None or v < best:
                best = v
        self.memo[w] = best
        return best

    def l1(self, q: StarPolynomial) -> Fraction:
        from .starpoly import _abs_upper

        return sum((_abs_upper(c) * self(w) for w, c in q.terms.items()), Fraction(0))


def _find(word: Word, sub: Word) -> int:
    k = len(sub)
    for t in range(len(word) - k + 1):
        if word[t : t + k] == sub:
            return t
    return -1


def _rewrite_rules(rels: Sequence[Relation], ring: str):
    rules = {}
    for r in rels:
        if not r.is_equality() or r.poly.is_zero():
            continue
        for poly in (r.poly.to_ring(ring), r.poly.to_ring(ring).star()):
            L, c = poly.leading()
            if L in rules:
                continue
            rhs = (poly - StarPolynomial({L: c}, ring)).scale(-1 / _as_scalar(c, ring))
            rules[L] = rhs
    return sorted(rules.items(), key=lambda kv: word_key(kv[0]))


def _as_scalar(c, ring):
    return c if ring == "Q(i)" else as_fraction(c)


def _normal_form(q: StarPolynomial, rules, limit: int = 20000):
    steps = 0
    ring = q.ring
    while steps < limit:
        hit = None
        for w in sorted(q.terms, key=word_key, reverse=True):
            for L, rhs in rules:
                t = _find(w, L)
                if t >= 0:
                    hit = (w, t, L, rhs)
                    break
            if hit:
                break
        if hit is None:
            return q, steps
        w, t, L, rhs = hit
        c = q.terms[w]
        A = StarPolynomial({w[:t]: 1}, ring) if t else None
        B = StarPolynomial({w[t + len(L):]: 1}, ring) if t + len(L) < len(w) else None
        repl = rhs
        if A is not None:
            repl = A * repl
        if B is not None:
            repl = repl * B
        q = q - StarPolynomial({w: c}, ring) + repl.scale(c)
        steps += 1
    return q, steps


def norm_upper_stream(
    P: Presentation,
    p: StarPolynomial,
    rewrite_steps: int = Budget.rewrite_steps,
    relation_budget: int = Budget.relation_budget,
    trace: Optional[List[str]] = None,
) -> Iterator[Fraction]:
    """Nonincreasing upper bounds for the universal norm of p."""
    trace = trace if trace is not None else []
    if p.is_zero():
        trace.append("zero polynomial")
        yield Fraction(0)
        return
    ring = p.ring
    rels = P.relation_list(relation_budget)
    wb = _WordBounds(P, rels)
    best = wb.l1(p)
    trace.append(f"triangle inequality: {best}")
    yield best
    rules = _rewrite_rules(rels, ring)
    q, nsteps = _normal_form(p, rules)
    cost = Fraction(0)
    if nsteps:
        v = wb.l1(q)
        trace.append(f"{nsteps} equality substitutions give {P.format(q)}: {v}")
        if v < best:
            best = v
            yield best
    if q.is_zero():
        return
    divisors = []
    for r in rels:
        if r.is_equality() or len(r.poly.terms) < 2:
            continue
        L, c = r.poly.to_ring(ring).leading()
        divisors.append((L, _as_scalar(c, ring), r))
    from .starpoly import _abs_upper

    for _ in range(rewrite_steps):
        cand = None
        for w, c in q.terms.items():
            for L, cl, r in divisors:
                t = _find(w, L)
                if t < 0:
                    continue
                f = c / cl if ring == "Q(i)" else as_fraction(c) / cl
                A, B = w[:t], w[t + len(L):]
                rp = r.poly.to_ring(ring)
                piece = rp
                if A:
                    piece = StarPolynomial({A: 1}, ring) * piece
                if B:
                    piece = piece * StarPolynomial({B: 1}, ring)
                nq, _ = _normal_form(q - piece.scale(f), rules)
                ncost = cost + _abs_upper(f) * wb(A) * r.bound.to_fraction() * wb(B)
                val = wb.l1(nq) + ncost
                if cand is None or val < cand[0]:
                    cand = (val, nq, ncost, r, A, B)
        if cand is None or cand[0] >= best:
            break
        best, q, cost, r, A, B = cand
        trace.append(
            f"divide by ‖{P.format(r.poly)}‖ <= {r.bound} at [{format_word(A, P.names)}|{format_word(B, P.names)}]: {best}"
        )
        yield best


@dataclass
class NormBracket:
    lo: Fraction
    hi: Fraction
    witness: Optional[Representation] = None
    witness_dim: int = 0
    derivation: List[str] = field(default_factory=list)
    diagnostic: str = ""


def norm_bracket(P: Presentation, p: StarPolynomial, budget: Budget = Budget()) -> NormBracket:
    trace: List[str] = []
    hi = None
    for v in norm_upper_stream(P, p, budget.rewrite_steps, budget.relation_budget, trace):
        hi = v
    low = norm_lower_search(
        P, p, budget.dims, budget.restarts, budget.iters, budget.seed, budget.relation_budget, budget.threads
    )
    lo = low.lo
    diag = low.diagnostic
    if lo > hi:
        # only possible through float rounding at the last bit of lo
        diag = (diag + "; " if diag else "") + f"lower bound {float(lo)} clipped to upper bound"
        lo = hi
    return NormBracket(lo, hi, low.witness, low.dim, trace, diag)


# -- word problem ball queries -------------------------------------------------------


def ball_verdict(bracket: NormBracket, radius, mode: str) -> str:
    """yes/no/unknown for an open ball meeting (or a closed ball missing) the kernel."""
    r = as_fraction(radius)
    if r <= 0:
        raise ValueError("radius must be positive")
    if mode == "open":
        if bracket.hi < r:
            return "yes"
        return "no" if bracket.lo >= r else "unknown"
    if mode == "closed":
        if bracket.lo > r:
            return "yes"
        return "no" if bracket.hi <= r else "unknown"
    raise ValueError(f"unknown mode {mode!r}")


def ball_intersects_kernel(P: Presentation, center: StarPolynomial, radius, budget: Budget = Budget()) -> str:
    """Does the open ball of the given radius around center meet the kernel?"""
    if as_fraction(radius) <= 0:
        raise ValueError("radius must be positive")
    return ball_verdict(norm_bracket(P, center, budget), radius, "open")


def closed_ball_misses_kernel(P: Presentation, center: StarPolynomial, radius, budget: Budget = Budget()) -> str:
    """Is the closed ball of the given radius around center disjoint from the kernel?"""
    if as_fraction(radius) <= 0:
        raise ValueError("radius must be positive")
    return ball_verdict(norm_bracket(P, center, budget), radius, "closed")
