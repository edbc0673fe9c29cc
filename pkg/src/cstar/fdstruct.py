"""Structure of finite-dimensional C*-subalgebras of M_n(D).

An algebra is held as a K-orthonormal basis of working arrays (complex
matrices; quaternionic entries go through the 2x2 complex embedding).  From
there we find the unit, the center, minimal projections, a decomposition into
full matrix algebras over R, C or H with explicit matrix units, and a
*-isomorphism onto the standard direct sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ._random import DEFAULT_SEED, stream
from .errors import (
    DegenerateChain,
    NoUnit,
    NotClosedUnderMultiplication,
    NotSelfAdjoint,
    RingMismatch,
    RingNotReal,
    SizeMismatch,
    ToleranceFailure,
)
from .matrep import (
    EPS,
    Interval,
    Matrix,
    MatrixUnitSystem,
    default_field,
    embed_array,
    real_form,
    self_adjoint_spectrum,
    unit_basis,
    unit_conj,
    unit_product,
)

TOL = 2.0**-30
MAX_RETRIES = 32
_D_ORDER = {"R": 0, "C": 1, "H": 2}
_D_DIM = {("R", "R"): 1, ("C", "R"): 2, ("H", "R"): 4, ("C", "C"): 1}


def _indep(tol: float) -> float:
    # threshold for a genuinely new direction; well above rounding, well below O(1)
    return float(np.sqrt(tol))


def _vec(W: np.ndarray, K: str) -> np.ndarray:
    if K == "C":
        return W.reshape(-1)
    return np.concatenate([W.real.reshape(-1), W.imag.reshape(-1)])


def _unvec(v: np.ndarray, K: str, N: int) -> np.ndarray:
    if K == "C":
        return v.reshape(N, N)
    h = v.size // 2
    return (v[:h] + 1j * v[h:]).reshape(N, N)


def _opn(W: np.ndarray) -> float:
    return float(np.linalg.norm(W, 2)) if W.size else 0.0


def _herm(W: np.ndarray) -> np.ndarray:
    return (W + W.conj().T) / 2


class _Span:
    """Incremental K-orthonormal basis of working arrays."""

    def __init__(self, K: str, N: int, tol: float):
        self.K, self.N, self.tol = K, N, tol
        self.vecs: List[np.ndarray] = []

    def __len__(self):
        return len(self.vecs)

    def residual(self, W: np.ndarray) -> np.ndarray:
        x = _vec(W, self.K).copy()
        if self.vecs:
            B = np.array(self.vecs)
            for _ in range(2):
                x = x - B.T @ (B.conj() @ x)
        return x

    def add(self, W: np.ndarray) -> bool:
        x = self.residual(W)
        nx = np.linalg.norm(x)
        if nx <= _indep(self.tol) * max(1.0, np.linalg.norm(W)):
            return False
        self.vecs.append(x / nx)
        return True

    def arrays(self) -> List[np.ndarray]:
        return [_unvec(v, self.K, self.N) for v in self.vecs]


# -- algebras ---------------------------------------------------------------


@dataclass
class SpannedAlgebra:
    """A *-subalgebra of M_n(D) given by a K-orthonormal basis."""

    n: int
    ring: str
    field: str
    basis: List[Matrix]
    unit: Optional[Matrix] = None
    tol: float = TOL
    closure_residual: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def N(self) -> int:
        return 2 * self.n if self.ring == "H" else self.n

    def working_basis(self) -> List[np.ndarray]:
        return [b.working() for b in self.basis]

    def to_matrix(self, W: np.ndarray) -> Matrix:
        return Matrix.from_working(self.ring, W)

    def coordinates(self, x) -> np.ndarray:
        W = x if isinstance(x, np.ndarray) else x.working()
        v = _vec(W, self.field)
        return np.array([np.vdot(_vec(b, self.field), v) for b in self.working_basis()])

    def distance(self, x) -> float:
        """Frobenius distance from x to the span (in working coordinates)."""
        W = x if isinstance(x, np.ndarray) else x.working()
        sp = _Span(self.field, self.N, self.tol)
        sp.vecs = [_vec(b, self.field) for b in self.working_basis()]
        return float(np.linalg.norm(sp.residual(W)))

    def from_working_basis(self, Ws: Sequence[np.ndarray], unit=None) -> "SpannedAlgebra":
        """Subalgebra (e.g. a corner or summand) spanned by the given arrays."""
        sp = _Span(self.field, self.N, self.tol)
        for W in Ws:
            sp.add(W)
        basis = [self.to_matrix(W) for W in sp.arrays()]
        u = self.to_matrix(unit) if isinstance(unit, np.ndarray) else unit
        return SpannedAlgebra(self.n, self.ring, self.field, basis, u, self.tol)


def _closure_residual(Ws: List[np.ndarray], K: str, N: int, tol: float) -> float:
    sp = _Span(K, N, tol)
    sp.vecs = [_vec(W, K) for W in Ws]
    worst = 0.0
    for a in Ws:
        worst = max(worst, float(np.linalg.norm(sp.residual(a.conj().T))))
        for b in Ws:
            worst = max(worst, float(np.linalg.norm(sp.residual(a @ b))))
    return worst


def span_closure(
    generators: Sequence[Matrix],
    tol: float = TOL,
    field: Optional[str] = None,
    n: Optional[int] = None,
    ring: Optional[str] = None,
) -> SpannedAlgebra:
    """The *-algebra generated by the matrices, over K = ``field``."""
    generators = list(generators)
    if generators:
        ring = generators[0].ring
        n = generators[0].n
        for g in generators:
            if g.ring != ring:
                raise RingMismatch("generators over different rings")
            if g.shape != (n, n):
                raise SizeMismatch("generators must be square of one size")
    ring = ring or "C"
    n = n or 0
    K = field or default_field(ring)
    if K == "C" and ring != "C":
        raise RingMismatch(f"M_n({ring}) is not a C-algebra")
    N = 2 * n if ring == "H" else n
    sp = _Span(K, N, tol)
    cap = (N * N * (2 if K == "R" else 1)) if N else 0
    for g in generators:
        W = g.working()
        sp.add(W)
        sp.add(W.conj().T)
    done = 0
    while done < len(sp) and len(sp) < cap:
        # multiply the newest element against everything found so far
        B = sp.arrays()
        a = B[done]
        for b in B[: done + 1]:
            for P in (a @ b, b @ a):
                if sp.add(P):
                    sp.add(P.conj().T)
        done += 1
    Ws = sp.arrays()
    basis = [Matrix.from_working(ring, W) for W in Ws]
    A = SpannedAlgebra(n, ring, K, basis, None, tol)
    A.closure_residual = _closure_residual(Ws, K, N, tol)
    return A


def _solve_K(cols: List[np.ndarray], rhs: np.ndarray, K: str) -> Tuple[np.ndarray, float]:
    M = np.array(cols).T
    if K == "R":
        M = np.vstack([M.real, M.imag])
        rhs = np.concatenate([rhs.real, rhs.imag])
    t, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return t, float(np.linalg.norm(M @ t - rhs))


def _purify(P: np.ndarray, rounds: int = 4) -> np.ndarray:
    for _ in range(rounds):
        P = _herm(P)
        P2 = P @ P
        P = 3 * P2 - 2 * P2 @ P
    return _herm(P)


def find_unit(A: SpannedAlgebra) -> Matrix:
    """The two-sided identity of A, found by solving u b = b u = b in the span."""
    if A.unit is not None:
        return A.unit
    Ws = A.working_basis()
    if not Ws:
        raise NoUnit("the zero algebra has no nonzero unit")
    rhs = np.concatenate([np.concatenate([b.reshape(-1), b.reshape(-1)]) for b in Ws])
    cols = [np.concatenate([np.concatenate([(bk @ b).reshape(-1), (b @ bk).reshape(-1)]) for b in Ws]) for bk in Ws]
    t, res = _solve_K(cols, rhs, A.field)
    if res > _indep(A.tol) * max(1.0, np.linalg.norm(rhs)):
        raise NoUnit(f"no two-sided identity in the span (residual {res:.3g})")
    U = sum(c * W for c, W in zip(t, Ws))
    U = _purify(U)
    A.unit = A.to_matrix(U)
    return A.unit


def center(A: SpannedAlgebra) -> List[Matrix]:
    """K-basis of the center of A."""
    Ws = A.working_basis()
    if not Ws:
        return []
    cols = [np.concatenate([(bk @ b - b @ bk).reshape(-1) for b in Ws]) for bk in Ws]
    M = np.array(cols).T
    if A.field == "R":
        M = np.vstack([M.real, M.imag])
    ns = scipy.linalg.null_space(M, rcond=_indep(A.tol))
    out = []
    for t in ns.T:
        out.append(A.to_matrix(sum(c * W for c, W in zip(t, Ws))))
    return out


def self_adjoint_part(A: SpannedAlgebra, Ws: Optional[List[np.ndarray]] = None) -> List[np.ndarray]:
    """Real-orthonormal basis of the self-adjoint elements (working arrays)."""
    Ws = A.working_basis() if Ws is None else Ws
    sp = _Span("R", A.N, A.tol)
    for b in Ws:
        sp.add(_herm(b))
        if A.field == "C":
            sp.add(_herm(1j * b))
    return sp.arrays()


# -- spectra ----------------------------------------------------------------


def _range_basis(E: Optional[np.ndarray], N: int) -> np.ndarray:
    if E is None:
        return np.eye(N, dtype=complex)
    w, v = np.linalg.eigh(_herm(E))
    return v[:, w > 0.5]


def _smin(X: np.ndarray) -> Tuple[float, np.ndarray]:
    _, s, vh = np.linalg.svd(X)
    return float(s[-1]), vh[-1].conj()


def _refine(X: np.ndarray, z: float, steps: int = 3) -> Tuple[float, float]:
    """Rayleigh refinement of an approximate eigenvalue; returns (value, residual)."""
    I = np.eye(X.shape[0])
    for _ in range(steps):
        _, v = _smin(X - z * I)
        z = float(np.real(np.vdot(v, X @ v)))
    r, _ = _smin(X - z * I)
    return z, r


def _spectrum_induction(X: np.ndarray, tol: float, depth: int = 0) -> List[Tuple[float, float]]:
    """Spectrum of a Hermitian X by recursion on p(z) = z(z - u), |u| = ‖X‖."""
    m = X.shape[0]
    if m == 0:
        return []
    s = _opn(X)
    slack = 4 * (m + 2) * EPS
    if s <= tol or depth > 2 * m + 2:
        return [(0.0, s)]
    Y = X / s
    I = np.eye(m)
    loose = _indep(tol)
    # only |u| = ‖x‖ is known; test which sign lies in the spectrum
    u = None
    for cand in (1.0, -1.0):
        if _smin(Y - cand * I)[0] <= loose:
            u = cand
            break
    if u is None:
        u = 1.0 if np.linalg.eigvalsh(Y)[-1] > 0 else -1.0
    inner = _spectrum_induction(Y @ Y - u * Y, tol, depth + 1)
    found: List[Tuple[float, float]] = []
    for w, _ in inner:
        disc = max(u * u + 4 * w, 0.0)
        for z0 in ((u + np.sqrt(disc)) / 2, (u - np.sqrt(disc)) / 2):
            if _smin(Y - z0 * I)[0] > loose:
                continue
            z, r = _refine(Y, z0)
            if all(abs(z - f) > max(10 * tol, 2 * (r + rf)) for f, rf in found):
                found.append((z, r))
    found.sort()
    return [(z * s, (r + slack) * s) for z, r in found]


def finite_spectrum(
    A: Optional[SpannedAlgebra], x: Matrix, tol: float = TOL, method: str = "induction"
) -> List[Interval]:
    """Intervals covering σ_A(x) for self-adjoint x (computed on the range of A's unit)."""
    W = x.working()
    if _opn(W - W.conj().T) > 10 * tol * max(1.0, _opn(W)):
        raise NotSelfAdjoint("x is not self-adjoint within tolerance")
    E = None
    if A is not None and A.dim:
        E = find_unit(A).working()
    Q = _range_basis(E, W.shape[0])
    X = _herm(Q.conj().T @ W @ Q)
    if method == "induction":
        return [Interval(z - r, z + r) for z, r in _spectrum_induction(X, tol)]
    if method == "eig":
        if X.shape[0] == 0:
            return []
        return [Interval(iv.lo, iv.hi) for iv in self_adjoint_spectrum(Matrix("C", X), tol)]
    raise ValueError(f"unknown method {method!r}")


def _spectral_projections(
    X: np.ndarray, E: np.ndarray, tol: float
) -> Optional[List[np.ndarray]]:
    """Spectral projections of X (an element with unit E) by Lagrange interpolation."""
    Q = _range_basis(E, X.shape[0])
    Xc = _herm(Q.conj().T @ X @ Q)
    eig = [iv for iv in _spectrum_induction(Xc, tol)]
    vals = [z for z, _ in eig]
    if len(vals) < 2:
        return [E]
    scale = max(1.0, max(abs(v) for v in vals))
    gaps = min(abs(a - b) for i, a in enumerate(vals) for b in vals[i + 1 :])
    if gaps < 1e-4 * scale:
        return None  # too close to a coincidence for stable interpolation
    out = []
    for lam in vals:
        P = E.copy()
        for mu in vals:
            if mu != lam:
                P = P @ (X - mu * E) / (lam - mu)
        P = _purify(P)
        if _opn(P @ P - P) > tol or _opn(P) < 0.5:
            return None
        out.append(P)
    return out


# -- minimal projections ----------------------------------------------------


def _random_sa(rng, sa: List[np.ndarray]) -> np.ndarray:
    coeffs = rng.integers(-64, 65, size=len(sa)) / 16
    return sum(c * S for c, S in zip(coeffs, sa))


def _corner(A: SpannedAlgebra, P: np.ndarray, Ws: List[np.ndarray]) -> List[np.ndarray]:
    sp = _Span(A.field, A.N, A.tol)
    for b in Ws:
        sp.add(P @ b @ P)
    return sp.arrays()


def _minproj(A: SpannedAlgebra, Ws: List[np.ndarray], E: np.ndarray, rng, depth=0) -> List[np.ndarray]:
    sa = self_adjoint_part(A, Ws)
    target = len(sa)
    if target <= 1:
        return [E]  # the unit is itself minimal
    found: List[np.ndarray] = []
    span = _Span("R", A.N, A.tol)
    stalls = 0
    while len(span) < target:
        X = _random_sa(rng, sa)
        projs = _spectral_projections(X, E, A.tol)
        grew = False
        if projs is not None and len(projs) > 1:
            for P in projs:
                sub = _minproj(A, _corner(A, P, Ws), P, rng, depth + 1)
                for q in sub:
                    if span.add(q):
                        found.append(q)
                        grew = True
        if not grew:
            stalls += 1
            if stalls > MAX_RETRIES:
                raise ToleranceFailure("random self-adjoint elements stopped producing new minimal projections")
        else:
            stalls = 0
    return found


def minimal_projections(A: SpannedAlgebra, tol: Optional[float] = None, seed: int = DEFAULT_SEED) -> List[Matrix]:
    """Minimal projections of A whose real span is the self-adjoint part of A."""
    if tol is not None:
        A.tol = tol
    E = find_unit(A).working()
    rng = stream(seed, 1)
    return [A.to_matrix(P) for P in _minproj(A, A.working_basis(), E, rng)]


def corner_dimension(A: SpannedAlgebra, p: Matrix) -> int:
    """K-dimension of pAp."""
    P = p.working()
    return len(_corner(A, P, A.working_basis()))


# -- decomposition ----------------------------------------------------------


@dataclass
class Summand:
    n: int
    D: str
    central_projection: Matrix
    units: MatrixUnitSystem
    chain: List[Matrix]
    dim: int


@dataclass
class Decomposition:
    ring: str
    field: str
    summands: List[Summand]
    dim: int
    unit: Optional[Matrix] = None
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def types(self) -> List[Tuple[int, str]]:
        return [(s.n, s.D) for s in self.summands]

    def audit(self) -> bool:
        return sum(s.n * s.n * _D_DIM[(s.D, self.field)] for s in self.summands) == self.dim


def _central_projections(A: SpannedAlgebra, E: np.ndarray, rng) -> List[np.ndarray]:
    Zs = [z.working() for z in center(A)]
    sa = self_adjoint_part(A, Zs)
    if len(sa) <= 1:
        return [E]
    for _ in range(MAX_RETRIES):
        projs = _spectral_projections(_random_sa(rng, sa), E, A.tol)
        if projs is not None and len(projs) == len(sa):
            return projs
    raise ToleranceFailure("could not separate the center with generic elements")


def _base_units(A: SpannedAlgebra, P: np.ndarray, corner: List[np.ndarray]) -> Tuple[str, Dict[str, np.ndarray]]:
    """The division ring pAp and its standard basis units."""
    d = len(corner)
    K = A.field
    if K == "C":
        if d != 1:
            raise DegenerateChain(f"corner of a minimal projection has C-dimension {d}")
        return "C", {"1": P}
    if d == 1:
        return "R", {"1": P}
    sp = _Span("R", A.N, A.tol)
    for b in corner:
        sp.add((b - b.conj().T) / 2)
    skew = sp.arrays()
    if d == 2 and len(skew) == 1:
        s = skew[0] / _opn(skew[0])
        # ±i normalization: prefer f^i acting as +i somewhere on the ambient space
        if np.linalg.eigvalsh(_herm(-1j * s))[-1] < 0.5:
            s = -s
        return "C", {"1": P, "i": s}
    if d == 4 and len(skew) == 3:
        p = skew[0] / _opn(skew[0])
        q = skew[1] - np.real(np.vdot(p, skew[1])) / np.real(np.vdot(p, p)) * p
        q = q / _opn(q)
        return "H", {"1": P, "i": p, "j": q, "k": p @ q}
    raise DegenerateChain(f"corner of K-dimension {d} is not R, C or H")


def _summand_units(
    A: SpannedAlgebra, C: np.ndarray, Ws: List[np.ndarray], rng
) -> Tuple[int, str, Dict[Tuple[int, int, str], np.ndarray], List[np.ndarray]]:
    tol = A.tol
    M = _minproj(A, Ws, C, rng)
    p1 = M[0]
    D, base = _base_units(A, p1, _corner(A, p1, Ws))
    Z = unit_basis(D, A.field)
    f: Dict[Tuple[int, int, str], np.ndarray] = {(0, 0, z): base[z] for z in Z}
    chain = [p1]
    m = 1
    while True:
        q = sum(f[(k, k, "1")] for k in range(m))
        comm = [(_opn(p @ q - q @ p), i) for i, p in enumerate(M)]
        best, idx = max(comm)
        if best <= _indep(tol):
            break
        p = M[idx]
        chain.append(p)
        R = C - q
        # pick the column l where p reaches outside q the most
        ws = [R @ p @ f[(l, l, "1")] for l in range(m)]
        l = int(np.argmax([_opn(w) for w in ws]))
        dn = _opn(ws[l])
        if dn <= _indep(tol):
            raise DegenerateChain("new projection does not leave the current corner")
        w = {z: R @ p @ f[(l, l, z)] for z in Z}
        w1s = w["1"].conj().T
        for z in Z:
            for k in range(m):
                f[(m, k, z)] = w[z] @ f[(l, k, "1")] / dn
                f[(k, m, z)] = f[(k, l, z)] @ w1s / dn
            f[(m, m, z)] = w[z] @ w1s / dn**2
        m += 1
        if m > A.N:
            raise DegenerateChain("chain longer than the ambient dimension")
    q = sum(f[(k, k, "1")] for k in range(m))
    if _opn(q - C) > _indep(tol):
        raise DegenerateChain("chain of minimal projections does not exhaust the summand")
    return m, D, f, chain


def decompose(A: SpannedAlgebra, tol: Optional[float] = None, seed: int = DEFAULT_SEED) -> Decomposition:
    """Split A into full matrix algebras M_n(D) with matrix units for each."""
    if tol is not None:
        A.tol = tol
    tol = A.tol
    Ws = A.working_basis()
    if not Ws:
        return Decomposition(A.ring, A.field, [], 0)
    if not A.closure_residual:
        A.closure_residual = _closure_residual(Ws, A.field, A.N, tol)
    if A.closure_residual > _indep(tol):
        raise NotClosedUnderMultiplication(f"span is not closed (residual {A.closure_residual:.3g})")
    E = find_unit(A).working()
    rng = stream(seed, 2)
    summands = []
    for C in _central_projections(A, E, rng):
        sub = _Span(A.field, A.N, tol)
        for b in Ws:
            sub.add(C @ b)
        sW = sub.arrays()
        n, D, f, chain = _summand_units(A, C, sW, rng)
        units = MatrixUnitSystem(n, D, A.field, {k: A.to_matrix(v) for k, v in f.items()})
        units.extra["working"] = f
        summands.append(Summand(n, D, A.to_matrix(C), units, [A.to_matrix(p) for p in chain], len(sW)))
    summands.sort(key=lambda s: (s.n, _D_ORDER[s.D]))
    dec = Decomposition(A.ring, A.field, summands, A.dim, A.unit)
    if not dec.audit():
        raise DegenerateChain(f"dimension audit failed: {dec.types} vs dim {A.dim}")
    Cs = [s.central_projection.working() for s in summands]
    dec.residuals["central_sum"] = _opn(sum(Cs) - E)
    dec.residuals["central_orthogonal"] = max(
        [_opn(a @ b) for i, a in enumerate(Cs) for b in Cs[i + 1 :]], default=0.0
    )
    dec.residuals["central_commute"] = max(_opn(c @ b - b @ c) for c in Cs for b in Ws)
    dec.residuals["units"] = max(unit_residual(s.units) for s in summands)
    return dec


def unit_residual(system: MatrixUnitSystem) -> float:
    """Largest operator-norm violation of the matrix-unit identities."""
    f = system.extra.get("working") or {k: v.working() for k, v in system.units.items()}
    n, Z = system.n, system.Z
    worst = 0.0
    for r in range(n):
        for s in range(n):
            for z in Z:
                sg, _ = unit_conj(z)
                worst = max(worst, _opn(f[(r, s, z)].conj().T - sg * f[(s, r, z)]))
                for v in range(n):
                    for w in Z:
                        sg, lab = unit_product(z, w)
                        worst = max(worst, _opn(f[(r, s, z)] @ f[(s, v, w)] - sg * f[(r, v, lab)]))
                        for u in range(n):
                            if u != s:
                                worst = max(worst, _opn(f[(r, s, z)] @ f[(u, v, w)]))
    return worst


# -- isomorphism ------------------------------------------------------------


@dataclass
class Isomorphism:
    """φ: A → ⊕ M_{n_i}(D_i), φ_i(a) = V_i* a V_i in working coordinates."""

    decomposition: Decomposition
    conjugators: List[np.ndarray]
    residuals: Dict[str, float] = field(default_factory=dict)

    def apply(self, a: Matrix) -> List[Matrix]:
        W = a.working()
        return [
            Matrix.from_working(s.D, V.conj().T @ W @ V)
            for s, V in zip(self.decomposition.summands, self.conjugators)
        ]

    def apply_working(self, W: np.ndarray) -> List[np.ndarray]:
        return [V.conj().T @ W @ V for V in self.conjugators]

    def inverse(self, blocks: Sequence[Matrix]) -> Matrix:
        """Σ over summands of Σ b_rs^z f_rs^z."""
        dec = self.decomposition
        total = None
        for s, b in zip(dec.summands, blocks):
            f = s.units.extra["working"]
            bn = b.numeric()
            for r in range(s.n):
                for c in range(s.n):
                    comps = _components(bn, r, c, s.D, dec.field)
                    for z, t in comps.items():
                        if t:
                            term = t * f[(r, c, z)]
                            total = term if total is None else total + term
        if total is None:
            m = dec.summands[0].units.units[(0, 0, "1")]
            total = np.zeros_like(m.working())
        return Matrix.from_working(dec.ring, total)


def _components(b: Matrix, r: int, c: int, D: str, K: str) -> Dict[str, complex]:
    if D == "R":
        return {"1": float(np.real(b.data[r, c]))}
    if D == "C":
        x = complex(b.data[r, c])
        return {"1": x} if K == "C" else {"1": x.real, "i": x.imag}
    q = b.data[r, c]
    return dict(zip("1ijk", (float(t) for t in q)))


def _conjugator(s: Summand) -> np.ndarray:
    f = s.units.extra["working"]
    F = f[(0, 0, "1")]
    if s.D == "R" or (s.D == "C" and s.units.field == "C"):
        w, v = np.linalg.eigh(_herm(F))
        xi = [v[:, -1]]
    else:
        w, v = np.linalg.eigh(_herm(-1j * f[(0, 0, "i")]))
        x1 = v[:, -1]
        xi = [x1] if s.D == "C" else [x1, -(f[(0, 0, "j")] @ x1)]
    cols = [f[(r, 0, "1")] @ x for x in xi for r in range(s.n)]
    return np.array(cols).T


def construct_isomorphism(
    A: SpannedAlgebra, dec: Optional[Decomposition] = None, tol: Optional[float] = None, seed: int = DEFAULT_SEED, samples: int = 100
) -> Isomorphism:
    """Explicit *-isomorphism onto the standard direct sum, with certified residuals."""
    if dec is None:
        dec = decompose(A, tol, seed)
    Vs = [_conjugator(s) for s in dec.summands]
    iso = Isomorphism(dec, Vs)
    Ws = A.working_basis()
    res = iso.residuals
    res["conjugator"] = max(
        (_opn(V.conj().T @ V - np.eye(V.shape[1])) for V in Vs), default=0.0
    )
    imgs = [iso.apply_working(W) for W in Ws]

    def gap(xs, ys):
        return max((_opn(x - y) for x, y in zip(xs, ys)), default=0.0)

    mult = adj = iso_gap = 0.0
    for i, a in enumerate(Ws):
        adj = max(adj, gap(iso.apply_working(a.conj().T), [x.conj().T for x in imgs[i]]))
        iso_gap = max(iso_gap, abs(max((_opn(x) for x in imgs[i]), default=0.0) - _opn(a)))
        for j, b in enumerate(Ws):
            mult = max(mult, gap(iso.apply_working(a @ b), [x @ y for x, y in zip(imgs[i], imgs[j])]))
    rng = stream(seed, 3)
    for _ in range(samples if Ws else 0):
        t = rng.standard_normal(len(Ws))
        if A.field == "C":
            t = t + 1j * rng.standard_normal(len(Ws))
        x = sum(c * W for c, W in zip(t, Ws))
        iso_gap = max(iso_gap, abs(max(_opn(y) for y in iso.apply_working(x)) - _opn(x)))
    res["multiplicative"] = mult
    res["adjoint"] = adj
    res["isometry"] = iso_gap
    # image of each unit must be the standard unit of its block
    worst = 0.0
    for s, V in zip(dec.summands, Vs):
        f = s.units.extra["working"]
        for (r, c, z), F in f.items():
            target = _standard_working(s.n, s.D, r, c, z)
            worst = max(worst, _opn(V.conj().T @ F @ V - target))
    res["units"] = max(worst, dec.residuals.get("units", 0.0))
    return iso


def _standard_working(n: int, D: str, r: int, c: int, z: str) -> np.ndarray:
    if D == "H":
        q = np.zeros((n, n, 4))
        q[r, c, "1ijk".index(z)] = 1.0
        return embed_array(q)
    E = np.zeros((n, n), dtype=complex)
    E[r, c] = 1j if z == "i" else 1.0
    return E


# -- complexification -------------------------------------------------------


@dataclass
class Complexification:
    """A + iA inside M_n(C) with conjugation τ(x + iy) = x - iy."""

    real: SpannedAlgebra
    algebra: SpannedAlgebra

    @staticmethod
    def tau(x: Matrix) -> Matrix:
        W = x.working()
        return Matrix("C", W.conj())

    @staticmethod
    def parts(x: Matrix) -> Tuple[Matrix, Matrix]:
        W = x.working()
        return Matrix("R", W.real.copy()), Matrix("R", W.imag.copy())

    def fixed_points(self) -> SpannedAlgebra:
        """Real span of {(b + τb)/2, (ib + τ(ib))/2}: recovers the real algebra."""
        sp = _Span("R", self.algebra.N, self.algebra.tol)
        for b in self.algebra.working_basis():
            for c in (b, 1j * b):
                sp.add((c + c.conj()) / 2)
        basis = [Matrix("R", W.real.copy()) for W in sp.arrays()]
        return SpannedAlgebra(self.real.n, "R", "R", basis, None, self.real.tol)


def complexify(A: SpannedAlgebra) -> Complexification:
    if A.ring != "R" or A.field != "R":
        raise RingNotReal("complexification needs a real algebra of real matrices")
    basis = [Matrix("C", b.working()) for b in A.basis]
    unit = Matrix("C", A.unit.working()) if A.unit is not None else None
    C = SpannedAlgebra(A.n, "C", "C", basis, unit, A.tol)
    return Complexification(A, C)


# -- reports ----------------------------------------------------------------


def _flat(m: Matrix) -> str:
    return " ".join(f"{v + 0.0:.12g}" for v in real_form(m.numeric()).ravel())


def format_decomposition(dec: Decomposition, iso: Optional[Isomorphism] = None, matrices: bool = False) -> str:
    """Line-oriented report; with ``matrices`` the central projections and
    matrix units follow as ``central i ...`` and ``unit i r s z ...`` lines
    holding the row-major entries of their real forms."""
    lines = [f"ambient M_n({dec.ring}) over {dec.field}, dimension {dec.dim}"]
    lines.append("summands " + " + ".join(f"M{s.n}({s.D})" for s in dec.summands))
    for i, s in enumerate(dec.summands):
        lines.append(f"summand {i + 1} n={s.n} D={s.D} dim={s.dim}")
        if matrices:
            lines.append(f"central {i + 1} {_flat(s.central_projection)}")
            for (r, c, z), u in sorted(s.units.units.items()):
                lines.append(f"unit {i + 1} {r + 1} {c + 1} {z} {_flat(u)}")
    lines.append(f"audit {'ok' if dec.audit() else 'FAILED'}")
    res = dict(dec.residuals)
    if iso is not None:
        res.update({"iso_" + k: v for k, v in iso.residuals.items()})
    for k in sorted(res):
        lines.append(f"residual {k} {res[k]:.3e}")
    return "\n".join(lines)
