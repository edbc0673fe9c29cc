"""Matrices over R, C and H.

A :class:`Matrix` is either exact (an object array of scalars from
:mod:`cstar.scalars`) or numeric.  Numeric storage:

* ``R``: float64 array of shape (r, c)
* ``C``: complex128 array of shape (r, c)
* ``H``: float64 array of shape (r, c, 4) holding the components a, b, c, d

Quaternion matrices are handled through the block embedding
``A + B j  ->  [[A, B], [-conj(B), conj(A)]]`` where ``A = a + b i`` and
``B = c + d i``.  All spectral work happens on that embedding.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import (
    DependentInput,
    DivisionByZero,
    NonConvergence,
    NotAProjection,
    NotSelfAdjoint,
    RingMismatch,
    SizeMismatch,
)
from .scalars import (
    Dyadic,
    GaussianRational,
    RationalQuaternion,
    as_fraction,
    format_scalar,
    parse_scalar,
    to_float,
)

EPS = np.finfo(float).eps
PROJ_TOL = 2.0**-30
RINGS = ("R", "C", "H")

Interval = namedtuple("Interval", "lo hi")
SpectralInterval = namedtuple("SpectralInterval", "lo hi mult")


def _tolf(tol) -> float:
    if isinstance(tol, (Dyadic, Fraction)):
        return float(tol)
    return float(tol)


def coerce_scalar(x, ring: str):
    """Lift an exact scalar into the scalar type used for ``ring``."""
    if isinstance(x, Dyadic):
        x = x.to_fraction()
    if ring == "R":
        if isinstance(x, (GaussianRational, RationalQuaternion)):
            raise RingMismatch(f"{x} is not real")
        return as_fraction(x)
    if ring == "C":
        if isinstance(x, RationalQuaternion):
            if x.c or x.d:
                raise RingMismatch(f"{x} is not complex")
            return GaussianRational(x.a, x.b)
        if isinstance(x, GaussianRational):
            return x
        return GaussianRational(as_fraction(x))
    if ring == "H":
        if isinstance(x, GaussianRational):
            return RationalQuaternion(x.re, x.im)
        if isinstance(x, RationalQuaternion):
            return x
        return RationalQuaternion(as_fraction(x))
    raise ValueError(f"unknown ring {ring!r}")


def _zero(ring):
    return coerce_scalar(0, ring)


# -- quaternion embedding on numeric arrays ---------------------------------


def embed_array(q: np.ndarray) -> np.ndarray:
    """(r, c, 4) quaternion components -> (2r, 2c) complex block matrix."""
    A = q[..., 0] + 1j * q[..., 1]
    B = q[..., 2] + 1j * q[..., 3]
    return np.block([[A, B], [-B.conj(), A.conj()]])


def unembed_array(w: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_array`, averaging the redundant blocks."""
    r, c = w.shape[0] // 2, w.shape[1] // 2
    A = (w[:r, :c] + w[r:, c:].conj()) / 2
    B = (w[:r, c:] - w[r:, :c].conj()) / 2
    return np.stack([A.real, A.imag, B.real, B.imag], axis=-1)


class Matrix:
    """A matrix over R, C or H, exact or numeric.

    ``err`` bounds the operator-norm distance between a numeric matrix and the
    exact quantity it approximates (zero when the matrix is taken as given).
    """

    __slots__ = ("ring", "data", "exact", "err")

    def __init__(self, ring: str, data, err: float = 0.0):
        if ring not in RINGS:
            raise ValueError(f"unknown ring {ring!r}")
        data = np.asarray(data) if not isinstance(data, np.ndarray) else data
        exact = data.dtype == object
        if not exact:
            if ring == "R":
                data = np.asarray(data, dtype=float)
            elif ring == "C":
                data = np.asarray(data, dtype=complex)
            else:
                data = np.asarray(data, dtype=float)
                if data.ndim != 3 or data.shape[2] != 4:
                    raise SizeMismatch("numeric H data must have shape (r, c, 4)")
        self.ring = ring
        self.data = data
        self.exact = exact
        self.err = float(err)

    # construction
    @classmethod
    def from_entries(cls, ring: str, rows) -> "Matrix":
        rows = [list(r) for r in rows]
        r = len(rows)
        c = len(rows[0]) if r else 0
        arr = np.empty((r, c), dtype=object)
        for i, row in enumerate(rows):
            if len(row) != c:
                raise SizeMismatch("ragged rows")
            for j, x in enumerate(row):
                arr[i, j] = coerce_scalar(x, ring)
        return cls(ring, arr)

    @classmethod
    def identity(cls, ring: str, n: int, exact: bool = True) -> "Matrix":
        if exact:
            arr = np.empty((n, n), dtype=object)
            for i in range(n):
                for j in range(n):
                    arr[i, j] = coerce_scalar(int(i == j), ring)
            return cls(ring, arr)
        return cls.from_working(ring, np.eye(2 * n if ring == "H" else n, dtype=complex))

    @classmethod
    def zeros(cls, ring: str, n: int, exact: bool = True) -> "Matrix":
        if exact:
            arr = np.empty((n, n), dtype=object)
            arr[...] = _zero(ring)
            return cls(ring, arr)
        return cls.from_working(ring, np.zeros((2 * n if ring == "H" else n,) * 2, dtype=complex))

    @classmethod
    def unit(cls, ring: str, n: int, r: int, s: int, z=1) -> "Matrix":
        """Exact ``z * e_rs`` (0-based indices)."""
        m = cls.zeros(ring, n)
        m.data[r, s] = coerce_scalar(z, ring)
        return m

    @classmethod
    def from_working(cls, ring: str, w: np.ndarray, err: float = 0.0) -> "Matrix":
        """Build a numeric matrix from its complex working array."""
        if ring == "R":
            return cls("R", np.ascontiguousarray(w.real), err)
        if ring == "C":
            return cls("C", np.asarray(w, dtype=complex), err)
        return cls("H", unembed_array(np.asarray(w, dtype=complex)), err)

    # basic properties
    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.data.shape[:2])

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __repr__(self):
        kind = "exact" if self.exact else "numeric"
        return f"Matrix({self.ring}, {self.shape[0]}x{self.shape[1]}, {kind})"

    # conversions
    def numeric(self) -> "Matrix":
        if not self.exact:
            return self
        r, c = self.shape
        k = {"R": 1, "C": 2, "H": 4}[self.ring]
        out = np.zeros((r, c, k))
        worst = 0.0
        for i in range(r):
            for j in range(c):
                comps, e = to_float(self.data[i, j])
                out[i, j, : len(comps)] = comps
                worst = max(worst, e)
        err = worst * np.sqrt(r * c * k) if worst else 0.0
        if self.ring == "R":
            return Matrix("R", out[..., 0], err)
        if self.ring == "C":
            return Matrix("C", out[..., 0] + 1j * out[..., 1], err)
        return Matrix("H", out, err)

    def working(self) -> np.ndarray:
        """Complex array on which spectral computations are done."""
        m = self.numeric()
        if m.ring == "R":
            return m.data.astype(complex)
        if m.ring == "C":
            return m.data
        return embed_array(m.data)

    def to_fraction_array(self):
        if not self.exact or self.ring != "R":
            raise TypeError("only exact real matrices convert to fractions")
        return self.data

    # algebra
    def _check(self, other: "Matrix"):
        if not isinstance(other, Matrix):
            raise TypeError("expected a Matrix")
        if other.ring != self.ring:
            raise RingMismatch(f"ring {self.ring} vs {other.ring}")

    def __add__(self, other):
        self._check(other)
        if self.shape != other.shape:
            raise SizeMismatch(f"{self.shape} vs {other.shape}")
        if self.exact and other.exact:
            return Matrix(self.ring, self.data + other.data)
        a, b = self.numeric(), other.numeric()
        return Matrix(self.ring, a.data + b.data, a.err + b.err)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        if self.exact:
            return Matrix(self.ring, -self.data)
        return Matrix(self.ring, -self.data, self.err)

    def scale(self, c) -> "Matrix":
        """Multiply by a scalar on the left."""
        if self.exact and not isinstance(c, (float, complex)):
            cc = coerce_scalar(c, self.ring)
            out = np.empty(self.data.shape, dtype=object)
            for idx, x in np.ndenumerate(self.data):
                out[idx] = cc * x
            return Matrix(self.ring, out)
        m = self.numeric()
        if isinstance(c, (GaussianRational, RationalQuaternion, Fraction, int, Dyadic)):
            c = coerce_scalar(c, m.ring)
            (comps, _) = to_float(c)
        else:
            comps = (c.real, c.imag) if isinstance(c, complex) else (float(c),)
        if m.ring == "R":
            return Matrix("R", comps[0] * m.data, abs(comps[0]) * m.err)
        if m.ring == "C":
            cz = complex(*comps) if len(comps) == 2 else complex(comps[0])
            return Matrix("C", cz * m.data, abs(cz) * m.err)
        q = np.zeros(4)
        q[: len(comps)] = comps
        cm = embed_array(q.reshape(1, 1, 4))
        r = m.shape[0]
        left = np.kron(cm, np.eye(r))
        return Matrix.from_working("H", left @ m.working(), float(np.linalg.norm(q)) * m.err)

    def __rmul__(self, c):
        return self.scale(c)

    def __matmul__(self, other):
        self._check(other)
        if self.shape[1] != other.shape[0]:
            raise SizeMismatch(f"{self.shape} @ {other.shape}")
        if self.exact and other.exact:
            return Matrix(self.ring, _exact_matmul(self.data, other.data, self.ring))
        a, b = self.numeric(), other.numeric()
        if self.ring == "H":
            w = a.working() @ b.working()
            prod = Matrix.from_working("H", w)
        else:
            prod = Matrix(self.ring, a.data @ b.data)
        na, nb = frob(a), frob(b)
        k = a.shape[1]
        err = a.err * nb + b.err * na + a.err * b.err + 2 * (k + 2) * EPS * na * nb
        prod.err = err
        return prod

    def adjoint(self) -> "Matrix":
        if self.exact:
            t = self.data.T
            out = np.empty(t.shape, dtype=object)
            for idx, x in np.ndenumerate(t):
                out[idx] = x.conj() if hasattr(x, "conj") else x
            return Matrix(self.ring, out)
        if self.ring == "R":
            return Matrix("R", self.data.T.copy(), self.err)
        if self.ring == "C":
            return Matrix("C", self.data.conj().T.copy(), self.err)
        d = np.transpose(self.data, (1, 0, 2)).copy()
        d[..., 1:] *= -1
        return Matrix("H", d, self.err)

    def is_zero(self) -> bool:
        if self.exact:
            return all(not bool(x) for x in self.data.flat)
        return not np.any(self.data) and self.err == 0

    def equals_exact(self, other: "Matrix") -> bool:
        return (
            self.exact
            and other.exact
            and self.ring == other.ring
            and self.shape == other.shape
            and all(x == y for x, y in zip(self.data.flat, other.data.flat))
        )

    def to_text(self) -> str:
        return format_matrix(self)


def frob(m: Matrix) -> float:
    """Frobenius norm (an upper bound for the operator norm)."""
    m = m.numeric()
    return float(np.linalg.norm(m.data))


def _exact_matmul(a, b, ring):
    r, k = a.shape
    c = b.shape[1]
    out = np.empty((r, c), dtype=object)
    zero = _zero(ring)
    for i in range(r):
        for j in range(c):
            acc = zero
            for t in range(k):
                x = a[i, t]
                if x:
                    y = b[t, j]
                    if y:
                        acc = acc + x * y
            out[i, j] = acc
    return out


# -- representations -------------------------------------------------------


class Representation:
    """An assignment generator index -> Matrix, all of one size and ring."""

    def __init__(self, mats: Dict[int, Matrix]):
        mats = dict(mats)
        rings = {m.ring for m in mats.values()}
        sizes = {m.shape for m in mats.values()}
        if len(rings) > 1:
            raise RingMismatch(f"mixed rings {sorted(rings)}")
        if len(sizes) > 1 or any(s[0] != s[1] for s in sizes):
            raise SizeMismatch(f"matrices must be square of one size, got {sorted(sizes)}")
        self.mats = mats
        self.ring = rings.pop() if rings else "C"
        self.n = sizes.pop()[0] if sizes else 0

    def __getitem__(self, i):
        return self.mats[i]

    def __contains__(self, i):
        return i in self.mats

    def __iter__(self):
        return iter(sorted(self.mats))

    def __len__(self):
        return len(self.mats)

    def __repr__(self):
        return f"Representation(n={self.n}, ring={self.ring}, generators={sorted(self.mats)})"


# -- embeddings ------------------------------------------------------------


def complex_embed(m: Matrix) -> Matrix:
    if m.ring != "H":
        raise RingMismatch("complex_embed expects a quaternion matrix")
    if not m.exact:
        return Matrix("C", embed_array(m.data), m.err)
    r, c = m.shape
    out = np.empty((2 * r, 2 * c), dtype=object)
    for i in range(r):
        for j in range(c):
            q = m.data[i, j]
            A = GaussianRational(q.a, q.b)
            B = GaussianRational(q.c, q.d)
            out[i, j] = A
            out[i, c + j] = B
            out[r + i, j] = -B.conj()
            out[r + i, c + j] = A.conj()
    return Matrix("C", out)


def real_form(m: Matrix) -> np.ndarray:
    """Real matrix of the left action on R^n, R^2n or R^4n."""
    w = m.working()
    if m.ring == "R":
        return w.real.copy()
    return np.block([[w.real, -w.imag], [w.imag, w.real]])


# -- norms and spectra -----------------------------------------------------


def op_norm(m: Matrix, tol=2.0**-40) -> Interval:
    """Certified interval for the largest singular value."""
    tol = _tolf(tol)
    if m.exact and m.is_zero():
        return Interval(0.0, 0.0)
    m = m.numeric()
    W = m.working()
    if W.size == 0 or not np.any(W):
        return Interval(0.0, m.err)
    dim = max(W.shape)
    fro = float(np.linalg.norm(W))
    u, s, vh = np.linalg.svd(W)
    v = vh[0].conj()
    lo = np.linalg.norm(W @ v) / np.linalg.norm(v)
    lo = lo * (1 - 4 * (dim + 2) * EPS) - m.err
    G = W.conj().T @ W
    G = (G + G.conj().T) / 2
    margin = 8 * (dim + 2) * EPS * fro * fro
    h2 = s[0] ** 2 + margin
    ident = np.eye(G.shape[0])
    for _ in range(60):
        try:
            np.linalg.cholesky(h2 * ident - G)
            break
        except np.linalg.LinAlgError:
            margin *= 2
            h2 = s[0] ** 2 + margin
    else:
        raise NonConvergence("could not certify an upper bound")
    hi = float(np.sqrt(h2)) * (1 + 2 * EPS) + m.err
    lo = max(float(lo), 0.0)
    if hi - lo > tol:
        raise NonConvergence(f"norm interval [{lo}, {hi}] wider than {tol}")
    return Interval(float(lo), float(hi))


def norm_estimate(m: Matrix) -> float:
    """Plain floating estimate of the operator norm."""
    W = m.working()
    if W.size == 0:
        return 0.0
    return float(np.linalg.norm(W, 2))


def self_adjointness_defect(m: Matrix) -> float:
    W = m.working()
    return float(np.linalg.norm(W - W.conj().T, 2)) if W.size else 0.0


def self_adjoint_spectrum(m: Matrix, tol=PROJ_TOL) -> List[SpectralInterval]:
    """Eigenvalue intervals (with multiplicities) of a self-adjoint matrix."""
    tol = _tolf(tol)
    m = m.numeric()
    defect = self_adjointness_defect(m)
    if defect > tol + m.err:
        raise NotSelfAdjoint(f"‖m - m*‖ = {defect:.3g} exceeds {tol:.3g}")
    W = m.working()
    H = (W + W.conj().T) / 2
    n = H.shape[0]
    if n == 0:
        return []
    w, V = np.linalg.eigh(H)
    scale = float(np.linalg.norm(H, 2))
    res = np.linalg.norm(H @ V - V * w, axis=0)
    rad = res + 4 * (n + 2) * EPS * scale + m.err + defect / 2
    groups = []
    start = 0
    for i in range(1, n + 1):
        if i == n or (w[i] - rad[i]) - (w[i - 1] + rad[i - 1]) > tol / 4:
            groups.append((start, i))
            start = i
    out = []
    for a, b in groups:
        lo = float(np.min(w[a:b] - rad[a:b]))
        hi = float(np.max(w[a:b] + rad[a:b]))
        if hi - lo > tol:
            raise NonConvergence(f"eigenvalue cluster of width {hi - lo:.3g} exceeds {tol:.3g}")
        mult = b - a
        if m.ring == "H":
            mult = max(1, round(mult / 2))
        out.append(SpectralInterval(lo, hi, mult))
    return out


def rank_D(m: Matrix, tol=PROJ_TOL) -> int:
    """Rank over the matrix's own ring (H-rank is half the C-rank of the embedding)."""
    W = m.working()
    if W.size == 0:
        return 0
    s = np.linalg.svd(W, compute_uv=False)
    r = int(np.sum(s > _tolf(tol) * max(1.0, s[0])))
    return r // 2 if m.ring == "H" else r


# -- Gram-Schmidt ------------------------------------------------------------


def _column_working(v: Matrix) -> np.ndarray:
    """Working form of v flattened to a single D-column."""
    v = v.numeric()
    if v.ring == "H":
        flat = v.data.reshape(-1, 1, 4)
        return embed_array(flat)
    return v.data.reshape(-1, 1).astype(complex)


def _real_vec(v: Matrix) -> np.ndarray:
    v = v.numeric()
    if v.ring == "R":
        return v.data.reshape(-1).astype(float)
    if v.ring == "C":
        return np.concatenate([v.data.real.reshape(-1), v.data.imag.reshape(-1)])
    return v.data.reshape(-1).astype(float)


def _from_real_vec(x: np.ndarray, ring: str, shape) -> Matrix:
    if ring == "R":
        return Matrix("R", x.reshape(shape))
    if ring == "C":
        k = x.size // 2
        return Matrix("C", (x[:k] + 1j * x[k:]).reshape(shape))
    return Matrix("H", x.reshape(shape + (4,)))


def real_inner(a: Matrix, b: Matrix) -> float:
    """Re tr(a* b); for 1x1 quaternions this is ½(a*b + b*a)."""
    return float(_real_vec(a) @ _real_vec(b))


def gram_schmidt_D(vectors: Sequence[Matrix], form: str = "D", tol=PROJ_TOL) -> List[Matrix]:
    """Orthonormalize over D (``form='D'``) or over R with Re tr(a*b) (``form='real'``)."""
    tol = _tolf(tol)
    vectors = list(vectors)
    if not vectors:
        return []
    ring = vectors[0].ring
    shape = vectors[0].shape
    for v in vectors:
        if v.ring != ring:
            raise RingMismatch("mixed rings")
        if v.shape != shape:
            raise SizeMismatch("vectors of different shapes")
    out = []
    if form == "real":
        basis: List[np.ndarray] = []
        for idx, v in enumerate(vectors):
            x = _real_vec(v)
            n0 = np.linalg.norm(x)
            for _ in range(2):
                for e in basis:
                    x = x - (e @ x) * e
            nx = np.linalg.norm(x)
            if nx <= tol * max(1.0, n0):
                raise DependentInput(idx)
            x = x / nx
            basis.append(x)
            out.append(_from_real_vec(x, ring, shape))
        return out
    if form != "D":
        raise ValueError(f"unknown form {form!r}")
    cols: List[np.ndarray] = []
    for idx, v in enumerate(vectors):
        x = _column_working(v)
        n0 = np.linalg.norm(x[:, 0])
        for _ in range(2):
            for e in cols:
                x = x - e @ (e.conj().T @ x)
        nx = np.linalg.norm(x[:, 0])
        if nx <= tol * max(1.0, n0):
            raise DependentInput(idx)
        x = x / nx
        cols.append(x)
        if ring == "H":
            q = unembed_array(x)  # (m, 1, 4)
            out.append(Matrix("H", q.reshape(shape + (4,))))
        elif ring == "R":
            out.append(Matrix("R", x.real.reshape(shape)))
        else:
            out.append(Matrix("C", x.reshape(shape)))
    return out


# -- commutants and projections --------------------------------------------


def ambient_real_basis(ring: str, n: int, K: str) -> List[np.ndarray]:
    """Working arrays of a K-basis of M_n(D)."""
    units = {"R": [1], "C": [1, 1j] if K == "R" else [1], "H": ["1", "i", "j", "k"]}[ring]
    out = []
    for i in range(n):
        for j in range(n):
            for z in units:
                if ring == "H":
                    q = np.zeros((n, n, 4))
                    q[i, j, "1ijk".index(z)] = 1.0
                    out.append(embed_array(q))
                else:
                    w = np.zeros((n, n), dtype=complex)
                    w[i, j] = z
                    out.append(w)
    return out


def default_field(ring: str) -> str:
    return "C" if ring == "C" else "R"


def commutant(
    basis: Sequence[Matrix], K: Optional[str] = None, tol=PROJ_TOL, over: str = "ambient"
) -> List[Matrix]:
    """K-basis of {x : xs = sx for all s in basis}.

    ``over='ambient'`` looks for x in M_n(D); ``over='operators'`` looks among
    all K-linear operators on D^n, returned as real matrices when K = R
    (for D = H this is where the right multiplications live).
    """
    basis = list(basis)
    if not basis:
        raise ValueError("commutant needs at least one matrix to fix the ambient algebra")
    ring = basis[0].ring
    n = basis[0].n
    for b in basis:
        if b.ring != ring or b.shape != (n, n):
            raise SizeMismatch("matrices must share size and ring")
    K = K or default_field(ring)
    if over == "operators" and K == "R" and ring != "R":
        return commutant([Matrix("R", real_form(b)) for b in basis], "R", tol)
    if over not in ("ambient", "operators"):
        raise ValueError(f"unknown option over={over!r}")
    amb = ambient_real_basis(ring, n, K)
    S = [b.working() for b in basis]
    cols = []
    for E in amb:
        cols.append(np.concatenate([(E @ s - s @ E).reshape(-1) for s in S]))
    A = np.array(cols).T
    if K == "R":
        A = np.vstack([A.real, A.imag])
    ns = scipy.linalg.null_space(A, rcond=max(_tolf(tol), 1e-12))
    out = []
    for t in ns.T:
        W = sum(c * E for c, E in zip(t, amb))
        out.append(Matrix.from_working(ring, W))
    return out


def is_projection(p: Matrix, tol=PROJ_TOL) -> bool:
    W = p.working()
    return (
        np.linalg.norm(W @ W - W, 2) <= _tolf(tol) and np.linalg.norm(W - W.conj().T, 2) <= _tolf(tol)
    )


def join_projections(p: Matrix, q: Matrix, tol=PROJ_TOL) -> Matrix:
    """Projection onto range(p) + range(q)."""
    if p.ring != q.ring:
        raise RingMismatch("mixed rings")
    if p.shape != q.shape:
        raise SizeMismatch("projections of different sizes")
    for x in (p, q):
        if not is_projection(x, tol):
            raise NotAProjection("input is not a projection within tolerance")
    M = np.hstack([p.working(), q.working()])
    u, s, _ = np.linalg.svd(M)
    r = int(np.sum(s > np.sqrt(_tolf(tol))))
    U = u[:, :r]
    return Matrix.from_working(p.ring, U @ U.conj().T)


# -- exact inverse and random unitaries -------------------------------------


def exact_inverse(m: Matrix) -> Matrix:
    """Gauss-Jordan inverse using left row operations (valid over H too)."""
    if not m.exact:
        raise TypeError("exact_inverse needs an exact matrix")
    n = m.n
    A = m.data.copy()
    B = Matrix.identity(m.ring, n).data
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r, col]), None)
        if piv is None:
            raise DivisionByZero("matrix is singular")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            B[[col, piv]] = B[[piv, col]]
        inv = A[col, col].inverse() if hasattr(A[col, col], "inverse") else 1 / A[col, col]
        for j in range(n):
            A[col, j] = inv * A[col, j]
            B[col, j] = inv * B[col, j]
        for r in range(n):
            if r != col and A[r, col]:
                f = A[r, col]
                for j in range(n):
                    A[r, j] = A[r, j] - f * A[col, j]
                    B[r, j] = B[r, j] - f * B[col, j]
    return Matrix(m.ring, B)


def _random_rational(rng, height: int) -> Fraction:
    return Fraction(int(rng.integers(-height, height + 1)), int(rng.integers(1, height + 1)))


def random_rational_unitary(ring: str, n: int, rng: np.random.Generator, height: int = 3) -> Matrix:
    """Exact unitary (I + S)^-1 (I - S) for a random rational skew-adjoint S."""
    S = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            S[i, j] = _zero(ring)
    for i in range(n):
        if ring == "C":
            S[i, i] = GaussianRational(0, _random_rational(rng, height))
        elif ring == "H":
            S[i, i] = RationalQuaternion(0, *(_random_rational(rng, height) for _ in range(3)))
        for j in range(i + 1, n):
            if ring == "R":
                z = _random_rational(rng, height)
            elif ring == "C":
                z = GaussianRational(_random_rational(rng, height), _random_rational(rng, height))
            else:
                z = RationalQuaternion(*(_random_rational(rng, height) for _ in range(4)))
            S[i, j] = z
            S[j, i] = -(z.conj() if hasattr(z, "conj") else z)
    Sm = Matrix(ring, S)
    ident = Matrix.identity(ring, n)
    return exact_inverse(ident + Sm) @ (ident - Sm)


def random_matrix(ring: str, n: int, rng: np.random.Generator, scale: float = 1.0) -> Matrix:
    if ring == "R":
        return Matrix("R", scale * rng.standard_normal((n, n)))
    if ring == "C":
        return Matrix("C", scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))))
    return Matrix("H", scale * rng.standard_normal((n, n, 4)))


def random_self_adjoint(ring: str, n: int, rng: np.random.Generator) -> Matrix:
    m = random_matrix(ring, n, rng)
    w = m.working()
    return Matrix.from_working(ring, (w + w.conj().T) / 2)


# -- matrix unit systems ----------------------------------------------------

# product table of the basis units of H: (z, w) -> (sign, label)
_QMUL = {
    ("1", "1"): (1, "1"), ("1", "i"): (1, "i"), ("1", "j"): (1, "j"), ("1", "k"): (1, "k"),
    ("i", "1"): (1, "i"), ("i", "i"): (-1, "1"), ("i", "j"): (1, "k"), ("i", "k"): (-1, "j"),
    ("j", "1"): (1, "j"), ("j", "i"): (-1, "k"), ("j", "j"): (-1, "1"), ("j", "k"): (1, "i"),
    ("k", "1"): (1, "k"), ("k", "i"): (1, "j"), ("k", "j"): (-1, "i"), ("k", "k"): (-1, "1"),
}  # fmt: skip

_UNIT_SCALAR = {
    "1": RationalQuaternion(1),
    "i": RationalQuaternion(0, 1),
    "j": RationalQuaternion(0, 0, 1),
    "k": RationalQuaternion(0, 0, 0, 1),
}


def unit_basis(D: str, K: str) -> Tuple[str, ...]:
    """The standard basis Z of D over K."""
    if D == "R" or (D == "C" and K == "C"):
        return ("1",)
    if D == "C":
        return ("1", "i")
    if D == "H" and K == "R":
        return ("1", "i", "j", "k")
    raise ValueError(f"no basis for {D} over {K}")


def unit_product(z: str, w: str) -> Tuple[int, str]:
    return _QMUL[(z, w)]


def unit_conj(z: str) -> Tuple[int, str]:
    return (1, "1") if z == "1" else (-1, z)


@dataclass
class MatrixUnitSystem:
    """Matrix units ``units[(r, s, z)]`` (0-based r, s) of a copy of M_n(D)."""

    n: int
    ring: str
    field: str
    units: Dict[Tuple[int, int, str], Matrix]
    conjugator: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @property
    def Z(self):
        return unit_basis(self.ring, self.field)


def standard_units(n: int, D: str, K: Optional[str] = None) -> MatrixUnitSystem:
    """Exact units ``e_rs z`` in M_n(D)."""
    K = K or default_field(D)
    units = {}
    for z in unit_basis(D, K):
        scalar = _UNIT_SCALAR[z] if D == "H" else (GaussianRational(0, 1) if z == "i" else 1)
        for r in range(n):
            for s in range(n):
                units[(r, s, z)] = Matrix.unit(D, n, r, s, scalar)
    return MatrixUnitSystem(n, D, K, units)


def _residual(a: Matrix, b: Matrix) -> float:
    if a.exact and b.exact:
        return 0.0 if a.equals_exact(b) else frob(a - b)
    return frob(a - b)


def matrix_unit_residual(system: MatrixUnitSystem) -> float:
    """Largest violation of the adjoint and product identities (0 when exact)."""
    worst = 0.0
    Z = system.Z
    n = system.n
    U = system.units
    for r in range(n):
        for s in range(n):
            for z in Z:
                sgn, _ = unit_conj(z)
                worst = max(worst, _residual(U[(r, s, z)].adjoint(), U[(s, r, z)].scale(sgn)))
    for r in range(n):
        for s in range(n):
            for z in Z:
                for u in range(n):
                    for v in range(n):
                        for w in Z:
                            lhs = U[(r, s, z)] @ U[(u, v, w)]
                            if s == u:
                                sgn, lab = unit_product(z, w)
                                rhs = U[(r, v, lab)].scale(sgn)
                            else:
                                rhs = U[(r, v, "1")].scale(0)
                            worst = max(worst, _residual(lhs, rhs))
    return worst


# -- text format -----------------------------------------------------------


def format_matrix(m: Matrix) -> str:
    r, c = m.shape
    lines = [f"{m.ring} {r}"]
    if m.exact:
        for i in range(r):
            lines.append(" ".join(format_scalar(x) for x in m.data[i]))
    else:
        d = m.numeric()
        for i in range(r):
            if d.ring == "R":
                lines.append(" ".join(repr(float(x)) for x in d.data[i]))
            elif d.ring == "C":
                lines.append(" ".join(repr(complex(x)) for x in d.data[i]))
            else:
                lines.append(" ".join("(" + ",".join(repr(float(t)) for t in q) + ")" for q in d.data[i]))
    return "\n".join(lines)


def parse_matrices(text: str) -> List[Matrix]:
    """Parse a whitespace-separated stream of ``RING n entries...`` blocks.

    Lines starting with ``#`` are comments.
    """
    from .errors import ParseError

    toks: List[str] = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            toks.extend(line.split())
    out = []
    pos = 0
    while pos < len(toks):
        ring = toks[pos]
        if ring not in RINGS:
            raise ParseError(f"expected ring tag R, C or H, got {ring!r}")
        try:
            n = int(toks[pos + 1])
        except (IndexError, ValueError):
            raise ParseError("expected matrix size after ring tag") from None
        pos += 2
        if pos + n * n > len(toks):
            raise ParseError("not enough matrix entries")
        entries = [parse_scalar(t, ring) for t in toks[pos : pos + n * n]]
        pos += n * n
        out.append(Matrix.from_entries(ring, [entries[i * n : (i + 1) * n] for i in range(n)]))
    return out
