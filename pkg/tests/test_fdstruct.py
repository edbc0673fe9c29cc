import numpy as np
import pytest

from cstar._random import stream
from cstar.errors import NoUnit, NotSelfAdjoint, RingNotReal
from cstar.fdstruct import (
    TOL,
    center,
    complexify,
    construct_isomorphism,
    corner_dimension,
    decompose,
    find_unit,
    finite_spectrum,
    format_decomposition,
    minimal_projections,
    span_closure,
    unit_residual,
)
from cstar.matrep import Matrix, commutant, random_rational_unitary, random_self_adjoint
from cstar.scalars import RationalQuaternion as Q
from oracles import hermitian_eigs, matrix_norm

LIMIT = 10 * TOL


def full_units(ring, n):
    return [Matrix.unit(ring, n, r, s) for r in range(n) for s in range(n)]


def conj(U, mats):
    Ua = U.adjoint()
    return [Ua @ m @ U for m in mats]


def mids(ivs):
    return [(iv.lo + iv.hi) / 2 for iv in ivs]


# -- span closure ---------------------------------------------------------


def test_span_closure_examples():
    assert span_closure([Matrix.unit("C", 2, 0, 1)]).dim == 4
    assert span_closure([Matrix.identity("C", 3)]).dim == 1
    assert span_closure([], n=2, ring="C").dim == 0


def test_span_closure_is_closed():
    rng = stream(3, 1)
    A = span_closure([random_self_adjoint("R", 3, rng)])
    # one self-adjoint generator gives the polynomials in it: dimension = #eigenvalues
    assert A.dim == 3
    Ws = A.working_basis()
    for a in Ws:
        for b in Ws:
            assert A.distance(Matrix("R", (a @ b).real)) < 1e-9


def test_find_unit():
    A = span_closure([Matrix.unit("R", 3, 0, 0), Matrix.unit("R", 3, 1, 1)])
    u = find_unit(A)
    assert np.allclose(u.working(), np.diag([1, 1, 0]))
    with pytest.raises(NoUnit):
        find_unit(span_closure([Matrix.unit("C", 2, 0, 1)], field="C").from_working_basis(
            [Matrix.unit("C", 2, 0, 1).working()]))


# -- spectrum -------------------------------------------------------------


def test_spectrum_examples():
    assert mids(finite_spectrum(None, Matrix("R", np.diag([1.0, 2, 2])))) == pytest.approx([1, 2])
    assert mids(finite_spectrum(None, Matrix("R", np.zeros((2, 2))))) == pytest.approx([0])
    assert mids(finite_spectrum(None, Matrix("R", np.diag([3.0, -3])))) == pytest.approx([-3, 3])


def test_spectrum_not_self_adjoint():
    with pytest.raises(NotSelfAdjoint):
        finite_spectrum(None, Matrix.unit("R", 2, 0, 1))


@pytest.mark.parametrize("ring", ["R", "C", "H"])
def test_spectrum_methods_agree_with_oracle(ring):
    for k in range(25):
        rng = stream(41, ord(ring), k)
        n = int(rng.integers(1, 7))
        x = random_self_adjoint(ring, n, rng)
        ind = finite_spectrum(None, x, method="induction")
        eig = finite_spectrum(None, x, method="eig")
        ref = hermitian_eigs(ring, x.data)
        assert len(ind) == len(eig) == len(ref)
        assert np.max(np.abs(np.array(mids(ind)) - ref)) < LIMIT
        assert np.max(np.abs(np.array(mids(eig)) - ref)) < LIMIT
        for iv, r in zip(ind, ref):
            assert iv.lo - 1e-12 <= r <= iv.hi + 1e-12


def test_spectrum_within_algebra():
    # repeated eigenvalues and a non-identity unit: spectrum taken in the corner
    x = Matrix("C", np.diag([2.0, 2.0, -1.0, 0.0]).astype(complex))
    p = Matrix("C", np.diag([1.0, 1, 1, 0]).astype(complex))
    A = span_closure([x, p])
    assert mids(finite_spectrum(A, x)) == pytest.approx([-1, 2])


# -- minimal projections ---------------------------------------------------


def _real_rank(mats):
    rows = [np.concatenate([m.working().real.ravel(), m.working().imag.ravel()]) for m in mats]
    return np.linalg.matrix_rank(np.array(rows), tol=1e-7)


def test_minproj_diagonal():
    A = span_closure([Matrix("R", np.diag([1.0, 2, 3]))])
    ps = minimal_projections(A)
    got = sorted(tuple(np.round(np.diag(p.working().real), 9)) for p in ps)
    assert got == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_minproj_m2c():
    A = span_closure(full_units("C", 2))
    ps = minimal_projections(A)
    assert _real_rank(ps) == 4
    for p in ps:
        W = p.working()
        assert np.allclose(W @ W, W, atol=1e-9) and np.allclose(W, W.conj().T, atol=1e-9)
        assert corner_dimension(A, p) == 1


def test_minproj_scalars():
    A = span_closure([Matrix.identity("C", 3)])
    ps = minimal_projections(A)
    assert len(ps) == 1 and np.allclose(ps[0].working(), np.eye(3))


def test_minproj_quaternion_corner():
    A = span_closure([Matrix.unit("H", 1, 0, 0, Q(0, 1)), Matrix.unit("H", 1, 0, 0, Q(0, 0, 1))])
    ps = minimal_projections(A)
    assert len(ps) == 1 and corner_dimension(A, ps[0]) == 4


# -- decomposition --------------------------------------------------------


def test_decompose_examples():
    assert decompose(span_closure(full_units("C", 2))).types == [(2, "C")]
    U = random_rational_unitary("R", 3, stream(5))
    gens = [Matrix.unit("R", 3, r, s) for r in range(2) for s in range(2)] + [Matrix.unit("R", 3, 2, 2)]
    A = span_closure(conj(U, gens))
    assert A.dim == 5 and len(center(A)) == 2
    d = decompose(A)
    assert d.types == [(1, "R"), (2, "R")]
    H = span_closure([Matrix.unit("H", 1, 0, 0, Q(0, 1)), Matrix.unit("H", 1, 0, 0, Q(0, 0, 1))])
    assert H.field == "R" and decompose(H).types == [(1, "H")]


def test_decompose_complex_over_reals():
    # real units alone span M2(R); i*I makes the real span all of M2(C)
    assert decompose(span_closure(full_units("C", 2), field="R")).types == [(2, "R")]
    A = span_closure(full_units("C", 2) + [Matrix("C", 1j * np.eye(2))], field="R")
    d = decompose(A)
    assert A.dim == 8 and d.types == [(2, "C")] and d.audit()


CASES = {
    "M3(R)": ("R", 3, full_units("R", 3), [(3, "R")]),
    "M2(C)": ("C", 2, full_units("C", 2), [(2, "C")]),
    "H+M2(R)": (
        "H",
        3,
        [Matrix.unit("H", 3, 0, 0, Q(0, 1)), Matrix.unit("H", 3, 0, 0, Q(0, 0, 1))]
        + [Matrix.unit("H", 3, r, s) for r in (1, 2) for s in (1, 2)],
        [(1, "H"), (2, "R")],
    ),
    "C+M2(C)": (
        "C",
        3,
        [Matrix.unit("C", 3, 0, 0)] + [Matrix.unit("C", 3, r, s) for r in (1, 2) for s in (1, 2)],
        [(1, "C"), (2, "C")],
    ),
}


@pytest.mark.parametrize("name", list(CASES))
def test_decompose_invariant_under_unitary(name):
    ring, n, gens, expected = CASES[name]
    seen = set()
    for t in range(5):
        U = random_rational_unitary(ring, n, stream(17, t))
        A = span_closure(conj(U, gens))
        d = decompose(A, seed=t)
        assert d.audit()
        seen.add(tuple(d.types))
    assert seen == {tuple(expected)}


@pytest.mark.parametrize("name", list(CASES))
def test_unit_identities_and_isomorphism(name):
    ring, n, gens, _ = CASES[name]
    U = random_rational_unitary(ring, n, stream(23))
    A = span_closure(conj(U, gens))
    d = decompose(A)
    for s in d.summands:
        assert unit_residual(s.units) < LIMIT
    iso = construct_isomorphism(A, d)
    for key in ("multiplicative", "adjoint", "isometry", "units", "conjugator"):
        assert iso.residuals[key] < LIMIT, key
    # isometry checked against the independent quaternion oracle norm
    rng = stream(29)
    for _ in range(10):
        t = rng.standard_normal(A.dim)
        x = sum((c * W for c, W in zip(t, A.working_basis())), 0)
        xm = A.to_matrix(x)
        img = iso.apply(xm)
        lhs = max(matrix_norm(b.D if hasattr(b, "D") else b.ring, b.data) for b in img)
        assert abs(lhs - matrix_norm(ring, xm.data)) < 1e-8
        back = iso.inverse(img)
        assert np.allclose(back.working(), x, atol=1e-8)


def test_isomorphism_recovers_units():
    V = random_rational_unitary("C", 2, stream(31))
    A = span_closure(conj(V, full_units("C", 2)))
    iso = construct_isomorphism(A)
    y = conj(V, [Matrix.unit("C", 2, 0, 1)])[0]
    (b,) = iso.apply(y)
    assert abs(np.linalg.norm(b.data, 2) - 1) < LIMIT


def test_isomorphism_diagonal_identity():
    A = span_closure([Matrix("R", np.diag([1.0, 2, 3]))])
    iso = construct_isomorphism(A)
    assert iso.decomposition.types == [(1, "R")] * 3
    x = Matrix("R", np.diag([5.0, -1, 2]))
    vals = sorted(float(np.real(b.data[0, 0])) for b in iso.apply(x))
    assert vals == pytest.approx([-1, 2, 5])


def test_quaternion_units():
    A = span_closure([Matrix.unit("H", 1, 0, 0, Q(0, 1)), Matrix.unit("H", 1, 0, 0, Q(0, 0, 1))])
    (s,) = decompose(A).summands
    f = s.units.extra["working"]
    p, q = f[(0, 0, "i")], f[(0, 0, "j")]
    one = f[(0, 0, "1")]
    assert np.allclose(p @ p, -one, atol=LIMIT)
    assert np.allclose(p @ q, -(q @ p), atol=LIMIT)


def test_report_lines():
    A = span_closure(full_units("C", 2))
    d = decompose(A)
    text = format_decomposition(d, construct_isomorphism(A, d), matrices=True)
    assert "summands M2(C)" in text and "audit ok" in text
    units = [ln for ln in text.splitlines() if ln.startswith("unit ")]
    assert len(units) == 4
    assert len(units[0].split()) == 5 + 16  # header fields, then a 4x4 real form


def test_double_commutant():
    for ring, n, gens, _ in CASES.values():
        A = span_closure(gens)
        basis = [A.to_matrix(W) for W in A.working_basis()]
        c1 = commutant(basis, K=A.field, over="operators")
        c2 = commutant(c1, K=A.field, over="operators")
        if A.unit is not None and np.allclose(A.unit.working(), np.eye(A.N)):
            assert len(c2) == A.dim


# -- complexification -----------------------------------------------------


def test_complexify_examples():
    C = complexify(span_closure([Matrix.identity("R", 1)]))
    assert C.algebra.dim == 1 and C.algebra.field == "C"
    z = Matrix("C", np.array([[2 + 3j]]))
    assert C.tau(z).data[0, 0] == 2 - 3j
    with pytest.raises(RingNotReal):
        complexify(span_closure(full_units("C", 2)))


def test_complexify_norms():
    x = np.diag([1.0, 0])
    y = np.diag([0.0, 1])
    assert np.linalg.norm(x + 1j * y, 2) == pytest.approx(1)
    rng = stream(37)
    A = span_closure(full_units("R", 3))
    C = complexify(A)
    assert C.algebra.dim == 9 and C.fixed_points().dim == 9
    for _ in range(20):
        r = np.diag(rng.standard_normal(3))
        s = np.diag(rng.standard_normal(3))
        z = Matrix("C", r + 1j * s)
        re, im = C.parts(z)
        assert np.allclose(re.data, r) and np.allclose(im.data, s)
        nz = np.linalg.norm(z.data, 2)
        assert nz == pytest.approx(np.linalg.norm(C.tau(z).data, 2))
        assert nz == pytest.approx(np.sqrt(np.linalg.norm(r @ r + s @ s, 2)))
        assert max(np.linalg.norm(r, 2), np.linalg.norm(s, 2)) <= nz + 1e-12
        a = rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3))
        w = a + 1j * b
        assert np.linalg.norm(w, 2) == pytest.approx(np.linalg.norm(w.conj(), 2))
