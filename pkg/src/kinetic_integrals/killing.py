"""Second order Killing tensors: ansatz solver, closed-form families, reducibility."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .errors import DegreeOverflow
from .exactalg import ONE, ZERO, RatFunc, RowReducer, Scalar, SpacePoly, nullspace, solve_combination
from .geometry import Geometry, kt_residual, sym_cov_deriv
from .linsys import ConstraintAssembler, poly_basis, vectorize

__all__ = [
    "KTFamily",
    "CollineationTable",
    "Reduction",
    "solve_kt",
    "builtin_family",
    "reduce_kt",
    "reducing_vectors",
    "collineation_table",
    "is_killing_tensor",
    "combine_matrix",
]

MAX_KT_DEGREE = 8


def _sym_unit(n, a, b, value: RatFunc, zero: RatFunc):
    M = [[zero] * n for _ in range(n)]
    M[a][b] = value
    M[b][a] = value
    return M


def combine_matrix(basis: Sequence, coeffs: Sequence, zero: RatFunc):
    """``sum_i coeffs[i] * basis[i]`` for square matrices of RatFunc."""
    n = len(basis[0]) if basis else 0
    out = [[zero] * n for _ in range(n)]
    for B, c in zip(basis, coeffs):
        if not c:
            continue
        for a in range(n):
            for b in range(n):
                if not B[a][b].is_zero():
                    out[a][b] = out[a][b] + B[a][b] * c
    return out


def _matrix_key(M) -> dict:
    n = len(M)
    return {(a, b): M[a][b] for a in range(n) for b in range(a, n)}


def is_killing_tensor(C, g: Geometry) -> bool:
    return all(v.is_zero() for v in kt_residual(C, g).values())


@dataclass
class KTFamily:
    """Basis of a space of Killing tensors of a geometry."""

    geometry: Geometry
    basis: list
    names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.names:
            self.names = [f"c{i + 1}" for i in range(len(self.basis))]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self):
        return len(self.basis)

    def general(self, coeffs):
        return combine_matrix(self.basis, coeffs, self.geometry.zero())

    def vectors(self) -> list[dict]:
        return vectorize([_matrix_key(B) for B in self.basis])

    def rank(self) -> int:
        vecs = self.vectors()
        real = all(v.is_real() for vec in vecs for v in vec.values())
        red = RowReducer(1 + max((j for vec in vecs for j in vec), default=0), real=real)
        for v in vecs:
            if v:
                red.add(v)
        return red.rank

    def coordinates(self, C) -> list | None:
        """Coefficients of ``C`` in this basis, or None when outside the span."""
        vecs = vectorize([_matrix_key(B) for B in self.basis] + [_matrix_key(C)])
        ncols = 1 + max((j for vec in vecs for j in vec), default=0)
        dense = [[vec.get(j, ZERO) for j in range(ncols)] for vec in vecs]
        return solve_combination(dense[:-1], dense[-1])

    def contains(self, C) -> bool:
        return self.coordinates(C) is not None

    def verify(self) -> bool:
        return all(is_killing_tensor(B, self.geometry) for B in self.basis)


def solve_kt(g: Geometry, degree: int | None = None, window: int | None = None) -> KTFamily:
    """All Killing tensors whose components lie in the bounded ansatz.

    Components are polynomials of total degree at most ``degree`` divided by
    powers ``0..window`` of each declared factor. Defaults: degree 2 and no
    window for flat metrics, degree 6 and window 2 otherwise.
    """
    if degree is None:
        degree = 2 if g.flat else 6
    if window is None:
        window = 0 if (g.flat or not g.factors) else 2
    if degree > MAX_KT_DEGREE:
        raise DegreeOverflow(f"Killing tensor ansatz degree {degree} exceeds {MAX_KT_DEGREE}")
    key = ("kt", degree, window)
    if key in g._cache:
        return g._cache[key]
    n = g.dim
    funcs = poly_basis(n, degree, g.factors, window)
    zero = g.zero()
    cols = []
    for a in range(n):
        for b in range(a, n):
            for f in funcs:
                cols.append((a, b, f))
    asm = ConstraintAssembler(len(cols))
    for j, (a, b, f) in enumerate(cols):
        asm.set_column(j, kt_residual(_sym_unit(n, a, b, f, zero), g))
    kernel = nullspace(asm.matrix())
    basis = []
    for v in kernel:
        M = [[zero] * n for _ in range(n)]
        for c, (a, b, f) in zip(v, cols):
            if c:
                M[a][b] = M[a][b] + f * c
                if a != b:
                    M[b][a] = M[a][b]
        basis.append(M)
    fam = KTFamily(g, basis)
    g._cache[key] = fam
    return fam


# -- closed-form families --------------------------------------------------

def _outer_sym(u, v, n):
    return [[(u[a] * v[b] + u[b] * v[a]) for b in range(n)] for a in range(n)]


def builtin_family(space: str, epsilon: int = 1) -> KTFamily:
    """Closed-form Killing tensor families.

    ``space`` is ``"V2"`` (metric diag(epsilon, 1)), ``"E3"`` (twenty
    component parameters a1..a20) or ``"E3_covariant"`` (parameters of the
    tensors A^{mn}, B_i^l, lambda^k, D_ij).
    """
    key = space.replace("-", "_").lower()
    if key in ("v2", "e2"):
        return _family_v2(epsilon)
    if key == "e3":
        return _family_e3()
    if key in ("e3_covariant", "e3cov"):
        return _family_e3_covariant()
    raise ValueError(f"unknown built-in space {space!r}")


def _family_v2(eps: int) -> KTFamily:
    if eps not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    x, y = SpacePoly.variable(0, 2), SpacePoly.variable(1, 2)
    one = SpacePoly.constant(1, 2)
    zero = SpacePoly.zero(2)
    met = [[SpacePoly.constant(eps, 2), zero], [zero, one]]
    g = Geometry(met, met, (), ["x", "y"])
    k1 = [one, zero]
    k2 = [zero, one]
    r = [y * eps, x * (-eps)]
    half = Scalar(1) / 2
    basis_poly = {
        "gamma": [[r[a] * r[b] for b in range(2)] for a in range(2)],
        "a": _outer_sym(k1, r, 2),
        "beta": [[-v for v in row] for row in _outer_sym(k2, r, 2)],
        "A": [[k1[a] * k1[b] for b in range(2)] for a in range(2)],
        "B": [[k2[a] * k2[b] for b in range(2)] for a in range(2)],
        "C": _outer_sym(k1, k2, 2),
    }
    basis = [[[g.rf(p) for p in row] for row in M] for M in basis_poly.values()]
    return KTFamily(g, basis, list(basis_poly))


def _e3_geometry() -> Geometry:
    return Geometry.euclidean(3, ["x", "y", "z"])


def _family_e3() -> KTFamily:
    g = _e3_geometry()
    x, y, z = (SpacePoly.variable(i, 3) for i in range(3))
    one = SpacePoly.constant(1, 3)
    h = Scalar(1) / 2
    basis = []
    names = []
    for idx in range(1, 21):
        a = {k: (ONE if k == idx else ZERO) for k in range(1, 21)}
        C11 = y * y * (a[6] * h) + z * z * (a[1] * h) + y * z * a[4] + y * a[5] + z * a[2] + one * a[3]
        C12 = (z * z * (a[10] * h) - x * y * (a[6] * h) - x * z * (a[4] * h) - y * z * (a[14] * h)
               - x * (a[5] * h) - y * (a[15] * h) + z * a[16] + one * a[17])
        C13 = (y * y * (a[14] * h) - x * y * (a[4] * h) - x * z * (a[1] * h) - y * z * (a[10] * h)
               - x * (a[2] * h) + y * a[18] - z * (a[11] * h) + one * a[19])
        C22 = x * x * (a[6] * h) + z * z * (a[7] * h) + x * z * a[14] + x * a[15] + z * a[12] + one * a[13]
        C23 = (x * x * (a[4] * h) - x * y * (a[14] * h) - x * z * (a[10] * h) - y * z * (a[7] * h)
               - x * (a[16] + a[18]) - y * (a[12] * h) - z * (a[8] * h) + one * a[20])
        C33 = x * x * (a[1] * h) + y * y * (a[7] * h) + x * y * a[10] + x * a[11] + y * a[8] + one * a[9]
        M = [[C11, C12, C13], [C12, C22, C23], [C13, C23, C33]]
        basis.append([[g.rf(p) for p in row] for row in M])
        names.append(f"a{idx}")
    return KTFamily(g, basis, names)


def _levi(i, j, k) -> int:
    return ((i - j) * (j - k) * (k - i)) // 2


def _family_e3_covariant() -> KTFamily:
    g = _e3_geometry()
    q = [SpacePoly.variable(i, 3) for i in range(3)]
    zero = SpacePoly.zero(3)
    half = Scalar(1) / 2
    sym_pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    basis, names = [], []

    def sym_unit(m, n):
        T = [[ZERO] * 3 for _ in range(3)]
        T[m][n] = ONE
        T[n][m] = ONE
        return T

    # A^{mn} q^k q^l terms
    for (m, n) in sym_pairs:
        Amn = sym_unit(m, n)
        L = [[zero] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                s = zero
                for k in range(3):
                    for l in range(3):
                        for mm in range(3):
                            for nn in range(3):
                                c = (_levi(i, k, mm) * _levi(j, l, nn) + _levi(j, k, mm) * _levi(i, l, nn))
                                if c and Amn[mm][nn]:
                                    s = s + q[k] * q[l] * (Amn[mm][nn] * c)
                L[i][j] = s
        basis.append(L)
        names.append(f"A{m + 1}{n + 1}")
    # symmetric traceless B_i^l: five units
    b_units = [("B11-B33", {(0, 0): 1, (2, 2): -1}), ("B22-B33", {(1, 1): 1, (2, 2): -1}),
               ("B12", {(0, 1): 1, (1, 0): 1}), ("B13", {(0, 2): 1, (2, 0): 1}), ("B23", {(1, 2): 1, (2, 1): 1})]
    for name, entries in b_units:
        B = [[Scalar(entries.get((i, l), 0)) for l in range(3)] for i in range(3)]
        L = [[zero] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                s = zero
                for k in range(3):
                    for l in range(3):
                        c = B[i][l] * _levi(j, k, l) + B[j][l] * _levi(i, k, l)
                        if c:
                            s = s + q[k] * (c * half)
                L[i][j] = s
        basis.append(L)
        names.append(name)
    for k0 in range(3):
        lam = [ONE if k == k0 else ZERO for k in range(3)]
        L = [[zero] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                s = zero
                for k in range(3):
                    c = (lam[i] * (1 if j == k else 0) + lam[j] * (1 if i == k else 0)) * half
                    c = c - (lam[k] if i == j else ZERO)
                    if c:
                        s = s + q[k] * c
                L[i][j] = s
        basis.append(L)
        names.append(f"lambda{k0 + 1}")
    for (m, n) in sym_pairs:
        D = sym_unit(m, n)
        basis.append([[SpacePoly.constant(D[i][j], 3) for j in range(3)] for i in range(3)])
        names.append(f"D{m + 1}{n + 1}")
    basis = [[[g.rf(p) for p in row] for row in M] for M in basis]
    return KTFamily(g, basis, names)


# -- reducibility ----------------------------------------------------------

@dataclass
class Reduction:
    """Solutions of ``L_(a;b) = C``: a particular covector plus Killing vectors."""

    particular: list
    killing_vectors: list


def reduce_kt(C, g: Geometry, degree: int | None = None, window: int | None = None) -> Reduction | None:
    """Solve ``L_(a;b) = C`` for a covector with components in the ansatz.

    Returns None when no such ``L`` exists in the ansatz (C irreducible at
    this degree).
    """
    n = g.dim
    C = [[g.rf(C[a][b]) for b in range(n)] for a in range(n)]
    if degree is None:
        cdeg = max((C[a][b].num.degree() for a in range(n) for b in range(n)), default=0)
        degree = max(cdeg + 1, 1) if g.flat else 6
    if window is None:
        window = 0 if (g.flat or not g.factors) else 2
    if degree > MAX_KT_DEGREE:
        raise DegreeOverflow(f"reducing vector ansatz degree {degree} exceeds {MAX_KT_DEGREE}")
    funcs = poly_basis(n, degree, g.factors, window)
    zero = g.zero()
    cols = [(a, f) for a in range(n) for f in funcs]
    asm = ConstraintAssembler(len(cols) + 1)
    for j, (a, f) in enumerate(cols):
        L = [zero] * n
        L[a] = f
        asm.set_column(j, _matrix_key(sym_cov_deriv(L, g)))
    asm.set_column(len(cols), {k: -v for k, v in _matrix_key(C).items()})
    kernel = nullspace(asm.matrix())
    particular = None
    kvs = []
    for v in kernel:
        L = [zero] * n
        for c, (a, f) in zip(v, cols):
            if c:
                L[a] = L[a] + f * c
        if v[-1]:
            if particular is None:
                inv = v[-1].inverse()
                particular = [x * inv for x in L]
                continue
            # fold further solutions into Killing vectors
            inv = v[-1].inverse()
            L = [x * inv - p for x, p in zip(L, particular)]
        kvs.append(L)
    if particular is None:
        return None
    return Reduction(particular, kvs)


@dataclass
class CollineationTable:
    """Special projective collineations of flat space, as contravariant vectors."""

    dim: int
    gradient_kvs: list
    nongradient_kvs: list
    hv: list
    acs: list
    spcs: list


def collineation_table(n: int) -> CollineationTable:
    x = [SpacePoly.variable(i, n) for i in range(n)]
    one = SpacePoly.constant(1, n)
    zero = SpacePoly.zero(n)

    def unit(i, val):
        v = [zero] * n
        v[i] = val
        return v

    grad = [unit(i, one) for i in range(n)]
    rot = []
    for I, J in combinations(range(n), 2):
        v = [zero] * n
        v[I] = x[J]
        v[J] = -x[I]
        rot.append(v)
    hv = list(x)
    acs = [unit(I, x[J]) for I in range(n) for J in range(n)]
    spcs = [[x[I] * xi for xi in x] for I in range(n)]
    return CollineationTable(n, grad, rot, hv, acs, spcs)


def reducing_vectors(n: int) -> list[list[SpacePoly]]:
    """Generators ``S_I,a``, ``M_Ka``, ``HV_a``, ``S_I S_J,a`` and ``S_I M_Ka`` of flat space.

    Symmetrized derivatives of their span give all reducible Killing tensors
    of E^n. Indices are lowered with the identity metric.
    """
    t = collineation_table(n)
    x = [SpacePoly.variable(i, n) for i in range(n)]
    gens = []
    gens += t.gradient_kvs
    gens += t.nongradient_kvs
    gens.append(t.hv)
    gens += t.acs  # S_I S_J,a = x_I delta_Ja
    for I in range(n):
        for M in t.nongradient_kvs:
            gens.append([x[I] * m * 2 for m in M])
    return gens
