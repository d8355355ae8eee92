"""Search for quadratic first integrals.

Two families of candidates are searched, both reduced to exact homogeneous
linear systems:

* time-polynomial chains of length ``n`` whose only unknowns are
  ``(C0, L0, G, s)``; the higher members ``C_k, L_k`` follow by recursion;
* exponential integrals ``I = exp(lam t) (lam C qdot qdot + lam L qdot + L.Q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np

from .errors import DegreeOverflow, EmptyAnsatz, LambdaZero, NotApplicable, VerificationFailed
from .exactalg import (ONE, ZERO, LambdaMatrix, RatFunc, RowReducer, Scalar, ScalarMatrix, UniPoly,
                       as_scalar, determinant, nullspace, rank, solve_combination)
from .geometry import DynamicalSystem, VelocityExpr, kt_residual, sym_cov_deriv
from .killing import KTFamily, solve_kt
from .linsys import ConstraintAssembler, poly_basis, vectorize
from .verify import certify_exact

__all__ = [
    "Ansatz",
    "QFI",
    "SolutionSpace",
    "VerificationFailed",
    "find_integral1",
    "find_integral1_converged",
    "find_integral2",
    "lambda_scan",
    "LambdaList",
    "parity_split",
    "quadratic_form",
    "expr_vectors",
]

MAX_ANSATZ_DEGREE = 8


@dataclass
class Ansatz:
    """Unknown function spaces for the searches.

    ``kt_family`` fixes the Killing tensors used for ``C0`` (or ``C`` in the exponential family);
    when absent the bounded solver runs with ``kt_degree``. ``l_degree`` and
    ``g_degree`` bound the polynomial degrees of ``L`` and ``G``; ``window``
    allows powers of the declared denominator factors in them.
    """

    kt_family: KTFamily | None = None
    kt_degree: int | None = None
    l_degree: int = 3
    g_degree: int = 4
    window: int = 0

    def check(self):
        for d in (self.kt_degree, self.l_degree, self.g_degree):
            if d is not None and d > MAX_ANSATZ_DEGREE:
                raise DegreeOverflow(f"ansatz degree {d} exceeds {MAX_ANSATZ_DEGREE}")

    def family(self, sys: DynamicalSystem) -> KTFamily:
        if self.kt_family is not None:
            if self.kt_family.geometry.dim != sys.dim:
                raise ValueError("Killing tensor family has the wrong dimension")
            return self.kt_family
        return solve_kt(sys.geometry, self.kt_degree)

    def key(self):
        return (id(self.kt_family), self.kt_degree, self.l_degree, self.g_degree, self.window)


# -- small tensor helpers ----------------------------------------------------

def _zero_mat(n, zero):
    return [[zero] * n for _ in range(n)]


def _add_mat(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _scale_mat(A, c):
    return [[a * c if not a.is_zero() else a for a in r] for r in A]


def _scale_vec(v, c):
    return [a * c if not a.is_zero() else a for a in v]


def _sym_CA(C, A, zero):
    """``C_c(a A^c_b)``."""
    n = len(C)
    half = Scalar(1) / 2
    CA = [[zero] * n for _ in range(n)]   # CA[a][b] = C_ca A^c_b
    for a in range(n):
        for b in range(n):
            s = zero
            for c in range(n):
                if not C[c][a].is_zero() and not A[c][b].is_zero():
                    s = s + C[c][a] * A[c][b]
            CA[a][b] = s
    return [[(CA[a][b] + CA[b][a]) * half for b in range(n)] for a in range(n)]


def _CQ(C, Q, zero):
    return [sum((C[a][b] * Q[b] for b in range(len(Q)) if not C[a][b].is_zero() and not Q[b].is_zero()), zero)
            for a in range(len(Q))]


def _LA(L, A, zero):
    n = len(L)
    return [sum((L[b] * A[b][a] for b in range(n) if not L[b].is_zero() and not A[b][a].is_zero()), zero)
            for a in range(n)]


def _dot(L, Q, zero):
    return sum((l * q for l, q in zip(L, Q) if not l.is_zero() and not q.is_zero()), zero)


def _grad(f, n):
    return [f.diff(a) for a in range(n)]


def _mat_items(M, tag):
    n = len(M)
    return {(tag, a, b): M[a][b] for a in range(n) for b in range(a, n)}


def _vec_items(v, tag):
    return {(tag, a): x for a, x in enumerate(v)}


def quadratic_form(C, L, K, dim, factors, lam=ZERO, N=0) -> VelocityExpr:
    """``(C_ab qdot^a qdot^b + L_a qdot^a + K) t^N exp(lam t)`` as a VelocityExpr."""
    terms = {}
    lam = as_scalar(lam)

    def put(alpha, v):
        if v.is_zero():
            return
        k = (lam, N, alpha)
        if k in terms:
            s = terms[k] + v
            if s.is_zero():
                del terms[k]
            else:
                terms[k] = s
        else:
            terms[k] = v

    if C is not None:
        for a in range(dim):
            for b in range(a, dim):
                e = [0] * dim
                e[a] += 1
                e[b] += 1
                put(tuple(e), C[a][b] if a == b else C[a][b] * 2)
    if L is not None:
        for a in range(dim):
            e = [0] * dim
            e[a] = 1
            put(tuple(e), L[a])
    if K is not None:
        put((0,) * dim, K)
    return VelocityExpr(dim, factors, terms)


# -- result containers -----------------------------------------------------------

class QFI:
    """A certified quadratic first integral with its provenance.

    ``expr`` holds the value as a VelocityExpr; ``chain`` keeps the data it was
    assembled from (``C``, ``L`` lists, ``G``, ``s`` for chains; ``C``, ``L``
    and ``lam`` for exponential integrals).
    """

    def __init__(self, expr: VelocityExpr, system: DynamicalSystem, provenance: tuple,
                 chain: dict | None = None, label: str = ""):
        self.expr = expr
        self.system = system
        self.provenance = provenance
        self.chain = chain or {}
        self.label = label
        self.certified = False

    @property
    def s(self):
        return self.chain.get("s")

    def terms(self):
        """``[(profile, K_ab, K_a, K)]`` with ``profile = (lam, N)``."""
        parts = self.expr.coefficient_parts()
        return [(prof, *parts[prof]) for prof in sorted(parts, key=lambda p: (p[0].sort_key(), -p[1]))]

    def format(self, names=None) -> str:
        return self.expr.format(names or self.system.geometry.coords)

    def provenance_text(self) -> str:
        kind, val = self.provenance
        if kind == "integral1":
            return f"polynomial chain, n={val}"
        if kind == "integral2":
            return f"exponential, lambda={val}"
        return f"{kind} {val}"

    def __repr__(self):
        return f"QFI({self.format()!r}, {self.provenance_text()})"


def expr_vectors(exprs: Sequence[VelocityExpr]) -> list[dict]:
    return vectorize([e.terms for e in exprs])


@dataclass
class SolutionSpace:
    system: DynamicalSystem
    basis: list
    mode: tuple
    ansatz: Ansatz | None = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self):
        return len(self.basis)

    def __iter__(self):
        return iter(self.basis)

    def coordinates(self, expr) -> list | None:
        """Coefficients expressing ``expr`` in the basis (exact), or None."""
        target = expr.expr if hasattr(expr, "expr") else expr
        vecs = expr_vectors([b.expr for b in self.basis] + [target])
        ncols = 1 + max((j for v in vecs for j in v), default=-1)
        dense = [[v.get(j, ZERO) for j in range(ncols)] for v in vecs]
        return solve_combination(dense[:-1], dense[-1])

    def contains(self, expr) -> bool:
        return self.coordinates(expr) is not None

    def expressions(self) -> list[VelocityExpr]:
        return [b.expr for b in self.basis]


def _normalizer(expr: VelocityExpr) -> Scalar:
    """Factor making the coefficients coprime integers with a positive leading one."""
    den, num = 1, 0
    lead = None
    keys = sorted(expr.terms, key=lambda k: (k[0].sort_key(), -k[1], -sum(k[2]), tuple(-x for x in k[2])))
    for k in keys:
        for _, c in expr.terms[k].num.sorted_terms():
            if lead is None:
                lead = c
            for part in (c.re, c.im):
                if part:
                    den = gmpy2.lcm(den, part.denominator)
    if lead is None:
        return ONE
    for k in keys:
        for _, c in expr.terms[k].num.sorted_terms():
            for part in (c.re, c.im):
                if part:
                    num = gmpy2.gcd(num, part.numerator * (den // part.denominator))
    f = Scalar(gmpy2.mpq(den, num))
    first = lead.re if lead.re else lead.im
    return -f if first < 0 else f


def _normalize(q: QFI) -> QFI:
    f = _normalizer(q.expr)
    if f == ONE:
        return q
    q.expr = q.expr.scale(f)
    for key, val in list(q.chain.items()):
        if key == "lam":
            continue
        q.chain[key] = _scale_nested(val, f)
    return q


def _scale_nested(v, f):
    if isinstance(v, list):
        return [_scale_nested(x, f) for x in v]
    return v if v.is_zero() else v * f


def _certify_all(qfis, sys):
    for q in qfis:
        cert = certify_exact(q, sys)
        if not cert.certified:
            raise VerificationFailed(f"candidate {q.format()} is not conserved; residual {cert.residual}")
        q.certified = True


def _combine_exprs(exprs, coeffs, dim, factors) -> VelocityExpr:
    acc: dict = {}
    for e, c in zip(exprs, coeffs):
        if not c:
            continue
        for k, v in e.terms.items():
            w = v * c
            if k in acc:
                w = acc[k] + w
                if w.is_zero():
                    del acc[k]
                    continue
            acc[k] = w
    return VelocityExpr._raw(dim, factors, acc)


def _combine_lin(items, coeffs, zero):
    """Linear combination of nested lists / RatFuncs with the same shape."""
    def comb(parts):
        first = parts[0]
        if isinstance(first, list):
            return [comb([p[i] for p in parts]) for i in range(len(first))]
        acc = zero
        for p, c in zip(parts, coeffs):
            if c and not p.is_zero():
                acc = acc + p * c
        return acc
    return comb(items)


# -- polynomial chains -----------------------------------------------------------------

def _chain(sys: DynamicalSystem, C0, L0, G, s, n: int):
    """Recursive chain ``C_k, L_k`` (k = 0..n) and the imposed conditions."""
    g = sys.geometry
    dim = g.dim
    zero = g.zero()
    A, Q = sys.A, sys.Q
    hasA = sys.has_A
    Cs = [C0]
    Ls = [L0]
    cons = {}

    def CA(C):
        return _sym_CA(C, A, zero) if hasA else None

    def LA(L):
        return _LA(L, A, zero) if hasA else None

    if n >= 1:
        C1 = [[-x for x in r] for r in sym_cov_deriv(L0, g)]
        if hasA:
            C1 = _add_mat(C1, _scale_mat(CA(C0), -2))
        L1 = [x * 2 for x in _CQ(C0, Q, zero)]
        if hasA:
            L1 = [a - b for a, b in zip(L1, LA(L0))]
        L1 = [a - b for a, b in zip(L1, _grad(G, dim))]
        Cs.append(C1)
        Ls.append(L1)
        for k in range(1, n):
            Ck, Lk, Lkm = Cs[k], Ls[k], Ls[k - 1]
            Cn = [[-x for x in r] for r in sym_cov_deriv(Lk, g)]
            if hasA:
                Cn = _add_mat(Cn, _scale_mat(CA(Ck), Scalar(-2, 0) / k))
            Ln = [x * 2 for x in _CQ(Ck, Q, zero)]
            if hasA:
                Ln = [a - b * k for a, b in zip(Ln, LA(Lk))]
            Ln = [a - b for a, b in zip(Ln, _grad(_dot(Lkm, Q, zero), dim))]
            Ln = [x * (Scalar(1) / (k * (k + 1))) for x in Ln]
            Cs.append(Cn)
            Ls.append(Ln)
        for k in range(1, n + 1):
            for key, v in kt_residual(Cs[k], g).items():
                cons[("kt", k) + key] = v
        Cn, Ln = Cs[n], Ls[n]
        t1 = sym_cov_deriv(Ln, g)
        if hasA:
            t1 = _add_mat(t1, _scale_mat(CA(Cn), Scalar(2) / n))
        cons.update(_mat_items(t1, "t1"))
        t2 = _grad(_dot(Ls[n - 1], Q, zero), dim)
        t2 = [a - b * 2 for a, b in zip(t2, _CQ(Cn, Q, zero))]
        if hasA:
            t2 = [a + b * n for a, b in zip(t2, LA(Ln))]
        cons.update(_vec_items(t2, "t2"))
    else:
        t1 = sym_cov_deriv(L0, g)
        if hasA:
            t1 = _add_mat(t1, _scale_mat(CA(C0), 2))
        cons.update(_mat_items(t1, "t1"))
        t2 = [a - b * 2 for a, b in zip(_grad(G, dim), _CQ(C0, Q, zero))]
        if hasA:
            t2 = [a + b for a, b in zip(t2, LA(L0))]
        cons.update(_vec_items(t2, "t2"))
    cons[("t3",)] = _dot(Ls[n], Q, zero) - s
    return Cs, Ls, cons


def _integral1_expr(sys, Cs, Ls, G, s, n) -> VelocityExpr:
    g = sys.geometry
    dim, factors, zero = g.dim, g.factors, g.zero()
    e = quadratic_form(Cs[0], Ls[0], G, dim, factors)
    for N in range(1, n + 1):
        e = e + quadratic_form(_scale_mat(Cs[N], Scalar(1) / N), Ls[N], None, dim, factors, N=N)
    for k in range(n):
        e = e + quadratic_form(None, None, _dot(Ls[k], sys.Q, zero) * (Scalar(1) / (k + 1)), dim, factors, N=k + 1)
    if not s.is_zero():
        e = e + quadratic_form(None, None, s * (Scalar(1) / (n + 1)), dim, factors, N=n + 1)
    return e


def _integral1_columns(sys: DynamicalSystem, ansatz: Ansatz):
    g = sys.geometry
    fam = ansatz.family(sys)
    lfuncs = poly_basis(g.dim, ansatz.l_degree, g.factors, ansatz.window) if ansatz.l_degree >= 0 else []
    gfuncs = (poly_basis(g.dim, ansatz.g_degree, g.factors, ansatz.window, include_constant=False)
              if ansatz.g_degree >= 0 else [])
    cols = [("C", i) for i in range(fam.dim)]
    cols += [("L", a, f) for a in range(g.dim) for f in lfuncs]
    cols += [("G", f) for f in gfuncs]
    cols.append(("s",))
    return fam, cols


def _unknowns(sys, fam, col):
    g = sys.geometry
    zero = g.zero()
    dim = g.dim
    C0 = _zero_mat(dim, zero)
    L0 = [zero] * dim
    G = zero
    s = zero
    if col[0] == "C":
        C0 = fam.basis[col[1]]
    elif col[0] == "L":
        L0 = list(L0)
        L0[col[1]] = col[2]
    elif col[0] == "G":
        G = col[1]
    else:
        s = RatFunc.constant(1, dim, g.factors)
    return C0, L0, G, s


def find_integral1(sys: DynamicalSystem, n: int = 2, ansatz: Ansatz | None = None,
                   verify: bool = True) -> SolutionSpace:
    """All chain integrals of length ``n`` inside the ansatz, constants removed."""
    if n < 0:
        raise ValueError("chain length must be non-negative")
    ansatz = ansatz or Ansatz()
    ansatz.check()
    fam, cols = _integral1_columns(sys, ansatz)
    if len(cols) <= 1 and fam.dim == 0:
        raise EmptyAnsatz("no unknowns in the chain ansatz")
    g = sys.geometry
    asm = ConstraintAssembler(len(cols))
    data = []
    for j, col in enumerate(cols):
        C0, L0, G, s = _unknowns(sys, fam, col)
        Cs, Ls, cons = _chain(sys, C0, L0, G, s, n)
        asm.set_column(j, cons)
        data.append((Cs, Ls, G, s))
    kernel = nullspace(asm.matrix())
    exprs = [_integral1_expr(sys, Cs, Ls, G, s, n) for (Cs, Ls, G, s) in data]
    zero = g.zero()
    basis = []
    for v in kernel:
        expr = _combine_exprs(exprs, v, g.dim, g.factors)
        chain = {
            "C": _combine_lin([d[0] for d in data], v, zero),
            "L": _combine_lin([d[1] for d in data], v, zero),
            "G": _combine_lin([d[2] for d in data], v, zero),
            "s": _combine_lin([d[3] for d in data], v, zero),
        }
        basis.append(_normalize(QFI(expr, sys, ("integral1", n), chain)))
    if verify:
        _certify_all(basis, sys)
    return SolutionSpace(sys, basis, ("integral1", n), ansatz)


def find_integral1_converged(sys: DynamicalSystem, ansatz: Ansatz | None = None, start: int = 0,
                             cap: int = 6) -> SolutionSpace:
    """Increase ``n`` until the dimension is unchanged twice in a row (or ``n = cap``)."""
    dims = []
    space = None
    for n in range(start, cap + 1):
        space = find_integral1(sys, n, ansatz)
        dims.append(space.dim)
        if len(dims) >= 3 and dims[-1] == dims[-2] == dims[-3]:
            break
    return space


# -- exponential integrals -----------------------------------------------------------------

_I2_CACHE_ATTR = "_integral2_cache"


def _integral2_system(sys: DynamicalSystem, ansatz: Ansatz):
    cache = sys.__dict__.setdefault(_I2_CACHE_ATTR, {})
    key = ansatz.key()
    if key in cache:
        return cache[key]
    g = sys.geometry
    dim = g.dim
    zero = g.zero()
    fam = ansatz.family(sys)
    lfuncs = poly_basis(dim, ansatz.l_degree, g.factors, ansatz.window) if ansatz.l_degree >= 0 else []
    cols = [("C", i) for i in range(fam.dim)] + [("L", a, f) for a in range(dim) for f in lfuncs]
    if not cols:
        raise EmptyAnsatz("no unknowns in the exponential ansatz")
    asm = ConstraintAssembler(len(cols), layers=3)
    parts = []
    for j, col in enumerate(cols):
        C, L, _, _ = _unknowns(sys, fam, col)
        # lam C + L_(a;b) + 2 C_c(a A^c_b) = 0
        m0 = sym_cov_deriv(L, g)
        if sys.has_A:
            m0 = _add_mat(m0, _scale_mat(_sym_CA(C, sys.A, zero), 2))
        m1 = C
        # (L.Q)_,a - 2 lam C_ab Q^b + lam^2 L_a + lam L_b A^b_a = 0
        v0 = _grad(_dot(L, sys.Q, zero), dim)
        v1 = [x * -2 for x in _CQ(C, sys.Q, zero)]
        if sys.has_A:
            v1 = [a + b for a, b in zip(v1, _LA(L, sys.A, zero))]
        v2 = L
        l0 = {**_mat_items(m0, "m"), **_vec_items(v0, "v")}
        l1 = {**_mat_items(m1, "m"), **_vec_items(v1, "v")}
        l2 = _vec_items(v2, "v")
        asm.set_column(j, l0, 0)
        asm.set_column(j, l1, 1)
        asm.set_column(j, l2, 2)
        parts.append((C, L, _dot(L, sys.Q, zero)))
    lm = LambdaMatrix(asm.matrices())
    cache[key] = (fam, cols, lm, parts)
    return cache[key]


def integral2_matrix(sys: DynamicalSystem, ansatz: Ansatz | None = None) -> LambdaMatrix:
    """Condition matrix ``M(lam) = M0 + lam M1 + lam^2 M2`` of the exponential search."""
    return _integral2_system(sys, ansatz or Ansatz())[2]


def find_integral2(sys: DynamicalSystem, lam, ansatz: Ansatz | None = None, verify: bool = True) -> SolutionSpace:
    lam = as_scalar(lam)
    if not lam:
        raise LambdaZero("the exponential search needs lam != 0")
    ansatz = ansatz or Ansatz()
    ansatz.check()
    fam, cols, lm, parts = _integral2_system(sys, ansatz)
    g = sys.geometry
    zero = g.zero()
    kernel = nullspace(lm.at(lam))
    basis = []
    for v in kernel:
        C = _combine_lin([p[0] for p in parts], v, zero)
        L = _combine_lin([p[1] for p in parts], v, zero)
        LQ = _combine_lin([p[2] for p in parts], v, zero)
        expr = quadratic_form(_scale_mat(C, lam), _scale_vec(L, lam), LQ, g.dim, g.factors, lam=lam)
        basis.append(_normalize(QFI(expr, sys, ("integral2", lam), {"C": C, "L": L, "lam": lam})))
    if verify:
        _certify_all(basis, sys)
    return SolutionSpace(sys, basis, ("integral2", lam), ansatz)


class LambdaList(list):
    """Exact lam values with nontrivial exponential integrals.

    ``approximate`` lists numerically located values that are not Gaussian
    rationals; ``generic_rank`` and ``ncols`` describe the condition matrix.
    """

    def __init__(self, values=(), approximate=(), generic_rank=None, ncols=None, mode=""):
        super().__init__(values)
        self.approximate = list(approximate)
        self.generic_rank = generic_rank
        self.ncols = ncols
        self.mode = mode


def _heuristic_candidates(sys: DynamicalSystem) -> list[Scalar]:
    base = [Scalar(1)]
    for v in sys.constants.values():
        v = as_scalar(v)
        if v and v not in base:
            base.append(v)
    out = []
    for b in base:
        for k in range(1, 5):
            for sgn in (1, -1):
                c = b * (k * sgn)
                if c not in out:
                    out.append(c)
    return out


def _rationalize(z: complex, max_den: int = 64) -> Scalar:
    from fractions import Fraction
    re = Fraction(z.real).limit_denominator(max_den)
    im = Fraction(z.imag).limit_denominator(max_den)
    return Scalar(re, im)


def lambda_scan(sys: DynamicalSystem, ansatz: Ansatz | None = None, mode: str = "exact",
                candidates: Sequence | None = None, seed: int = 0, projections: int = 3,
                sweep: tuple = (-8.0, 8.0, 1601)) -> LambdaList:
    """Values of ``lam != 0`` where the exponential search has solutions.

    ``exact`` tests candidate values; ``minor-roots`` finds the roots of the
    gcd of random projected minors of ``M(lam)``; ``float-sweep`` looks for
    rank drops on a real grid. Every returned value is confirmed exactly.
    """
    ansatz = ansatz or Ansatz()
    fam, cols, lm, parts = _integral2_system(sys, ansatz)
    ncols = lm.ncols
    rng = np.random.default_rng(seed)

    def nontrivial(lam):
        return rank(lm.at(lam)) < ncols

    # generic rank at a couple of random integer points
    generic = max(rank(lm.at(Scalar(int(rng.integers(1000, 100000)), 1))) for _ in range(2))

    if mode == "exact":
        cands = [as_scalar(c) for c in candidates] if candidates is not None else _heuristic_candidates(sys)
        found = []
        for c in cands:
            if c and c not in found and nontrivial(c):
                found.append(c)
        return LambdaList(found, (), generic, ncols, mode)

    if mode == "minor-roots":
        return _minor_roots(lm, generic, ncols, rng, projections)

    if mode == "float-sweep":
        lo, hi, count = sweep
        grid = np.linspace(lo, hi, int(count))
        sv = []
        for x in grid:
            s = np.linalg.svd(lm.numeric_at(complex(x)), compute_uv=False)
            smin = s[ncols - 1] if len(s) >= ncols else 0.0
            sv.append(smin / max(s[0], 1e-300))
        sv = np.array(sv)
        found, approx = [], []
        for i in range(1, len(grid) - 1):
            if sv[i] <= sv[i - 1] and sv[i] <= sv[i + 1] and sv[i] < 1e-3:
                c = _rationalize(complex(grid[i]), 16)
                if c and c not in found and nontrivial(c):
                    found.append(c)
                elif sv[i] < 1e-8:
                    approx.append(complex(grid[i]))
        return LambdaList(found, approx, generic, ncols, mode)
    raise ValueError(f"unknown lambda scan mode {mode!r}")


def _bareiss(a: list) -> int:
    """Determinant of an integer matrix by fraction-free elimination."""
    a = [list(r) for r in a]
    n = len(a)
    sign, prev = 1, 1
    for c in range(n - 1):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            sign = -sign
        p = a[c][c]
        for r in range(c + 1, n):
            arc = a[r][c]
            row, rowc = a[r], a[c]
            for j in range(c + 1, n):
                row[j] = (p * row[j] - arc * rowc[j]) // prev
        prev = p
    return sign * a[n - 1][n - 1]


def _projected(lm: LambdaMatrix, P, R) -> list:
    """``P M_k R`` for each coefficient matrix, as dense Scalar lists."""
    r = P.shape[0]
    out = []
    for C in lm.coeffs:
        PC = [dict() for _ in range(r)]
        for i, row in enumerate(C.rows_data):
            if not row:
                continue
            for a in range(r):
                w = int(P[a, i])
                if w:
                    acc = PC[a]
                    for j, v in row.items():
                        acc[j] = acc.get(j, ZERO) + v * w
        dense = [[ZERO] * r for _ in range(r)]
        for a in range(r):
            for j, v in PC[a].items():
                if not v:
                    continue
                for b in range(r):
                    w = int(R[j, b])
                    if w:
                        dense[a][b] = dense[a][b] + v * w
        out.append(dense)
    return out


def _minor_roots(lm: LambdaMatrix, r: int, ncols: int, rng, projections: int) -> LambdaList:
    if r == 0:
        return LambdaList([], [], r, ncols, "minor-roots")
    deg = lm.degree * r
    nrows = lm.nrows
    g = None
    for _ in range(projections):
        # random integer projections stand in for a choice of r x r minor
        P = rng.integers(-9, 10, size=(r, nrows))
        R = rng.integers(-9, 10, size=(ncols, r))
        proj = _projected(lm, P, R)
        xs = list(range(deg + 1))
        real = all(v.is_real() for M in proj for row in M for v in row)
        ys = []
        if real:
            # clear denominators so the determinant runs over the integers;
            # a constant factor does not move the roots
            den = 1
            for M in proj:
                for row in M:
                    for v in row:
                        den = gmpy2.lcm(den, v.re.denominator)
            ints = [[[int(v.re * den) for v in row] for row in M] for M in proj]
            for x in xs:
                pw = [x ** k for k in range(len(ints))]
                M = [[sum(ints[k][a][b] * pw[k] for k in range(len(ints))) for b in range(r)] for a in range(r)]
                ys.append(Scalar(_bareiss(M)))
        else:
            for x in xs:
                M = [[sum((proj[k][a][b] * (x ** k) for k in range(len(proj))), ZERO) for b in range(r)]
                     for a in range(r)]
                ys.append(determinant(M))
        p = UniPoly.interpolate(xs, ys)
        g = p if g is None else g.gcd(p)
        if g.degree <= 0:
            break
    found, approx = [], []
    if g is not None and g.degree > 0:
        sf = g.squarefree()
        for z in sf.numeric_roots():
            if abs(z) < 1e-9:
                continue
            c = _rationalize(complex(z), 1 << 12)
            if c and sf(c) == ZERO and rank(lm.at(c)) < r:
                if c not in found:
                    found.append(c)
            else:
                approx.append(complex(z))
    found.sort(key=lambda c: (abs(complex(c)), c.sort_key()))
    return LambdaList(found, approx, r, ncols, "minor-roots")


# -- even / odd split -------------------------------------------------------------

def parity_split(sol: SolutionSpace) -> tuple[SolutionSpace, SolutionSpace]:
    """Split each integral by parity of (power of t + velocity degree).

    Valid when ``A = 0``: then each parity class is conserved on its own.
    """
    sys = sol.system
    if sys.has_A:
        raise NotApplicable("the even/odd split needs A = 0")
    if any(q.expr.lambdas() - {ZERO} for q in sol.basis):
        raise NotApplicable("the even/odd split applies to time-polynomial integrals")
    evens, odds = [], []
    for q in sol.basis:
        e, o = q.expr.time_parity_parts()
        if not e.is_zero():
            evens.append(QFI(e, sys, q.provenance, {}, "even"))
        if not o.is_zero():
            odds.append(QFI(o, sys, q.provenance, {}, "odd"))
    evens = [_normalize(q) for q in _independent(evens)]
    odds = [_normalize(q) for q in _independent(odds)]
    _certify_all(evens + odds, sys)
    return (SolutionSpace(sys, evens, sol.mode + ("even",), sol.ansatz),
            SolutionSpace(sys, odds, sol.mode + ("odd",), sol.ansatz))


def _independent(qfis: list) -> list:
    if not qfis:
        return []
    vecs = expr_vectors([q.expr for q in qfis])
    real = all(v.is_real() for vec in vecs for v in vec.values())
    red = RowReducer(1 + max((j for v in vecs for j in v), default=0), real=real)
    return [q for q, v in zip(qfis, vecs) if v and red.add(v)]
