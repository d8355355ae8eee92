"""Kinetic metric, forces, and expressions in (t, q, qdot).

The equations of motion are

    qddot^a = -Gamma^a_bc qdot^b qdot^c - Q^a + A^a_b qdot^b

with Q^a = V^{,a} + P^a.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .errors import DegreeOverflow, DenominatorNotDeclared, InverseMismatch
from .exactalg import ONE, ZERO, RatFunc, Scalar, SpacePoly, as_scalar
from .exactalg.syntax import default_names, format_expression

__all__ = [
    "Geometry",
    "DynamicalSystem",
    "TimeExpr",
    "VelocityExpr",
    "build_geometry",
    "sym_cov_deriv",
    "cov_deriv_tensor",
    "kt_residual",
    "total_derivative",
    "momentum_map",
    "lower",
    "raise_index",
]


def _rf(x, dim, factors) -> RatFunc:
    if isinstance(x, RatFunc):
        if x.factors != factors:
            if not any(x.den):
                return RatFunc._raw(x.num, (0,) * len(factors), factors)
            if set(x.factors) <= set(factors):
                # re-express over the larger factor tuple
                den = [0] * len(factors)
                for f, k in zip(x.factors, x.den):
                    den[factors.index(f)] += k
                return RatFunc(x.num, den, factors)
            raise DenominatorNotDeclared("rational function uses an undeclared factor")
        return x
    if isinstance(x, SpacePoly):
        return RatFunc.from_poly(x, factors)
    return RatFunc.constant(as_scalar(x), dim, factors)


class Geometry:
    """Kinetic metric with verified inverse and Christoffel symbols.

    Instances hash by identity so that per-geometry caches stay cheap.
    """

    def __init__(self, metric, inverse, factors: Sequence[SpacePoly] = (), coords: Sequence[str] | None = None):
        dim = len(metric)
        self.dim = dim
        self.coords = list(coords) if coords else default_names(dim)
        if len(self.coords) != dim:
            raise ValueError("coordinate names do not match dimension")
        self.factors = tuple(factors)
        for f in self.factors:
            if f.dim != dim:
                raise ValueError("denominator factor has wrong dimension")
        self.metric = [[_rf(metric[a][b], dim, self.factors) for b in range(dim)] for a in range(dim)]
        for a in range(dim):
            for b in range(dim):
                if not self.metric[a][b].is_polynomial():
                    raise ValueError("metric entries must be polynomials")
                if self.metric[a][b] != self.metric[b][a]:
                    raise ValueError("metric is not symmetric")
        self.inverse = [[_rf(inverse[a][b], dim, self.factors) for b in range(dim)] for a in range(dim)]
        for a in range(dim):
            for c in range(dim):
                s = RatFunc.constant(0, dim, self.factors)
                for b in range(dim):
                    s = s + self.metric[a][b] * self.inverse[b][c]
                if s != (ONE if a == c else ZERO):
                    raise InverseMismatch(f"metric times inverse differs from identity at ({a},{c})")
        self.metric_poly = [[self.metric[a][b].num for b in range(dim)] for a in range(dim)]
        self.christoffel = self._christoffel()
        self.flat = all(not self.christoffel[a][b][c].num for a in range(dim) for b in range(dim) for c in range(dim))
        self._check_compatibility()
        self._cache: dict = {}

    def _christoffel(self):
        n = self.dim
        dg = [[[self.metric[a][b].diff(c) for c in range(n)] for b in range(n)] for a in range(n)]
        gam = [[[None] * n for _ in range(n)] for _ in range(n)]
        half = Scalar(1) / 2
        for a in range(n):
            for b in range(n):
                for c in range(b, n):
                    s = RatFunc.constant(0, n, self.factors)
                    for d in range(n):
                        inv = self.inverse[a][d]
                        if inv.is_zero():
                            continue
                        t = dg[d][b][c] + dg[d][c][b] - dg[b][c][d]
                        if not t.is_zero():
                            s = s + inv * t
                    s = s * half
                    gam[a][b][c] = s
                    gam[a][c][b] = s
        return gam

    def _check_compatibility(self):
        n = self.dim
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    v = self.metric[a][b].diff(c)
                    for d in range(n):
                        v = v - self.christoffel[d][c][a] * self.metric[d][b] - self.christoffel[d][c][b] * self.metric[a][d]
                    if not v.is_zero():
                        raise InverseMismatch("Christoffel symbols are not metric compatible")

    def zero(self) -> RatFunc:
        return RatFunc.constant(0, self.dim, self.factors)

    def rf(self, x) -> RatFunc:
        return _rf(x, self.dim, self.factors)

    def var(self, i: int) -> RatFunc:
        return RatFunc.from_poly(SpacePoly.variable(i, self.dim), self.factors)

    @classmethod
    def euclidean(cls, dim: int, coords: Sequence[str] | None = None) -> "Geometry":
        ident = [[SpacePoly.constant(1 if a == b else 0, dim) for b in range(dim)] for a in range(dim)]
        return cls(ident, ident, (), coords)

    @classmethod
    def diagonal(cls, entries: Sequence[SpacePoly], inverse: Sequence[RatFunc],
                 factors: Sequence[SpacePoly] = (), coords=None) -> "Geometry":
        dim = len(entries)
        zero = SpacePoly.zero(dim)
        met = [[entries[a] if a == b else zero for b in range(dim)] for a in range(dim)]
        inv = [[inverse[a] if a == b else zero for b in range(dim)] for a in range(dim)]
        return cls(met, inv, factors, coords)

    def __repr__(self):
        return f"Geometry(dim={self.dim}, coords={self.coords}, flat={self.flat})"


def build_geometry(metric, inverse, factors: Sequence[SpacePoly] = (), coords=None) -> Geometry:
    """Validate the supplied inverse and compute the Levi-Civita connection."""
    return Geometry(metric, inverse, factors, coords)


def lower(v: Sequence[RatFunc], g: Geometry) -> list[RatFunc]:
    return [sum((g.metric[a][b] * g.rf(v[b]) for b in range(g.dim)), g.zero()) for a in range(g.dim)]


def raise_index(v: Sequence[RatFunc], g: Geometry) -> list[RatFunc]:
    return [sum((g.inverse[a][b] * g.rf(v[b]) for b in range(g.dim)), g.zero()) for a in range(g.dim)]


def sym_cov_deriv(L: Sequence, g: Geometry) -> list[list[RatFunc]]:
    """``L_(a;b) = (L_a,b + L_b,a)/2 - Gamma^c_ab L_c`` for a covector ``L``."""
    n = g.dim
    L = [g.rf(x) for x in L]
    half = Scalar(1) / 2
    out = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            v = (L[a].diff(b) + L[b].diff(a)) * half
            if not g.flat:
                for c in range(n):
                    gam = g.christoffel[c][a][b]
                    if not gam.is_zero() and not L[c].is_zero():
                        v = v - gam * L[c]
            out[a][b] = v
            out[b][a] = v
    return out


def cov_deriv_tensor(C: Sequence[Sequence], g: Geometry):
    """``C_ab;c`` as a nested list ``[a][b][c]``."""
    n = g.dim
    C = [[g.rf(C[a][b]) for b in range(n)] for a in range(n)]
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            for c in range(n):
                v = C[a][b].diff(c)
                if not g.flat:
                    for d in range(n):
                        ga = g.christoffel[d][a][c]
                        if not ga.is_zero() and not C[d][b].is_zero():
                            v = v - ga * C[d][b]
                        gb = g.christoffel[d][b][c]
                        if not gb.is_zero() and not C[a][d].is_zero():
                            v = v - gb * C[a][d]
                out[a][b][c] = v
    return out


def kt_residual(C: Sequence[Sequence], g: Geometry) -> dict:
    """Components ``(a<=b<=c) -> C_ab;c + C_bc;a + C_ca;b`` of the Killing tensor equation."""
    n = g.dim
    C = [[g.rf(C[a][b]) for b in range(n)] for a in range(n)]
    out = {}
    for a in range(n):
        for b in range(a, n):
            for c in range(b, n):
                v = C[a][b].diff(c) + C[b][c].diff(a) + C[c][a].diff(b)
                if not g.flat:
                    # -2 Gamma^d_(ab C_c)d summed over the three index pairs
                    for (i, j, k) in ((a, b, c), (b, c, a), (c, a, b)):
                        for d in range(n):
                            gam = g.christoffel[d][i][j]
                            if not gam.is_zero() and not C[k][d].is_zero():
                                v = v - gam * C[k][d] * 2
                out[(a, b, c)] = v
    return out


class DynamicalSystem:
    """Geometry plus the generalized forces ``Q^a`` and velocity matrix ``A^a_b``."""

    def __init__(self, geometry: Geometry, Q: Sequence, A: Sequence[Sequence] | None = None,
                 V=None, name: str = "", constants: Mapping[str, Scalar] | None = None):
        n = geometry.dim
        self.geometry = geometry
        if len(Q) != n:
            raise ValueError("Q has wrong length")
        self.Q = [geometry.rf(q) for q in Q]
        if A is None:
            A = [[0] * n for _ in range(n)]
        if len(A) != n or any(len(r) != n for r in A):
            raise ValueError("A has wrong shape")
        self.A = [[geometry.rf(A[a][b]) for b in range(n)] for a in range(n)]
        self.V = geometry.rf(V) if V is not None else None
        self.name = name
        self.constants = dict(constants or {})
        self.Q_lower = lower(self.Q, geometry)
        self._omega = None

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def has_A(self) -> bool:
        return any(not x.is_zero() for r in self.A for x in r)

    def grad_V_up(self) -> list[RatFunc]:
        if self.V is None:
            raise ValueError("no potential")
        return raise_index([self.V.diff(a) for a in range(self.dim)], self.geometry)

    def P(self) -> list[RatFunc]:
        """Non-conservative part ``P^a = Q^a - V^{,a}``."""
        if self.V is None:
            return list(self.Q)
        gv = self.grad_V_up()
        return [q - v for q, v in zip(self.Q, gv)]

    def is_conservative(self) -> bool:
        return self.V is not None and not self.has_A and all(p.is_zero() for p in self.P())

    def omega(self):
        """Acceleration as a VelocityExpr (polynomial of degree 2 in qdot)."""
        if self._omega is None:
            self._omega = self._build_omega()
        return self._omega

    def _build_omega(self):
        n = self.dim
        g = self.geometry
        out = []
        for a in range(n):
            terms: dict = {}
            zero_v = (0,) * n
            q = -self.Q[a]
            if not q.is_zero():
                terms[(ZERO, 0, zero_v)] = q
            for b in range(n):
                if not self.A[a][b].is_zero():
                    e = [0] * n
                    e[b] = 1
                    terms[(ZERO, 0, tuple(e))] = self.A[a][b]
            for b in range(n):
                for c in range(b, n):
                    gam = g.christoffel[a][b][c]
                    if gam.is_zero():
                        continue
                    e = [0] * n
                    e[b] += 1
                    e[c] += 1
                    k = (ZERO, 0, tuple(e))
                    val = -gam if b == c else -gam * 2
                    terms[k] = terms[k] + val if k in terms else val
            out.append(VelocityExpr(n, g.factors, terms))
        return out

    def __repr__(self):
        return f"DynamicalSystem({self.name or 'unnamed'}, dim={self.dim})"


class TimeExpr:
    """Sum of ``coeff(q) * w^alpha * t^N * exp(lam*t)``.

    ``terms`` maps ``(lam, N, alpha)`` to a nonzero RatFunc; ``w`` are the
    velocities for VelocityExpr and the momenta for PhaseFunction.
    """

    __slots__ = ("dim", "factors", "terms")
    suffix = "dot"

    def __init__(self, dim: int, factors: Sequence[SpacePoly] = (), terms: Mapping | None = None):
        self.dim = dim
        self.factors = tuple(factors)
        clean = {}
        for (lam, n, alpha), c in (terms or {}).items():
            if n < 0:
                raise ValueError("negative power of t")
            c = _rf(c, dim, self.factors)
            if not c.is_zero():
                clean[(as_scalar(lam), n, tuple(alpha))] = c
        self.terms = clean

    @classmethod
    def _raw(cls, dim, factors, terms):
        obj = cls.__new__(cls)
        obj.dim = dim
        obj.factors = factors
        obj.terms = terms
        return obj

    def _like(self, terms):
        return type(self)._raw(self.dim, self.factors, terms)

    @classmethod
    def constant(cls, value, dim, factors=()):
        return cls(dim, factors, {(ZERO, 0, (0,) * dim): RatFunc.constant(as_scalar(value), dim, tuple(factors))})

    @classmethod
    def from_coeff(cls, c, dim, factors=(), lam=ZERO, n=0, alpha=None):
        return cls(dim, factors, {(as_scalar(lam), n, tuple(alpha or (0,) * dim)): c})

    @classmethod
    def variable(cls, index: int, dim: int, factors=()):
        e = [0] * dim
        e[index] = 1
        return cls(dim, factors, {(ZERO, 0, tuple(e)): RatFunc.constant(1, dim, tuple(factors))})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def velocity_degree(self) -> int:
        return max((sum(k[2]) for k in self.terms), default=-1)

    def profiles(self) -> set:
        return {(k[0], k[1]) for k in self.terms}

    def lambdas(self) -> set:
        return {k[0] for k in self.terms}

    def is_time_dependent(self) -> bool:
        return any(k[0] or k[1] for k in self.terms)

    def _coerce(self, other):
        if isinstance(other, TimeExpr):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        if isinstance(other, (RatFunc, SpacePoly)):
            return type(self).from_coeff(_rf(other, self.dim, self.factors), self.dim, self.factors)
        c = as_scalar(other, strict=False)
        if c is None:
            return None
        return type(self).constant(c, self.dim, self.factors)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms = dict(self.terms)
        factors = self.factors or o.factors
        for k, v in o.terms.items():
            if k in terms:
                s = terms[k] + v
                if s.is_zero():
                    del terms[k]
                else:
                    terms[k] = s
            else:
                terms[k] = v
        return type(self)._raw(self.dim, factors, terms)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms: dict = {}
        for (l1, n1, a1), c1 in self.terms.items():
            for (l2, n2, a2), c2 in o.terms.items():
                k = (l1 + l2, n1 + n2, tuple(x + y for x, y in zip(a1, a2)))
                c = c1 * c2
                if k in terms:
                    c = terms[k] + c
                if c.is_zero():
                    terms.pop(k, None)
                else:
                    terms[k] = c
        return type(self)._raw(self.dim, self.factors or o.factors, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = type(self).constant(1, self.dim, self.factors)
        for _ in range(n):
            out = out * self
        return out

    def scale(self, c) -> "TimeExpr":
        c = as_scalar(c)
        if not c:
            return self._like({})
        return self._like({k: v * c for k, v in self.terms.items()})

    def __eq__(self, other):
        o = self._coerce(other) if not isinstance(other, TimeExpr) or type(other) is type(self) else None
        if o is None:
            return NotImplemented
        return (self - o).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def diff_q(self, a: int) -> "TimeExpr":
        return self._like({k: d for k, v in self.terms.items() if not (d := v.diff(a)).is_zero()})

    def diff_w(self, a: int) -> "TimeExpr":
        out = {}
        for (lam, n, al), v in self.terms.items():
            if al[a]:
                ne = al[:a] + (al[a] - 1,) + al[a + 1:]
                out[(lam, n, ne)] = v * al[a]
        return self._like(out)

    def diff_t(self) -> "TimeExpr":
        out: dict = {}
        for (lam, n, al), v in self.terms.items():
            if lam:
                k = (lam, n, al)
                out[k] = out[k] + v * lam if k in out else v * lam
            if n:
                k = (lam, n - 1, al)
                out[k] = out[k] + v * n if k in out else v * n
        return self._like({k: v for k, v in out.items() if not v.is_zero()})

    def split_by_lambda(self) -> dict:
        out: dict = {}
        for k, v in self.terms.items():
            out.setdefault(k[0], {})[k] = v
        return {lam: self._like(t) for lam, t in out.items()}

    def factor_exponential(self):
        """``(lam, rest)`` with ``self = exp(lam*t) * rest`` when a single lam is present."""
        lams = self.lambdas()
        if len(lams) != 1:
            return None
        (lam,) = lams
        return lam, self._like({(ZERO, n, al): v for (_, n, al), v in self.terms.items()})

    def times_exp(self, lam) -> "TimeExpr":
        lam = as_scalar(lam)
        return self._like({(l + lam, n, al): v for (l, n, al), v in self.terms.items()})

    def times_t(self, k: int = 1) -> "TimeExpr":
        return self._like({(l, n + k, al): v for (l, n, al), v in self.terms.items()})

    def time_parity_parts(self) -> tuple["TimeExpr", "TimeExpr"]:
        """Split by parity of (power of t + degree in w)."""
        even, odd = {}, {}
        for k, v in self.terms.items():
            (even if (k[1] + sum(k[2])) % 2 == 0 else odd)[k] = v
        return self._like(even), self._like(odd)

    def coefficient_parts(self):
        """Group as ``{(lam, N): (quadratic matrix, linear vector, scalar)}``.

        The quadratic matrix ``K_ab`` is symmetric with ``K_ab w^a w^b`` equal
        to the degree-two part.
        """
        n = self.dim
        half = Scalar(1) / 2
        out = {}
        for (lam, N, al), v in self.terms.items():
            d = sum(al)
            if d > 2:
                raise DegreeOverflow("expression is more than quadratic in the fibre variables")
            prof = (lam, N)
            if prof not in out:
                zero = RatFunc.constant(0, n, self.factors)
                out[prof] = ([[zero] * n for _ in range(n)], [zero] * n, zero)
            K2, K1, K0 = out[prof]
            if d == 0:
                out[prof] = (K2, K1, K0 + v)
            elif d == 1:
                a = al.index(1)
                K1 = list(K1)
                K1[a] = K1[a] + v
                out[prof] = (K2, K1, K0)
            else:
                idx = [i for i, e in enumerate(al) for _ in range(e)]
                a, b = idx
                K2 = [list(r) for r in K2]
                if a == b:
                    K2[a][a] = K2[a][a] + v
                else:
                    K2[a][b] = K2[a][b] + v * half
                    K2[b][a] = K2[b][a] + v * half
                out[prof] = (K2, K1, K0)
        return out

    def substitute_w(self, images: Sequence["TimeExpr"]) -> "TimeExpr":
        """Replace each fibre variable ``w^a`` by ``images[a]`` (a TimeExpr)."""
        cls = type(images[0]) if images else type(self)
        result = cls(self.dim, self.factors, {})
        cache: dict = {}
        for (lam, n, al), v in self.terms.items():
            term = cls(self.dim, self.factors, {(lam, n, (0,) * self.dim): v})
            for a, e in enumerate(al):
                if e:
                    key = (a, e)
                    if key not in cache:
                        cache[key] = images[a] ** e
                    term = term * cache[key]
            result = result + term
        return result

    def numeric(self):
        """``f(t, q, w)`` evaluating in complex floats (numpy broadcasting)."""
        import numpy as np
        items = []
        for (lam, n, al), v in self.terms.items():
            items.append((lam.numeric(), n, al, v.numeric()))

        def f(t, q, w):
            total = 0j
            for lam, n, al, cf in items:
                val = cf(q)
                if n:
                    val = val * t ** n
                if lam:
                    val = val * np.exp(lam * t)
                for x, e in zip(w, al):
                    if e == 1:
                        val = val * x
                    elif e:
                        val = val * x ** e
                total = total + val
            return total

        return f

    def term_magnitudes(self):
        """Like ``numeric`` but summing absolute values of the terms (a scale)."""
        import numpy as np
        items = [(lam.numeric(), n, al, v.numeric()) for (lam, n, al), v in self.terms.items()]

        def f(t, q, w):
            total = 0.0
            for lam, n, al, cf in items:
                val = cf(q)
                if n:
                    val = val * t ** n
                if lam:
                    val = val * np.exp(lam * t)
                for x, e in zip(w, al):
                    if e:
                        val = val * x ** e
                total = total + np.abs(val)
            return total

        return f

    def evaluate(self, t, q, w) -> Scalar:
        """Exact value at a rational point; only for exp-free expressions or t=0."""
        t = as_scalar(t)
        total = ZERO
        for (lam, n, al), v in self.terms.items():
            if lam and t:
                raise ValueError("exact evaluation of exp(lam*t) needs t = 0")
            val = v.evaluate(q)
            if n:
                val = val * t ** n
            for x, e in zip(w, al):
                if e:
                    val = val * as_scalar(x) ** e
            total = total + val
        return total

    def format(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names is not None else default_names(self.dim)
        text = format_expression(self.terms, names)
        if self.suffix != "dot":
            for nm in sorted(names, key=len, reverse=True):
                text = text.replace(nm + "dot", "\0" + nm)
            text = text.replace("\0", "p_")
        return text

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"{type(self).__name__}({self.format()!r})"


class VelocityExpr(TimeExpr):
    """Expression in (t, q, qdot)."""

    __slots__ = ()


def total_derivative(expr: VelocityExpr, sys: DynamicalSystem) -> VelocityExpr:
    """``d/dt`` along solutions: ``d_t + qdot^a d_a + omega^a d/dqdot^a``."""
    if expr.velocity_degree() > 2:
        raise DegreeOverflow("total derivative needs an expression of velocity degree at most 2")
    n = sys.dim
    factors = sys.geometry.factors
    expr = VelocityExpr._raw(n, factors, {k: _rf(v, n, factors) for k, v in expr.terms.items()})
    out = expr.diff_t()
    acc: dict = dict(out.terms)

    def put(k, v):
        if k in acc:
            s = acc[k] + v
            if s.is_zero():
                del acc[k]
            else:
                acc[k] = s
        elif not v.is_zero():
            acc[k] = v

    for (lam, N, al), c in expr.terms.items():
        for a in range(n):
            d = c.diff(a)
            if not d.is_zero():
                put((lam, N, al[:a] + (al[a] + 1,) + al[a + 1:]), d)
    omega = sys.omega()
    for a in range(n):
        dw = expr.diff_w(a)
        if dw.is_zero():
            continue
        prod = dw * omega[a]
        for k, v in prod.terms.items():
            put(k, v)
    return VelocityExpr._raw(n, factors, acc)


def momentum_map(expr: TimeExpr, g: Geometry, cls=None):
    """Substitute ``qdot^a = gamma^{ab} p_b``; returns a PhaseFunction."""
    if cls is None:
        from .canonical import PhaseFunction as cls
    n = g.dim
    images = []
    for a in range(n):
        terms = {}
        for b in range(n):
            if not g.inverse[a][b].is_zero():
                e = [0] * n
                e[b] = 1
                terms[(ZERO, 0, tuple(e))] = g.inverse[a][b]
        images.append(cls(n, g.factors, terms))
    base = cls._raw(n, g.factors, {k: _rf(v, n, g.factors) for k, v in expr.terms.items()})
    return base.substitute_w(images)


def velocity_map(expr: TimeExpr, g: Geometry) -> VelocityExpr:
    """Inverse of momentum_map: ``p_a = gamma_ab qdot^b``."""
    n = g.dim
    images = []
    for a in range(n):
        terms = {}
        for b in range(n):
            if not g.metric[a][b].is_zero():
                e = [0] * n
                e[b] = 1
                terms[(ZERO, 0, tuple(e))] = g.metric[a][b]
        images.append(VelocityExpr(n, g.factors, terms))
    base = VelocityExpr._raw(n, g.factors, {k: _rf(v, n, g.factors) for k, v in expr.terms.items()})
    return base.substitute_w(images)
