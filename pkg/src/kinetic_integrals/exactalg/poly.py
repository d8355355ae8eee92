"""Multivariate polynomials over Gaussian rationals and rational functions
whose denominators are products of declared irreducible factors."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from ..errors import DegreeOverflow, DenominatorNotDeclared
from .scalar import ONE, ZERO, Scalar, as_scalar

__all__ = ["MAX_DEGREE", "SpacePoly", "RatFunc", "monomials_upto", "grlex_key"]

MAX_DEGREE = 32


def grlex_key(exps: tuple) -> tuple:
    return (sum(exps), exps)


def monomials_upto(dim: int, degree: int, min_degree: int = 0) -> list[tuple]:
    """All exponent tuples of total degree in ``[min_degree, degree]``, grlex ascending."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for k in range(remaining, -1, -1):
            rec(prefix + (k,), remaining - k, slots - 1)

    for d in range(min_degree, degree + 1):
        if dim == 0:
            if d == 0:
                out.append(())
            continue
        rec((), d, dim)
    out.sort(key=grlex_key)
    return out


def _add_exps(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class SpacePoly:
    """Polynomial in ``dim`` coordinates; ``terms`` maps exponent tuples to
    nonzero Scalars. Treat instances as immutable."""

    __slots__ = ("dim", "terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[tuple, object] | None = None):
        self.dim = dim
        clean = {}
        if terms:
            for e, c in terms.items():
                c = as_scalar(c)
                if c:
                    if len(e) != dim:
                        raise ValueError("exponent length does not match dim")
                    if sum(e) > MAX_DEGREE:
                        raise DegreeOverflow(f"total degree {sum(e)} exceeds {MAX_DEGREE}")
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, dim: int, terms: dict) -> "SpacePoly":
        obj = cls.__new__(cls)
        obj.dim = dim
        obj.terms = terms
        obj._hash = None
        return obj

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "SpacePoly":
        return cls._raw(dim, {})

    @classmethod
    def constant(cls, value, dim: int) -> "SpacePoly":
        c = as_scalar(value)
        return cls._raw(dim, {(0,) * dim: c} if c else {})

    @classmethod
    def variable(cls, index: int, dim: int) -> "SpacePoly":
        e = [0] * dim
        e[index] = 1
        return cls._raw(dim, {tuple(e): ONE})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1) -> "SpacePoly":
        return cls(len(exps), {tuple(exps): coeff})

    # -- queries --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Scalar:
        return self.terms.get((0,) * self.dim, ZERO)

    def coeff(self, exps: tuple) -> Scalar:
        return self.terms.get(tuple(exps), ZERO)

    def is_real(self) -> bool:
        return all(c.is_real() for c in self.terms.values())

    def leading(self) -> tuple[tuple, Scalar]:
        e = max(self.terms, key=grlex_key)
        return e, self.terms[e]

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> "SpacePoly | None":
        if isinstance(other, SpacePoly):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        c = as_scalar(other, strict=False)
        if c is None:
            return None
        return SpacePoly.constant(c, self.dim)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        terms = dict(self.terms)
        for e, c in o.terms.items():
            v = terms.get(e)
            if v is None:
                terms[e] = c
            else:
                s = v + c
                if s:
                    terms[e] = s
                else:
                    del terms[e]
        return SpacePoly._raw(self.dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return SpacePoly._raw(self.dim, {e: -c for e, c in self.terms.items()})

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

    def scale(self, c) -> "SpacePoly":
        c = as_scalar(c)
        if not c:
            return SpacePoly.zero(self.dim)
        if c == ONE:
            return self
        return SpacePoly._raw(self.dim, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, SpacePoly):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            if not self.terms or not other.terms:
                return SpacePoly.zero(self.dim)
            terms: dict = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = _add_exps(e1, e2)
                    v = terms.get(e)
                    terms[e] = c1 * c2 if v is None else v + c1 * c2
            out = {e: c for e, c in terms.items() if c}
            if out and max(sum(e) for e in out) > MAX_DEGREE:
                raise DegreeOverflow(f"product degree exceeds {MAX_DEGREE}")
            return SpacePoly._raw(self.dim, out)
        c = as_scalar(other, strict=False)
        if c is None:
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = SpacePoly.constant(1, self.dim)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def diff(self, var: int) -> "SpacePoly":
        if not 0 <= var < self.dim:
            raise IndexError("variable index out of range")
        terms = {}
        for e, c in self.terms.items():
            k = e[var]
            if k:
                ne = e[:var] + (k - 1,) + e[var + 1:]
                terms[ne] = c * k
        return SpacePoly._raw(self.dim, terms)

    def gradient(self) -> list["SpacePoly"]:
        return [self.diff(i) for i in range(self.dim)]

    def exact_div(self, other: "SpacePoly") -> "SpacePoly | None":
        """Quotient ``self / other`` if the division is exact, else None."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.is_zero():
            return self
        le_f, lc_f = other.leading()
        if len(other.terms) == 1:
            terms = {}
            inv = lc_f.inverse()
            for e, c in self.terms.items():
                ne = tuple(a - b for a, b in zip(e, le_f))
                if min(ne, default=0) < 0:
                    return None
                terms[ne] = c * inv
            return SpacePoly._raw(self.dim, terms)
        quotient: dict = {}
        rem = self
        inv = lc_f.inverse()
        while rem.terms:
            le_r, lc_r = rem.leading()
            ne = tuple(a - b for a, b in zip(le_r, le_f))
            if min(ne, default=0) < 0:
                return None
            c = lc_r * inv
            quotient[ne] = c
            rem = rem - SpacePoly._raw(self.dim, {ne: c}) * other
        return SpacePoly._raw(self.dim, quotient)

    def evaluate(self, point: Sequence) -> Scalar:
        pt = [as_scalar(p) for p in point]
        total = ZERO
        for e, c in self.terms.items():
            v = c
            for x, k in zip(pt, e):
                if k:
                    v = v * x ** k
            total = total + v
        return total

    def numeric(self):
        """Return ``f(q)`` evaluating in floating complex arithmetic.

        ``q`` is a sequence of numbers or equally shaped numpy arrays.
        """
        items = [(c.numeric(), e) for e, c in self.terms.items()]

        def f(q):
            total = 0j
            for c, e in items:
                v = c
                for x, k in zip(q, e):
                    if k == 1:
                        v = v * x
                    elif k:
                        v = v * x ** k
                total = total + v
            return total

        return f

    def substitute_shift(self, var_values: Mapping[int, Scalar]) -> "SpacePoly":
        """Substitute constants for some variables (keeps dim)."""
        terms: dict = {}
        for e, c in self.terms.items():
            v = c
            ne = list(e)
            for i, val in var_values.items():
                if e[i]:
                    v = v * as_scalar(val) ** e[i]
                    ne[i] = 0
            ne = tuple(ne)
            terms[ne] = terms.get(ne, ZERO) + v
        return SpacePoly._raw(self.dim, {e: c for e, c in terms.items() if c})

    # -- equality / printing -------------------------------------------
    def __eq__(self, other):
        if isinstance(other, SpacePoly):
            return self.dim == other.dim and self.terms == other.terms
        c = as_scalar(other, strict=False)
        if c is None:
            return NotImplemented
        return self.terms == ({(0,) * self.dim: c} if c else {})

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self.terms.items())))
        return self._hash

    def sorted_terms(self) -> list[tuple[tuple, Scalar]]:
        return sorted(self.terms.items(), key=lambda it: grlex_key(it[0]), reverse=True)

    def format(self, names: Sequence[str] | None = None) -> str:
        from .syntax import format_poly
        return format_poly(self, names)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"SpacePoly({self.format()!r})"


def _factor_key(factors: tuple) -> tuple:
    return tuple(hash(f) for f in factors)


class RatFunc:
    """``num / prod(factors[i] ** den[i])`` kept in reduced form.

    ``factors`` are declared irreducible polynomials; reduction only ever
    divides the numerator by one of them, never computes a general GCD.
    """

    __slots__ = ("num", "den", "factors", "_hash")

    def __init__(self, num: SpacePoly, den: Sequence[int] = (), factors: Sequence[SpacePoly] = ()):
        factors = tuple(factors)
        den = tuple(den) if den else (0,) * len(factors)
        if len(den) != len(factors):
            raise ValueError("denominator exponents must match declared factors")
        if any(d < 0 for d in den):
            raise ValueError("negative denominator exponent")
        self.num, self.den = _reduce(num, den, factors)
        self.factors = factors
        self._hash = None

    @classmethod
    def _raw(cls, num, den, factors):
        obj = cls.__new__(cls)
        obj.num = num
        obj.den = den
        obj.factors = factors
        obj._hash = None
        return obj

    @classmethod
    def from_poly(cls, p: SpacePoly, factors: Sequence[SpacePoly] = ()) -> "RatFunc":
        factors = tuple(factors)
        return cls._raw(p, (0,) * len(factors), factors)

    @classmethod
    def constant(cls, value, dim: int, factors: Sequence[SpacePoly] = ()) -> "RatFunc":
        return cls.from_poly(SpacePoly.constant(value, dim), factors)

    @classmethod
    def divide(cls, num: SpacePoly, den: SpacePoly, factors: Sequence[SpacePoly]) -> "RatFunc":
        """``num / den`` where ``den`` must be a scalar times a product of factors."""
        factors = tuple(factors)
        exps = [0] * len(factors)
        rest = den
        progress = True
        while progress and not rest.is_constant():
            progress = False
            for i, f in enumerate(factors):
                q = rest.exact_div(f)
                if q is not None:
                    rest = q
                    exps[i] += 1
                    progress = True
                    break
        if rest.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if not rest.is_constant():
            raise DenominatorNotDeclared(
                f"denominator factor {rest} is not a product of declared factors")
        return cls(num.scale(rest.constant_value().inverse()), exps, factors)

    # -- helpers --------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.num.dim

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self):
        return not self.num.is_zero()

    def is_polynomial(self) -> bool:
        return not any(self.den)

    def as_poly(self) -> SpacePoly:
        if not self.is_polynomial():
            raise ValueError("rational function has a nontrivial denominator")
        return self.num

    def denominator_poly(self) -> SpacePoly:
        d = SpacePoly.constant(1, self.dim)
        for f, k in zip(self.factors, self.den):
            if k:
                d = d * f ** k
        return d

    def _unify(self, other: "RatFunc"):
        if self.factors == other.factors:
            return self, other, self.factors
        if not self.factors or not any(self.den):
            if not other.factors or other.factors == self.factors:
                pass
            if not any(self.den):
                return RatFunc._raw(self.num, (0,) * len(other.factors), other.factors), other, other.factors
        if not other.factors or not any(other.den):
            return self, RatFunc._raw(other.num, (0,) * len(self.factors), self.factors), self.factors
        raise ValueError("rational functions use different declared factor sets")

    def _coerce(self, other) -> "RatFunc | None":
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, SpacePoly):
            return RatFunc.from_poly(other, self.factors)
        c = as_scalar(other, strict=False)
        if c is None:
            return None
        return RatFunc.constant(c, self.dim, self.factors)

    def with_den(self, target: Sequence[int]) -> SpacePoly:
        """Numerator after rewriting over the larger denominator ``target``."""
        n = self.num
        for f, have, want in zip(self.factors, self.den, target):
            if want < have:
                raise ValueError("target denominator too small")
            if want > have:
                n = n * f ** (want - have)
        return n

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.is_zero():
            return self
        if self.is_zero():
            return o if o.factors == self.factors or not self.factors else o._coerce_factors(self.factors)
        a, b, factors = self._unify(o)
        if a.den == b.den:
            return RatFunc(a.num + b.num, a.den, factors)
        den = tuple(max(x, y) for x, y in zip(a.den, b.den))
        return RatFunc(a.with_den(den) + b.with_den(den), den, factors)

    __radd__ = __add__

    def _coerce_factors(self, factors):
        if self.factors == factors:
            return self
        if not any(self.den):
            return RatFunc._raw(self.num, (0,) * len(factors), factors)
        raise ValueError("rational functions use different declared factor sets")

    def __neg__(self):
        return RatFunc._raw(-self.num, self.den, self.factors)

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
        if isinstance(other, (RatFunc, SpacePoly)):
            o = self._coerce(other)
            if self.is_zero() or o.is_zero():
                fac = self.factors or o.factors
                return RatFunc._raw(SpacePoly.zero(self.dim), (0,) * len(fac), fac)
            a, b, factors = self._unify(o)
            den = tuple(x + y for x, y in zip(a.den, b.den))
            return RatFunc(a.num * b.num, den, factors)
        c = as_scalar(other, strict=False)
        if c is None:
            return NotImplemented
        if not c:
            return RatFunc._raw(SpacePoly.zero(self.dim), (0,) * len(self.factors), self.factors)
        return RatFunc._raw(self.num.scale(c), self.den, self.factors)

    __rmul__ = __mul__

    def scale(self, c) -> "RatFunc":
        return self * as_scalar(c)

    def __truediv__(self, other):
        c = as_scalar(other, strict=False)
        if c is not None:
            return self * c.inverse()
        if isinstance(other, RatFunc) and len(other.num.terms) == 1 and other.is_polynomial():
            # monomial divisor made of declared factors
            return self * RatFunc.divide(SpacePoly.constant(1, self.dim), other.num, self.factors or other.factors)
        if isinstance(other, SpacePoly):
            return self * RatFunc.divide(SpacePoly.constant(1, self.dim), other, self.factors)
        if isinstance(other, RatFunc) and other.is_polynomial():
            return self * RatFunc.divide(SpacePoly.constant(1, self.dim), other.num, self.factors or other.factors)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = RatFunc.constant(1, self.dim, self.factors)
        for _ in range(n):
            result = result * self
        return result

    def diff(self, var: int) -> "RatFunc":
        # d(N/F) with F = prod f_i^k_i:  (N' * prod_{k_i>0} f_i - N * sum k_i f_i' prod_{j!=i} f_j) / (F prod f_i)
        active = [i for i, k in enumerate(self.den) if k]
        if not active:
            return RatFunc._raw(self.num.diff(var), self.den, self.factors)
        prod_all = SpacePoly.constant(1, self.dim)
        for i in active:
            prod_all = prod_all * self.factors[i]
        num = self.num.diff(var) * prod_all
        for i in active:
            others = SpacePoly.constant(1, self.dim)
            for j in active:
                if j != i:
                    others = others * self.factors[j]
            num = num - self.num * self.factors[i].diff(var) * others * self.den[i]
        den = tuple(k + 1 if k else 0 for k in self.den)
        return RatFunc(num, den, self.factors)

    def evaluate(self, point: Sequence) -> Scalar:
        d = self.denominator_poly().evaluate(point)
        return self.num.evaluate(point) / d

    def numeric(self):
        fn = self.num.numeric()
        dens = [(f.numeric(), k) for f, k in zip(self.factors, self.den) if k]
        if not dens:
            return fn

        def f(q):
            d = 1.0
            for g, k in dens:
                d = d * g(q) ** k
            return fn(q) / d

        return f

    def denominator_values(self):
        """Numeric callables for the declared factors present in the denominator."""
        return [f.numeric() for f, k in zip(self.factors, self.den) if k]

    # -- equality / printing -------------------------------------------
    def __eq__(self, other):
        if isinstance(other, RatFunc):
            # cross multiplication: a/b == c/d  <=>  a*d - c*b == 0
            if self.factors == other.factors or not any(self.den) or not any(other.den):
                return (self - other).is_zero()
            return False
        if isinstance(other, SpacePoly):
            return self.is_polynomial() and self.num == other
        c = as_scalar(other, strict=False)
        if c is None:
            return NotImplemented
        return self.is_polynomial() and self.num == c

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den if any(self.den) else ()))
        return self._hash

    def format(self, names: Sequence[str] | None = None) -> str:
        from .syntax import format_ratfunc
        return format_ratfunc(self, names)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"RatFunc({self.format()!r})"


def _reduce(num: SpacePoly, den: tuple, factors: tuple):
    if num.is_zero():
        return num, (0,) * len(factors)
    if not any(den):
        return num, den
    den = list(den)
    for i, f in enumerate(factors):
        while den[i]:
            q = num.exact_div(f)
            if q is None:
                break
            num = q
            den[i] -= 1
    return num, tuple(den)


def common_denominator(items: Iterable[RatFunc]) -> tuple:
    """Componentwise maximum of the denominator exponents."""
    den = None
    for r in items:
        if den is None:
            den = r.den
        elif r.den:
            den = tuple(max(a, b) for a, b in zip(den, r.den))
    return den or ()
