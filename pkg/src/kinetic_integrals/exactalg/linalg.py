"""Exact linear algebra over Q and Q(i).

Rational matrices are reduced fraction free: every row is scaled to a primitive
integer vector and eliminations are integer cross multiplications followed by
content removal. Gaussian-rational matrices use plain field elimination.
Matrices are sparse; rows are dicts ``col -> value``.
"""

from __future__ import annotations

import heapq
from typing import Iterable, Mapping, Sequence

import gmpy2
from gmpy2 import mpq, mpz

from .scalar import ONE, ZERO, Scalar, as_scalar

__all__ = [
    "ScalarMatrix",
    "RowReducer",
    "nullspace",
    "rank",
    "rank_at",
    "solve_combination",
    "LambdaMatrix",
    "UniPoly",
    "determinant",
]


class ScalarMatrix:
    """Sparse matrix of Scalars; ``rows_data[i]`` maps column -> nonzero entry."""

    __slots__ = ("nrows", "ncols", "rows_data")

    def __init__(self, nrows: int, ncols: int, rows_data: Sequence[Mapping[int, Scalar]] | None = None):
        self.nrows = nrows
        self.ncols = ncols
        data = []
        for r in (rows_data or [{}] * nrows):
            clean = {}
            for j, v in r.items():
                v = as_scalar(v)
                if v:
                    if not 0 <= j < ncols:
                        raise IndexError("column out of range")
                    clean[j] = v
            data.append(clean)
        if len(data) != nrows:
            raise ValueError("row count mismatch")
        self.rows_data = data

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence], ncols: int | None = None) -> "ScalarMatrix":
        rows = [list(r) for r in rows]
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        return cls(len(rows), ncols, [{j: v for j, v in enumerate(r)} for r in rows])

    @classmethod
    def identity(cls, n: int) -> "ScalarMatrix":
        return cls(n, n, [{i: ONE} for i in range(n)])

    def to_dense(self) -> list[list[Scalar]]:
        out = []
        for r in self.rows_data:
            row = [ZERO] * self.ncols
            for j, v in r.items():
                row[j] = v
            out.append(row)
        return out

    def is_real(self) -> bool:
        return all(v.is_real() for r in self.rows_data for v in r.values())

    def mul_vec(self, v: Sequence) -> list[Scalar]:
        v = [as_scalar(x) for x in v]
        out = []
        for r in self.rows_data:
            s = ZERO
            for j, a in r.items():
                if v[j]:
                    s = s + a * v[j]
            out.append(s)
        return out

    def transpose(self) -> "ScalarMatrix":
        cols = [dict() for _ in range(self.ncols)]
        for i, r in enumerate(self.rows_data):
            for j, v in r.items():
                cols[j][i] = v
        return ScalarMatrix(self.ncols, self.nrows, cols)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "ScalarMatrix":
        cmap = {c: k for k, c in enumerate(cols)}
        data = []
        for i in rows:
            data.append({cmap[j]: v for j, v in self.rows_data[i].items() if j in cmap})
        return ScalarMatrix(len(rows), len(cols), data)

    def __repr__(self):
        return f"ScalarMatrix({self.nrows}x{self.ncols}, nnz={sum(len(r) for r in self.rows_data)})"


def _rows_of(M) -> tuple[list[dict], int]:
    if isinstance(M, ScalarMatrix):
        return M.rows_data, M.ncols
    rows = [list(r) for r in M]
    ncols = len(rows[0]) if rows else 0
    return [{j: as_scalar(v) for j, v in enumerate(r) if as_scalar(v)} for r in rows], ncols


def _int_row(row: Mapping[int, Scalar]) -> dict:
    """Primitive integer multiple of a real rational row."""
    den = mpz(1)
    for v in row.values():
        d = v.re.denominator
        if d != 1:
            den = gmpy2.lcm(den, d)
    out = {j: mpz(v.re * den) for j, v in row.items()}
    return _primitive(out)


def _primitive(row: dict) -> dict:
    g = mpz(0)
    for v in row.values():
        g = gmpy2.gcd(g, v)
        if g == 1:
            break
    if g > 1:
        row = {j: v // g for j, v in row.items()}
    # sign convention: first (lowest column) entry positive
    if row:
        first = row[min(row)]
        if first < 0:
            row = {j: -v for j, v in row.items()}
    return row


class RowReducer:
    """Incremental row echelon form.

    ``add(row)`` reduces the row against the pivots seen so far and keeps it
    when independent. Pivots are chosen per row as the entry of smallest bit
    size (ties broken by lowest column), which keeps integers short.
    """

    def __init__(self, ncols: int, real: bool = True):
        self.ncols = ncols
        self.real = real
        self.rows: list[dict] = []      # echelon rows
        self.pivot_col: list[int] = []  # pivot column of each row
        self.col_to_row: dict[int, int] = {}

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _reduce(self, row: dict) -> dict:
        heap = [self.col_to_row[j] for j in row if j in self.col_to_row]
        heapq.heapify(heap)
        seen = set()
        while heap:
            k = heapq.heappop(heap)
            if k in seen:
                continue
            pc = self.pivot_col[k]
            a = row.get(pc)
            if a is None:
                continue
            seen.add(k)
            prow = self.rows[k]
            p = prow[pc]
            if self.real:
                g = gmpy2.gcd(a, p)
                ma, mp = p // g, a // g
                new = {j: v * ma for j, v in row.items()} if ma != 1 else dict(row)
                for j, v in prow.items():
                    nv = new.get(j, 0) - mp * v
                    if nv:
                        new[j] = nv
                    else:
                        new.pop(j, None)
                new.pop(pc, None)
                row = _primitive(new)
            else:
                # field case: pivot rows are normalised to 1
                new = dict(row)
                for j, v in prow.items():
                    nv = new.get(j, ZERO) - a * v
                    if nv:
                        new[j] = nv
                    else:
                        new.pop(j, None)
                new.pop(pc, None)
                row = new
            for j in row:
                r = self.col_to_row.get(j)
                if r is not None and r not in seen:
                    heapq.heappush(heap, r)
        return row

    def prepare(self, row: Mapping[int, Scalar]) -> dict:
        row = {j: as_scalar(v) for j, v in row.items()}
        row = {j: v for j, v in row.items() if v}
        if self.real:
            if not all(v.is_real() for v in row.values()):
                raise ValueError("complex row given to a rational reducer")
            return _int_row(row)
        return row

    def add(self, row: Mapping[int, Scalar]) -> bool:
        r = self._reduce(self.prepare(row))
        if not r:
            return False
        if self.real:
            pc = min(r, key=lambda j: (abs(r[j]).bit_length(), j))
        else:
            pc = min(r, key=lambda j: (r[j].bit_size, j))
            inv = r[pc].inverse()
            r = {j: v * inv for j, v in r.items()}
        self.col_to_row[pc] = len(self.rows)
        self.pivot_col.append(pc)
        self.rows.append(r)
        return True

    def contains(self, row: Mapping[int, Scalar]) -> bool:
        return not self._reduce(self.prepare(row))

    def reduced_rows(self) -> list[dict]:
        """Fully reduced rows (each pivot column appears in exactly one row)."""
        rows = [dict(r) for r in self.rows]
        order = list(range(len(rows)))
        # later rows never contain earlier pivots, so sweep from the back
        for k in reversed(order):
            row = rows[k]
            changed = True
            while changed:
                changed = False
                for j in list(row):
                    r = self.col_to_row.get(j)
                    if r is None or r == k:
                        continue
                    prow = rows[r]
                    pc = self.pivot_col[r]
                    a, p = row[pc], prow[pc]
                    if self.real:
                        g = gmpy2.gcd(a, p)
                        ma, mp = p // g, a // g
                        new = {c: v * ma for c, v in row.items()}
                        for c, v in prow.items():
                            nv = new.get(c, 0) - mp * v
                            if nv:
                                new[c] = nv
                            else:
                                new.pop(c, None)
                        row = _primitive(new)
                    else:
                        for c, v in prow.items():
                            nv = row.get(c, ZERO) - a * v
                            if nv:
                                row[c] = nv
                            else:
                                row.pop(c, None)
                    changed = True
                    break
            rows[k] = row
        return rows

    def kernel(self) -> list[list[Scalar]]:
        rows = self.reduced_rows()
        free = [j for j in range(self.ncols) if j not in self.col_to_row]
        basis = []
        for f in free:
            v = [ZERO] * self.ncols
            v[f] = ONE
            for k, row in enumerate(rows):
                a = row.get(f)
                if a is None:
                    continue
                pc = self.pivot_col[k]
                if self.real:
                    v[pc] = Scalar._raw(-mpq(a, row[pc]), mpq(0))
                else:
                    v[pc] = -(a / row[pc])
            basis.append(v)
        return basis


def _is_real_rows(rows) -> bool:
    return all(v.is_real() for r in rows for v in r.values())


def nullspace(M) -> list[list[Scalar]]:
    """Exact basis of ``{v : M v = 0}``; one vector per free column."""
    rows, ncols = _rows_of(M)
    red = RowReducer(ncols, real=_is_real_rows(rows))
    for r in rows:
        if r:
            red.add(r)
    return red.kernel()


def rank(M) -> int:
    rows, ncols = _rows_of(M)
    red = RowReducer(ncols, real=_is_real_rows(rows))
    for r in rows:
        if r:
            red.add(r)
    return red.rank


def solve_combination(vectors: Sequence[Sequence], target: Sequence) -> list[Scalar] | None:
    """Coefficients ``c`` with ``sum c_i vectors[i] == target`` or None."""
    n = len(vectors)
    if not n:
        return [] if all(not as_scalar(x) for x in target) else None
    m = len(target)
    # columns: vectors then -target
    rows = []
    for i in range(m):
        row = {}
        for k, v in enumerate(vectors):
            a = as_scalar(v[i])
            if a:
                row[k] = a
        b = as_scalar(target[i])
        if b:
            row[n] = -b
        rows.append(row)
    for v in nullspace(ScalarMatrix(m, n + 1, rows)):
        if v[n]:
            inv = v[n].inverse()
            return [x * inv for x in v[:n]]
    return None


def determinant(M) -> Scalar:
    rows, n = _rows_of(M)
    if len(rows) != n:
        raise ValueError("determinant of a non-square matrix")
    a = [[r.get(j, ZERO) for j in range(n)] for r in rows]
    det = ONE
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return ZERO
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        p = a[c][c]
        det = det * p
        inv = p.inverse()
        for r in range(c + 1, n):
            f = a[r][c]
            if f:
                f = f * inv
                row_c = a[c]
                a[r] = [x - f * y if y else x for x, y in zip(a[r], row_c)]
    return det


class LambdaMatrix:
    """``M(lam) = sum_k lam^k * coeffs[k]`` with ScalarMatrix coefficients."""

    def __init__(self, coeffs: Sequence[ScalarMatrix]):
        if not coeffs:
            raise ValueError("need at least one coefficient matrix")
        self.coeffs = list(coeffs)
        self.nrows = coeffs[0].nrows
        self.ncols = coeffs[0].ncols
        for c in coeffs:
            if (c.nrows, c.ncols) != (self.nrows, self.ncols):
                raise ValueError("coefficient shapes differ")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def at(self, value) -> ScalarMatrix:
        value = as_scalar(value)
        rows = []
        for i in range(self.nrows):
            row: dict = {}
            power = ONE
            for k, C in enumerate(self.coeffs):
                if k:
                    power = power * value
                    if not power:
                        break
                for j, v in C.rows_data[i].items():
                    row[j] = row.get(j, ZERO) + v * power
            rows.append({j: v for j, v in row.items() if v})
        return ScalarMatrix(self.nrows, self.ncols, rows)

    def numeric_at(self, value: complex):
        import numpy as np
        if getattr(self, "_dense", None) is None:
            self._dense = []
            for C in self.coeffs:
                d = np.zeros((self.nrows, self.ncols), dtype=complex)
                for i, r in enumerate(C.rows_data):
                    for j, v in r.items():
                        d[i, j] = complex(v)
                self._dense.append(d)
        out = np.zeros((self.nrows, self.ncols), dtype=complex)
        for k, d in enumerate(self._dense):
            out += d * (value ** k)
        return out

    def entry(self, i: int, j: int) -> "UniPoly":
        return UniPoly([C.rows_data[i].get(j, ZERO) for C in self.coeffs])


def rank_at(M, value) -> int:
    """Exact rank of a lambda matrix at ``lam = value``.

    ``M`` is a LambdaMatrix or a dense nested list whose entries are UniPoly
    (or coefficient lists ``[c0, c1, ...]``).
    """
    if isinstance(M, LambdaMatrix):
        return rank(M.at(value))
    value = as_scalar(value)
    rows = []
    for r in M:
        row = []
        for e in r:
            p = e if isinstance(e, UniPoly) else UniPoly(e if isinstance(e, (list, tuple)) else [e])
            row.append(p(value))
        rows.append(row)
    return rank(rows)


class UniPoly:
    """Dense univariate polynomial over Scalar, ``coeffs[k]`` multiplies ``x^k``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        cs = [as_scalar(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = cs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x) -> Scalar:
        x = as_scalar(x)
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other: "UniPoly") -> "UniPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + [ZERO] * (n - len(self.coeffs))
        b = other.coeffs + [ZERO] * (n - len(other.coeffs))
        return UniPoly([x + y for x, y in zip(a, b)])

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + other.scale(-ONE)

    def __mul__(self, other: "UniPoly") -> "UniPoly":
        if self.is_zero() or other.is_zero():
            return UniPoly([])
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        out[i + j] = out[i + j] + a * b
        return UniPoly(out)

    def scale(self, c) -> "UniPoly":
        c = as_scalar(c)
        return UniPoly([x * c for x in self.coeffs])

    def __eq__(self, other):
        return isinstance(other, UniPoly) and self.coeffs == other.coeffs

    def monic(self) -> "UniPoly":
        if self.is_zero():
            return self
        return self.scale(self.coeffs[-1].inverse())

    def divmod(self, other: "UniPoly") -> tuple["UniPoly", "UniPoly"]:
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        rem = list(self.coeffs)
        q = [ZERO] * max(0, len(rem) - len(other.coeffs) + 1)
        inv = other.coeffs[-1].inverse()
        d = other.degree
        while len(rem) - 1 >= d and rem:
            k = len(rem) - 1 - d
            c = rem[-1] * inv
            q[k] = c
            for i, b in enumerate(other.coeffs):
                rem[i + k] = rem[i + k] - c * b
            rem.pop()
            while rem and not rem[-1]:
                rem.pop()
        return UniPoly(q), UniPoly(rem)

    def gcd(self, other: "UniPoly") -> "UniPoly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        return a.monic()

    def derivative(self) -> "UniPoly":
        return UniPoly([c * k for k, c in enumerate(self.coeffs)][1:])

    def squarefree(self) -> "UniPoly":
        if self.degree < 1:
            return self.monic()
        g = self.gcd(self.derivative())
        return self.divmod(g)[0].monic()

    @classmethod
    def interpolate(cls, xs: Sequence, ys: Sequence) -> "UniPoly":
        """Newton interpolation through distinct points."""
        xs = [as_scalar(x) for x in xs]
        coef = [as_scalar(y) for y in ys]
        n = len(xs)
        for j in range(1, n):
            for i in range(n - 1, j - 1, -1):
                coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
        poly = UniPoly([coef[-1]]) if n else UniPoly([])
        for i in range(n - 2, -1, -1):
            poly = poly * UniPoly([-xs[i], ONE]) + UniPoly([coef[i]])
        return poly

    def numeric_roots(self) -> list[complex]:
        import numpy as np
        if self.degree < 1:
            return []
        return list(np.roots([complex(c) for c in reversed(self.coeffs)]))

    def __repr__(self):
        return "UniPoly([" + ", ".join(str(c) for c in self.coeffs) + "])"
