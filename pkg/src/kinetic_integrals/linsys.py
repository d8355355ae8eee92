"""Ansatz bases and assembly of exact linear condition systems.

Every condition in this package is linear in a finite set of unknown
coefficients. A system is assembled column by column: the operator is applied
to one ansatz basis element at a time and the resulting rational functions are
collected per constraint. Each constraint is then multiplied by a fixed power
of the declared factors so that all columns share one denominator, and the
numerator coefficients become matrix rows.
"""

from __future__ import annotations

from itertools import product
from typing import Hashable, Mapping, Sequence

from .exactalg import RatFunc, RowReducer, ScalarMatrix, SpacePoly
from .exactalg.poly import monomials_upto

__all__ = ["poly_basis", "ConstraintAssembler", "vectorize", "independent_subset"]


def poly_basis(dim: int, degree: int, factors: Sequence[SpacePoly] = (), window: int = 0,
               include_constant: bool = True) -> list[RatFunc]:
    """Independent rational functions ``m(q) / prod f_i^k_i``.

    ``m`` runs over monomials of total degree at most ``degree`` and each
    ``k_i`` over ``0..window``. Candidates that reduce to something already
    spanned are dropped (checked by exact rank).
    """
    factors = tuple(factors)
    monos = monomials_upto(dim, degree)
    dens = list(product(range(window + 1), repeat=len(factors))) if factors else [()]
    dens.sort(key=lambda d: (sum(d), d))
    cands = []
    seen = set()
    for d in dens:
        for m in monos:
            r = RatFunc(SpacePoly.monomial(m) if dim else SpacePoly.constant(1, 0), d or (0,) * len(factors), factors)
            key = (r.num, r.den)
            if key in seen:
                continue
            seen.add(key)
            if not include_constant and r.is_polynomial() and r.num.is_constant():
                continue
            cands.append(r)
    if not factors or window == 0:
        return cands
    return independent_subset(cands)


def _common_den(items: Sequence[RatFunc]) -> tuple:
    den = None
    for r in items:
        if r.is_zero():
            continue
        den = r.den if den is None else tuple(max(a, b) for a, b in zip(den, r.den))
    return den


def vectorize(groups: Sequence[Mapping[Hashable, RatFunc]]) -> list[dict]:
    """Turn each mapping ``key -> RatFunc`` into a sparse coefficient vector.

    All mappings are put over a shared denominator per key, so the resulting
    vectors are directly comparable (same linear coordinates).
    """
    dens: dict = {}
    for g in groups:
        for k, r in g.items():
            if r.is_zero():
                continue
            d = dens.get(k)
            dens[k] = r.den if d is None else tuple(max(a, b) for a, b in zip(d, r.den))
    index: dict = {}
    out = []
    for g in groups:
        vec = {}
        for k, r in g.items():
            if r.is_zero():
                continue
            num = r.with_den(dens[k])
            for e, c in num.terms.items():
                j = index.setdefault((k, e), len(index))
                vec[j] = c
        out.append(vec)
    return out


def independent_subset(items: Sequence[RatFunc]) -> list[RatFunc]:
    vecs = vectorize([{0: r} for r in items])
    real = all(v.is_real() for vec in vecs for v in vec.values())
    red = RowReducer(1 + max((j for vec in vecs for j in vec), default=0), real=real)
    return [r for r, v in zip(items, vecs) if v and red.add(v)]


class ConstraintAssembler:
    """Collect ``column -> {constraint key: RatFunc}`` and emit a ScalarMatrix.

    Several coefficient layers (for example powers of a parameter) can share
    one row index so that their matrices line up.
    """

    def __init__(self, ncols: int, layers: int = 1):
        self.ncols = ncols
        self.layers = layers
        self.cols: list[list[dict]] = [[{} for _ in range(ncols)] for _ in range(layers)]

    def set_column(self, j: int, constraints: Mapping[Hashable, RatFunc], layer: int = 0):
        self.cols[layer][j] = {k: r for k, r in constraints.items() if not r.is_zero()}

    def matrices(self) -> list[ScalarMatrix]:
        dens: dict = {}
        for layer in self.cols:
            for col in layer:
                for k, r in col.items():
                    d = dens.get(k)
                    dens[k] = r.den if d is None else tuple(max(a, b) for a, b in zip(d, r.den))
        row_index: dict = {}
        entries = [dict() for _ in range(self.layers)]
        for li, layer in enumerate(self.cols):
            for j, col in enumerate(layer):
                for k, r in col.items():
                    num = r.with_den(dens[k])
                    for e, c in num.terms.items():
                        i = row_index.setdefault((k, e), len(row_index))
                        entries[li].setdefault(i, {})[j] = c
        nrows = len(row_index)
        mats = []
        for li in range(self.layers):
            rows = [entries[li].get(i, {}) for i in range(nrows)]
            mats.append(ScalarMatrix(nrows, self.ncols, rows))
        return mats

    def matrix(self) -> ScalarMatrix:
        return self.matrices()[0]
