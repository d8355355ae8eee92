"""Independent reference computations used to cross-check the search engine.

The brute-force oracle makes no use of the chain recursion: it writes a general
time-polynomial quadratic expression with unknown coefficients, differentiates
every ansatz column along the flow and takes the exact kernel.
"""

from kinetic_integrals.exactalg import RatFunc, ZERO, nullspace
from kinetic_integrals.exactalg.poly import SpacePoly, monomials_upto
from kinetic_integrals.geometry import VelocityExpr, total_derivative
from kinetic_integrals.linsys import ConstraintAssembler


def _columns(dim, tdeg, degs):
    cols = []
    for N in range(tdeg + 1):
        for vdeg, qdeg in enumerate(degs[::-1]):
            for alpha in monomials_upto(dim, vdeg, vdeg):
                for m in monomials_upto(dim, qdeg):
                    cols.append((N, alpha, m))
    return cols


def brute_integrals(sys, tdeg, degs=(2, 3, 4)):
    """Kernel of ``d/dt`` on ``sum_N t^N (K_ab qdot qdot + K_a qdot + K)``.

    ``degs`` bounds the q-degree of the quadratic, linear and scalar parts.
    Returns a list of VelocityExpr with the constant integral removed.
    """
    n = sys.dim
    assert not sys.geometry.factors, "oracle is for polynomial metrics"
    cols = _columns(n, tdeg, degs)
    asm = ConstraintAssembler(len(cols))
    exprs = []
    for j, (N, alpha, m) in enumerate(cols):
        e = VelocityExpr(n, (), {(ZERO, N, alpha): RatFunc.from_poly(SpacePoly.monomial(m))})
        exprs.append(e)
        asm.set_column(j, dict(total_derivative(e, sys).terms))
    out = []
    for v in nullspace(asm.matrix()):
        acc = VelocityExpr(n, (), {})
        for c, e in zip(v, exprs):
            if c:
                acc = acc + e.scale(c)
        if len(acc.terms) == 1 and next(iter(acc.terms)) == (ZERO, 0, (0,) * n):
            continue  # the constant integral
        out.append(acc)
    return out
