"""Phase-space analysis: Poisson brackets, Liouville reports, Noether symmetries."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import MissingPotential
from .exactalg import ZERO, Scalar, RatFunc, rank
from .geometry import (DynamicalSystem, Geometry, TimeExpr, VelocityExpr, momentum_map, total_derivative,
                       velocity_map)

__all__ = [
    "PhaseFunction",
    "to_phase",
    "hamiltonian",
    "poisson_bracket",
    "LiouvilleReport",
    "liouville_report",
    "NoetherSymmetry",
    "inverse_noether",
]


class PhaseFunction(TimeExpr):
    """Expression in ``(t, q, p)``; the fibre variables are the momenta ``p_a``."""

    __slots__ = ()
    suffix = "p"

    @classmethod
    def coordinate(cls, a: int, dim: int, factors=()):
        return cls.from_coeff(RatFunc.from_poly(_var(a, dim), tuple(factors)), dim, factors)

    @classmethod
    def momentum(cls, a: int, dim: int, factors=()):
        return cls.variable(a, dim, factors)


def _var(a, dim):
    from .exactalg import SpacePoly
    return SpacePoly.variable(a, dim)


def _expr(I):
    return I.expr if hasattr(I, "expr") else I


def to_phase(I, g: Geometry) -> PhaseFunction:
    """Velocity expression (or QFI) rewritten with ``qdot^a = gamma^{ab} p_b``."""
    I = _expr(I)
    if isinstance(I, PhaseFunction):
        return I
    return momentum_map(I, g, PhaseFunction)


def hamiltonian(sys: DynamicalSystem) -> PhaseFunction:
    """``H = gamma^{ab} p_a p_b / 2 + V``."""
    if sys.V is None:
        raise MissingPotential("the Hamiltonian needs a potential")
    g = sys.geometry
    n = g.dim
    terms = {}
    for a in range(n):
        for b in range(a, n):
            c = g.inverse[a][b]
            if c.is_zero():
                continue
            e = [0] * n
            e[a] += 1
            e[b] += 1
            terms[(ZERO, 0, tuple(e))] = c * (Scalar(1) / 2) if a == b else c
    terms[(ZERO, 0, (0,) * n)] = sys.V
    return PhaseFunction(n, g.factors, terms)


def poisson_bracket(A: PhaseFunction, B: PhaseFunction) -> PhaseFunction:
    """``{A, B} = sum_a dA/dq^a dB/dp_a - dA/dp_a dB/dq^a``."""
    if A.dim != B.dim:
        raise ValueError("phase functions of different dimension")
    out = PhaseFunction(A.dim, A.factors or B.factors, {})
    for a in range(A.dim):
        dqa, dpb = A.diff_q(a), B.diff_w(a)
        if dqa and dpb:
            out = out + dqa * dpb
        dpa, dqb = A.diff_w(a), B.diff_q(a)
        if dpa and dqb:
            out = out - dpa * dqb
    return PhaseFunction._raw(out.dim, out.factors, out.terms)


# -- Liouville -------------------------------------------------------------------

@dataclass
class LiouvilleReport:
    independent: list          # indices of a maximal independent subset
    rank: int
    sample_ranks: list
    brackets: list             # brackets[i][j] as PhaseFunction
    time_dependent: list       # flags per input
    integrable_subset: list | None
    dim: int

    @property
    def involution(self) -> list:
        return [[b.is_zero() for b in row] for row in self.brackets]

    @property
    def verdict(self) -> bool:
        return self.integrable_subset is not None

    @property
    def verdict_text(self) -> str:
        if self.verdict:
            return "Liouville-integrable evidence"
        return "no Liouville evidence"

    def to_json(self, names=None) -> dict:
        return {
            "rank": self.rank,
            "sample_ranks": self.sample_ranks,
            "independent": self.independent,
            "involution": self.involution,
            "brackets": [[b.format(names) for b in row] for row in self.brackets],
            "time_dependent": self.time_dependent,
            "integrable_subset": self.integrable_subset,
            "verdict": self.verdict_text,
        }


def _gradient_rows(funcs: Sequence[PhaseFunction], t, q, p) -> list[list[Scalar]]:
    rows = []
    for f in funcs:
        row = [f.diff_q(a).evaluate(t, q, p) for a in range(f.dim)]
        row += [f.diff_w(a).evaluate(t, q, p) for a in range(f.dim)]
        rows.append(row)
    return rows


def _strip_exponential(f: PhaseFunction) -> tuple[PhaseFunction, bool]:
    """Drop a common ``exp(lam t)`` factor; the flag says whether the rest may be sampled at t != 0."""
    fe = f.factor_exponential()
    if fe is not None:
        return fe[1], True
    if not any(k[0] for k in f.terms):
        return f, True
    return f, False


def _sample_point(rng, g: Geometry):
    n = g.dim
    while True:
        q = [Scalar(Fraction(int(rng.integers(-40, 41)), int(rng.integers(1, 8)))) for _ in range(n)]
        if all(f.evaluate(q) for f in g.factors):
            p = [Scalar(Fraction(int(rng.integers(-40, 41)), int(rng.integers(1, 8)))) for _ in range(n)]
            t = Scalar(Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 6))))
            return t, q, p


def _gradient_rank(funcs, g, rng, samples) -> tuple[int, list[int]]:
    if not funcs:
        return 0, []
    stripped = [_strip_exponential(f) for f in funcs]
    use_t = all(ok for _, ok in stripped)
    fs = [f for f, _ in stripped]
    ranks = []
    extra = 0
    while len(ranks) < samples + extra:
        t, q, p = _sample_point(rng, g)
        ranks.append(rank(_gradient_rows(fs, t if use_t else ZERO, q, p)))
        # resample on disagreement, at most a few extra points
        if len(ranks) == samples + extra and len(set(ranks)) > 1 and extra < 3:
            extra += 1
    return max(ranks), ranks


def liouville_report(fis: Sequence, sys: DynamicalSystem, seed: int = 0, samples: int = 3) -> LiouvilleReport:
    """Functional independence and involution of a list of first integrals.

    Independence is the exact rank of the gradient in ``(q, p)`` at random
    rational points (maximum over the samples). The verdict is positive when
    ``dim`` of the inputs are independent and commute pairwise.
    """
    g = sys.geometry
    rng = np.random.default_rng(seed)
    funcs = [to_phase(f, g) for f in fis]
    r, ranks = _gradient_rank(funcs, g, rng, samples)
    # greedy maximal independent subset
    indep: list[int] = []
    cur = 0
    for i in range(len(funcs)):
        trial = indep + [i]
        ri, _ = _gradient_rank([funcs[j] for j in trial], g, np.random.default_rng(seed), samples)
        if ri > cur:
            indep, cur = trial, ri
    brackets = [[poisson_bracket(a, b) for b in funcs] for a in funcs]
    tdep = [f.is_time_dependent() for f in funcs]
    found = None
    n = sys.dim
    if len(indep) >= n:
        for sub in combinations(range(len(funcs)), n):
            if any(not brackets[i][j].is_zero() for i in sub for j in sub if i < j):
                continue
            rs, _ = _gradient_rank([funcs[i] for i in sub], g, np.random.default_rng(seed), samples)
            if rs == n:
                found = list(sub)
                break
    return LiouvilleReport(indep, r, ranks, brackets, tdep, found, n)


# -- inverse Noether ---------------------------------------------------------------

def _vexpr(c: RatFunc, n, factors, alpha=None, profile=(ZERO, 0)) -> VelocityExpr:
    return VelocityExpr(n, factors, {(profile[0], profile[1], tuple(alpha or (0,) * n)): c})


def _qdot(a, n, factors) -> VelocityExpr:
    return VelocityExpr.variable(a, n, factors)


def _degree_part(e: VelocityExpr, d: int) -> VelocityExpr:
    return e._like({k: v for k, v in e.terms.items() if sum(k[2]) == d})


@dataclass
class NoetherSymmetry:
    """Gauged symmetry with ``xi = 0`` attached to a first integral.

    ``eta`` holds the upper components ``eta^a``; ``constraint`` is the known
    part of the relation ``phi_a qdot^a + constraint = 0``; ``phi`` is an
    explicit choice of ``phi_a`` when one satisfies it identically.
    """

    variant: str
    eta: list
    eta_lower: list
    f: VelocityExpr
    constraint: VelocityExpr
    phi: list | None
    residual: VelocityExpr
    xi: int = 0

    @property
    def certified(self) -> bool:
        return self.residual.is_zero()

    @property
    def phi_status(self) -> str:
        return "explicit" if self.phi is not None else "constraint-only"

    def to_json(self, names=None) -> dict:
        return {
            "variant": self.variant,
            "xi": "0",
            "eta": [e.format(names) for e in self.eta],
            "f": self.f.format(names),
            "phi": [p.format(names) for p in self.phi] if self.phi is not None else None,
            "phi_status": self.phi_status,
            "phi_constraint": f"phi_a*qdot^a + ({self.constraint.format(names)}) = 0",
            "residual_zero": self.certified,
        }


def _forces(sys: DynamicalSystem) -> list[VelocityExpr]:
    """``F^a = -P^a + A^a_b qdot^b``."""
    n, factors = sys.dim, sys.geometry.factors
    P = sys.P()
    out = []
    for a in range(n):
        e = _vexpr(-P[a], n, factors)
        for b in range(n):
            if not sys.A[a][b].is_zero():
                e = e + _vexpr(sys.A[a][b], n, factors) * _qdot(b, n, factors)
        out.append(e)
    return out


def _noether_residual(eta_up, f, phi_dot_qdot, sys: DynamicalSystem) -> VelocityExpr:
    """``X^[1](L) + phi_a qdot^a - df/dt`` along the motion with ``xi = 0``."""
    g = sys.geometry
    n, factors = g.dim, g.factors
    # dL/dq^a = (1/2) gamma_bc,a qdot^b qdot^c - V_,a ; dL/dqdot^a = gamma_ab qdot^b
    half = Scalar(1) / 2
    res = phi_dot_qdot - total_derivative(f, sys)
    for a in range(n):
        dLq = _vexpr(-sys.V.diff(a), n, factors)
        for b in range(n):
            for c in range(n):
                d = g.metric[b][c].diff(a) if hasattr(g.metric[b][c], "diff") else None
                if d is not None and not d.is_zero():
                    dLq = dLq + _vexpr(g.rf(d) * half, n, factors) * _qdot(b, n, factors) * _qdot(c, n, factors)
        res = res + eta_up[a] * dLq
        eta_dot = total_derivative(eta_up[a], sys)
        for b in range(n):
            if not g.metric[a][b].is_zero():
                res = res + eta_dot * _vexpr(g.rf(g.metric[a][b]), n, factors) * _qdot(b, n, factors)
    return VelocityExpr._raw(n, factors, res.terms)


def inverse_noether(I, sys: DynamicalSystem) -> tuple[NoetherSymmetry, NoetherSymmetry]:
    """Full and half gauged Noether symmetries (``xi = 0``) of a first integral."""
    if sys.V is None:
        raise MissingPotential("inverse Noether needs the Lagrangian, so V must be given")
    g = sys.geometry
    n, factors = g.dim, g.factors
    lam_expr = VelocityExpr._raw(n, factors, {k: g.rf(v) for k, v in _expr(I).terms.items()})
    quad = _degree_part(lam_expr, 2)
    lin = _degree_part(lam_expr, 1)
    const = _degree_part(lam_expr, 0)
    F = _forces(sys)
    # K_ab qdot^b = (1/2) d(quad)/dqdot^a and K_a = d(lin)/dqdot^a
    half = Scalar(1) / 2
    Kq = [quad.diff_w(a).scale(half) for a in range(n)]
    Kl = [lin.diff_w(a) for a in range(n)]
    KlF = sum((Kl[a] * F[a] for a in range(n)), VelocityExpr(n, factors, {}))
    out = []
    for variant, c in (("full", 2), ("half", 1)):
        eta_lower = [-(Kq[a].scale(c)) - Kl[a] for a in range(n)]
        eta_up = []
        for a in range(n):
            e = VelocityExpr(n, factors, {})
            for b in range(n):
                if not g.inverse[a][b].is_zero():
                    e = e + eta_lower[b] * _vexpr(g.inverse[a][b], n, factors)
            eta_up.append(e)
        f = const - quad if variant == "full" else const
        # constraint: phi_a qdot^a + c K_ab F^b qdot^a + K_a F^a = 0
        known = sum((Kq[a].scale(c) * F[a] for a in range(n)), VelocityExpr(n, factors, {})) + KlF
        phi = _phi_representative(Kq, Kl, c, F, sys)
        if phi is not None:
            phi_q = sum((phi[a] * _qdot(a, n, factors) for a in range(n)), VelocityExpr(n, factors, {}))
            if not (phi_q + known).is_zero():
                phi = None
        phi_q = (sum((phi[a] * _qdot(a, n, factors) for a in range(n)), VelocityExpr(n, factors, {}))
                 if phi is not None else -known)
        residual = _noether_residual(eta_up, f, phi_q, sys)
        out.append(NoetherSymmetry(variant, eta_up, eta_lower, f, known, phi, residual))
    return out[0], out[1]


def _phi_representative(Kq, Kl, c, F, sys):
    """``phi_a = -c K_ab F^b - K_b A^b_a`` (with the K_ab F^b part velocity-linear).

    Satisfies the constraint identically exactly when ``K_a P^a = 0``.
    """
    n = sys.dim
    factors = sys.geometry.factors
    # K_ab F^b: Kq[a] is K_ab qdot^b, so substitute qdot -> F is not linear; build directly.
    lam_quad = [Kq[a] for a in range(n)]
    KF = []
    for a in range(n):
        e = VelocityExpr(n, factors, {})
        for b in range(n):
            kab = lam_quad[a].diff_w(b)
            if kab:
                e = e + kab * F[b]
        KF.append(e)
    phi = []
    for a in range(n):
        e = -(KF[a].scale(c))
        for b in range(n):
            if not sys.A[b][a].is_zero():
                e = e - Kl[b] * _vexpr(sys.A[b][a], n, factors)
        phi.append(e)
    return phi
