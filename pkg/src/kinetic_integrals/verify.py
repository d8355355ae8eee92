"""Exact and numerical certification of first integrals."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import SingularityHit
from .exactalg import Scalar, as_scalar
from .geometry import DynamicalSystem, VelocityExpr, total_derivative

__all__ = [
    "Certificate",
    "DriftReport",
    "Trajectory",
    "certify_exact",
    "integrate",
    "integrate_batch",
    "drift",
    "default_battery",
    "battery_drift",
    "battery_drifts",
    "Battery",
    "HalvingCheck",
    "step_halving",
    "battery_halving",
    "GUARD",
    "DRIFT_LIMIT",
]

GUARD = 1e-8
FLOOR = 1e-13
DRIFT_LIMIT = 1e-8
# trajectories and integral values are carried in extended precision so that
# integrals with large cancelling terms are not limited by double rounding
CDTYPE = np.clongdouble


def _expr_of(I) -> VelocityExpr:
    return I.expr if hasattr(I, "expr") else I


@dataclass
class Certificate:
    certified: bool
    residual: VelocityExpr

    def __bool__(self):
        return self.certified


def certify_exact(I, sys: DynamicalSystem) -> Certificate:
    """``dI/dt`` along the motion, grouped by time profile; zero means Certified."""
    res = total_derivative(_expr_of(I), sys)
    return Certificate(res.is_zero(), res)


@dataclass
class Trajectory:
    t: np.ndarray        # (samples,)
    q: np.ndarray        # (samples, dim, batch)
    v: np.ndarray        # (samples, dim, batch)
    step: float


def _acceleration(sys: DynamicalSystem):
    omega = [w.numeric() for w in sys.omega()]
    guards = []
    for w in sys.omega():
        for c in w.terms.values():
            for f, k in zip(c.factors, c.den):
                if k:
                    guards.append(f)
    guard_fns = []
    seen = set()
    for f in guards:
        if f not in seen:
            seen.add(f)
            guard_fns.append(f.numeric())

    def acc(q, v):
        for gf in guard_fns:
            if np.any(np.abs(gf(q)) < GUARD):
                raise SingularityHit("trajectory reached a zero of a denominator factor")
        return np.stack([np.broadcast_to(np.asarray(w(0.0, q, v), dtype=CDTYPE), q[0].shape) for w in omega])

    return acc, guard_fns


def integrate_batch(sys: DynamicalSystem, q0, v0, t_end: float, step: float) -> Trajectory:
    """Classical RK4 on ``(q, qdot)`` for a batch of initial conditions.

    ``q0`` and ``v0`` have shape ``(dim, batch)``; arithmetic is complex.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    q = np.array(q0, dtype=CDTYPE)
    v = np.array(v0, dtype=CDTYPE)
    if q.ndim == 1:
        q = q[:, None]
        v = v[:, None]
    acc, guards = _acceleration(sys)
    nsteps = int(round(t_end / step))
    qs = np.empty((nsteps + 1,) + q.shape, dtype=CDTYPE)
    vs = np.empty_like(qs)
    qs[0], vs[0] = q, v
    h = np.longdouble(step)
    h2, h6 = h / 2, h / 6
    for i in range(nsteps):
        k1q, k1v = v, acc(q, v)
        k2q, k2v = v + h2 * k1v, acc(q + h2 * k1q, v + h2 * k1v)
        k3q, k3v = v + h2 * k2v, acc(q + h2 * k2q, v + h2 * k2v)
        k4q, k4v = v + h * k3v, acc(q + h * k3q, v + h * k3v)
        q = q + h6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        v = v + h6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        qs[i + 1], vs[i + 1] = q, v
    for gf in guards:
        if np.any(np.abs(gf(q)) < GUARD):
            raise SingularityHit("trajectory reached a zero of a denominator factor")
    t = np.arange(nsteps + 1, dtype=np.longdouble) * h
    return Trajectory(t, qs, vs, step)


def _exact_to_ld(x):
    if isinstance(x, Fraction):
        return np.longdouble(x.numerator) / np.longdouble(x.denominator)
    if isinstance(x, Scalar):
        return x.numeric()
    return x


def _column(values):
    return np.array([_exact_to_ld(x) for x in values], dtype=CDTYPE)[:, None]


def integrate(sys: DynamicalSystem, q0: Sequence, v0: Sequence, t_end: float, step: float) -> Trajectory:
    """Single trajectory; ``q`` and ``v`` come back with shape ``(samples, dim)``."""
    tr = integrate_batch(sys, _column(q0), _column(v0), t_end, step)
    return Trajectory(tr.t, tr.q[:, :, 0], tr.v[:, :, 0], step)


@dataclass
class DriftReport:
    initial_value: complex
    drift: float
    step: float
    duration: float
    samples: int
    scale: float = 1.0   # max term magnitude relative to max(1, |I(0)|)

    def to_json(self) -> dict:
        return {
            "initial_value": [float(np.real(self.initial_value)), float(np.imag(self.initial_value))],
            "drift": float(self.drift),
            "step": self.step,
            "duration": self.duration,
            "samples": self.samples,
            "scale": float(self.scale),
        }


def _drift_from_traj(expr: VelocityExpr, tr: Trajectory) -> list[DriftReport]:
    f = expr.numeric()
    mag = expr.term_magnitudes()
    tt = tr.t[:, None]
    # q: (samples, dim, batch) -> list over dim of (samples, batch)
    q = [tr.q[:, a, :] for a in range(tr.q.shape[1])]
    v = [tr.v[:, a, :] for a in range(tr.v.shape[1])]
    vals = np.broadcast_to(np.asarray(f(tt, q, v), dtype=CDTYPE), tr.q[:, 0, :].shape)
    mags = np.broadcast_to(np.asarray(mag(tt, q, v), dtype=np.longdouble), tr.q[:, 0, :].shape)
    out = []
    for b in range(vals.shape[1]):
        i0 = vals[0, b]
        denom = max(1.0, float(abs(i0)))
        d = float(np.max(np.abs(vals[:, b] - i0))) / denom
        out.append(DriftReport(complex(i0), d, tr.step, float(tr.t[-1]), len(tr.t), float(np.max(mags[:, b])) / denom))
    return out


def drift(I, sys: DynamicalSystem, q0, v0, t_end: float = 5.0, step: float = 1e-3) -> DriftReport:
    tr = integrate_batch(sys, _column(q0), _column(v0), t_end, step)
    return _drift_from_traj(_expr_of(I), tr)[0]


@dataclass
class Battery:
    seed: int
    q0: list            # list of tuples of Fractions
    v0: list
    rejected: int = 0

    def arrays(self):
        q = np.array([[_exact_to_ld(x) for x in row] for row in self.q0], dtype=CDTYPE).T
        v = np.array([[_exact_to_ld(x) for x in row] for row in self.v0], dtype=CDTYPE).T
        return q, v

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "initial_positions": [[str(x) for x in row] for row in self.q0],
            "initial_velocities": [[str(x) for x in row] for row in self.v0],
            "rejected_draws": self.rejected,
        }


def default_battery(sys: DynamicalSystem, seed: int = 0, count: int = 5, t_end: float = 5.0,
                    step: float = 1e-3, max_tries: int = 200) -> Battery:
    """``count`` rational initial conditions in ``[-2, 2]^(2 dim)`` (multiples of 1/16).

    Draws whose integration trips the denominator guard or leaves the
    representable range are rejected and redrawn; the generator is seeded so
    the battery is reproducible.
    """
    rng = np.random.default_rng(seed)
    n = sys.dim
    qs, vs = [], []
    rejected = 0
    guards = [f.numeric() for f in sys.geometry.factors]
    tries = 0
    while len(qs) < count:
        tries += 1
        if tries > max_tries:
            raise SingularityHit("could not find regular initial conditions for the battery")
        q = [Fraction(int(k), 16) for k in rng.integers(-32, 33, size=n)]
        v = [Fraction(int(k), 16) for k in rng.integers(-32, 33, size=n)]
        qf = [complex(float(x)) for x in q]
        if any(abs(gf(qf)) < 0.25 for gf in guards):
            rejected += 1
            continue
        try:
            tr = integrate_batch(sys, np.array(qf)[:, None], np.array([float(x) for x in v], dtype=complex)[:, None],
                                 t_end, max(step, 1e-2))
        except SingularityHit:
            rejected += 1
            continue
        if not np.all(np.isfinite(tr.q)) or not np.all(np.isfinite(tr.v)) or np.max(np.abs(tr.q)) > 1e6:
            rejected += 1
            continue
        if guards:
            qq = [tr.q[:, a, 0] for a in range(n)]
            if any(np.min(np.abs(gf(qq))) < 1e-2 for gf in guards):
                rejected += 1
                continue
        qs.append(tuple(q))
        vs.append(tuple(v))
    return Battery(seed, qs, vs, rejected)


def battery_drift(I, sys: DynamicalSystem, battery: Battery | None = None, t_end: float = 5.0,
                  step: float = 1e-3) -> list[DriftReport]:
    battery = battery or default_battery(sys)
    q, v = battery.arrays()
    tr = integrate_batch(sys, q, v, t_end, step)
    return _drift_from_traj(_expr_of(I), tr)


def battery_drifts(Is: Sequence, sys: DynamicalSystem, battery: Battery | None = None, t_end: float = 5.0,
                   step: float = 1e-3) -> list[list[DriftReport]]:
    """Drift reports for several integrals sharing one set of trajectories."""
    battery = battery or default_battery(sys)
    q, v = battery.arrays()
    tr = integrate_batch(sys, q, v, t_end, step)
    return [_drift_from_traj(_expr_of(I), tr) for I in Is]


@dataclass
class HalvingCheck:
    coarse: float
    fine: float
    ratio: float
    floor: float
    passed: bool


def battery_halving(Is: Sequence, sys: DynamicalSystem, battery: Battery | None = None, t_end: float = 5.0,
                    step: float = 1e-3) -> list[list[HalvingCheck]]:
    """Step-halving checks for several integrals on every battery trajectory."""
    battery = battery or default_battery(sys)
    q, v = battery.arrays()
    coarse = integrate_batch(sys, q, v, t_end, step)
    fine = integrate_batch(sys, q, v, t_end, step / 2)
    out = []
    for I in Is:
        e = _expr_of(I)
        out.append([_halving(a, b) for a, b in zip(_drift_from_traj(e, coarse), _drift_from_traj(e, fine))])
    return out


def _halving(a: DriftReport, b: DriftReport) -> HalvingCheck:
    floor = FLOOR * max(1.0, a.scale)
    ratio = a.drift / b.drift if b.drift > 0 else float("inf")
    return HalvingCheck(a.drift, b.drift, ratio, floor, bool(ratio >= 8 or b.drift <= floor))


def step_halving(I, sys: DynamicalSystem, q0, v0, t_end: float = 5.0, step: float = 1e-3) -> HalvingCheck:
    """Compare drift at ``step`` and ``step/2``.

    Passes when the drift shrinks by at least 8 or the finer drift is already
    at the rounding floor ``1e-13 * max(1, scale)`` where ``scale`` measures
    cancellation among the terms of the integral.
    """
    return _halving(drift(I, sys, q0, v0, t_end, step), drift(I, sys, q0, v0, t_end, step / 2))
