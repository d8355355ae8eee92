"""Built-in example systems and their known integrals."""

from __future__ import annotations

from .exactalg import Scalar, SpacePoly, as_scalar, parse_expression, parse_ratfunc
from .geometry import DynamicalSystem, Geometry, VelocityExpr

__all__ = [
    "free_particle",
    "geodesic_z2",
    "whittaker",
    "damped_oscillator",
    "parse_fi",
    "GEODESIC_Z2_INTEGRALS",
    "WHITTAKER_INTEGRALS",
    "damped_oscillator_integrals",
]


def parse_fi(text: str, sys: DynamicalSystem, params=None) -> VelocityExpr:
    """Parse a first integral written in the system's coordinates."""
    g = sys.geometry
    terms = parse_expression(text, g.coords, g.factors, params or sys.constants)
    return VelocityExpr(g.dim, g.factors, terms)


def free_particle(dim: int = 1) -> DynamicalSystem:
    g = Geometry.euclidean(dim)
    return DynamicalSystem(g, [0] * dim, V=0, name=f"free-particle-E{dim}")


def geodesic_z2() -> DynamicalSystem:
    """Geodesics of ``ds^2 = z^2 (dx^2 + dy^2) + dz^2``."""
    coords = ["x", "y", "z"]
    z = SpacePoly.variable(2, 3)
    factors = (z,)
    one = SpacePoly.constant(1, 3)
    inv = [parse_ratfunc("1/z^2", coords, factors)] * 2 + [parse_ratfunc("1", coords, factors)]
    g = Geometry.diagonal([z * z, z * z, one], inv, factors, coords)
    return DynamicalSystem(g, [0, 0, 0], V=0, name="geodesic-z2")


# kinetic energy T = (1/2) gamma_ab qdot qdot
GEODESIC_Z2_INTEGRALS = {
    "T": "z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2",
    "I_x": "z^2*xdot",
    "I_y": "z^2*ydot",
    "I_rot": "z^2*(x*ydot - y*xdot)",
    "I_t1": "-t*(z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2) + z*zdot/2",
    "I_t2": "-t^2*(z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2) + t*z*zdot - z^2/2",
}


def whittaker() -> DynamicalSystem:
    """``xddot = x``, ``yddot = xdot``: ``Q = (-x, 0)`` and ``A^2_1 = 1``."""
    g = Geometry.euclidean(2, ["x", "y"])
    x = g.var(0)
    return DynamicalSystem(g, [-x, 0], A=[[0, 0], [1, 0]], V=x * x * Scalar(-1, 0) / 2, name="whittaker")


WHITTAKER_INTEGRALS = {
    "x_energy": "xdot^2 - x^2",
    "y_momentum": "ydot - x",
    "boost": "t*(ydot - x) + xdot - y",
    "exp_plus": "exp(t)*(xdot - x)",
    "exp_minus": "exp(-t)*(xdot + x)",
}


def damped_oscillator(m=1, k=2, p=3) -> DynamicalSystem:
    """Two coupled damped oscillators.

    ``Q = (k x - p y, k y + p x)``, ``A^a_b = -2 m delta^a_b`` and
    ``V = k (x^2 + y^2) / 2``; the non-conservative force is ``(-p y, p x)``.
    """
    m, k, p = as_scalar(m), as_scalar(k), as_scalar(p)
    g = Geometry.euclidean(2, ["x", "y"])
    x, y = g.var(0), g.var(1)
    Q = [x * k - y * p, y * k + x * p]
    A = [[-2 * m, 0], [0, -2 * m]]
    V = (x * x + y * y) * (k / 2)
    return DynamicalSystem(g, Q, A=A, V=V, name="damped-oscillator", constants={"m": m, "k": k, "p": p})


def damped_oscillator_integrals(m=1, k=2, p=3) -> dict:
    """Known integrals as text with ``m, k, p`` left symbolic.

    ``resonant`` and ``exp_resonant`` are only valid when ``k = p^2 / (4 m^2)``.
    """
    out = {
        "exp_a": "exp(2*m*t)*(xdot^2 - ydot^2 + 2*m*(x*xdot - y*ydot) + k*(x^2 - y^2) - 2*p*x*y)",
        "exp_b": "exp(2*m*t)*(xdot*ydot + m*(y*xdot + x*ydot) + (p/2)*(x^2 - y^2) + k*x*y)",
    }
    m, k, p = as_scalar(m), as_scalar(k), as_scalar(p)
    if p and k == p * p / (4 * m * m):
        out["resonant"] = ("(1/(4*m))*(xdot^2 + ydot^2) + (x + (k/p)*y)*xdot + (y - (k/p)*x)*ydot"
                           " + (k/(4*m) + m)*(x^2 + y^2)")
        out["exp_resonant"] = ("exp(4*m*t)*(xdot^2 + ydot^2 - (p/m)*(y*xdot - x*ydot)"
                               " + (p^2/(4*m^2))*(x^2 + y^2))")
    return out
