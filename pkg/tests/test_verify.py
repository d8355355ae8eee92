import math

import numpy as np
import pytest

from kinetic_integrals.errors import SingularityHit
from kinetic_integrals.geometry import VelocityExpr
from kinetic_integrals.systems import WHITTAKER_INTEGRALS, free_particle, parse_fi
from kinetic_integrals.verify import (DRIFT_LIMIT, battery_drift, battery_drifts, certify_exact, default_battery,
                                      drift, integrate, step_halving)


def test_certify_boost(whittaker_sys):
    assert certify_exact(parse_fi(WHITTAKER_INTEGRALS["boost"], whittaker_sys), whittaker_sys)


def test_certify_reports_residual(whittaker_sys):
    cert = certify_exact(parse_fi("ydot + x", whittaker_sys), whittaker_sys)
    assert not cert
    assert cert.residual == parse_fi("2*xdot", whittaker_sys)


def test_certify_constant(whittaker_sys, geodesic_sys):
    assert certify_exact(VelocityExpr.constant(5, 2), whittaker_sys)
    assert certify_exact(VelocityExpr.constant(-1, 3, geodesic_sys.geometry.factors), geodesic_sys)


def test_integrate_free_particle():
    tr = integrate(free_particle(1), [0], [1], 1.0, 1e-3)
    assert abs(tr.q[-1, 0] - 1.0) < 1e-12
    assert abs(tr.t[-1] - 1.0) < 1e-12


def test_integrate_whittaker_exponential_solution(whittaker_sys):
    # x0 = xdot0 = 1 selects the growing mode only: x(t) = e^t
    tr = integrate(whittaker_sys, [1, 0], [1, 0], 1.0, 1e-3)
    assert abs(complex(tr.q[-1, 0]) - math.e) < 1e-8
    # y'' = x' gives y = e^t - 1 - t + y0 + ydot0 t
    assert abs(complex(tr.q[-1, 1]) - (math.e - 2)) < 1e-8


def test_integrate_geodesic_z_squared_is_quadratic(geodesic_sys):
    q0, v0 = [0.5, -0.25, 1.0], [0.75, 0.5, 0.25]
    tr = integrate(geodesic_sys, q0, v0, 2.0, 1e-3)
    z0, zd0 = q0[2], v0[2]
    T = 0.5 * (z0 ** 2 * (v0[0] ** 2 + v0[1] ** 2) + zd0 ** 2)
    t = np.asarray(tr.t, dtype=float)
    exact = 2 * T * t ** 2 + 2 * z0 * zd0 * t + z0 ** 2
    z2 = np.asarray(tr.q[:, 2] ** 2, dtype=complex)
    assert np.max(np.abs(z2 - exact)) < 1e-8


def test_singularity_guard(geodesic_sys):
    with pytest.raises(SingularityHit):
        integrate(geodesic_sys, [0, 0, 0], [1, 0, 0], 1.0, 1e-3)


def test_step_must_be_positive():
    with pytest.raises(ValueError):
        integrate(free_particle(1), [0], [1], 1.0, 0.0)


def test_drift_of_certified_integral(whittaker_sys):
    I = parse_fi(WHITTAKER_INTEGRALS["x_energy"], whittaker_sys)
    rep = drift(I, whittaker_sys, [0.5, -1], [0.25, 1], 5.0, 1e-3)
    assert rep.drift < 1e-8
    assert rep.step == 1e-3 and rep.duration == pytest.approx(5.0) and rep.samples == 5001


def test_drift_of_velocity_on_free_particle():
    sys = free_particle(1)
    rep = drift(parse_fi("xdot", sys), sys, [0.3], [1.7], 5.0, 1e-3)
    assert rep.drift < 1e-15


def test_drift_detects_corrupted_integral(whittaker_sys):
    # coefficient of xdot in the boost integral raised from 1 to 2
    bad = parse_fi("t*(ydot - x) + 2*xdot - y", whittaker_sys)
    assert not certify_exact(bad, whittaker_sys)
    for rep in battery_drift(bad, whittaker_sys):
        assert rep.drift > 1e-2


def test_drift_is_reproducible(whittaker_sys):
    I = parse_fi(WHITTAKER_INTEGRALS["exp_plus"], whittaker_sys)
    a = [r.to_json() for r in battery_drift(I, whittaker_sys)]
    b = [r.to_json() for r in battery_drift(I, whittaker_sys)]
    assert a == b


def test_default_battery(whittaker_sys, geodesic_sys):
    b = default_battery(whittaker_sys, seed=0)
    assert len(b.q0) == 5
    assert all(-2 <= x <= 2 for row in b.q0 + b.v0 for x in row)
    assert b.to_json() == default_battery(whittaker_sys, seed=0).to_json()
    assert b.to_json() != default_battery(whittaker_sys, seed=1).to_json()
    g = default_battery(geodesic_sys)
    assert all(abs(row[2]) >= 0.25 for row in g.q0)


def test_step_halving(whittaker_sys):
    I = parse_fi(WHITTAKER_INTEGRALS["exp_minus"], whittaker_sys)
    chk = step_halving(I, whittaker_sys, [0.5, 0.5], [-1, 0.25], 5.0, 0.05)
    # coarse step: truncation error dominates and RK4 gives about 16x
    assert chk.ratio > 12 and chk.passed


def test_certified_implies_small_drift(geodesic_sys):
    from kinetic_integrals.systems import GEODESIC_Z2_INTEGRALS
    Is = [parse_fi(text, geodesic_sys) for text in GEODESIC_Z2_INTEGRALS.values()]
    assert all(certify_exact(I, geodesic_sys) for I in Is)
    for reps in battery_drifts(Is, geodesic_sys):
        assert max(r.drift for r in reps) < DRIFT_LIMIT
