"""End-to-end acceptance checks, one group per criterion.

Run alone with ``pytest tests/test_acceptance.py``; the terminal summary
prints one PASS/FAIL line per criterion.
"""

import time

import pytest

import test_properties as props
from kinetic_integrals.canonical import inverse_noether, liouville_report, poisson_bracket, to_phase
from kinetic_integrals.exactalg import Scalar
from kinetic_integrals.geometry import DynamicalSystem, Geometry
from kinetic_integrals.killing import KTFamily, builtin_family, solve_kt
from kinetic_integrals.qfi import find_integral1, find_integral2, lambda_scan
from kinetic_integrals.systems import (GEODESIC_Z2_INTEGRALS, WHITTAKER_INTEGRALS, damped_oscillator,
                                       damped_oscillator_integrals, free_particle, geodesic_z2, parse_fi)
from kinetic_integrals.verify import DRIFT_LIMIT, FLOOR, battery_drifts, battery_halving, certify_exact

# -- 1

KT_CASES = [("E2", lambda: Geometry.euclidean(2), 2, 6),
            ("E3", lambda: Geometry.euclidean(3), 2, 20),
            ("z2", lambda: geodesic_z2().geometry, 6, 7)]


@pytest.mark.criterion(1)
@pytest.mark.parametrize("name,make,degree,dim", KT_CASES, ids=[c[0] for c in KT_CASES])
def test_killing_tensor_dimension(name, make, degree, dim):
    g = make()
    start = time.perf_counter()
    fam = solve_kt(g, degree=degree)
    elapsed = time.perf_counter() - start
    assert fam.dim == dim
    assert fam.rank() == dim
    assert elapsed < 10.0, f"{name}: {elapsed:.2f} s"


# -- 2

@pytest.mark.criterion(2)
def test_space_component_and_covariant_families_agree():
    e3 = builtin_family("E3")
    cov = builtin_family("E3_covariant")
    assert e3.rank() == cov.rank() == 20
    assert KTFamily(e3.geometry, e3.basis + cov.basis).rank() == 20
    assert solve_kt(e3.geometry, degree=2).dim == 20


# -- 3

@pytest.mark.criterion(3)
def test_geodesic_chain_contains_all_six():
    sys = geodesic_z2()
    sol = find_integral1(sys, 2)
    assert len(GEODESIC_Z2_INTEGRALS) == 6
    for key, text in GEODESIC_Z2_INTEGRALS.items():
        coords = sol.coordinates(parse_fi(text, sys))
        assert coords is not None, key


@pytest.mark.criterion(3)
def test_geodesic_liouville():
    sys = geodesic_z2()
    fis = [parse_fi(GEODESIC_Z2_INTEGRALS[k], sys) for k in ("T", "I_x", "I_y")]
    rep = liouville_report(fis, sys)
    assert all(b.is_zero() for row in rep.brackets for b in row)
    assert rep.rank == 3
    assert rep.verdict


# -- 4

@pytest.mark.criterion(4)
def test_whittaker_chain(whittaker_sys):
    sol = find_integral1(whittaker_sys, 1)
    for key in ("x_energy", "y_momentum", "boost"):
        assert sol.contains(parse_fi(WHITTAKER_INTEGRALS[key], whittaker_sys)), key


@pytest.mark.criterion(4)
def test_whittaker_lambda_scan(whittaker_sys):
    found = lambda_scan(whittaker_sys, candidates=[1, -1, 2, -2])
    assert set(found) == {Scalar(1), Scalar(-1), Scalar(2), Scalar(-2)}
    for lam in found:
        assert find_integral2(whittaker_sys, lam).dim > 0
    assert find_integral2(whittaker_sys, 1).contains(parse_fi(WHITTAKER_INTEGRALS["exp_plus"], whittaker_sys))
    assert find_integral2(whittaker_sys, -1).contains(parse_fi(WHITTAKER_INTEGRALS["exp_minus"], whittaker_sys))


@pytest.mark.criterion(4)
def test_whittaker_brackets(whittaker_sys):
    g = whittaker_sys.geometry

    def ph(text):
        return to_phase(parse_fi(text, whittaker_sys), g)
    W = {k: ph(v) for k, v in WHITTAKER_INTEGRALS.items()}
    assert poisson_bracket(W["y_momentum"], W["boost"]).is_zero()
    assert poisson_bracket(W["y_momentum"], W["exp_plus"]) == ph("-exp(t)")
    assert poisson_bracket(W["y_momentum"], W["exp_minus"]) == ph("-exp(-t)")
    assert poisson_bracket(W["boost"], W["exp_plus"]) == ph("-exp(t)*(t - 1)")
    assert poisson_bracket(W["boost"], W["exp_minus"]) == ph("-exp(-t)*(t + 1)")
    assert poisson_bracket(W["exp_plus"], W["exp_minus"]) == ph("-2")


# -- 5

@pytest.mark.criterion(5)
def test_damped_exponential_span():
    sys = damped_oscillator(1, 2, 3)
    named = damped_oscillator_integrals(1, 2, 3)
    sol = find_integral2(sys, 2)
    assert sol.dim == 2
    a, b = parse_fi(named["exp_a"], sys), parse_fi(named["exp_b"], sys)
    assert sol.contains(a) and sol.contains(b)
    # a and b are independent, so together they span the whole space
    ca, cb = sol.coordinates(a), sol.coordinates(b)
    assert ca[0] * cb[1] - ca[1] * cb[0] != 0


@pytest.mark.criterion(5)
def test_damped_resonant_branch():
    m, k, p = 1, 1, 2
    assert Scalar(k) == Scalar(p * p) / (4 * m * m)
    sys = damped_oscillator(m, k, p)
    named = damped_oscillator_integrals(m, k, p)
    assert find_integral1(sys, 0).contains(parse_fi(named["resonant"], sys))
    assert find_integral2(sys, 4).contains(parse_fi(named["exp_resonant"], sys))


# -- 6

RUNS = [("geodesic-z2", "1", "2", "3"), ("whittaker", "1", "2", "3"),
        ("damped-oscillator", "1", "2", "3"), ("damped-oscillator", "1", "1", "2")]


@pytest.mark.criterion(6)
@pytest.mark.slow
@pytest.mark.parametrize("run", RUNS, ids=["geodesic", "whittaker", "damped-123", "damped-112"])
def test_emitted_integrals_certified_and_stable(run, reproduced):
    result = reproduced(*run)
    sys = result.spec.system
    qfis = [q for _, q in result.integrals]
    assert qfis
    for q in qfis:
        assert q.certified and certify_exact(q.expr, sys)
    for s in result.report["searches"]:
        for it in s["integrals"]:
            assert it["certified"]
            assert it["drift"]["max_drift"] < DRIFT_LIMIT, it["expression"]
    for q, checks in zip(qfis, battery_halving(qfis, sys)):
        for c in checks:
            assert c.passed, (q.format(), c)


@pytest.mark.criterion(6)
def test_search_spaces_certified_and_stable(whittaker_sys):
    # integrals emitted by direct searches outside the bundled runs
    spaces = [find_integral1(free_particle(2), 1), find_integral2(whittaker_sys, 2),
              find_integral2(whittaker_sys, -2)]
    for sp in spaces:
        assert all(certify_exact(q.expr, sp.system) for q in sp.basis)
        for reps in battery_drifts(sp.basis, sp.system):
            assert max(r.drift for r in reps) < DRIFT_LIMIT
    assert FLOOR == 1e-13


# -- 7

def conservative_systems():
    g = Geometry.euclidean(2, ["x", "y"])
    x, y = g.var(0), g.var(1)
    V = x * x + x * y * 3 - y * y * y
    yield DynamicalSystem(g, [V.diff(0), V.diff(1)], V=V), "xdot^2/2 + ydot^2/2 + x^2 + 3*x*y - y^3"
    yield free_particle(3), "xdot^2/2 + ydot^2/2 + zdot^2/2"
    yield geodesic_z2(), GEODESIC_Z2_INTEGRALS["T"]


@pytest.mark.criterion(7)
def test_noether_energy_of_conservative_systems():
    for sys, energy in conservative_systems():
        full, half = inverse_noether(parse_fi(energy, sys), sys)
        assert full.variant != half.variant
        for sym in (full, half):
            assert sym.residual.is_zero(), energy


@pytest.mark.criterion(7)
def test_noether_whittaker_momentum(whittaker_sys):
    full, half = inverse_noether(parse_fi(WHITTAKER_INTEGRALS["y_momentum"], whittaker_sys), whittaker_sys)
    for sym in (full, half):
        assert sym.residual.is_zero()


# -- 8

PROPERTY_TESTS = [props.test_nullspace_is_exact, props.test_total_derivative_is_a_derivation,
                  props.test_poisson_bracket_algebra, props.test_reduce_after_sym_cov_deriv,
                  props.test_parity_split_recertifies]


@pytest.mark.criterion(8)
@pytest.mark.slow
@pytest.mark.parametrize("prop", PROPERTY_TESTS, ids=[f.__name__[5:] for f in PROPERTY_TESTS])
def test_property_suite(prop):
    assert prop._hypothesis_internal_use_settings.max_examples >= 200
    prop()
