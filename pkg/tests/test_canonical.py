import pytest

from kinetic_integrals.canonical import (PhaseFunction, hamiltonian, inverse_noether, liouville_report,
                                         poisson_bracket, to_phase)
from kinetic_integrals.errors import MissingPotential
from kinetic_integrals.geometry import DynamicalSystem, Geometry, VelocityExpr, velocity_map
from kinetic_integrals.systems import (GEODESIC_Z2_INTEGRALS, WHITTAKER_INTEGRALS, damped_oscillator,
                                       damped_oscillator_integrals, free_particle, parse_fi)


def W(key, sys):
    return to_phase(parse_fi(WHITTAKER_INTEGRALS[key], sys), sys.geometry)


def phase(text, sys):
    return to_phase(parse_fi(text, sys), sys.geometry)


def test_canonical_pair():
    q = PhaseFunction.coordinate(0, 2)
    p = PhaseFunction.momentum(0, 2)
    assert poisson_bracket(q, p) == PhaseFunction.constant(1, 2)
    assert poisson_bracket(q, PhaseFunction.momentum(1, 2)).is_zero()


def test_whittaker_brackets(whittaker_sys):
    s = whittaker_sys
    assert poisson_bracket(W("y_momentum", s), W("boost", s)).is_zero()
    assert poisson_bracket(W("exp_plus", s), W("exp_minus", s)) == PhaseFunction.constant(-2, 2)
    assert poisson_bracket(W("y_momentum", s), W("exp_plus", s)) == phase("-exp(t)", s)
    assert poisson_bracket(W("y_momentum", s), W("exp_minus", s)) == phase("-exp(-t)", s)


def test_phase_round_trip(geodesic_sys):
    g = geodesic_sys.geometry
    for text in GEODESIC_Z2_INTEGRALS.values():
        I = parse_fi(text, geodesic_sys)
        assert velocity_map(to_phase(I, g), g) == I


def test_hamiltonian_flow_preserves_integrals(geodesic_sys):
    H = hamiltonian(geodesic_sys)
    for text in GEODESIC_Z2_INTEGRALS.values():
        I = phase(text, geodesic_sys)
        assert (I.diff_t() + poisson_bracket(I, H)).is_zero(), text


def test_hamiltonian_needs_potential():
    g = Geometry.euclidean(1)
    with pytest.raises(MissingPotential):
        hamiltonian(DynamicalSystem(g, [0]))


def test_liouville_geodesic(geodesic_sys):
    fis = [parse_fi(GEODESIC_Z2_INTEGRALS[k], geodesic_sys) for k in ("T", "I_x", "I_y")]
    rep = liouville_report(fis, geodesic_sys)
    assert rep.rank == 3 and rep.independent == [0, 1, 2]
    assert all(b.is_zero() for row in rep.brackets for b in row)
    assert rep.verdict and rep.verdict_text == "Liouville-integrable evidence"
    assert rep.time_dependent == [False] * 3


def test_liouville_whittaker(whittaker_sys):
    fis = [parse_fi(WHITTAKER_INTEGRALS[k], whittaker_sys) for k in ("y_momentum", "boost")]
    rep = liouville_report(fis, whittaker_sys)
    assert rep.rank == 2 and rep.verdict
    assert rep.time_dependent == [False, True]


def test_liouville_noncommuting_pair(whittaker_sys):
    fis = [parse_fi(WHITTAKER_INTEGRALS[k], whittaker_sys) for k in ("exp_plus", "exp_minus")]
    rep = liouville_report(fis, whittaker_sys)
    assert rep.rank == 2
    assert not rep.verdict


def test_liouville_constant_integral(whittaker_sys):
    rep = liouville_report([VelocityExpr.constant(1, 2)], whittaker_sys)
    assert rep.rank == 0
    assert not rep.verdict and rep.verdict_text == "no Liouville evidence"


def test_liouville_dependent_integrals(geodesic_sys):
    T = parse_fi(GEODESIC_Z2_INTEGRALS["T"], geodesic_sys)
    rep = liouville_report([T, T.scale(3), parse_fi("z^2*xdot", geodesic_sys)], geodesic_sys)
    assert rep.rank == 2
    assert not rep.verdict


def test_noether_whittaker_momentum(whittaker_sys):
    full, half = inverse_noether(parse_fi("ydot - x", whittaker_sys), whittaker_sys)
    for sym in (full, half):
        assert sym.certified
        assert sym.eta_lower[0].is_zero()
        assert sym.eta_lower[1] == VelocityExpr.constant(-1, 2)
        assert sym.f == parse_fi("-x", whittaker_sys)
        assert sym.xi == 0


def test_noether_free_energy():
    sys = free_particle(2)
    full, half = inverse_noether(parse_fi("xdot^2/2 + ydot^2/2", sys), sys)
    assert full.eta == [parse_fi("-xdot", sys), parse_fi("-ydot", sys)]
    assert full.f == parse_fi("-xdot^2/2 - ydot^2/2", sys)
    assert full.certified and half.certified
    assert half.eta == [parse_fi("-xdot/2", sys), parse_fi("-ydot/2", sys)]


def test_noether_potential_energy():
    g = Geometry.euclidean(2, ["x", "y"])
    x, y = g.var(0), g.var(1)
    V = x * x + x * y * 3
    sys = DynamicalSystem(g, [V.diff(0), V.diff(1)], V=V)
    full, half = inverse_noether(parse_fi("xdot^2/2 + ydot^2/2 + x^2 + 3*x*y", sys), sys)
    assert full.f == parse_fi("-xdot^2/2 - ydot^2/2 + x^2 + 3*x*y", sys)
    assert full.certified and half.certified


def test_noether_damped_exponential():
    sys = damped_oscillator(1, 2, 3)
    Jb = parse_fi(damped_oscillator_integrals(1, 2, 3)["exp_b"], sys)
    full, half = inverse_noether(Jb, sys)
    assert full.certified and half.certified
    js = full.to_json(["x", "y"])
    assert js["residual_zero"] and js["xi"] == "0"


def test_noether_missing_potential():
    g = Geometry.euclidean(1)
    sys = DynamicalSystem(g, [0])
    with pytest.raises(MissingPotential):
        inverse_noether(parse_fi("xdot", sys), sys)


def test_noether_rejects_false_integral(whittaker_sys):
    full, half = inverse_noether(parse_fi("ydot + x", whittaker_sys), whittaker_sys)
    assert not full.certified and not half.certified
