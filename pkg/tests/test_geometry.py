import pytest

from kinetic_integrals.canonical import PhaseFunction
from kinetic_integrals.errors import DegreeOverflow, DenominatorNotDeclared, InverseMismatch
from kinetic_integrals.exactalg import RatFunc, Scalar, SpacePoly, parse_poly, parse_ratfunc
from kinetic_integrals.geometry import (Geometry, VelocityExpr, build_geometry, cov_deriv_tensor, momentum_map,
                                        sym_cov_deriv, total_derivative, velocity_map)
from kinetic_integrals.killing import collineation_table
from kinetic_integrals.systems import free_particle, parse_fi, whittaker

XYZ = ["x", "y", "z"]


def z2_parts():
    z = SpacePoly.variable(2, 3)
    one = SpacePoly.constant(1, 3)
    zero = SpacePoly.zero(3)
    metric = [[z * z, zero, zero], [zero, z * z, zero], [zero, zero, one]]
    r0 = RatFunc.constant(0, 3, (z,))
    inv = [[parse_ratfunc("1/z^2", XYZ, (z,)), r0, r0],
           [r0, parse_ratfunc("1/z^2", XYZ, (z,)), r0],
           [r0, r0, RatFunc.constant(1, 3, (z,))]]
    return metric, inv, (z,)


def test_euclidean_christoffels_vanish():
    for n in (1, 2, 3, 4):
        g = Geometry.euclidean(n)
        assert g.flat
        assert all(c.is_zero() for plane in g.christoffel for row in plane for c in row)


def test_z2_metric_christoffels():
    metric, inv, factors = z2_parts()
    g = build_geometry(metric, inv, factors, XYZ)
    assert g.christoffel[0][0][2] == parse_ratfunc("1/z", XYZ, factors)
    assert g.christoffel[0][2][0] == g.christoffel[0][0][2]
    assert g.christoffel[2][0][0] == parse_ratfunc("-z", XYZ, factors)
    assert not g.flat


def test_v2_lorentzian_metric_is_flat():
    for eps in (1, -1):
        m = [[SpacePoly.constant(eps, 2), SpacePoly.zero(2)], [SpacePoly.zero(2), SpacePoly.constant(1, 2)]]
        assert Geometry(m, m, (), ["x", "y"]).flat


def test_wrong_inverse_rejected():
    metric, inv, factors = z2_parts()
    inv[2][2] = RatFunc.constant(2, 3, factors)
    with pytest.raises(InverseMismatch):
        build_geometry(metric, inv, factors, XYZ)


def test_undeclared_factor_rejected():
    metric, inv, _ = z2_parts()
    with pytest.raises(DenominatorNotDeclared):
        build_geometry(metric, inv, (), XYZ)


def test_metric_compatibility(geodesic_sys):
    g = geodesic_sys.geometry
    D = cov_deriv_tensor(g.metric, g)
    assert all(c.is_zero() for plane in D for row in plane for c in row)


def test_sym_cov_deriv_plane_reducible_family():
    # covector with eight free constants; its symmetrized derivative is the
    # reducible part of the general plane Killing tensor with 2C = a8 + a10
    names = ["x", "y", "a", "b", "A", "B", "a8", "a9", "a10", "a11"]
    dim = len(names)
    g = Geometry.euclidean(dim, names)
    L = [parse_poly("-2*b*y^2 + 2*a*x*y + A*x + a8*y + a11", names),
         parse_poly("-2*a*x^2 + 2*b*x*y + a10*x + B*y + a9", names)] + [SpacePoly.zero(dim)] * (dim - 2)
    # only x and y are coordinates of the plane; the constants ride along as
    # variables that nothing differentiates with respect to
    C = sym_cov_deriv([g.rf(p) for p in L], g)
    assert C[0][0].num == parse_poly("2*a*y + A", names)
    assert C[1][1].num == parse_poly("2*b*x + B", names)
    assert C[0][1].num == parse_poly("-a*x - b*y + (a8 + a10)/2", names)


def test_sym_cov_deriv_killing_vectors_vanish():
    for n in (2, 3):
        g = Geometry.euclidean(n)
        t = collineation_table(n)
        for X in t.gradient_kvs + t.nongradient_kvs:
            C = sym_cov_deriv([g.rf(c) for c in X], g)
            assert all(c.is_zero() for row in C for c in row)


def test_sym_cov_deriv_homothetic_on_z2(geodesic_sys):
    g = geodesic_sys.geometry
    z = g.var(2)
    zero = g.zero()
    C = sym_cov_deriv([zero, zero, z * 5], g)
    for a in range(3):
        for b in range(3):
            assert C[a][b] == g.rf(g.metric[a][b]) * 5


def test_total_derivative_constant_is_zero(whittaker_sys):
    assert total_derivative(VelocityExpr.constant(3, 2), whittaker_sys).is_zero()


def test_total_derivative_whittaker_momentum(whittaker_sys):
    assert total_derivative(parse_fi("ydot - x", whittaker_sys), whittaker_sys).is_zero()


def test_total_derivative_whittaker_exponential(whittaker_sys):
    assert total_derivative(parse_fi("exp(t)*(xdot - x)", whittaker_sys), whittaker_sys).is_zero()
    assert total_derivative(parse_fi("exp(-t)*(xdot + x)", whittaker_sys), whittaker_sys).is_zero()


def test_total_derivative_not_conserved(whittaker_sys):
    res = total_derivative(parse_fi("ydot + x", whittaker_sys), whittaker_sys)
    assert res == parse_fi("2*xdot", whittaker_sys)


def test_total_derivative_degree_guard(whittaker_sys):
    with pytest.raises(DegreeOverflow):
        total_derivative(parse_fi("xdot^3", whittaker_sys), whittaker_sys)


def test_geodesic_energy_conserved(geodesic_sys):
    T = parse_fi("z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2", geodesic_sys)
    assert total_derivative(T, geodesic_sys).is_zero()


def test_momentum_map_euclidean_identity():
    sys = free_particle(3)
    e = parse_fi("x*xdot + y^2*zdot*ydot + t", sys)
    ph = momentum_map(e, sys.geometry)
    assert dict(ph.terms) == dict(e.terms)


def test_momentum_map_z2_energy(geodesic_sys):
    g = geodesic_sys.geometry
    T = parse_fi("z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2", geodesic_sys)
    p = [PhaseFunction.momentum(a, 3, g.factors) for a in range(3)]
    inv_z2 = parse_ratfunc("1/z^2", XYZ, g.factors)
    expected = (p[0] * p[0] * inv_z2 + p[1] * p[1] * inv_z2 + p[2] * p[2]).scale(Scalar(1, 0) / 2)
    assert momentum_map(T, g) == expected


def test_momentum_map_z2_linear(geodesic_sys):
    g = geodesic_sys.geometry
    I = parse_fi("z^2*xdot", geodesic_sys)
    assert momentum_map(I, g) == PhaseFunction.momentum(0, 3, g.factors)


def test_velocity_map_inverts_momentum_map(geodesic_sys):
    g = geodesic_sys.geometry
    I = parse_fi("-t^2*(z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2) + t*z*zdot - z^2/2", geodesic_sys)
    assert velocity_map(momentum_map(I, g), g) == I


def test_conservative_split_checked():
    sys = whittaker()
    assert sys.V is not None
    # the conservative part of Q is the gradient of V
    assert sys.grad_V_up()[0] == sys.geometry.rf(parse_poly("-x", ["x", "y"]))
