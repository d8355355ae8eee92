import pytest

from kinetic_integrals.errors import DegreeOverflow, LambdaZero, NotApplicable
from kinetic_integrals.exactalg import Scalar, rank
from kinetic_integrals.geometry import DynamicalSystem, Geometry, sym_cov_deriv, total_derivative
from kinetic_integrals.qfi import (Ansatz, expr_vectors, find_integral1, find_integral1_converged, find_integral2,
                                   lambda_scan, parity_split)
from kinetic_integrals.systems import (WHITTAKER_INTEGRALS, damped_oscillator, free_particle, parse_fi,
                                       whittaker)

from oracles import brute_integrals


def spans_equal(A, B):
    vecs = expr_vectors(list(A) + list(B))
    ncols = 1 + max(j for v in vecs for j in v)
    d = [[v.get(j, 0) for j in range(ncols)] for v in vecs]
    return rank(d[:len(A)]) == rank(d[len(A):]) == rank(d)


# frozen from the brute-force oracle (time degree n, q-degrees 2/3/4)
ORACLE_DIMS = [
    ("free-E1", lambda: free_particle(1), 0, 2),
    ("free-E1", lambda: free_particle(1), 1, 4),
    ("free-E1", lambda: free_particle(1), 2, 5),
    ("free-E2", lambda: free_particle(2), 0, 9),
    ("free-E2", lambda: free_particle(2), 1, 16),
    ("whittaker", whittaker, 0, 3),
    ("whittaker", whittaker, 1, 5),
    ("damped-112", lambda: damped_oscillator(1, 1, 2), 0, 1),
]


@pytest.mark.parametrize("name,make,n,dim", ORACLE_DIMS, ids=[f"{c[0]}-n{c[2]}" for c in ORACLE_DIMS])
def test_chain_matches_brute_force(name, make, n, dim):
    sys = make()
    chain = find_integral1(sys, n).expressions()
    brute = brute_integrals(sys, n)
    assert len(chain) == len(brute) == dim
    assert spans_equal(chain, brute)


def test_free_particle_line_n0():
    sys = free_particle(1)
    sol = find_integral1(sys, 0)
    assert sol.dim == 2
    assert spans_equal(sol.expressions(), [parse_fi("xdot^2", sys), parse_fi("xdot", sys)])


def test_whittaker_chain_n1(whittaker_sys):
    sol = find_integral1(whittaker_sys, 1)
    for key in ("x_energy", "y_momentum", "boost"):
        assert sol.contains(parse_fi(WHITTAKER_INTEGRALS[key], whittaker_sys)), key
    assert all(q.certified for q in sol.basis)


def test_chain_is_monotone(whittaker_sys):
    for sys in (whittaker_sys, free_particle(2)):
        prev = find_integral1(sys, 0)
        for n in (1, 2):
            cur = find_integral1(sys, n)
            assert all(cur.contains(e) for e in prev.expressions())
            prev = cur


def test_energy_in_n0_for_conservative_system():
    g = Geometry.euclidean(2, ["x", "y"])
    x, y = g.var(0), g.var(1)
    V = x * x * 3 + x * y - y * y * y
    sys = DynamicalSystem(g, [V.diff(0), V.diff(1)], V=V)
    assert sys.is_conservative()
    sol = find_integral1(sys, 0)
    assert sol.contains(parse_fi("xdot^2/2 + ydot^2/2 + 3*x^2 + x*y - y^3", sys))


def test_convergence_helper(whittaker_sys):
    sol = find_integral1_converged(whittaker_sys, cap=4)
    assert sol.contains(parse_fi(WHITTAKER_INTEGRALS["boost"], whittaker_sys))


def test_ansatz_degree_bound(whittaker_sys):
    with pytest.raises(DegreeOverflow):
        find_integral1(whittaker_sys, 1, Ansatz(l_degree=9))


def test_negative_chain_length(whittaker_sys):
    with pytest.raises(ValueError):
        find_integral1(whittaker_sys, -1)


def test_qfi_terms_and_format(whittaker_sys):
    sol = find_integral1(whittaker_sys, 1)
    q = sol.basis[0]
    assert q.provenance == ("integral1", 1)
    assert "n=1" in q.provenance_text()
    assert parse_fi(q.format(), whittaker_sys) == q.expr
    for prof, Kab, Ka, K in q.terms():
        assert all(Kab[a][b] == Kab[b][a] for a in range(2) for b in range(2))


def test_whittaker_exponential_plus_one(whittaker_sys):
    sol = find_integral2(whittaker_sys, 1)
    assert sol.dim == 2
    assert sol.contains(parse_fi("exp(t)*(xdot - x)", whittaker_sys))
    assert sol.contains(parse_fi("exp(t)*(ydot - x)*(xdot - x)", whittaker_sys))


def test_exponential_needs_nonzero_lambda(whittaker_sys):
    with pytest.raises(LambdaZero):
        find_integral2(whittaker_sys, 0)


def test_exponential_empty_space(whittaker_sys):
    assert find_integral2(whittaker_sys, 3).dim == 0


def test_damped_exponential_space():
    sys = damped_oscillator(1, 2, 3)
    sol = find_integral2(sys, 2)
    assert sol.dim == 2
    assert all(total_derivative(e, sys).is_zero() for e in sol.expressions())


def test_lambda_scan_whittaker_all_modes(whittaker_sys):
    want = {Scalar(1), Scalar(-1), Scalar(2), Scalar(-2)}
    assert set(lambda_scan(whittaker_sys, candidates=[1, -1, 2, -2, 3])) == want
    assert set(lambda_scan(whittaker_sys)) == want
    assert set(lambda_scan(whittaker_sys, mode="minor-roots")) == want
    assert set(lambda_scan(whittaker_sys, mode="float-sweep")) == want


def test_lambda_scan_damped_contains_two():
    sys = damped_oscillator(1, 2, 3)
    assert Scalar(2) in lambda_scan(sys)
    roots = lambda_scan(sys, mode="minor-roots")
    assert Scalar(2) in roots
    for lam in roots:
        assert find_integral2(sys, lam).dim > 0


def test_lambda_scan_free_particle_empty():
    sys = free_particle(2)
    assert list(lambda_scan(sys, candidates=[1, -1, 2, Scalar(0, 1)])) == []
    assert list(lambda_scan(sys, mode="minor-roots")) == []


def test_lambda_scan_unknown_mode(whittaker_sys):
    with pytest.raises(ValueError):
        lambda_scan(whittaker_sys, mode="guess")


def test_parity_split_needs_no_velocity_coupling(whittaker_sys):
    with pytest.raises(NotApplicable):
        parity_split(find_integral1(whittaker_sys, 1))


def test_parity_split_free_plane():
    sys = free_particle(2)
    even, odd = parity_split(find_integral1(sys, 1))
    assert even.dim + odd.dim >= find_integral1(sys, 1).dim
    g = sys.geometry
    for q in odd.basis:
        # odd part has the form -t L_(a;b) qdot qdot + L_a qdot
        parts = q.expr.coefficient_parts()
        zero = g.zero()
        Kab1, _, _ = parts.get((Scalar(0), 1), ([[zero] * 2] * 2, None, None))
        _, La, _ = parts[(Scalar(0), 0)]
        D = sym_cov_deriv(La, g)
        assert all((Kab1[a][b] + D[a][b]).is_zero() for a in range(2) for b in range(2))
    for q in even.basis:
        # even powers of t on the quadratic and scalar parts, odd on the linear part
        assert all((N + sum(alpha)) % 2 == 0 for (_, N, alpha) in q.expr.terms)
    for q in odd.basis:
        assert all((N + sum(alpha)) % 2 == 1 for (_, N, alpha) in q.expr.terms)
    assert even.contains(parse_fi("t*ydot - y", sys))
    assert odd.contains(parse_fi("-t*(xdot^2 + ydot^2) + x*xdot + y*ydot", sys))


def test_parity_split_geodesic(geodesic_sys):
    sol = find_integral1(geodesic_sys, 2)
    even, odd = parity_split(sol)
    assert all(q.certified for q in even.basis + odd.basis)
    I2 = parse_fi("-t^2*(z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2) + t*z*zdot - z^2/2", geodesic_sys)
    assert even.contains(I2)
    assert odd.contains(parse_fi("z^2*xdot", geodesic_sys))
    assert odd.contains(parse_fi("-t*(z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2) + z*zdot/2", geodesic_sys))
