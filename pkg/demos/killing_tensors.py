"""Killing tensors of flat space and of the metric diag(z^2, z^2, 1).

Solves the Killing tensor equation exactly, then shows which tensors come
from a symmetrized covariant derivative of a covector.
"""

import time

from kinetic_integrals.geometry import Geometry, sym_cov_deriv
from kinetic_integrals.killing import builtin_family, reduce_kt, solve_kt
from kinetic_integrals.systems import geodesic_z2


def main():
    for label, g, degree in [("E2", Geometry.euclidean(2), 2),
                             ("E3", Geometry.euclidean(3), 2),
                             ("z^2 metric", geodesic_z2().geometry, 6)]:
        t0 = time.perf_counter()
        fam = solve_kt(g, degree=degree)
        print(f"{label:>11}: {fam.dim} independent Killing tensors ({time.perf_counter() - t0:.2f} s)")

    # the closed-form plane family; gamma is the one irreducible direction
    fam = builtin_family("V2")
    g = fam.geometry
    print("\nplane family parameters:", ", ".join(fam.names))
    C = fam.general([0, 1, 2, 0, 0, 3])
    red = reduce_kt(C, g)
    print("gamma = 0 reduces to L =", [x.format(g.coords) for x in red.particular])
    D = sym_cov_deriv(red.particular, g)
    print("check L_(a;b) = C:", all((D[a][b] - C[a][b]).is_zero() for a in range(2) for b in range(2)))
    print("gamma = 1 reducible?", reduce_kt(fam.general([1, 0, 0, 0, 0, 0]), g) is not None)


if __name__ == "__main__":
    main()
