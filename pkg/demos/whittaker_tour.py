"""Whittaker's system x'' = x, y'' = x'.

Finds the time-polynomial and exponential quadratic integrals, certifies
them, checks drift along numerical trajectories and prints their brackets.
"""

from kinetic_integrals.canonical import liouville_report, poisson_bracket, to_phase
from kinetic_integrals.qfi import find_integral1, find_integral2, lambda_scan
from kinetic_integrals.systems import WHITTAKER_INTEGRALS, parse_fi, whittaker
from kinetic_integrals.verify import battery_drifts, certify_exact


def main():
    sys = whittaker()
    names = sys.geometry.coords

    chain = find_integral1(sys, 1)
    print(f"chain n=1: {chain.dim} integrals")
    for q in chain.basis:
        print("   ", q.format())

    lams = lambda_scan(sys)
    print("\nexponents with exponential integrals:", ", ".join(str(l) for l in lams))
    exp_found = []
    for lam in lams:
        sp = find_integral2(sys, lam)
        for q in sp.basis:
            print(f"    lambda={lam}: {q.format()}")
        exp_found += sp.basis

    allq = chain.basis + exp_found
    print("\nall exactly certified:", all(certify_exact(q.expr, sys) for q in allq))
    worst = max(r.drift for reps in battery_drifts(allq, sys) for r in reps)
    print(f"worst drift on the default battery: {worst:.2e}")

    # brackets of the named integrals are exact functions of t only
    W = {k: to_phase(parse_fi(v, sys), sys.geometry) for k, v in WHITTAKER_INTEGRALS.items()}
    print("\nbrackets:")
    for a, b in [("y_momentum", "boost"), ("y_momentum", "exp_plus"), ("y_momentum", "exp_minus"),
                 ("exp_plus", "exp_minus")]:
        print(f"    {{{a}, {b}}} = {poisson_bracket(W[a], W[b]).format(names)}")

    pair = [parse_fi(WHITTAKER_INTEGRALS[k], sys) for k in ("y_momentum", "boost")]
    print("\nLiouville on {y_momentum, boost}:", liouville_report(pair, sys).verdict_text)

if __name__ == "__main__":
    main()
