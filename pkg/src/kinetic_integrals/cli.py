"""Command line front end.

    kinetic-integrals run SPEC.json [--report OUT.json] [--text]
    kinetic-integrals reproduce {geodesic-z2,whittaker,damped-oscillator} [--m M --k K --p P]
    kinetic-integrals verify SPEC.json --fi EXPR

Exit codes: 0 success, 2 parse error, 3 verification failure,
4 expectation mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExpectationMismatch, KineticIntegralsError, ParseError, SingularityHit, VerificationFailed
from .pipeline import EXAMPLE_IDS, builtin_spec, check_expectations, load_spec, parse_spec, run_spec, verify_expression
from .verify import DRIFT_LIMIT

EXIT_OK, EXIT_PARSE, EXIT_VERIFY, EXIT_EXPECT = 0, 2, 3, 4


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def text_table(report: dict) -> str:
    """Plain table: one integral per row with where it came from."""
    lines = []
    spec = report.get("spec", {})
    lines.append(f"system: {spec.get('name') or 'unnamed'}  (dim {spec.get('dim')})")
    kt = report.get("killing_tensors")
    if kt:
        lines.append(f"Killing tensors: {kt['dimension']}")
    scan = report.get("lambda_scan")
    if scan:
        lam = ", ".join(scan["lambdas"]) or "none"
        lines.append(f"lambda scan ({scan['mode']}): {lam}")
        if scan["approximate"]:
            approx = ", ".join(f"{re:.6g}{im:+.6g}i" for re, im in scan["approximate"])
            lines.append(f"  inexact candidates: {approx}")
    rows = []
    for s in report.get("searches", []):
        prov = f"chain n={s['n']}" if s["mode"] == "integral1" else f"exp lambda={s['lambda']}"
        for it in s["integrals"]:
            rows.append((it["id"], prov, it["expression"], "yes" if it["certified"] else "NO",
                         f"{it['drift']['max_drift']:.1e}"))
    if rows:
        w0 = max([2] + [len(r[0]) for r in rows])
        w1 = max([len("provenance")] + [len(r[1]) for r in rows])
        lines.append("")
        lines.append(f"{'id'.ljust(w0)}  {'provenance'.ljust(w1)}  certified  drift    integral")
        for r in rows:
            lines.append(f"{r[0].ljust(w0)}  {r[1].ljust(w1)}  {r[3].ljust(9)}  {r[4]}  {r[2]}")
    lv = report.get("liouville")
    if lv:
        lines.append("")
        lines.append(f"Liouville: rank {lv['rank']}, {lv['verdict']}")
    ex = report.get("expectations")
    if ex:
        lines.append("")
        for c in ex["checks"]:
            lines.append(f"[{'ok' if c['ok'] else 'FAIL'}] {c['check']}")
    return "\n".join(lines) + "\n"


def _emit(report: dict, args, out=None):
    out = out or sys.stdout
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    if args.text or not args.report:
        out.write(text_table(report) if args.text else dumps(report))


def _lambda_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kinetic-integrals",
                                 description="Exact search for quadratic first integrals.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", metavar="PATH", help="write the machine-readable JSON report here")
    common.add_argument("--text", action="store_true", help="print a human-readable table")
    common.add_argument("--seed", type=int, default=None, help="seed for trajectories and random sampling")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run the pipeline on a spec file")
    run.add_argument("spec")
    run.add_argument("--max-n", type=int, default=None, help="upper bound on the chain length")
    run.add_argument("--lambda", dest="lambdas", type=_lambda_list, default=None,
                     help="comma separated exact lambda candidates")

    rep = sub.add_parser("reproduce", parents=[common], help="run a bundled example and check it")
    rep.add_argument("example", choices=EXAMPLE_IDS)
    rep.add_argument("--m", default="1")
    rep.add_argument("--k", default="2")
    rep.add_argument("--p", default="3")

    ver = sub.add_parser("verify", parents=[common], help="certify a single candidate integral")
    ver.add_argument("spec")
    ver.add_argument("--fi", required=True, help="candidate first integral")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = load_spec(args.spec)
            result = run_spec(spec, seed=args.seed, max_n=args.max_n, lambdas=args.lambdas)
            problems = check_expectations(result) if spec.doc.get("expect") else []
            _emit(result.report, args)
            if not result.drift_ok:
                return EXIT_VERIFY
            return EXIT_EXPECT if problems else EXIT_OK
        if args.command == "reproduce":
            spec = parse_spec(builtin_spec(args.example, args.m, args.k, args.p))
            result = run_spec(spec, seed=args.seed)
            problems = check_expectations(result)
            _emit(result.report, args)
            for p in problems:
                print(f"expectation failed: {p}", file=sys.stderr)
            if not result.drift_ok:
                return EXIT_VERIFY
            return EXIT_EXPECT if problems else EXIT_OK
        if args.command == "verify":
            spec = load_spec(args.spec)
            if args.seed is not None:
                spec.verification["seed"] = args.seed
            out = verify_expression(spec, args.fi)
            if args.report:
                with open(args.report, "w", encoding="utf-8") as fh:
                    fh.write(dumps(out))
            if args.text:
                status = "certified" if out["certified"] else f"NOT conserved, dI/dt = {out['residual']}"
                print(f"{out['expression']}: {status}; max drift {out['drift']['max_drift']:.2e}")
            elif not args.report:
                sys.stdout.write(dumps(out))
            ok = out["certified"] and out["drift"]["max_drift"] < DRIFT_LIMIT
            return EXIT_OK if ok else EXIT_VERIFY
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ExpectationMismatch as exc:
        print(f"expectation mismatch: {exc}", file=sys.stderr)
        return EXIT_EXPECT
    except (VerificationFailed, SingularityHit) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except KineticIntegralsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
