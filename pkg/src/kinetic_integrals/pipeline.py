"""System specs, the end-to-end pipeline, and the bundled example runs.

A spec is a JSON document (schema ``kinetic-integrals/1``) whose polynomial
entries are strings in the expression syntax and whose numbers are exact
scalar strings. The pipeline solves for Killing tensors, searches both
integral families, certifies everything exactly and numerically, and runs
the phase-space analysis.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any

from .canonical import inverse_noether, liouville_report, poisson_bracket, to_phase
from .errors import ExpectationMismatch, KineticIntegralsError, MissingPotential, ParseError, VerificationFailed
from .exactalg import ZERO, Scalar, SpacePoly, format_scalar, parse_expression, parse_poly, parse_ratfunc, parse_scalar
from .geometry import DynamicalSystem, Geometry, VelocityExpr
from .killing import solve_kt
from .qfi import Ansatz, find_integral1, find_integral1_converged, find_integral2, lambda_scan, quadratic_form
from .verify import DRIFT_LIMIT, battery_drifts, certify_exact, default_battery

SCHEMA = "kinetic-integrals/1"

__all__ = ["SCHEMA", "SystemSpec", "load_spec", "parse_spec", "run_spec", "builtin_spec", "reproduce",
           "verify_expression", "EXAMPLE_IDS"]

EXAMPLE_IDS = ("geodesic-z2", "whittaker", "damped-oscillator")

_DEFAULTS = {
    "search": {
        "integral1": {"n": 2, "converge": False},
        "kt_degree": None,
        "l_degree": 3,
        "g_degree": 4,
        "window": 0,
        "integral2": {"mode": "exact", "candidates": None},
    },
    "verification": {"t_end": 5, "step": "1/1000", "seed": 0, "count": 5},
    "analysis": {"poisson": True, "noether": True, "liouville": None},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class SystemSpec:
    """Parsed spec: the normalized document plus the system it describes."""

    doc: dict
    system: DynamicalSystem
    params: dict = field(default_factory=dict)

    @property
    def search(self) -> dict:
        return self.doc["search"]

    @property
    def verification(self) -> dict:
        return self.doc["verification"]

    @property
    def analysis(self) -> dict:
        return self.doc["analysis"]

    def ansatz(self) -> Ansatz:
        s = self.search
        a = Ansatz(kt_degree=s.get("kt_degree"), l_degree=int(s["l_degree"]), g_degree=int(s["g_degree"]),
                   window=int(s["window"]))
        a.check()
        return a

    def parse_fi(self, text: str, fieldname: str = "fi") -> VelocityExpr:
        g = self.system.geometry
        terms = parse_expression(text, g.coords, g.factors, self.params, field=fieldname)
        return VelocityExpr(g.dim, g.factors, terms)


def _text(v, fieldname):
    if isinstance(v, bool) or not isinstance(v, (str, int)):
        raise ParseError("expected an expression string", field=fieldname)
    return str(v)


def load_spec(path) -> SystemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read spec: {exc.strerror}", field=str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno, str(path)) from None
    return parse_spec(doc)


def parse_spec(doc: dict) -> SystemSpec:
    if not isinstance(doc, dict):
        raise ParseError("spec must be a JSON object")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ParseError(f"unsupported schema {schema!r}", field="schema")
    coords = doc.get("coordinates")
    dim = doc.get("dim", len(coords) if coords else None)
    if not isinstance(dim, int) or dim < 1:
        raise ParseError("dim must be a positive integer", field="dim")
    if coords is None:
        from .exactalg.syntax import default_names
        coords = default_names(dim)
    if len(coords) != dim:
        raise ParseError("coordinate names do not match dim", field="coordinates")

    params = {}
    for name, val in (doc.get("parameters") or {}).items():
        params[name] = parse_scalar(_text(val, f"parameters.{name}"), params, field=f"parameters.{name}")

    factors = tuple(parse_poly(_text(f, f"factors[{i}]"), coords, params, field=f"factors[{i}]")
                    for i, f in enumerate(doc.get("factors") or []))

    def ratfunc(v, fieldname):
        return parse_ratfunc(_text(v, fieldname), coords, factors, params, field=fieldname)

    def matrix(key, default):
        M = doc.get(key)
        if M is None:
            return default
        if len(M) != dim or any(len(r) != dim for r in M):
            raise ParseError(f"{key} must be a {dim}x{dim} array", field=key)
        return [[ratfunc(M[a][b], f"{key}[{a}][{b}]") for b in range(dim)] for a in range(dim)]

    ident = [[1 if a == b else 0 for b in range(dim)] for a in range(dim)]
    metric = matrix("metric", ident)
    if "metric" in doc and "inverse_metric" not in doc:
        raise ParseError("a metric needs its inverse_metric", field="inverse_metric")
    inverse = matrix("inverse_metric", ident)
    try:
        geo = Geometry(metric, inverse, factors, coords)
    except ValueError as exc:
        raise ParseError(str(exc), field="metric") from None

    Q = doc.get("Q", ["0"] * dim)
    if len(Q) != dim:
        raise ParseError(f"Q must have {dim} entries", field="Q")
    Q = [ratfunc(q, f"Q[{a}]") for a, q in enumerate(Q)]
    A = matrix("A", None)
    V = ratfunc(doc["V"], "V") if doc.get("V") is not None else None
    sys = DynamicalSystem(geo, Q, A, V, name=doc.get("name", ""), constants=params)

    norm = {
        "schema": SCHEMA,
        "name": doc.get("name", ""),
        "dim": dim,
        "coordinates": list(coords),
    }
    for key in ("parameters", "factors", "metric", "inverse_metric", "Q", "A", "V"):
        if doc.get(key) is not None:
            norm[key] = copy.deepcopy(doc[key])
    norm["Q"] = copy.deepcopy(doc.get("Q", ["0"] * dim))
    for key in ("search", "verification", "analysis"):
        norm[key] = _merge(_DEFAULTS[key], doc.get(key))
    if doc.get("expect") is not None:
        norm["expect"] = copy.deepcopy(doc["expect"])
    spec = SystemSpec(norm, sys, params)
    spec.ansatz()  # validates degrees
    return spec


# -- running ---------------------------------------------------------------------

def _scalar_list(values, params, fieldname):
    return [parse_scalar(_text(v, fieldname), params, field=fieldname) for v in values]


def _drift_json(reps):
    return {
        "max_drift": max(r.drift for r in reps) if reps else 0.0,
        "trajectories": [r.to_json() for r in reps],
    }


@dataclass
class RunResult:
    spec: SystemSpec
    report: dict
    integrals: list            # (label, QFI) pairs
    spaces: dict               # mode key -> SolutionSpace
    drift_ok: bool = True


def run_spec(spec: SystemSpec, seed: int | None = None, max_n: int | None = None,
             lambdas: list | None = None) -> RunResult:
    """Full pipeline for one spec; raises VerificationFailed on a certification failure."""
    sys = spec.system
    g = sys.geometry
    names = g.coords
    vconf = spec.verification
    if seed is not None:
        vconf["seed"] = int(seed)
    search = spec.search
    if max_n is not None:
        search["integral1"]["n"] = min(int(search["integral1"]["n"]), int(max_n))
    if lambdas is not None:
        search["integral2"]["mode"] = "exact"
        search["integral2"]["candidates"] = [str(x) for x in lambdas]
    ansatz = spec.ansatz()

    report: dict[str, Any] = {"schema": SCHEMA, "spec": spec.doc}
    fam = ansatz.family(sys)
    report["killing_tensors"] = {
        "dimension": fam.dim,
        "basis": [quadratic_form(C, None, None, g.dim, g.factors).format(names) for C in fam.basis],
    }

    spaces = {}
    integrals = []
    i1 = search["integral1"]
    if i1 is not None and i1.get("n") is not None:
        n = int(i1["n"])
        if i1.get("converge"):
            sp = find_integral1_converged(sys, ansatz, cap=n if max_n is None else min(n, max_n))
        else:
            sp = find_integral1(sys, n, ansatz)
        spaces[("integral1", sp.mode[1])] = sp

    i2 = search["integral2"]
    scan_info = None
    if i2 is not None and i2.get("mode"):
        cands = i2.get("candidates")
        cands = _scalar_list(cands, spec.params, "search.integral2.candidates") if cands is not None else None
        found = lambda_scan(sys, ansatz, i2["mode"], cands, seed=vconf["seed"])
        scan_info = {
            "mode": i2["mode"],
            "generic_rank": found.generic_rank,
            "columns": found.ncols,
            "lambdas": [format_scalar(l) for l in found],
            "approximate": [[z.real, z.imag] for z in found.approximate],
        }
        for lam in found:
            spaces[("integral2", lam)] = find_integral2(sys, lam, ansatz)

    battery = default_battery(sys, seed=int(vconf["seed"]), count=int(vconf["count"]),
                              t_end=float(vconf["t_end"]), step=float(parse_scalar(str(vconf["step"])).re))
    t_end = float(vconf["t_end"])
    step = float(parse_scalar(str(vconf["step"])).re)

    searches = []
    drift_ok = True
    for key, sp in spaces.items():
        kind, val = key
        entry = {"mode": kind}
        if kind == "integral1":
            entry["n"] = val
        else:
            entry["lambda"] = format_scalar(val)
        entry["dimension"] = sp.dim
        rows = []
        drifts = battery_drifts(sp.basis, sys, battery, t_end, step) if sp.basis else []
        for j, (q, reps) in enumerate(zip(sp.basis, drifts)):
            label = f"{kind}:{entry.get('n', entry.get('lambda'))}:{j}"
            cert = certify_exact(q, sys)
            dj = _drift_json(reps)
            if dj["max_drift"] >= DRIFT_LIMIT:
                drift_ok = False
            rows.append({
                "id": label,
                "expression": q.format(names),
                "time_dependent": q.expr.is_time_dependent(),
                "certified": cert.certified,
                "drift": dj,
            })
            integrals.append((label, q))
        entry["integrals"] = rows
        searches.append(entry)
    report["searches"] = searches
    if scan_info is not None:
        report["lambda_scan"] = scan_info
    report["battery"] = battery.to_json()

    analysis = spec.analysis
    exprs = [q.expr for _, q in integrals]
    labels = [lab for lab, _ in integrals]
    if analysis.get("poisson") and integrals:
        phase = [to_phase(e, g) for e in exprs]
        report["poisson"] = {
            "labels": labels,
            "matrix": [[poisson_bracket(a, b).format(names) for b in phase] for a in phase],
        }
    lv = analysis.get("liouville")
    if lv is not None or (analysis.get("poisson") and integrals):
        if lv:
            lv_exprs = [spec.parse_fi(t, f"analysis.liouville[{i}]") for i, t in enumerate(lv)]
            lv_labels = list(lv)
        else:
            lv_exprs, lv_labels = exprs, labels
        rep = liouville_report(lv_exprs, sys, seed=int(vconf["seed"]))
        report["liouville"] = {"inputs": lv_labels, **rep.to_json(names)}
    if analysis.get("noether") and integrals:
        if sys.V is None:
            report["noether"] = {"skipped": "no potential given"}
        else:
            recs = []
            for lab, q in integrals:
                full, half = inverse_noether(q, sys)
                recs.append({"id": lab, "full": full.to_json(names), "half": half.to_json(names)})
                if not (full.certified and half.certified):
                    raise VerificationFailed(f"Noether residual nonzero for {lab}")
            report["noether"] = recs
    report["status"] = "certified" if drift_ok else "drift-exceeded"
    return RunResult(spec, report, integrals, spaces, drift_ok)


def verify_expression(spec: SystemSpec, text: str) -> dict:
    """Exact and numerical check of a single candidate integral."""
    sys = spec.system
    names = sys.geometry.coords
    e = spec.parse_fi(text, "--fi")
    cert = certify_exact(e, sys)
    out = {"expression": e.format(names), "certified": cert.certified}
    if not cert.certified:
        out["residual"] = cert.residual.format(names)
    v = spec.verification
    battery = default_battery(sys, seed=int(v["seed"]), count=int(v["count"]))
    reps = battery_drifts([e], sys, battery, float(v["t_end"]), float(parse_scalar(str(v["step"])).re))[0]
    out["drift"] = _drift_json(reps)
    out["battery"] = battery.to_json()
    return out


# -- bundled examples ---------------------------------------------------------

def builtin_spec(example: str, m="1", k="2", p="3") -> dict:
    if example == "geodesic-z2":
        return {
            "schema": SCHEMA,
            "name": "geodesic-z2",
            "coordinates": ["x", "y", "z"],
            "factors": ["z"],
            "metric": [["z^2", "0", "0"], ["0", "z^2", "0"], ["0", "0", "1"]],
            "inverse_metric": [["1/z^2", "0", "0"], ["0", "1/z^2", "0"], ["0", "0", "1"]],
            "Q": ["0", "0", "0"],
            "V": "0",
            "search": {"integral1": {"n": 2}, "integral2": None},
            "analysis": {"liouville": ["z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2", "z^2*xdot", "z^2*ydot"]},
            "expect": {
                "kt_dimension": 7,
                "integral1": {
                    "T": "z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2",
                    "I_x": "z^2*xdot",
                    "I_y": "z^2*ydot",
                    "I_rot": "z^2*(x*ydot - y*xdot)",
                    "I_t1": "-t*(z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2) + z*zdot/2",
                    "I_t2": "-t^2*(z^2*xdot^2/2 + z^2*ydot^2/2 + zdot^2/2) + t*z*zdot - z^2/2",
                },
                "liouville": True,
            },
        }
    if example == "whittaker":
        return {
            "schema": SCHEMA,
            "name": "whittaker",
            "coordinates": ["x", "y"],
            "Q": ["-x", "0"],
            "A": [["0", "0"], ["1", "0"]],
            "V": "-x^2/2",
            "search": {"integral1": {"n": 1}, "integral2": {"mode": "exact", "candidates": ["1", "-1", "2", "-2"]}},
            "analysis": {"liouville": ["ydot - x", "t*(ydot - x) + xdot - y"]},
            "expect": {
                "integral1": {
                    "x_energy": "xdot^2 - x^2",
                    "y_momentum": "ydot - x",
                    "boost": "t*(ydot - x) + xdot - y",
                },
                "lambdas": ["1", "-1", "2", "-2"],
                "integral2": {
                    "exp_plus": ["1", "exp(t)*(xdot - x)"],
                    "exp_minus": ["-1", "exp(-t)*(xdot + x)"],
                },
                "brackets": [
                    ["ydot - x", "t*(ydot - x) + xdot - y", "0"],
                    ["ydot - x", "exp(t)*(xdot - x)", "-exp(t)"],
                    ["ydot - x", "exp(-t)*(xdot + x)", "-exp(-t)"],
                    ["t*(ydot - x) + xdot - y", "exp(t)*(xdot - x)", "-exp(t)*(t - 1)"],
                    ["t*(ydot - x) + xdot - y", "exp(-t)*(xdot + x)", "-exp(-t)*(t + 1)"],
                    ["exp(t)*(xdot - x)", "exp(-t)*(xdot + x)", "-2"],
                ],
                "liouville": True,
            },
        }
    if example == "damped-oscillator":
        ms, ks, ps = (str(x) for x in (m, k, p))
        mv, kv, pv = parse_scalar(ms), parse_scalar(ks), parse_scalar(ps)
        expect = {
            "integral2": {
                "exp_a": ["2*m", "exp(2*m*t)*(xdot^2 - ydot^2 + 2*m*(x*xdot - y*ydot) + k*(x^2 - y^2) - 2*p*x*y)"],
                "exp_b": ["2*m", "exp(2*m*t)*(xdot*ydot + m*(y*xdot + x*ydot) + (p/2)*(x^2 - y^2) + k*x*y)"],
            },
            "span_equal": {"2*m": ["exp_a", "exp_b"]},
        }
        cands = ["2*m"]
        search = {"integral1": None, "integral2": {"mode": "exact", "candidates": cands}}
        if pv and kv == pv * pv / (4 * mv * mv):
            # extra integrals on the branch k = p^2 / (4 m^2)
            expect["integral1"] = {
                "resonant": "(1/(4*m))*(xdot^2 + ydot^2) + (x + (k/p)*y)*xdot + (y - (k/p)*x)*ydot"
                            " + (k/(4*m) + m)*(x^2 + y^2)",
            }
            expect["integral2"]["exp_resonant"] = ["4*m", "exp(4*m*t)*(xdot^2 + ydot^2 - (p/m)*(y*xdot - x*ydot)"
                                                 " + (p^2/(4*m^2))*(x^2 + y^2))"]
            cands.append("4*m")
            search["integral1"] = {"n": 0}
        return {
            "schema": SCHEMA,
            "name": "damped-oscillator",
            "coordinates": ["x", "y"],
            "parameters": {"m": ms, "k": ks, "p": ps},
            "Q": ["k*x - p*y", "k*y + p*x"],
            "A": [["-2*m", "0"], ["0", "-2*m"]],
            "V": "k*(x^2 + y^2)/2",
            "search": search,
            "expect": expect,
        }
    raise KineticIntegralsError(f"unknown example {example!r}; choose from {', '.join(EXAMPLE_IDS)}")


def check_expectations(result: RunResult) -> list[str]:
    """Compare a run against the spec's ``expect`` block; returns the problems found."""
    spec = result.spec
    exp = spec.doc.get("expect") or {}
    sys = spec.system
    g = sys.geometry
    problems = []
    checks = []

    def space(kind, val=None):
        for (k, v), sp in result.spaces.items():
            if k == kind and (val is None or v == val):
                return sp
        return None

    if "kt_dimension" in exp:
        got = result.report["killing_tensors"]["dimension"]
        ok = got == exp["kt_dimension"]
        checks.append({"check": "kt_dimension", "expected": exp["kt_dimension"], "got": got, "ok": ok})
        if not ok:
            problems.append(f"Killing tensor dimension {got}, expected {exp['kt_dimension']}")
    for name, text in (exp.get("integral1") or {}).items():
        sp = space("integral1")
        e = spec.parse_fi(text, f"expect.integral1.{name}")
        ok = sp is not None and sp.contains(e)
        checks.append({"check": f"integral1 contains {name}", "ok": ok})
        if not ok:
            problems.append(f"missing integral {name} = {text}")
    if "lambdas" in exp:
        want = _scalar_list(exp["lambdas"], spec.params, "expect.lambdas")
        got = [v for (k, v) in result.spaces if k == "integral2" and result.spaces[(k, v)].dim > 0]
        missing = [format_scalar(w) for w in want if w not in got]
        checks.append({"check": "lambda values", "ok": not missing})
        if missing:
            problems.append(f"no exponential integrals at lambda = {', '.join(missing)}")
    named2 = {}
    for name, (lam_text, text) in (exp.get("integral2") or {}).items():
        lam = parse_scalar(lam_text, spec.params, field=f"expect.integral2.{name}")
        e = spec.parse_fi(text, f"expect.integral2.{name}")
        named2[name] = (lam, e)
        sp = space("integral2", lam)
        ok = sp is not None and sp.contains(e)
        checks.append({"check": f"integral2 contains {name}", "ok": ok})
        if not ok:
            problems.append(f"missing integral {name} = {text} at lambda = {format_scalar(lam)}")
    for lam_text, members in (exp.get("span_equal") or {}).items():
        lam = parse_scalar(lam_text, spec.params)
        sp = space("integral2", lam)
        ok = sp is not None and sp.dim == len(members) and all(sp.contains(named2[m][1]) for m in members)
        checks.append({"check": f"span at lambda={format_scalar(lam)} equals {{{', '.join(members)}}}", "ok": ok})
        if not ok:
            got = sp.dim if sp is not None else 0
            problems.append(f"space at lambda = {format_scalar(lam)} has dimension {got}, expected span of {members}")
    for a_text, b_text, want_text in exp.get("brackets") or []:
        a = to_phase(spec.parse_fi(a_text, "expect.brackets"), g)
        b = to_phase(spec.parse_fi(b_text, "expect.brackets"), g)
        want = to_phase(spec.parse_fi(want_text, "expect.brackets"), g)
        got = poisson_bracket(a, b)
        ok = (got - want).is_zero()
        checks.append({"check": f"{{{a_text}, {b_text}}} = {want_text}", "got": got.format(g.coords), "ok": ok})
        if not ok:
            problems.append(f"bracket {{{a_text}, {b_text}}} = {got.format(g.coords)}, expected {want_text}")
    if exp.get("liouville") is not None:
        got = result.report.get("liouville", {}).get("verdict") == "Liouville-integrable evidence"
        ok = got == bool(exp["liouville"])
        checks.append({"check": "liouville verdict", "ok": ok})
        if not ok:
            problems.append("Liouville verdict differs from expectation")
    result.report["expectations"] = {"checks": checks, "passed": not problems}
    return problems


def reproduce(example: str, m="1", k="2", p="3", seed: int | None = None) -> RunResult:
    """Run a bundled example and assert its expected results.

    Raises ExpectationMismatch listing every failed check.
    """
    spec = parse_spec(builtin_spec(example, m, k, p))
    result = run_spec(spec, seed=seed)
    problems = check_expectations(result)
    if problems:
        raise ExpectationMismatch(problems)
    return result
