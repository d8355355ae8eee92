import json

import pytest

from kinetic_integrals import cli
from kinetic_integrals.exactalg import rank
from kinetic_integrals.pipeline import builtin_spec, parse_spec
from kinetic_integrals.qfi import expr_vectors
from kinetic_integrals.systems import WHITTAKER_INTEGRALS
from kinetic_integrals.verify import certify_exact


def write_spec(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def whittaker_doc():
    doc = builtin_spec("whittaker")
    doc.pop("expect")
    return doc


@pytest.fixture(scope="module")
def whittaker_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("whittaker")
    spec = write_spec(d / "spec.json", whittaker_doc())
    out = d / "report.json"
    code = cli.main(["run", spec, "--lambda", "1,-1,2,-2", "--report", str(out)])
    return code, json.loads(out.read_text(encoding="utf-8")), spec


def test_run_whittaker_report(whittaker_run):
    code, report, _ = whittaker_run
    assert code == 0
    assert report["schema"] == "kinetic-integrals/1"
    assert report["status"] == "certified"
    assert report["lambda_scan"]["lambdas"] == ["1", "-1", "2", "-2"]
    spec = parse_spec(report["spec"])
    for s in report["searches"]:
        assert s["dimension"] == len(s["integrals"]) > 0
    chain = next(s for s in report["searches"] if s["mode"] == "integral1")
    found = [spec.parse_fi(it["expression"]) for it in chain["integrals"]]
    for key in ("x_energy", "y_momentum", "boost"):
        assert in_span(found, spec.parse_fi(WHITTAKER_INTEGRALS[key])), key
    for key, lam in (("exp_plus", "1"), ("exp_minus", "-1")):
        exp = next(s for s in report["searches"] if s.get("lambda") == lam)
        assert in_span([spec.parse_fi(it["expression"]) for it in exp["integrals"]],
                       spec.parse_fi(WHITTAKER_INTEGRALS[key])), key


def in_span(basis, e):
    vecs = expr_vectors(list(basis) + [e])
    ncols = 1 + max(j for v in vecs for j in v)
    d = [[v.get(j, 0) for j in range(ncols)] for v in vecs]
    return rank(d) == rank(d[:-1])


def test_report_integrals_recertify(whittaker_run):
    _, report, _ = whittaker_run
    spec = parse_spec(report["spec"])
    count = 0
    for s in report["searches"]:
        for it in s["integrals"]:
            assert it["certified"] and it["drift"]["max_drift"] < 1e-8
            assert certify_exact(spec.parse_fi(it["expression"]), spec.system), it["expression"]
            count += 1
    assert count >= 5


def test_echoed_spec_round_trip(whittaker_run):
    _, report, path = whittaker_run
    again = parse_spec(report["spec"])
    assert again.doc == report["spec"]
    assert again.system.Q == parse_spec(json.loads(open(path).read())).system.Q


def test_report_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["reproduce", "damped-oscillator", "--seed", "7", "--report", str(a)]) == 0
    assert cli.main(["reproduce", "damped-oscillator", "--seed", "7", "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    cli.main(["reproduce", "damped-oscillator", "--seed", "8", "--report", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_reproduce_geodesic_text(capsys):
    assert cli.main(["reproduce", "geodesic-z2", "--text"]) == 0
    out = capsys.readouterr().out
    assert "Killing tensors: 7" in out
    assert "chain n=2" in out
    assert "Liouville: rank 3, Liouville-integrable evidence" in out
    assert "FAIL" not in out


def test_geodesic_spec_run(tmp_path):
    doc = builtin_spec("geodesic-z2")
    doc.pop("expect")
    out = tmp_path / "r.json"
    assert cli.main(["run", write_spec(tmp_path / "g.json", doc), "--report", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["killing_tensors"]["dimension"] == 7
    assert report["searches"][0]["dimension"] >= 6


def test_malformed_polynomial(tmp_path, capsys):
    doc = {"schema": "kinetic-integrals/1", "coordinates": ["x"], "Q": ["x^^2"]}
    assert cli.main(["run", write_spec(tmp_path / "bad.json", doc)]) == 2
    err = capsys.readouterr().err
    assert "Q[0]" in err and "line 1, column 3" in err


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 2,\n  "Q": [}', encoding="utf-8")
    assert cli.main(["run", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "nope.json")]) == 2


def test_verify_subcommand(tmp_path, capsys):
    spec = write_spec(tmp_path / "w.json", whittaker_doc())
    assert cli.main(["verify", spec, "--fi", "t*(ydot - x) + xdot - y", "--text"]) == 0
    assert "certified" in capsys.readouterr().out
    out = tmp_path / "v.json"
    assert cli.main(["verify", spec, "--fi", "ydot + x", "--report", str(out)]) == 3
    rep = json.loads(out.read_text())
    assert rep["certified"] is False and rep["residual"] == "2*xdot"


def test_expectation_mismatch_exit(tmp_path, capsys):
    doc = builtin_spec("damped-oscillator")
    doc["expect"]["integral2"]["exp_a"][1] = "exp(2*m*t)*(xdot^2 + ydot^2)"
    assert cli.main(["run", write_spec(tmp_path / "d.json", doc), "--text"]) == 4
    assert "[FAIL] integral2 contains exp_a" in capsys.readouterr().out


def test_reproduce_parametrized_damped(capsys):
    assert cli.main(["reproduce", "damped-oscillator", "--m", "1", "--k", "1", "--p", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["expectations"]["passed"]
    assert {s["mode"] for s in report["searches"]} == {"integral1", "integral2"}


def test_bad_example_name():
    with pytest.raises(SystemExit):
        cli.main(["reproduce", "kepler"])
