import csv
import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from nonbayes.cli import main
from nonbayes.report import sweep_header
from nonbayes.scenario import ScenarioError, load_scenario, parse_scenario

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_all_bundled_scenarios_load():
    for path in SCEN.glob("*.json"):
        load_scenario(path)


def test_scenario_errors_name_the_field(tmp_path):
    with pytest.raises(ScenarioError, match="prior"):
        parse_scenario({"likelihoods": {"H": [1, 0]}, "rule": {"kind": "bayesian"}})
    with pytest.raises(ScenarioError, match="rule.lambda"):
        parse_scenario({"prior": [0.5, 0.5], "likelihoods": {"H": [0.8, 0.2], "L": [0.2, 0.8]},
                        "rule": {"kind": "shrink", "lambda": {"H": 0.3}}})
    with pytest.raises(ScenarioError, match="rule.kind"):
        parse_scenario({"prior": [0.5, 0.5], "likelihoods": {"H": [0.8, 0.2], "L": [0.2, 0.8]},
                        "rule": {"kind": "telepathy"}})


def test_nested_environment_key():
    sc = parse_scenario({"environment": {"prior": [0.5, 0.5], "likelihoods": {"H": [0.8, 0.2], "L": [0.2, 0.8]}},
                         "rule": {"kind": "bayesian"}})
    assert sc.environment.labels == ("H", "L")


def test_classify_shrink(capsys):
    code, out, _ = run(["classify", "--scenario", SCEN / "binary_shrink.json"], capsys)
    assert code == 0
    assert "underreacts to information: true" in out
    assert out.count("Under ") == 2


def test_classify_grether_over(capsys):
    code, out, _ = run(["classify", "--scenario", SCEN / "grether.json"], capsys)
    assert code == 0
    assert out.count("Over ") == 2


def test_classify_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"prior": [0.5, 0.5], "likelihoods": ')
    code, _, err = run(["classify", "--scenario", bad], capsys)
    assert code == 2 and "malformed JSON" in err
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"prior": [0.5, 0.5], "rule": {"kind": "bayesian"}}))
    code, _, err = run(["classify", "--scenario", missing], capsys)
    assert code == 2 and "likelihoods" in err


def test_classify_invalid_environment(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"prior": [1.0, 0.0], "likelihoods": {"H": [0.8, 0.2], "L": [0.2, 0.8]},
                               "rule": {"kind": "bayesian"}}))
    code, _, err = run(["classify", "--scenario", bad], capsys)
    assert code == 2 and "ZeroSupportPrior" in err


def test_exploit_overreaction(tmp_path, capsys):
    out_path = tmp_path / "c.json"
    code, out, _ = run(["exploit", "--scenario", SCEN / "overreaction.json", "--k", 1, "--out", out_path], capsys)
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["achieved_payoff"] == pytest.approx(-1.0, abs=1e-9)
    assert doc["verdict"] == "exploitable"
    assert "achieved payoff" in out


def test_exploit_to_stdout_is_json(capsys):
    code, out, err = run(["exploit", "--scenario", SCEN / "confirmatory.json"], capsys)
    assert code == 0
    assert json.loads(out)["achieved_payoff"] == pytest.approx(-2.0, abs=1e-9)
    assert "achieved payoff" in err


def test_exploit_shrink_is_refused(capsys):
    code, out, _ = run(["exploit", "--scenario", SCEN / "binary_shrink.json", "--k", 1], capsys)
    assert code == 3
    assert "reason: underreacts to information" in out


def test_exploit_unknown_region(capsys):
    code, out, _ = run(["exploit", "--scenario", SCEN / "three_state_unknown.json"], capsys)
    assert code == 3 and "verdict: unknown" in out


def test_exploit_rejects_nonpositive_k(capsys):
    code, _, _ = run(["exploit", "--scenario", SCEN / "overreaction.json", "--k", 0], capsys)
    assert code == 2


def test_simulate_binary_example(capsys, tmp_path):
    rep = tmp_path / "mc.json"
    code, out, _ = run(["simulate", "--scenario", SCEN / "binary_bayesian.json", "--trials", 1_000_000,
                        "--seed", 1, "--self-check", "--out", rep], capsys)
    assert code == 0 and "PASS" in out
    doc = json.loads(rep.read_text())
    assert doc["analytic"] == pytest.approx(0.3)
    assert abs(doc["empirical_mean"] - 0.3) <= 4 * doc["standard_error"]


def test_simulate_is_deterministic(capsys):
    args = ["simulate", "--scenario", SCEN / "binary_bayesian.json", "--trials", 20_000, "--seed", 4]
    first = run(args, capsys)
    assert run(args, capsys) == first


def test_simulate_input_errors(capsys):
    assert run(["simulate", "--scenario", SCEN / "binary_bayesian.json", "--trials", 0], capsys)[0] == 2
    assert run(["simulate", "--scenario", SCEN / "grether.json", "--trials", 10], capsys)[0] == 2


def test_exploit_then_simulate_reproduces_loss(tmp_path, capsys):
    contract = tmp_path / "c.json"
    assert run(["exploit", "--scenario", SCEN / "overreaction.json", "--k", 3, "--out", contract], capsys)[0] == 0
    rep = tmp_path / "mc.json"
    code, _, _ = run(["simulate", "--scenario", SCEN / "overreaction.json", "--contract", contract,
                      "--trials", 1_000_000, "--seed", 0, "--self-check", "--out", rep], capsys)
    doc = json.loads(rep.read_text())
    assert code == 0
    assert abs(doc["empirical_mean"] + 3.0) <= 4 * doc["standard_error"]


def test_verify_suite(capsys, tmp_path):
    rep = tmp_path / "r.json"
    code, out, _ = run(["verify", "--suite", "theorem1", "--trials", 200, "--seed", 7, "--out", rep], capsys)
    assert code == 0 and "PASS" in out
    assert json.loads(rep.read_text())["passed"]


def test_verify_errors(capsys):
    assert run(["verify", "--suite", "nope"], capsys)[0] == 2
    assert run(["verify", "--suite", "underreaction_safety", "--trials", 50, "--seed", 7], capsys)[0] == 0
    code, _, err = run(["verify", "--suite", "theorem1", "--trials", 20, "--mutant"], capsys)
    assert code == 4 and "counterexamples" in err
    assert run(["verify", "--suite", "grether", "--mutant"], capsys)[0] == 2


def test_sweep_grether(tmp_path, capsys):
    out_csv, out_svg = tmp_path / "s.csv", tmp_path / "s.svg"
    code, _, _ = run(["sweep", "--scenario", SCEN / "grether.json", "--param", "beta",
                      "--grid", "0.25,0.5,1,2,4", "--out", out_csv, "--svg", out_svg], capsys)
    assert code == 0
    with open(out_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == sweep_header(["H", "L"])
    assert [r["verdict"] for r in rows] == ["unexploitable"] * 3 + ["exploitable"] * 2
    assert [r["tag_H"] for r in rows] == ["Under", "Under", "Bayesian", "Over", "Over"]
    for r in rows:
        if r["verdict"] == "exploitable":
            assert float(r["achieved_loss"]) == pytest.approx(1.0, abs=1e-9)
        else:
            assert r["achieved_loss"] == ""
    root = ET.parse(out_svg).getroot()
    assert root.get("version") == "1.1"
    assert root.tag.endswith("svg")


def test_sweep_metric_column(capsys):
    code, out, _ = run(["sweep", "--scenario", SCEN / "binary_shrink.json", "--param", "lambda.H",
                        "--grid", "0,0.5,1", "--metric", "ex_ante_payoff"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["lambda_H"]) for r in rows] == pytest.approx([0.0, 0.5, 1.0])
    assert all(r["metric"] == r["ex_ante_payoff"] for r in rows)


def test_sweep_triangle_svg(tmp_path, capsys):
    svg = tmp_path / "t.svg"
    s = tmp_path / "s.json"
    s.write_text(json.dumps({"prior": [0.4, 0.3, 0.3],
                             "likelihoods": {"a": [0.6, 0.2, 0.2], "b": [0.2, 0.6, 0.2], "c": [0.2, 0.2, 0.6]},
                             "rule": {"kind": "stretch", "lambda": 0.1}}))
    code, _, _ = run(["sweep", "--scenario", s, "--param", "lambda", "--grid", "0.1,0.3", "--svg", svg], capsys)
    assert code == 0
    root = ET.parse(svg).getroot()
    ns = "{http://www.w3.org/2000/svg}"
    assert root.find(f"{ns}polygon") is not None
    assert len(root.findall(f"{ns}line")) == 2


def test_sweep_input_errors(capsys):
    assert run(["sweep", "--scenario", SCEN / "grether.json", "--param", "beta", "--grid", ""], capsys)[0] == 2
    assert run(["sweep", "--scenario", SCEN / "grether.json", "--param", "beta", "--grid", "-1"], capsys)[0] == 2
    assert run(["sweep", "--scenario", SCEN / "grether.json", "--param", "beta", "--grid", "x"], capsys)[0] == 2
    assert run(["sweep", "--scenario", SCEN / "grether.json", "--param", "beta", "--grid", "1",
                "--metric", "ex_ante_payoff"], capsys)[0] == 2
    assert run(["sweep", "--scenario", SCEN / "three_state_unknown.json", "--param", "posteriors",
                "--grid", "1"], capsys)[0] == 2


def test_sweep_four_states_skips_svg(tmp_path, capsys):
    svg = tmp_path / "x.svg"
    code, out, err = run(["sweep", "--scenario", SCEN / "four_state_shrink.json", "--param", "lambda",
                          "--grid", "0.2,0.6", "--svg", svg], capsys)
    assert code == 0
    assert "SVG skipped" in err
    assert not svg.exists()
    assert len(list(csv.reader(io.StringIO(out)))) == 3


def test_bad_arguments_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["exploit"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nonbayes", "classify", "--scenario",
                           str(SCEN / "binary_shrink.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and "Under" in proc.stdout
