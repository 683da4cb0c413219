import json
import math
from pathlib import Path

import pytest

from lethargy.cli import main
from lethargy.errors import CrossFieldError, ParseError, SchemaError, TamperDetected
from lethargy.harness import batch, emit, load_config, parse_config, render_csv, run_scenario, verify_report

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

EXACT = {
    "mode": "exact",
    "norm": "L2",
    "ambient_dim": 6,
    "chain": {"dims": [1, 2, 3, 4]},
    "sequence": {"kind": "geometric", "K": 1.0, "ratio": 0.5, "length": 4},
}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return p


def test_minimal_config(tmp_path):
    cfg = load_config(write(tmp_path, "c.json", EXACT))
    assert cfg.mode == "exact" and cfg.norm.value == "L2"
    assert cfg.tolerances.accept == 1e-6
    assert len(cfg.digest) == 64


def test_missing_norm_named():
    raw = {k: v for k, v in EXACT.items() if k != "norm"}
    with pytest.raises(SchemaError) as err:
        parse_config(raw)
    assert err.value.path == "norm"


def test_nested_schema_path():
    raw = dict(EXACT, sequence={"kind": "geometric", "K": 1.0, "length": 4})
    with pytest.raises(SchemaError) as err:
        parse_config(raw)
    assert err.value.path == "sequence.ratio"


def test_konyagin_needs_c():
    with pytest.raises(CrossFieldError):
        parse_config(dict(EXACT, mode="konyagin"))


def test_unparseable(tmp_path):
    with pytest.raises(ParseError):
        load_config(write(tmp_path, "c.json", "{not json"))
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.json")


def test_exact_run_and_replay(tmp_path):
    doc = run_scenario(parse_config(EXACT))
    assert doc["verdict"] == "pass"
    assert all(abs(r["rho"] - r["d_n"]) <= 1e-6 * r["d_n"] for r in doc["rows"])
    out = tmp_path / "r.json"
    emit(doc, out)
    v = verify_report(out)
    assert v.passed and v.checked == 4


def test_tampered_rho(tmp_path):
    doc = run_scenario(parse_config(EXACT))
    doc["rows"][1]["rho"] += 1e-3
    with pytest.raises(TamperDetected):
        verify_report(doc)


def test_tampered_verdict():
    doc = run_scenario(parse_config(EXACT))
    doc["verdict"] = "fail"
    with pytest.raises(TamperDetected):
        verify_report(doc)


def test_report_without_point():
    doc = run_scenario(parse_config(EXACT))
    del doc["point"]
    with pytest.raises(SchemaError):
        verify_report(doc)


def test_csv_layout():
    text = render_csv(run_scenario(parse_config(EXACT)))
    lines = text.splitlines()
    assert lines[0] == "n,d_n,rho,cert_lower,cert_upper,ratio,pass"
    assert len(lines) == 5
    assert lines[2].split(",")[1] == "0.25"


def test_csv_is_reproducible():
    cfg = parse_config(dict(EXACT, norm="LINF"))
    assert render_csv(run_scenario(cfg)) == render_csv(run_scenario(cfg))


def test_probe_findings(tmp_path):
    doc = run_scenario(load_config(CONFIGS / "probe_functional.json"))
    found = {f["label"]: f for f in doc["findings"]}
    assert not found["euclidean"]["feasible"]
    assert found["euclidean"]["margin"] == pytest.approx(math.sqrt(2), abs=1e-6)
    assert found["l1_axes"]["feasible"]
    assert verify_report(doc).passed
    assert render_csv(doc).startswith("label,norm,orientation")


def test_converge_with_no_pairs():
    doc = run_scenario(parse_config(dict(EXACT, mode="converge", ns=[3])))
    assert doc["convergence"]["entries"] == []
    assert render_csv(doc) == "n,m,diff,tail_term,head_term\n"


def test_konyagin_zero_tail_routes_to_perturbation():
    raw = dict(EXACT, mode="konyagin", c=1.0, eps=0.2,
               sequence={"kind": "explicit", "values": [1.0, 1.0, 0.5, 0.0]})
    doc = run_scenario(parse_config(raw))
    assert doc["plan"]["route"] == "head_perturb"
    assert doc["verdict"] == "pass"


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, "good.json", EXACT)
    out, csv_path = tmp_path / "good.report.json", tmp_path / "good.csv"
    assert main(["run", str(good), "--out", str(out), "--emit-csv", str(csv_path)]) == 0
    assert main(["verify", str(out)]) == 0
    assert csv_path.read_text().count("\n") == 5

    doc = json.loads(out.read_text())
    doc["rows"][0]["rho"] += 1e-3
    tampered = write(tmp_path, "bad.report.json", doc)
    assert main(["verify", str(tampered)]) == 1

    ties = dict(EXACT, sequence={"kind": "explicit", "values": [1, 1, 0.5, 0.25], "tail": 0.25})
    assert main(["run", str(write(tmp_path, "ties.json", ties)), "--out", str(tmp_path / "t.json")]) == 2
    assert main(["run", str(write(tmp_path, "nonorm.json", {"mode": "exact"})), "--out",
                 str(tmp_path / "n.json")]) == 3


def test_tol_override_sets_band(tmp_path):
    cfg = write(tmp_path, "c.json", dict(EXACT, norm="L1"))
    out = tmp_path / "r.json"
    assert main(["run", str(cfg), "--tol", "1e-3", "--out", str(out)]) == 0
    for r in json.loads(out.read_text())["rows"]:
        assert r["band_upper"] - r["d_n"] == pytest.approx(1e-3 * r["d_n"])


def test_batch_keeps_going(tmp_path):
    write(tmp_path, "a.json", EXACT)
    write(tmp_path, "b.json", {"mode": "exact", "norm": "L2"})
    write(tmp_path, "c.json", dict(EXACT, mode="konyagin", c=1.0,
                                   chain={"dims": [1, 2, 3]},
                                   sequence={"kind": "explicit", "values": [1.0, 0.1, 0.01], "tail": 0.001}))
    entries, worst = batch(tmp_path, tmp_path / "out")
    codes = {e.config: e.exit_code for e in entries}
    assert codes == {"a.json": 0, "b.json": 3, "c.json": 2}
    assert worst == 3
    assert (tmp_path / "out" / "a.report.json").exists()
