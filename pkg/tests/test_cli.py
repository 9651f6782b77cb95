import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from pdfrelay.cli import CSV_HEADER, main, run_job
from pdfrelay.config import JobConfig, parse_config
from pdfrelay.errors import ConfigError
from pdfrelay.gaussian import corollary_terms

GOLDEN = Path(__file__).parent / "golden"
CONFIGS = Path(__file__).parent.parent / "configs"

NET = {
    "gains": {"g01": 1.5, "g02": 1.2, "g03": 0.5, "g12": 1.1, "g13": 0.9, "g23": 1.3},
    "powers": {"P0": 1.0, "P1": 1.0, "P2": 1.0},
}
DIRECT = {
    "gains": {"g01": 0.0, "g02": 0.0, "g03": 1.0, "g12": 0.0, "g13": 0.0, "g23": 0.0},
    "powers": {"P0": 1.0, "P1": 0.0, "P2": 0.0},
}


def doc(mode, payload, **top):
    d = {"schema_version": 1, "mode": mode, "payload": payload}
    d.update(top)
    return json.dumps(d)


def sweep_doc(**top):
    payload = {"network": NET, "parameter": "P0", "grid": [0.25, 0.5, 1.0, 2.0, 4.0], "optimizer": {"restarts": 4}, "cutset_restarts": 2}
    return doc("sweep", payload, seed=3, **top)


# ------------------------------------------------------------ parsing


def test_minimal_gaussian_eval_parses():
    job = parse_config(doc("gaussian-eval", {"network": DIRECT, "allocation": {"phi03": 1.0}}))
    assert job.mode == "gaussian-eval" and job.log_base == 2 and job.i4_source == "printed"


def test_power_violation_names_node():
    with pytest.raises(ConfigError) as err:
        parse_config(doc("gaussian-eval", {"network": DIRECT, "allocation": {"phi03": math.sqrt(1.1)}}))
    assert err.value.exit_code == 2
    (path, msg), = err.value.errors
    assert path == "$.payload.allocation" and "node 0" in msg


def test_version_mismatch():
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps({"schema_version": 2, "mode": "verify", "payload": {"samples": 0}}))
    assert err.value.exit_code == 1
    assert "version 1" in err.value.errors[0][1] and err.value.errors[0][0] == "$.schema_version"


def test_unknown_fields_are_rejected_with_paths():
    with pytest.raises(ConfigError) as err:
        parse_config(doc("optimize", {"network": NET, "optimizer": {"restart": 3}}))
    assert err.value.errors[0][0] == "$.payload.optimizer"
    assert "restart" in err.value.errors[0][1]
    with pytest.raises(ConfigError) as err:
        parse_config(doc("optimize", {"network": {"gains": NET["gains"], "powers": {"P0": 1, "P1": 1}}}))
    assert err.value.errors[0][0] == "$.payload.network.powers"
    with pytest.raises(ConfigError):
        parse_config(doc("verify", {"samples": 1}, extra=True))
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_sweep_grid_must_increase():
    with pytest.raises(ConfigError) as err:
        parse_config(doc("sweep", {"network": NET, "parameter": "P0", "grid": [1.0, 0.5]}))
    assert err.value.errors[0][0] == "$.payload.grid"


def test_invalid_pmf_is_validation_error():
    ch = np.full((2, 2, 2, 2), 0.3).tolist()
    net = {"relay_count": 1, "input_alphabets": [2, 2], "output_alphabets": [2, 2], "channel": ch}
    with pytest.raises(ConfigError) as err:
        parse_config(doc("dm-eval", {"network": net}))
    assert err.value.exit_code == 2


@pytest.mark.parametrize("text", [
    doc("gaussian-eval", {"network": DIRECT, "allocation": {"phi03": 1.0}}, log_base="e", i4_source="oracle"),
    sweep_doc(output={"directory": "x", "report": "r.json", "csv": "s.csv"}),
    doc("verify", {"samples": 3}, seed=None),
])
def test_round_trip(text):
    job = parse_config(text)
    assert parse_config(job.dumps()) == job


# ------------------------------------------------------------ running


def test_direct_gaussian_eval_report(tmp_path):
    code, report = run_job(parse_config(doc("gaussian-eval", {"network": DIRECT, "allocation": {"phi03": 1.0}})), tmp_path)
    assert code == 0
    assert report["result"]["rate"]["bits"] == pytest.approx(0.5)
    assert report["result"]["rate"]["nats"] == pytest.approx(0.5 * math.log(2))
    on_disk = json.loads((tmp_path / "report.json").read_text())
    assert on_disk == json.loads(json.dumps(report))
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_dm_eval_independent_destination(tmp_path):
    code = main([str(CONFIGS / "dm_independent.json"), "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["result"]["rate"]["bits"] == pytest.approx(0.0, abs=1e-12)


def test_dm_eval_reports_lp_split(tmp_path):
    from pdfrelay import instances

    net, dist = instances.closed_form_gap_instance()[:2]
    job = parse_config(doc("dm-eval", {"network": net.to_json(), "distributions": [dist.to_json()]}))
    code, report = run_job(job, tmp_path)
    assert code == 0
    ev = report["result"]["evaluations"][0]
    assert ev["closed_form_minus_lp"]["bits"] > 0.25


def read_rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_sweep_csv(tmp_path):
    code, _ = run_job(parse_config(sweep_doc()), tmp_path)
    assert code == 0
    raw = (tmp_path / "sweep.csv").read_bytes()
    assert raw.startswith((GOLDEN / "sweep_header.csv").read_bytes())
    rows = read_rows(raw.decode())
    assert tuple(rows[0]) == CSV_HEADER and len(rows) == 6
    pdf = [float(r[2]) for r in rows[1:]]
    assert all(b >= a - 1e-6 for a, b in zip(pdf, pdf[1:]))


def test_sweep_matches_golden(tmp_path):
    run_job(parse_config(sweep_doc()), tmp_path)
    got = read_rows((tmp_path / "sweep.csv").read_text())
    want = read_rows((GOLDEN / "sweep_p0.csv").read_text())
    assert got[0] == want[0] and len(got) == len(want)
    for g, w in zip(got[1:], want[1:]):
        assert (g[0], g[6]) == (w[0], w[6])
        assert np.allclose([float(v) for v in g[1:6]], [float(v) for v in w[1:6]], rtol=0, atol=1e-9)


def test_sweep_csv_in_nats(tmp_path):
    run_job(parse_config(sweep_doc(log_base="e")), tmp_path)
    nats = read_rows((tmp_path / "sweep.csv").read_text())
    bits = read_rows((GOLDEN / "sweep_p0.csv").read_text())
    assert float(nats[1][2]) == pytest.approx(float(bits[1][2]) * math.log(2), abs=1e-9)


@pytest.mark.parametrize("text", [
    sweep_doc(),
    doc("optimize", {"network": NET, "optimizer": {"restarts": 4}, "cutset_restarts": 2}, seed=5),
    doc("verify", {"samples": 5}, seed=9),
])
def test_byte_identical_artifacts(tmp_path, text):
    first, second = tmp_path / "a", tmp_path / "b"
    run_job(parse_config(text), first)
    run_job(parse_config(text), second)
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for n in names:
        assert (first / n).read_bytes() == (second / n).read_bytes()


def test_verify_empty(tmp_path):
    code, report = run_job(parse_config(doc("verify", {"samples": 0})), tmp_path)
    assert code == 0 and report["result"]["checks"] == []


def test_verify_fault_injection(tmp_path):
    def corrupted(net, alloc):
        t = corollary_terms(net, alloc)
        return t.replace(I6=t.I6 * 1.01 + 1e-6)

    job = parse_config(doc("verify", {"samples": 3}))
    code, report = run_job(job, tmp_path, terms_fn=corrupted)
    assert code == 3
    assert report["result"]["failures"] == ["printed-vs-oracle[I6]"]
    assert "I6" in " ".join(report["problems"])


def test_optimize_report(tmp_path):
    job = parse_config(doc("optimize", {"network": NET, "optimizer": {"restarts": 4}}, i4_source="oracle"))
    code, report = run_job(job, tmp_path)
    res = report["result"]
    assert code == 0
    assert res["rate"]["bits"] <= res["cutset"]["bound"]["bits"] + 1e-6
    assert "no global optimality" in res["note"]


def test_compare_report(tmp_path):
    code, report = run_job(parse_config(doc("compare", {"network": NET, "optimizer": {"restarts": 4}})), tmp_path)
    res = report["result"]
    assert code == 0
    assert res["partial_decode_forward"]["rate"]["bits"] >= res["decode_forward"]["rate"]["bits"] - 1e-12
    assert res["partial_decode_forward"]["rate"]["bits"] >= res["direct"]["bits"]


# ------------------------------------------------------------ argv


def test_main_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "mode": "verify"}))
    assert main([str(bad)]) == 1
    assert "$" in capsys.readouterr().err
    ch = np.full((2, 2, 2, 2), 0.3).tolist()
    net = {"relay_count": 1, "input_alphabets": [2, 2], "output_alphabets": [2, 2], "channel": ch}
    bad.write_text(doc("dm-eval", {"network": net}))
    assert main([str(bad)]) == 2
    assert main([str(tmp_path / "missing.json")]) == 1


def test_alias_subcommands(tmp_path, capsys):
    net = json.dumps(DIRECT)
    assert main(["eval-gaussian", "--network", net, "--allocation", '{"phi03": 1.0}', "--out", str(tmp_path)]) == 0
    assert "0.5 bits" in capsys.readouterr().out
    assert main(["verify", "--samples", "0", "--out", str(tmp_path)]) == 0
    assert main(["sweep", "--network", json.dumps(NET), "--param", "P0", "--grid", "1,2", "--restarts", "2",
                 "--cutset-restarts", "1", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert len(read_rows((tmp_path / "sweep.csv").read_text())) == 3
    capsys.readouterr()
    assert main(["optimize", "--network", json.dumps(NET), "--restarts", "2", "--print-config"]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["mode"] == "optimize" and printed["payload"]["optimizer"] == {"restarts": 2}


def test_flag_overrides(tmp_path):
    assert main([str(CONFIGS / "direct_gaussian_eval.json"), "--out", str(tmp_path), "--log-base", "e", "--i4-source", "oracle"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["log_base"] == "e" and report["i4_source"] == "oracle"


def test_example_configs_parse():
    for path in sorted(CONFIGS.glob("*.json")):
        assert isinstance(parse_config(path.read_text()), JobConfig), path.name
