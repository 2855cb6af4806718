import json
import math

import numpy as np
import pytest

from ksreg.cli import main
from ksreg.observables import eval_obs


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def test_ks_map_example(capsys):
    code, out, _ = run(capsys, "map", "--via", "ks", "--dv", "+k", "--point", "1,0,0,0,0,0,2,0")
    assert code == 0
    header, row = data_rows(out)
    assert header == "x1,x2,x3,y1,y2,y3,real_defect"
    assert row == "0,0,1,-1,0,0,0"


def test_ks_map_zero_point(capsys):
    code, _, err = run(capsys, "map", "--via", "ks", "--point", "0,0,0,0,0,0,0,0")
    assert code == 3 and "domain" in err


def test_malformed_point(capsys):
    assert run(capsys, "map", "--via", "ks", "--point", "1,2")[0] == 5
    assert run(capsys, "map", "--via", "ks", "--point", "1,a,0,0,0,0,0,0")[0] == 5


def test_euler_round_trip(capsys, tmp_path):
    chart = "1.3,0.4,1.1,5.0,0.2,-0.3,0.7,0.1"
    code, out, _ = run(capsys, "map", "--via", "euler-inverse", "--point", chart)
    assert code == 0
    phase = data_rows(out)[1]
    code, out, _ = run(capsys, "map", "--via", "euler", "--point", phase)
    back = np.array(data_rows(out)[1].split(","), float)
    assert np.allclose(back, np.array(chart.split(","), float), atol=1e-12)


def test_map_csv_input(capsys, tmp_path):
    src = tmp_path / "pts.csv"
    src.write_text("q1,q2,q3,q4,p1,p2,p3,p4\n1,0,0,0,0,0,2,0\n0.5,0.5,0.5,0.5,1,0,0,0\n")
    code, out, _ = run(capsys, "map", "--via", "ks", "--input", str(src))
    assert code == 0 and len(data_rows(out)) == 3


def test_unknown_suite_exit_2(capsys):
    assert run(capsys, "verify", "--suite", "bogus")[0] == 2


def test_verify_writes_report(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--suite", "diagram", "--samples", "50", "--seed", "42",
                       "--out", str(tmp_path))
    assert code == 0 and "PASS" in out
    report = json.loads((tmp_path / "diagram.json").read_text())
    assert report["pass"] and report["seed"] == 42 and report["n"] == 50


def test_verify_printed_convention_is_report_only(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--suite", "brackets", "--convention", "printed", "--samples", "50",
                       "--out", str(tmp_path))
    assert code == 0
    assert "INFO printed" in out


def test_sample_deterministic(capsys):
    first = run(capsys, "sample", "--manifold", "xi0-zero", "--count", "10", "--seed", "7")
    second = run(capsys, "sample", "--manifold", "xi0-zero", "--count", "10", "--seed", "7")
    assert first == second and first[0] == 0
    rows = np.array([r.split(",") for r in data_rows(first[1])[1:]], float)
    assert rows.shape == (10, 8)
    assert np.max(np.abs(eval_obs("xi0", rows))) < 1e-12


def test_propagate_oscillator(capsys):
    code, out, err = run(capsys, "propagate", "--system", "osc4", "--omega", "1", "--ic", "1,0,0,0,0,0,0,0",
                         "--span", "6.2831853")
    assert code == 0 and "accepted_steps" in err
    rows = data_rows(out)
    final = np.array(rows[-1].split(","), float)
    assert np.allclose(final[2:10], [1, 0, 0, 0, 0, 0, 0, 0], atol=1e-6)


def test_propagate_regularized_near_rectilinear(capsys):
    code, out, _ = run(capsys, "propagate", "--system", "kepler3-regularized", "--ic", "1,0,0,0,0.001,0",
                       "--mu", "1", "--revs", "1")
    assert code == 0
    rows = data_rows(out)
    header = rows[0].split(",")
    drift = np.array([float(r.split(",")[header.index("drift")]) for r in rows[1:]])
    assert np.max(drift) < 1e-8


def test_propagate_collision_exit_4(capsys, tmp_path):
    out_file = tmp_path / "partial.csv"
    code, _, err = run(capsys, "propagate", "--system", "kepler3", "--ic", "1,0,0,0,0,0", "--span", "2",
                       "--out", str(out_file))
    assert code == 4 and "fell below" in err
    assert len(data_rows(out_file.read_text())) > 10


def test_propagate_jsonl(capsys):
    code, out, _ = run(capsys, "propagate", "--system", "kepler2", "--ic", "1,0,0,1", "--span", "1",
                       "--format", "jsonl")
    assert code == 0
    head = json.loads(out.splitlines()[0])
    assert head["format_version"] == 1 and head["columns"][:2] == ["s", "t"]


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"system": "osc4", "ic": "1,0,0,0,0,0,0,0", "span": 1.0, "rel_tol": 1e-9}))
    code, out, _ = run(capsys, "propagate", "--config", str(cfg), "--span", "2", "--print-config")
    assert code == 0
    resolved = json.loads(out)
    assert resolved["span"] == 2.0 and resolved["rel_tol"] == 1e-9 and resolved["system"] == "osc4"
    code, out, _ = run(capsys, "propagate", "--config", str(cfg))
    assert code == 0
    assert float(data_rows(out)[-1].split(",")[0]) == pytest.approx(1.0)


def test_config_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert run(capsys, "sample", "--config", str(bad))[0] == 2
    assert run(capsys, "propagate", "--span", "1")[0] == 2
    assert run(capsys, "propagate", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_span_required_for_oscillator(capsys):
    assert run(capsys, "propagate", "--system", "osc4", "--ic", "1,0,0,0,0,0,0,0")[0] == 2


def test_spherical_map(capsys):
    code, out, _ = run(capsys, "map", "--via", "spherical", "--point", f"1,{math.pi / 2},0,0,0,1")
    assert code == 0
    assert np.allclose(np.array(data_rows(out)[1].split(","), float), [1, 0, 0, 0, 1, 0], atol=1e-15)
