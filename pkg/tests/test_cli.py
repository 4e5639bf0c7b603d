import csv
import json
import subprocess
import sys

import pytest

from kpzldp.cli import main
from kpzldp.rate import RateResult
from kpzldp.shape import LimitShape


def write(tmp_path, obj, name="scenario.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_rate_scenario(tmp_path, capsys):
    sc = write(tmp_path, {"kind": "rate", "t": 1, "xs": [0], "hs": [1]})
    code, out, _ = run(["run", sc, "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    assert "value=1.885618" in out
    assert out.count("\n") == 1
    res = RateResult.from_dict(json.loads((tmp_path / "o" / "rate.json").read_text()))
    assert res.value == pytest.approx(1.8856180831641267, abs=1e-14)


def test_scan_scenario(tmp_path, capsys):
    sc = write(tmp_path, {"kind": "symmetry-scan", "m": 2, "grid_points": 21})
    code, _, _ = run(["run", sc, "--out", str(tmp_path)], capsys)
    assert code == 0
    with open(tmp_path / "scan.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 21
    assert float(rows[0]["L"]) == pytest.approx(-2 / 3, abs=1e-10)
    assert float(rows[-1]["L"]) == pytest.approx(-2 / 3, abs=1e-10)
    assert (tmp_path / "scan.svg").read_text().startswith("<?xml")


def test_shape_scenario_and_render(tmp_path, capsys):
    sc = write(tmp_path, {"kind": "shape", "t": 1, "xs": [-1, 1], "hs": [0.5, 0.5], "window": [0.1, 1, -3, 3]})
    code, _, _ = run(["run", sc, "--out", str(tmp_path)], capsys)
    assert code == 0
    data = json.loads((tmp_path / "shape.json").read_text())
    shape = LimitShape.from_dict(data)
    assert len(shape.tree.events) == 1
    header = (tmp_path / "shape_grid.csv").read_text().splitlines()[0]
    assert header == "t,x,psi"
    svg = tmp_path / "fig.svg"
    code, out, _ = run(["render", str(tmp_path / "shape.json"), "--window", "0,1,-3,3", "--out", str(svg)], capsys)
    assert code == 0 and svg.exists()


def test_render_from_probe_config(tmp_path, capsys):
    src = write(tmp_path, {"t": 1, "xs": [0], "hs": [1]}, "cfg.json")
    svg = tmp_path / "one.svg"
    code, _, _ = run(["render", src, "--window", "0,1,-2,2", "--out", str(svg)], capsys)
    assert code == 0
    assert "<path" in svg.read_text()


def test_render_empty_window(tmp_path, capsys):
    src = write(tmp_path, {"t": 1, "xs": [0], "hs": [1]}, "cfg.json")
    code, _, err = run(["render", src, "--window", "0,1,2,2", "--out", str(tmp_path / "x.svg")], capsys)
    assert code != 0
    assert json.loads(err)["field"] == "window"


def test_render_deterministic(tmp_path, capsys):
    src = write(tmp_path, {"t": 1, "xs": [-1, 0.4], "hs": [0.5, 0.9]}, "cfg.json")
    outs = []
    for name in ("a.svg", "b.svg"):
        run(["render", src, "--window", "0,1,-3,3", "--out", str(tmp_path / name)], capsys)
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_dual_and_tree_check(tmp_path, capsys):
    sc = write(tmp_path, {"kind": "dual", "t": 1, "xs": [-1, 1], "masses": [1, 1]})
    code, out, _ = run(["run", sc, "--out", str(tmp_path)], capsys)
    assert code == 0 and "argmax" in out
    sc = write(tmp_path, {"kind": "tree-check", "t": 1, "xs": [-1, 1], "hs": [0.5, 0.5], "t_mid": [0.1, 0.9]})
    code, _, _ = run(["run", sc, "--out", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "tree_check.json").read_text())
    assert all(abs(c["lhs"] - c["rhs"]) < 1e-8 for c in report["checks"])


def test_simulate_scenario_flags(tmp_path, capsys):
    sc = write(tmp_path, {"kind": "simulate", "N": 8, "samples": 50, "output_times": [1.0], "probes": [[1, 0]]})
    code, out, _ = run(["run", sc, "--out", str(tmp_path), "--zero-noise", "--samples", "1", "--seed", "4"], capsys)
    assert code == 0
    assert "samples=1" in out
    hydro = json.loads((tmp_path / "hydro.json").read_text())
    assert hydro["passed"]
    assert (tmp_path / "field.bin").stat().st_size > 0


def test_parse_error_reports_position(tmp_path, capsys):
    sc = write(tmp_path, '{"kind": "rate",\n  "t": 1, "xs": [0,], "hs": [1]}')
    code, _, err = run(["run", sc], capsys)
    assert code != 0
    payload = json.loads(err)
    assert payload["error"] == "ParseError"
    assert payload["line"] == 2 and payload["column"] > 1


@pytest.mark.parametrize(
    "obj,field",
    [
        ({"kind": "rate", "t": 1, "xs": [0]}, "hs"),
        ({"kind": "nope"}, "kind"),
        ({"t": 1}, "kind"),
        ({"kind": "rate", "t": 1, "xs": [0], "hs": [1], "bogus": 3}, "bogus"),
        ({"kind": "dual", "t": 1, "xs": [0, 1], "masses": [1]}, "masses"),
        ({"kind": "simulate", "dt": 0.5}, "dt"),
        ({"kind": "rate", "t": 1, "xs": [1, 0], "hs": [1, 1]}, "xs"),
    ],
)
def test_validation_errors_name_the_field(tmp_path, capsys, obj, field):
    code, _, err = run(["run", write(tmp_path, obj)], capsys)
    assert code != 0
    assert json.loads(err)["field"] == field


def test_missing_file(tmp_path, capsys):
    code, _, err = run(["run", str(tmp_path / "nope.json")], capsys)
    assert code != 0
    assert json.loads(err)["error"] == "FileNotFound"


def test_byte_identical_outputs(tmp_path, capsys):
    sc = write(tmp_path, {"kind": "shape", "t": 1, "xs": [-1, 0.3], "hs": [0.5, 0.7]})
    for d in ("a", "b"):
        run(["run", sc, "--out", str(tmp_path / d)], capsys)
    for name in ("shape.json", "shape_grid.csv", "shape.svg", "profile.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry_point(tmp_path):
    sc = write(tmp_path, {"kind": "rate", "t": 0.5, "xs": [0], "hs": [1]})
    proc = subprocess.run([sys.executable, "-m", "kpzldp", "run", sc, "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "value=2.666666" in proc.stdout
