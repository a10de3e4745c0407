import csv
import json

import pytest

from vstate.boundary import kirchhoff_omega, read_patch
from vstate.cli import main, manifest_path, parse_perturbation, InputError



def test_solve_disk(tmp_path):
    out = tmp_path / "patch.json"
    assert main(["solve", "--omega", "0.3", "--init", "disk", "--modes", "8", "--output", str(out)]) == 0
    p = read_patch(out)
    assert p.omega == 0.3 and not any(p.boundary.cos_coeffs) and not any(p.boundary.sin_coeffs)
    m = json.loads(manifest_path(out).read_text())
    assert m["command"] == "solve" and m["status"] == "ok"
    assert str(out) in m["outputs"]


def test_solve_kirchhoff(tmp_path):
    out = tmp_path / "k.json"
    a = 1.1
    argv = ["solve", "--omega", repr(kirchhoff_omega(a, 1 / a)), "--init", f"ellipse:{a},{1 / a!r}",
            "--output", str(out)]
    assert main(argv) == 0
    assert json.loads(manifest_path(out).read_text())["residual"] < 1e-10


def test_solve_degenerate_exits_2(tmp_path, capsys):
    out = tmp_path / "f.json"
    code = main(["solve", "--omega", "0.25", "--init", "disk", "--perturb", "cos2:0.3", "--modes", "8",
                 "--output", str(out)])
    assert code == 2
    assert "residual history" in capsys.readouterr().err
    m = json.loads(manifest_path(out).read_text())
    assert m["status"] == "diverged" and len(m["residual_history"]) > 1
    assert not out.exists()


def test_solve_from_file_and_rerun_is_deterministic(tmp_path):
    first = tmp_path / "a.json"
    main(["solve", "--omega", "0.3", "--init", "disk", "--perturb", "cos3:0.01", "--modes", "8",
          "--output", str(first)])
    second, third = tmp_path / "b.json", tmp_path / "c.json"
    for out in (second, third):
        assert main(["solve", "--init", str(first), "--modes", "8", "--output", str(out)]) == 0
    assert second.read_bytes() == third.read_bytes()
    m2 = json.loads(manifest_path(second).read_text())
    m3 = json.loads(manifest_path(third).read_text())
    for m in (m2, m3):
        m.pop("started"), m.pop("finished"), m.pop("outputs"), m["params"].pop("output")
    assert m2 == m3
    assert str(first) in m2["inputs"]


@pytest.mark.parametrize("argv, field", [
    (["solve", "--init", "disk"], "--omega"),
    (["solve", "--omega", "0.3", "--init", "ellipse:1,x"], "--init"),
    (["solve", "--omega", "0.3", "--perturb", "tan2:0.1"], "--perturb"),
    (["solve", "--omega", "0.3", "--modes", "4", "--perturb", "cos9:0.1"], "--perturb"),
])
def test_bad_flags_exit_1(tmp_path, capsys, argv, field):
    assert main([*argv, "--output", str(tmp_path / "o.json")]) == 1
    assert field in capsys.readouterr().err


def test_malformed_json_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"omega": 0.3, "mean_radius": 1, "cos": [0.1, "x"], "sin": [0, 0]}))
    assert main(["verify", "--input", str(bad), "--output", str(tmp_path / "v.json")]) == 1
    assert "cos[1]" in capsys.readouterr().err


def test_usage_error_exits_1():
    with pytest.raises(SystemExit) as info:
        main(["solve", "--bogus"])
    assert info.value.code == 1


def test_parse_perturbation():
    assert parse_perturbation("cos2:0.3,sin3:-1e-2") == ({2: 0.3}, {3: -0.01})
    with pytest.raises(InputError):
        parse_perturbation("cos0:0.1")


def test_spectrum(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["spectrum", "--omega", "0.25", "--modes", "8", "--output", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["k"]) for r in rows] == list(range(1, 9))
    assert abs(float(rows[1]["mu_k"])) < 1e-8
    assert float(rows[2]["omega_root_k"]) == pytest.approx(1 / 3, abs=1e-8)


def test_verify_and_report(tmp_path):
    disk = tmp_path / "disk.json"
    main(["solve", "--omega", "0.25", "--init", "disk", "--modes", "8", "--output", str(disk)])
    v = tmp_path / "v.json"
    assert main(["verify", "--input", str(disk), "--output", str(v)]) == 0
    rep = json.loads(v.read_text())
    assert rep["boundary_flatness"] < 1e-10
    assert rep["steiner_ratio"] <= rep["steiner_bound"] + 1e-9
    r = tmp_path / "r.json"
    assert main(["report", "--input", str(disk), "--output", str(r)]) == 0
    assert json.loads(r.read_text())["classification"] == "disk"


def test_continue_with_plot_data(tmp_path):
    out, plot = tmp_path / "b.csv", tmp_path / "plot.csv"
    code = main(["continue", "--m", "2", "--steps", "3", "--ds", "0.02", "--modes", "16",
                 "--output", str(out), "--plot-data", str(plot), "--samples", "16"])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["step", "arclength", "omega", "amplitude", "residual", "classification"]
    assert len(rows) == 3 and all(r["classification"] == "ellipse" for r in rows)
    assert len(list(csv.DictReader(plot.open()))) == 3 * 16
    assert str(plot) in json.loads(manifest_path(out).read_text())["outputs"]


def test_scan(tmp_path):
    out = tmp_path / "scan.json"
    assert main(["scan", "--delta", "0.01", "--trials", "3", "--seed", "7", "--output", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["counts"]["other"] == 0 and len(data["outcomes"]) == 3
    assert json.loads(manifest_path(out).read_text())["seed"] == 7
