import json
import math
from pathlib import Path

import numpy as np
import pytest

from polysmooth.cli import _angle, main

DATA = Path(__file__).resolve().parents[1] / "src" / "polysmooth" / "data"
CUBE = str(DATA / "doubled_cube.json")
TORUS = str(DATA / "flat_torus.json")
HYPERBOLIC = str(DATA / "hyperbolic_edge.json")


def _run(tmp_path, *argv):
    code = main([*argv, "--out-dir", str(tmp_path)])
    reports = {p.stem: json.loads(p.read_text()) for p in tmp_path.glob("*.json")}
    return code, reports.get(argv[0])


def _write_matrix(path, m):
    np.savetxt(path, np.asarray(m, dtype=float), delimiter=",")
    return str(path)


def test_analyze_exit_codes(tmp_path):
    code, rep = _run(tmp_path, "analyze", "--input", CUBE)
    assert code == 0 and rep["verdict"] == "pass"
    assert rep["results"]["counts"]["open_edges"] == 12
    assert _run(tmp_path / "t", "analyze", "--input", TORUS)[0] == 0
    code, rep = _run(tmp_path / "h", "analyze", "--input", HYPERBOLIC)
    assert code == 0 and rep["verdict"] == "warn"
    assert _run(tmp_path / "hr", "analyze", "--input", HYPERBOLIC, "--require-nonneg")[0] == 3


def test_truncated_mesh_is_an_input_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(Path(CUBE).read_text()[:200])
    assert main(["analyze", "--input", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert main(["analyze", "--input", str(tmp_path / "missing.json"), "--out-dir", str(tmp_path)]) == 2


def test_bad_arguments_are_input_errors(tmp_path):
    assert _run(tmp_path, "analyze", "--input", CUBE, "--tolerance-overrides", "{nope")[0] == 2
    assert _run(tmp_path, "analyze", "--input", CUBE, "--tolerance-overrides", '{"angel": 1}')[0] == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": CUBE, "colour": "red"}))
    assert _run(tmp_path, "analyze", "--config", str(cfg))[0] == 2
    assert main(["frobnicate"]) == 2
    assert _run(tmp_path, "smooth", "--input", CUBE)[0] == 2


def test_smooth_then_verify(tmp_path):
    code, rep = _run(tmp_path, "smooth", "--input", CUBE, "--n", "10", "--grid", "40")
    assert code == 0
    files = rep["results"]["patch_files"]
    assert len(files) == 20 and all((tmp_path / f).exists() for f in files)
    code, rep = _run(tmp_path, "verify", "--input", str(tmp_path / "plan.json"), "--grid", "40")
    assert code == 0 and all(c["pinched"] for c in rep["results"]["checks"])
    trends = rep["results"]["open_edge_trends"]
    assert len(trends) == 1
    ratios = [row["sup_ratio"] for row in next(iter(trends.values()))]
    assert ratios == sorted(ratios, reverse=True)
    code, rep = _run(tmp_path, "verify", "--input", str(tmp_path / files[0]))
    assert code == 0 and rep["results"]["eps_pinch"] == pytest.approx(0.1)


def test_verify_rejects_failing_csv(tmp_path):
    csv = tmp_path / "patch.csv"
    csv.write_text("kind,eps_pinch,r,t,k1,k2,k3,margin\nx,0.1,0,0,-1,1,2,0\n")
    assert _run(tmp_path, "verify", "--input", str(csv))[0] == 1


def test_gh_modes(tmp_path):
    X = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0.0]])
    a = _write_matrix(tmp_path / "a.csv", X)
    b = _write_matrix(tmp_path / "b.csv", X)
    code, rep = _run(tmp_path, "gh", "--exact", a, b)
    assert code == 0 and rep["results"]["exact"]["value"] == 0.0
    point = _write_matrix(tmp_path / "p.csv", [[0.0]])
    code, rep = _run(tmp_path, "gh", "--lower", a, point)
    assert code == 0 and rep["results"]["lower"]["value"] == 1.0
    big = _write_matrix(tmp_path / "big.csv", np.abs(np.subtract.outer(np.arange(9.0), np.arange(9.0))))
    assert _run(tmp_path, "gh", "--exact", big, big)[0] == 2


def test_gh_plan(tmp_path):
    assert _run(tmp_path, "smooth", "--input", CUBE, "--n", "20", "--grid", "30")[0] == 0
    code, rep = _run(tmp_path, "gh", "--plan", str(tmp_path / "plan.json"))
    assert code == 0
    assert rep["results"]["total"] <= 0.5 * rep["results"]["target"]


def test_flow(tmp_path):
    code, rep = _run(tmp_path, "flow", "--theta", "pi", "--eps", "0.1", "--grid", "129", "--horizon", "0.001")
    assert code == 0
    summary = rep["results"]["summary"]
    assert summary["product_pinching_preserved"] and summary["gauss_bonnet_drift"] < 1e-3
    assert (tmp_path / "flow.csv").exists()
    assert _run(tmp_path, "flow", "--theta", "2pi", "--eps", "0.1")[0] == 2


def test_dump_profiles(tmp_path):
    code, rep = _run(tmp_path, "dump-profiles", "--eps", "0.5", "--ell", "1", "--delta", "0.2")
    assert code == 0 and rep["results"]["files"] == ["collar.csv", "cap.csv", "plateau.csv"]
    rows = np.loadtxt(tmp_path / "collar.csv", delimiter=",", skiprows=1)
    assert list(rows[-1]) == [2.0, 2.0, 1.0, 0.0]
    assert _run(tmp_path, "dump-profiles", "--eps", "0")[0] == 2


def test_pipeline(tmp_path):
    assert _run(tmp_path, "pipeline", "--input", HYPERBOLIC, "--n", "10")[0] == 3
    code, rep = _run(tmp_path, "pipeline", "--input", CUBE, "--n", "20", "--grid", "30")
    assert code == 0
    result = rep["results"]["result"]
    assert result["pinched"] and result["gh_below_1_over_n"]
    assert result["gh_bound"] <= 0.5 / 20


@pytest.mark.parametrize(
    "text, value",
    [("pi", math.pi), ("3pi/2", 1.5 * math.pi), ("pi/2", math.pi / 2), ("2*pi", 2 * math.pi), ("1.25", 1.25)],
)
def test_angle_parser(text, value):
    assert _angle(text) == pytest.approx(value, rel=1e-15)
