import csv
import io
import json
import math

import pytest

from ohara import __version__
from ohara.cli import RunConfig, main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv(text):
    lines = text.splitlines()
    assert lines[0].startswith(f"# ohara {__version__} config=")
    return lines[0], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_eval_csv(capsys):
    code, out, _ = _run(capsys, "eval", "--curve", "circle", "--kernel", "power:2", "--n", "128")
    assert code == 0
    _, rows = _csv(out)
    assert list(rows[0]) == ["method", "N", "m", "alpha", "total", "e1", "e2", "e3", "e4", "tail"]
    assert float(rows[0]["total"]) == pytest.approx(4.0, abs=1e-12)


def test_eval_json_mirrors_csv(capsys):
    _, out_csv, _ = _run(capsys, "eval", "--method", "all", "--n", "64")
    _, out_json, _ = _run(capsys, "eval", "--method", "all", "--n", "64", "--out", "json")
    _, rows = _csv(out_csv)
    doc = json.loads(out_json)
    assert [list(r) for r in doc["rows"]] == [list(r) for r in rows]
    for a, b in zip(doc["rows"], rows):
        assert repr(a["total"]) == b["total"]


def test_output_is_reproducible(capsys, tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["eval", "--curve", "trefoil", "--kernel", "power:2.5", "--n", "128"]
    main(args + ["-o", str(p1)])
    main(args + ["-o", str(p2)])
    assert p1.read_bytes() == p2.read_bytes()


def test_config_hash_tracks_config():
    a = RunConfig(command="eval", n=128)
    b = RunConfig(command="eval", n=256)
    assert a.digest() != b.digest()
    assert a.digest() == RunConfig(command="eval", n=128).digest()


def test_compare_ladder(capsys):
    code, out, _ = _run(capsys, "compare", "--curve", "trefoil", "--kernel", "power:2.5", "--ladder", "64,128,256")
    assert code == 0
    _, rows = _csv(out)
    assert len(rows) == 12
    for r in rows:
        if r["method"] in ("decomp", "pv"):
            assert float(r["dev_vs_cosine"]) <= 1e-11
    direct = [r for r in rows if r["method"] == "direct"]
    assert float(direct[-1]["order_dev"]) > 1.0


def test_invariance(capsys):
    code, out, _ = _run(capsys, "invariance", "--curve", "circle", "--kernel", "power:2", "--map", "inv:0,3,0,1", "--n", "128")
    assert code == 0
    _, rows = _csv(out)
    assert float(rows[0]["rel_dev"]) < 1e-10
    assert float(rows[0]["center_distance"]) == pytest.approx(2.0, rel=1e-9)


def test_assumptions_command(capsys):
    code, out, _ = _run(capsys, "assumptions", "--kernel", "power:1.5", "--length", str(2 * math.pi))
    assert code == 0
    _, rows = _csv(out)
    status = {r["assumption"]: r["status"] for r in rows}
    assert status["A.5(b)"] == "fail"
    assert status["A.3"] == "not-checkable"


def test_sweep(capsys):
    code, out, _ = _run(capsys, "sweep", "--alphas", "2,2.5,2.9", "--n", "64")
    assert code == 0
    _, rows = _csv(out)
    assert float(rows[0]["theta"]) == 0.0
    assert float(rows[0]["tail_constant"]) == 4.0
    assert float(rows[1]["theta"]) == pytest.approx(1 / 6)
    assert float(rows[2]["theta"]) == pytest.approx(0.9 / 3.8)


def test_angles(capsys):
    code, out, _ = _run(capsys, "angles", "--n", "16", "--kernel", "power:2.5")
    assert code == 0
    _, rows = _csv(out)
    assert len(rows) == 16 * 15
    assert list(rows[0]) == ["s1", "s2", "cos_psi", "cos_phi", "cos_phi_blend"]


def test_minimize_writes_trace(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, out, _ = _run(capsys, "minimize", "--kernel", "power:2", "--start", "perturbed-circle:0.05,2",
                        "--K", "3", "--n", "64", "--iters", "2", "--trace", str(trace))
    assert code == 0
    _, rows = _csv(trace.read_text())
    assert list(rows[0]) == ["iteration", "energy", "e3", "e4", "step", "gnorm", "length", "e4_minus_circle"]
    assert len(rows) == 3
    assert float(rows[-1]["energy"]) < float(rows[0]["energy"])


@pytest.mark.parametrize(
    "argv,category",
    [
        (["eval", "--kernel", "power:3.5"], "kernel"),
        (["eval", "--curve", "spiral"], "curve"),
        (["eval", "--m", "200", "--n", "64"], "config"),
        (["invariance", "--map", "inv:1,0,0,1"], "mobius"),
        (["eval", "--curve", "file:/nonexistent/curve.txt"], "io"),
        (["minimize", "--start", "square"], "config"),
    ],
)
def test_errors_are_one_line_with_category(capsys, argv, category):
    code, out, err = _run(capsys, *argv)
    assert code != 0
    assert out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"error: {category}: ")
