import json

import numpy as np
import pytest

from gmetric.cli import main
from gmetric.graphs import GraphSet, random_graph_set, save_graph_set

from conftest import K3, P3, c4_plus_k1, star5


def _set(tmp_path, graphs, name="set.json"):
    p = tmp_path / name
    save_graph_set(GraphSet(graphs), p)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_dist_exact(tmp_path, capsys):
    p = _set(tmp_path, [P3, K3, K3])
    code, out = run(capsys, "dist", "--input", p, "--pair", "1,2")
    assert code == 0 and out["result"]["value"] == 0 and out["schema"] == 1
    code, out = run(capsys, "dist", "--input", p, "--pair", "0,1")
    assert out["result"]["value"] == pytest.approx(np.sqrt(2))


def test_dist_errors(tmp_path, capsys):
    p = _set(tmp_path, [P3, K3])
    assert main(["dist", "--input", p, "--pair", "0,5"]) == 2
    assert main(["dist", "--input", p, "--pair", "x"]) == 2
    assert main(["dist", "--input", str(tmp_path / "missing.json")]) == 2
    assert main(["dist", "--input", p, "--norm", "bogus"]) == 2
    assert main(["dist", "--input", p, "--method", "fancy"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"graphs": [{"adjacency": [[0, 1], [0, 0]]}]}')
    assert main(["dist", "--input", str(bad)]) == 2


def test_dist_relaxed_and_nonconvergence(tmp_path, capsys):
    p = _set(tmp_path, [P3, K3])
    code, out = run(capsys, "dist", "--input", p, "--method", "relaxed")
    assert code == 0 and out["result"]["value"] <= np.sqrt(2) + 1e-5
    gs = random_graph_set(np.random.default_rng(1), 2, 5)
    p = _set(tmp_path, list(gs.graphs), "hard.json")
    code, out = run(capsys, "dist", "--input", p, "--method", "relaxed", "--max-iter", "1")
    assert code == 3 and out["result"]["diagnostics"]["converged"] is False


def test_multidist(tmp_path, capsys):
    p = _set(tmp_path, [K3, K3, K3])
    code, out = run(capsys, "multidist", "--input", p, "--method", "fermat-spectral")
    assert code == 0 and out["result"]["value"] == pytest.approx(0, abs=1e-12)
    p = _set(tmp_path, [star5(), c4_plus_k1()], "iso.json")
    code, out = run(capsys, "multidist", "--input", p, "--method", "galign-spectral")
    assert out["result"]["value"] <= 1e-10
    gs = random_graph_set(np.random.default_rng(4), 3, 4)
    p = _set(tmp_path, list(gs.graphs), "small.json")
    _, exact = run(capsys, "multidist", "--input", p, "--method", "galign-bruteforce")
    code, scg = run(capsys, "multidist", "--input", p, "--method", "scg")
    assert code == 0
    assert scg["result"]["value"] <= exact["result"]["value"] + 1e-5
    assert "diagnostics" in scg["result"]


def test_props(tmp_path, capsys):
    code, out = run(capsys, "props", "--method", "galign-spectral", "--n", "4", "--m", "5",
                    "--trials", "500")
    assert code == 0 and out["result"]["violations"] == []
    code, out = run(capsys, "props", "--method", "scg", "--n", "3", "--m", "3", "--trials", "3")
    assert out["result"]["violations"] == []
    code, out = run(capsys, "props", "--trials", "0")
    assert code == 0 and out["result"]["trials"] == 0
    csv_path = tmp_path / "v.csv"
    code, _ = run(capsys, "props", "--trials", "2", "--csv", str(csv_path))
    assert csv_path.read_text().startswith("trial,property")


def test_cprop_and_pool(tmp_path, capsys):
    p = _set(tmp_path, list(random_graph_set(np.random.default_rng(0), 5, 4).graphs))
    code, out = run(capsys, "cprop", "--method", "fermat-spectral", "--input", p, "--trials", "50")
    assert code == 0 and out["result"]["max_ratio"] <= 1 + 1e-8


def test_diameter(tmp_path, capsys):
    p = _set(tmp_path, [K3] * 4)
    code, out = run(capsys, "diameter", "--input", p, "--budget", "2")
    assert out["result"]["delta_hat"] == out["result"]["exact_delta"] == 0
    p = _set(tmp_path, list(random_graph_set(np.random.default_rng(0), 8, 5).graphs), "d.json")
    code, out = run(capsys, "diameter", "--input", p, "--budget", "1000")
    assert out["result"]["ratio"] == 1
    assert main(["diameter", "--input", _set(tmp_path, [K3], "one.json")]) == 2


def test_gen_round_trip(tmp_path, capsys):
    out = tmp_path / "gen.json"
    assert main(["gen", "--model", "erdos_renyi", "--m", "5", "--count", "3",
                 "--param", "p=0.4", "--output", str(out)]) == 0
    code, res = run(capsys, "dist", "--input", str(out))
    assert code == 0
    assert main(["gen", "--model", "regular", "--param", "d=3", "--m", "5"]) == 2


def test_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        main(["cprop", "--trials", "40", "--seed", "9", "--output", str(path)])
    assert a.read_bytes() == b.read_bytes()
    main(["gen", "--count", "5", "--seed", "3", "--output", str(a)])
    main(["gen", "--count", "5", "--seed", "3", "--output", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_timing_opt_in(tmp_path, capsys):
    p = _set(tmp_path, [P3, K3])
    _, out = run(capsys, "dist", "--input", p)
    assert "timing" not in out
    _, out = run(capsys, "dist", "--input", p, "--timing")
    assert out["timing"] >= 0
