import json
import shutil
import subprocess

import numpy as np
import pytest

from qeopt.cli import main
from qeopt.emulator import SampleSet
from qeopt.io import read_graph


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def graph(tmp_path, capsys):
    f = tmp_path / "g.txt"
    assert run(capsys, "gen", "--kind", "random_regular", "--n", 8, "--d", 3, "--seed", 1, "--out", f)[0] == 0
    return f


class TestExitCodes:
    def test_no_subcommand(self, capsys):
        code, _, err = run(capsys)
        assert code == 1 and "error: usage:" in err

    def test_bad_choice(self, capsys):
        code, _, err = run(capsys, "gen", "--kind", "nope")
        assert code == 1 and "error: usage:" in err

    def test_missing_generator_parameter(self, capsys):
        code, _, err = run(capsys, "gen", "--kind", "erdos_renyi", "--n", 5)
        assert code == 1 and "--p" in err

    def test_missing_input(self, capsys, tmp_path):
        code, _, err = run(capsys, "predict", "--graph", tmp_path / "none.txt", "--p", 1)
        assert code == 2 and err.startswith("error: input:")

    def test_runtime_failure(self, capsys, graph):
        code, _, err = run(capsys, "predict", "--graph", graph, "--p", 99)
        assert code == 2 and err.startswith("error: predict:")

    def test_bad_spec(self, capsys, tmp_path):
        f = tmp_path / "s.json"
        f.write_text(json.dumps({"instances": [], "p": [1]}))
        code, _, err = run(capsys, "bench", "--spec", f, "--out", tmp_path / "o")
        assert code == 2 and err.startswith("error: spec:")

    def test_angles_layer_mismatch(self, capsys, graph):
        code, _, err = run(capsys, "emulate", "--graph", graph, "--p", 2, "--angles", "0.1,0.2")
        assert code == 2 and err.startswith("error: angles:")

    def test_readout_needs_model(self, capsys, tmp_path):
        s = tmp_path / "s.txt"
        s.write_text("01 3\n")
        code, _, err = run(capsys, "filter", "--samples", s, "--kind", "readout")
        assert code == 2 and "--readout" in err


class TestCommands:
    def test_gen_formats_agree(self, capsys, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "a.json"
        run(capsys, "gen", "--kind", "erdos_renyi", "--n", 9, "--p", 0.4, "--seed", 3, "--out", a)
        run(capsys, "gen", "--kind", "erdos_renyi", "--n", 9, "--p", 0.4, "--seed", 3, "--format", "json", "--out", b)
        assert read_graph(a).edges == read_graph(b).edges

    def test_gen_to_stdout(self, capsys):
        code, out, _ = run(capsys, "gen", "--kind", "line", "--n", 4)
        assert code == 0 and out.strip()

    def test_predict_formats_agree(self, capsys, graph):
        _, csv_out, _ = run(capsys, "predict", "--graph", graph, "--p", 2)
        _, js, _ = run(capsys, "predict", "--graph", graph, "--p", 2, "--format", "json")
        doc = json.loads(js)
        vals = [float(v) for v in csv_out.strip().split(",")]
        assert vals == [doc["gammas"][0], doc["betas"][0], doc["gammas"][1], doc["betas"][1]]

    def test_emulate_deterministic(self, capsys, graph, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for f in (a, b):
            code, _, err = run(capsys, "emulate", "--graph", graph, "--p", 2, "--shots", 300, "--seed", 5, "--out", f)
            assert code == 0 and "ar_star=" in err
        assert a.read_bytes() == b.read_bytes()
        assert SampleSet.read(a).shots == 300

    def test_emulate_json_matches_text(self, capsys, graph, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.json"
        run(capsys, "emulate", "--graph", graph, "--p", 1, "--seed", 2, "--out", a)
        run(capsys, "emulate", "--graph", graph, "--p", 1, "--seed", 2, "--format", "json", "--out", b)
        assert SampleSet.read(a).counts == SampleSet.read(b).counts

    def test_route_prints_metrics(self, capsys, graph):
        code, out, _ = run(capsys, "route", "--graph", graph, "--topology", "grid:3x3", "--method", "astar", "--layout", "fiedler")
        assert code == 0
        last = out.strip().splitlines()[-1]
        assert last.startswith("swaps=") and " cnots=" in last and " depth=" in last
        doc = json.loads(out[: out.rindex("swaps=")])
        assert doc["q"] == 9

    def test_route_to_file(self, capsys, graph, tmp_path):
        code, out, _ = run(capsys, "route", "--graph", graph, "--topology", "heavyhex:156", "--iterations", 2, "--out", tmp_path / "c.json")
        assert code == 0 and out.startswith("swaps=")
        assert json.loads((tmp_path / "c.json").read_text())["meta"]["cnot_history"]

    def test_filter(self, capsys, graph, tmp_path):
        s = tmp_path / "s.txt"
        run(capsys, "emulate", "--graph", graph, "--p", 1, "--shots", 200, "--out", s)
        code, out, _ = run(capsys, "filter", "--samples", s, "--kind", "energy", "--graph", graph)
        assert code == 0
        assert SampleSet.loads(out).shots == 20

    def test_readout_filter(self, capsys, tmp_path):
        s = tmp_path / "s.txt"
        s.write_text("00 90\n01 10\n")
        m = tmp_path / "m.json"
        m.write_text(json.dumps({"qubits": [{"p": 0.05, "q": 0.05}] * 2}))
        code, out, _ = run(capsys, "filter", "--samples", s, "--kind", "readout", "--readout", m)
        assert code == 0 and SampleSet.loads(out).shots == 100

    def test_solve_exact_hits(self, capsys, graph):
        code, out, err = run(capsys, "solve", "--graph", graph, "--restarts", 5, "--exact", "--format", "json")
        assert code == 0 and "best_cost=" in err
        doc = json.loads(out)
        assert all(r["hit_iter"] >= 0 for r in doc["records"])

    def test_solve_warm_start_file(self, capsys, graph, tmp_path):
        s = tmp_path / "s.txt"
        run(capsys, "emulate", "--graph", graph, "--p", 1, "--shots", 50, "--out", s)
        code, out, _ = run(capsys, "solve", "--graph", graph, "--warmstart", s, "--restarts", 4, "--max-iters", 30)
        assert code == 0 and out.startswith("restart,iter,best_cost,time_s")

    def test_solve_large(self, capsys, tmp_path):
        g = tmp_path / "big.txt"
        run(capsys, "gen", "--kind", "erdos_renyi", "--n", 20, "--p", 0.2, "--out", g)
        code, out, _ = run(capsys, "solve-large", "--graph", g, "--max-block", 8, "--p", 1, "--shots", 100, "--restarts", 5, "--format", "json", "--blocks-out", tmp_path / "blocks")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["assignment"]) == 20 and doc["objective"] >= doc["naive_objective"]
        assert (tmp_path / "blocks" / "partition.json").exists()

    def test_bench_deterministic(self, capsys, tmp_path):
        spec = {"instances": [{"kind": "line", "params": {"n": 6}}], "p": [1], "restarts": 20, "shots": 100, "heuristic": {"max_iters": 40}}
        f = tmp_path / "spec.json"
        f.write_text(json.dumps(spec))
        for d in ("a", "b"):
            code, out, _ = run(capsys, "bench", "--spec", f, "--out", tmp_path / d, "--jobs", 1)
            assert code == 0 and "Q=" in out
        for name in ("qfactor.csv", "qfactor_summary.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.skipif(shutil.which("qeopt") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["qeopt", "gen", "--kind", "line", "--n", "3"], capture_output=True, text=True, check=False)
    assert r.returncode == 0 and r.stdout
    r = subprocess.run(["qeopt", "gen"], capture_output=True, text=True, check=False)
    assert r.returncode == 1 and "error: usage:" in r.stderr
    np.testing.assert_equal(r.stdout, "")
