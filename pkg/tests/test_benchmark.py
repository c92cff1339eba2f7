import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import scan_rmin
from qeopt import benchmark as bm
from qeopt.heuristics import RestartRecord, RunTrace
from qeopt.io import write_instance
from qeopt.problem import ProblemError, WeightedGraph


def _trace(hits, optimum=-1.0, times=None, max_iters=None):
    recs = []
    for k, h in enumerate(hits):
        imps = [(0, 0.0, 0.0)]
        if math.isfinite(h):
            t = times[k] if times is not None else float(h)
            imps = [(0, optimum, 0.0)] if h == 0 else [(0, 0.0, 0.0), (int(h), optimum, t)]
        hit = int(h) if math.isfinite(h) else -1
        recs.append(RestartRecord(k, "", imps[0][1], imps[-1][1], imps[-1][0], hit, max_iters or 0, 0.0, imps[-1][2] if hit >= 0 else -1.0, imps))
    return RunTrace(recs, optimum, {"max_iters": max_iters})


hit_lists = st.lists(st.one_of(st.integers(0, 60).map(float), st.just(math.inf)), min_size=1, max_size=40)


class TestCurves:
    def test_fopt_example(self):
        F = bm.fopt_from_hits(np.array([1, 3, 3, np.inf]), 4)
        np.testing.assert_allclose(F, [0.25, 0.25, 0.75, 0.75])

    def test_hit_iterations_from_improvements(self):
        tr = _trace([0.0, 5.0, math.inf])
        np.testing.assert_array_equal(bm.hit_iterations(tr, -1.0), [0, 5, np.inf])

    def test_tolerance(self):
        tr = _trace([4.0], optimum=-1.0 + 1e-12)
        assert bm.hit_iterations(tr, -1.0)[0] == 4

    def test_no_hits(self):
        assert bm.expected_runtime(bm.FoptCurve(np.zeros(5))) == (math.inf, None)

    def test_needs_optimum(self):
        tr = _trace([1.0])
        tr.optimum = None
        with pytest.raises(ProblemError):
            bm.fopt_curve(tr)

    def test_t_total_from_meta(self):
        assert bm.fopt_curve(_trace([2.0], max_iters=7)).F.size == 7

    @given(hit_lists, st.integers(1, 70))
    @settings(max_examples=1000)
    def test_rmin_matches_scan(self, hits, t_total):
        got = bm.expected_runtime(bm.FoptCurve(bm.fopt_from_hits(np.array(hits), t_total)))
        ref, arg = scan_rmin(hits, t_total)
        if ref is None:
            assert got == (math.inf, None)
        else:
            assert got[0] == pytest.approx(float(ref), rel=1e-12)
            assert got[1] == arg

    @given(hit_lists, hit_lists, st.integers(1, 70))
    @settings(max_examples=300)
    def test_q_matches_scan(self, cold, warm, t_total):
        rep = bm.q_factor(_trace(cold), _trace(warm), -1.0, t_total)
        rc, _ = scan_rmin(cold, t_total)
        rw, _ = scan_rmin(warm, t_total)
        if rc is None or rw is None:
            assert rep.Q is None
        else:
            assert rep.Q == pytest.approx(float(rc / rw), rel=1e-12)

    @given(st.lists(st.integers(1, 30).map(float), min_size=1, max_size=30), st.integers(2, 5))
    @settings(max_examples=200)
    def test_time_scale_invariance(self, hits, k):
        t = 40
        r1, s1 = bm.expected_runtime(bm.FoptCurve(bm.fopt_from_hits(np.array(hits), t)))
        r2, s2 = bm.expected_runtime(bm.FoptCurve(bm.fopt_from_hits(np.array(hits) * k, t * k)))
        assert r2 == pytest.approx(k * r1) and s2 == k * s1


class TestQFactor:
    def test_q_equals_two_when_warm_hits_twice_as_fast(self):
        rng = np.random.default_rng(0)
        warm = rng.integers(1, 50, 200).astype(float)
        warm[rng.random(200) < 0.3] = np.inf
        cold = warm * 2
        rep = bm.q_factor(_trace(cold), _trace(warm), -1.0, 100)
        assert rep.Q == 2.0
        # the cold arm needs exactly twice the expected iterations
        assert rep.rmin_cold == 2 * rep.rmin_warm
        assert rep.tstar_cold == 2 * rep.tstar_warm

    def test_identical_arms_give_one(self):
        hits = [3.0, 7.0, math.inf, 12.0]
        assert bm.q_factor(_trace(hits), _trace(hits), -1.0, 20).Q == 1.0

    def test_undefined_when_an_arm_never_hits(self):
        rep = bm.q_factor(_trace([math.inf]), _trace([2.0]), -1.0, 10)
        assert rep.Q is None and math.isinf(rep.rmin_cold)
        assert rep.row()[3] == "" and rep.row()[4] == "inf"

    def test_bootstrap_centres_on_q(self):
        rng = np.random.default_rng(1)
        warm = rng.integers(1, 30, 300).astype(float)
        boot = bm.bootstrap_q(_trace(warm * 2), _trace(warm), -1.0, 100, draws=200, seed=2)
        assert boot.size == 200
        assert np.median(boot) == pytest.approx(2.0, rel=0.2)


class TestTimeRuntime:
    def test_time_grid(self):
        tr = _trace([1.0, 2.0, math.inf, 3.0], times=[0.5, 1.0, 0.0, 4.0])
        # F(0.5) = 1/4, F(1.0) = 2/4, F(4.0) = 3/4
        r, t = bm.time_expected_runtime(tr)
        assert r == pytest.approx(min(0.5 * 4, 1.0 * 2, 4.0 * 4 / 3)) and t == pytest.approx(0.5)

    def test_instant_hits(self):
        assert bm.time_expected_runtime(_trace([0.0, 0.0])) == (0.0, 0.0)

    def test_never(self):
        assert bm.time_expected_runtime(_trace([math.inf])) == (math.inf, None)


class TestApproximationRatio:
    def test_reaches_one(self):
        tr = _trace([2.0, 4.0, 4.0], optimum=-3.0, max_iters=5)
        ar = bm.approximation_ratio_curve(tr, None, -3.0, 5)
        np.testing.assert_allclose(ar, [0, 0, 0, 0, 1, 1])

    def test_needs_positive_objective(self):
        with pytest.raises(ProblemError, match="positive"):
            bm.approximation_ratio_curve(_trace([1.0], optimum=1.0), None, 1.0, 3)


def _line_spec(**kw):
    doc = {
        "instances": [{"kind": "line", "params": {"n": 8}, "seed": 0}],
        "p": [1, 2],
        "restarts": 30,
        "shots": 200,
        "heuristic": {"max_iters": 60},
        "seed": 4,
    }
    doc.update(kw)
    return bm.ExperimentSpec.from_dict(doc)


class TestExperimentSpec:
    def test_unknown_field(self):
        with pytest.raises(ProblemError, match="unknown spec fields"):
            bm.ExperimentSpec.from_dict({"instances": [{"kind": "line"}], "p": [1], "bogus": 1})

    @pytest.mark.parametrize(
        "kw, msg",
        [({"p": [0]}, "p values"), ({"restarts": 0}, ">= 1"), ({"pool": "x"}, "pool"), ({"filters": ["energy+x"]}, "filter"), ({"instances": []}, "no instances")],
    )
    def test_validation(self, kw, msg):
        with pytest.raises(ProblemError, match=msg):
            _line_spec(**kw)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProblemError, match="not found"):
            bm.ExperimentSpec.read(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        f = tmp_path / "s.json"
        f.write_text("{")
        with pytest.raises(ProblemError, match="JSON"):
            bm.ExperimentSpec.read(f)


class TestRunExperiment:
    def test_files_and_rows(self, tmp_path):
        res = bm.run_experiment(_line_spec(filters=["none", "energy"]), tmp_path)
        assert len(res.reports) == 4 and not res.errors
        lines = (tmp_path / "qfactor.csv").read_text().splitlines()
        assert lines[0] == ",".join(bm.QFACTOR_HEADER) and len(lines) == 5
        assert (tmp_path / "fopt_line_n8_s0_p1_none.csv").exists()
        assert (tmp_path / "ar_line_n8_s0_p2_energy.csv").exists()
        assert not (tmp_path / "errors.json").exists()

    def test_byte_identical_reruns(self, tmp_path):
        spec = _line_spec(repeats=2)
        a = bm.run_experiment(spec, tmp_path / "a")
        b = bm.run_experiment(spec, tmp_path / "b", jobs=2)
        assert [f.name for f in a.files] == [f.name for f in b.files]
        for fa, fb in zip(a.files, b.files):
            assert fa.read_bytes() == fb.read_bytes()

    def test_summary_over_repeats(self, tmp_path):
        res = bm.run_experiment(_line_spec(repeats=3, p=[1]), tmp_path)
        rows = (tmp_path / "qfactor_summary.csv").read_text().splitlines()
        assert rows[0] == "instance,p,filter,repeats,Q_median,Q_min,Q_max"
        assert rows[1].startswith("line_n8_s0,1,none,3,")
        assert set(res.median_q()) == {("line_n8_s0", 1, "none")}

    def test_cell_errors_recorded(self, tmp_path):
        res = bm.run_experiment(_line_spec(filters=["readout"], p=[1]), tmp_path)
        assert res.errors and res.errors[0]["stage"] == "solve"
        assert json.loads((tmp_path / "errors.json").read_text()) == res.errors

    def test_uniform_pool(self):
        res = bm.run_experiment(_line_spec(pool="uniform", p=[1]))
        assert res.reports[0].pool == "uniform"

    def test_file_instance(self, tmp_path):
        g = WeightedGraph(5, [(i, i + 1, 1.0) for i in range(4)])
        f = tmp_path / "g.txt"
        write_instance(g, f)
        res = bm.run_experiment(_line_spec(instances=[{"file": str(f)}], p=[1]))
        assert res.reports[0].instance == "g" and res.reports[0].Q is not None
