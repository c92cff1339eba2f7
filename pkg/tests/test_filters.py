import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import kron_all
from qeopt import emulator as em
from qeopt import filters as flt
from qeopt.emulator import SampleSet
from qeopt.filters import FilterConfig, ReadoutModel
from qeopt.problem import ProblemError, QuboInstance, WeightedGraph, to_qubo


@st.composite
def sample_sets(draw, n_max=6):
    n = draw(st.integers(2, n_max))
    keys = draw(st.lists(st.integers(0, (1 << n) - 1), min_size=1, max_size=1 << n, unique=True))
    counts = draw(st.lists(st.integers(1, 60), min_size=len(keys), max_size=len(keys)))
    return SampleSet(n, {format(k, f"0{n}b")[::-1]: c for k, c in zip(keys, counts)})


def _qubo(n, seed):
    rng = np.random.default_rng(seed)
    Q = np.triu(rng.normal(size=(n, n)), 1)
    return QuboInstance(Q + Q.T, rng.normal(size=n), "minimize")


def _energy(q, key):
    return q.energy(np.array([int(b) for b in key]))


def _dense_inverse(model, y):
    """Full tensor-product inverse on the whole space (little-endian index)."""
    M = kron_all([model.inverse(j) for j in reversed(range(model.n))])
    return M @ y


def _simplex_by_bisection(v):
    lo, hi = v.min() - 1.0, v.max()
    for _ in range(200):
        t = 0.5 * (lo + hi)
        if np.maximum(v - t, 0).sum() > 1:
            lo = t
        else:
            hi = t
    return np.maximum(v - 0.5 * (lo + hi), 0)


class TestConfig:
    def test_defaults(self):
        c = FilterConfig()
        assert (c.energy_keep, c.frequency_threshold, c.hamming_seed, c.hamming_expand) == (0.10, 0.0005, 0.01, 0.09)

    @pytest.mark.parametrize("kw", [{"energy_keep": 0.0}, {"energy_keep": 1.5}, {"hamming_seed": 0.6, "hamming_expand": 0.6}, {"readout_radius": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ProblemError):
            FilterConfig(**kw)

    def test_round_trip(self, tmp_path):
        c = FilterConfig(energy_keep=0.2, readout_radius=3)
        f = tmp_path / "f.json"
        f.write_text(c.dumps())
        assert FilterConfig.read(f) == c


class TestEnergy:
    def test_small_example(self):
        q = _qubo(3, 0)
        s = SampleSet(3, {"000": 5, "111": 3, "101": 2})
        out = flt.energy_filter(s, q, FilterConfig(energy_keep=0.5))
        assert out.shots == 5
        best = min(s.counts, key=lambda k: _energy(q, k))
        assert best in out.counts

    @given(sample_sets(), st.floats(0.01, 1.0), st.integers(0, 1000))
    @settings(max_examples=200)
    def test_size_and_order(self, s, keep, seed):
        q = _qubo(s.n, seed)
        out = flt.energy_filter(s, q, FilterConfig(energy_keep=keep))
        assert out.shots == math.ceil(keep * s.shots)
        removed = {k: s.counts[k] - out.counts.get(k, 0) for k in s.counts}
        assert all(v >= 0 for v in removed.values())
        kept_max = max(_energy(q, k) for k in out.counts)
        gone = [_energy(q, k) for k, v in removed.items() if v > 0]
        if gone:
            assert kept_max <= min(gone) + 1e-12

    def test_width_mismatch(self):
        with pytest.raises(ProblemError, match="variables"):
            flt.energy_filter(SampleSet(2, {"01": 1}), _qubo(3, 0))

    def test_empty(self):
        with pytest.raises(ProblemError, match="empty"):
            flt.energy_filter(SampleSet(2, {}), _qubo(2, 0))


class TestFrequency:
    def test_threshold(self):
        s = SampleSet(2, {"00": 900, "01": 99, "11": 1})
        out = flt.frequency_filter(s, FilterConfig(frequency_threshold=0.05))
        assert out.counts == {"00": 900, "01": 99}

    def test_threshold_halves_until_nonempty(self):
        s = SampleSet(2, {"00": 30, "01": 20, "11": 50})
        out = flt.frequency_filter(s, FilterConfig(frequency_threshold=0.9))
        assert out.counts == {"11": 50}

    def test_uniform_passthrough(self):
        s = SampleSet(3, {format(k, "03b"): 4 for k in range(8)})
        assert flt.frequency_filter(s, FilterConfig(frequency_threshold=0.5)).counts == s.counts

    @given(sample_sets(), st.floats(0.001, 1.0))
    @settings(max_examples=200)
    def test_idempotent(self, s, t):
        cfg = FilterConfig(frequency_threshold=t)
        once = flt.frequency_filter(s, cfg)
        assert flt.frequency_filter(once, cfg).counts == once.counts
        assert set(once.counts) <= set(s.counts)
        assert all(once.counts[k] == s.counts[k] for k in once.counts)


class TestHamming:
    def test_accounting(self):
        q = _qubo(4, 1)
        rng = np.random.default_rng(0)
        s = SampleSet.from_indices(4, rng.integers(0, 16, 1000))
        cfg = FilterConfig(hamming_seed=0.01, hamming_expand=0.09)
        out = flt.hamming_filter(s, q, cfg)
        assert out.shots == 10 + 90
        assert all(out.counts[k] <= s.counts[k] for k in out.counts)

    def test_neighbours_preferred(self):
        q = QuboInstance(np.zeros((4, 4)), np.array([1.0, 1.0, 1.0, 1.0]), "minimize")
        s = SampleSet(4, {"0000": 1, "1000": 1, "1111": 1, "1100": 1})
        out = flt.hamming_filter(s, q, FilterConfig(hamming_seed=0.25, hamming_expand=0.5))
        assert out.counts == {"0000": 1, "1000": 1, "1100": 1}

    @given(sample_sets(), st.floats(0.01, 0.5), st.floats(0.01, 0.5), st.integers(0, 1000))
    @settings(max_examples=200)
    def test_exact_sizes(self, s, fs, fe, seed):
        q = _qubo(s.n, seed)
        out = flt.hamming_filter(s, q, FilterConfig(hamming_seed=fs, hamming_expand=fe))
        seeds = math.ceil(fs * s.shots)
        expand = min(math.ceil(fe * s.shots), s.shots - seeds)
        assert out.shots == seeds + expand
        # the seed shots are exactly the energy filter at the seed fraction
        ef = flt.energy_filter(s, q, FilterConfig(energy_keep=fs))
        assert all(out.counts.get(k, 0) >= c for k, c in ef.counts.items())


class TestSimplex:
    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=30))
    def test_matches_bisection(self, v):
        v = np.array(v)
        np.testing.assert_allclose(flt.project_simplex(v), _simplex_by_bisection(v), atol=1e-9)

    def test_feasible_point_fixed(self):
        v = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(flt.project_simplex(v), v)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.integers(1, 10_000))
    def test_round_counts(self, w, total):
        w = np.array(w) + 1e-9
        p = w / w.sum()
        c = flt.round_counts(p, total)
        assert c.sum() == total
        assert np.all(np.abs(c - p * total) < 1.0)


class TestReadout:
    def test_model_checks(self):
        with pytest.raises(ProblemError, match="singular"):
            ReadoutModel([0.5], [0.5])
        with pytest.raises(ProblemError):
            ReadoutModel([0.1, 0.1], [0.1])
        with pytest.raises(ProblemError):
            ReadoutModel([-0.1], [0.1])

    def test_inverse(self):
        m = ReadoutModel([0.05, 0.2], [0.1, 0.03])
        for j in range(2):
            np.testing.assert_allclose(m.inverse(j) @ m.matrix(j), np.eye(2), atol=1e-14)

    def test_model_round_trip(self):
        m = ReadoutModel([0.05, 0.2], [0.1, 0.03])
        back = ReadoutModel.loads(m.dumps())
        np.testing.assert_array_equal(back.p, m.p)
        np.testing.assert_array_equal(back.q, m.q)

    def test_full_radius_matches_dense_inverse(self):
        n = 3
        m = ReadoutModel([0.05, 0.1, 0.02], [0.08, 0.01, 0.12])
        true = np.random.default_rng(5).dirichlet(np.ones(1 << n))
        # noisy counts from the dense forward map
        F = kron_all([m.matrix(j) for j in reversed(range(n))]).real
        counts = flt.round_counts(F @ true, 10**6)
        s = SampleSet.from_indices(n, np.repeat(np.arange(1 << n), counts))
        got = flt.readout_correct(s, m, radius=n)
        est = np.zeros(1 << n)
        for k, p in got.probabilities().items():
            est[int(k[::-1], 2)] = p
        ref = _simplex_by_bisection(_dense_inverse(m, counts / 10**6).real)
        assert np.abs(est - ref).max() < 2e-6
        assert np.abs(est - true).max() < 1e-3

    def test_shot_count_preserved(self):
        s = SampleSet(3, {"000": 70, "100": 20, "111": 10})
        out = flt.readout_correct(s, ReadoutModel.uniform(3, 0.05, 0.05))
        assert out.shots == 100

    def test_width_mismatch(self):
        with pytest.raises(ProblemError, match="qubits"):
            flt.readout_correct(SampleSet(2, {"00": 1}), ReadoutModel.uniform(3, 0.1, 0.1))

    def test_reduces_distance(self):
        n = 4
        rng = np.random.default_rng(11)
        wins = 0
        for t in range(10):
            true = rng.dirichlet(np.full(1 << n, 0.3))
            clean = SampleSet.from_indices(n, rng.choice(1 << n, size=100_000, p=true))
            noisy = em.inject_readout_noise(clean, (0.05, 0.05), seed=t)
            fixed = flt.readout_correct(noisy, ReadoutModel.uniform(n, 0.05, 0.05), radius=n)
            ref = {format(k, f"0{n}b")[::-1]: float(v) for k, v in enumerate(true)}
            wins += flt.tv_distance(fixed.probabilities(), ref) < flt.tv_distance(noisy.probabilities(), ref)
        assert wins == 10


class TestApply:
    def test_none_passthrough(self):
        s = SampleSet(2, {"01": 3})
        assert flt.apply_filter("none", s) is s

    def test_needs_instance(self):
        with pytest.raises(ProblemError, match="instance"):
            flt.apply_filter("energy", SampleSet(2, {"01": 3}))

    def test_needs_model(self):
        with pytest.raises(ProblemError, match="model"):
            flt.apply_filter("readout", SampleSet(2, {"01": 3}))

    def test_unknown(self):
        with pytest.raises(ProblemError, match="unknown"):
            flt.apply_filter("nope", SampleSet(2, {"01": 3}), _qubo(2, 0))

    def test_maxcut_energy_filter_keeps_cuts(self):
        g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 1.0)])
        q = to_qubo(g, "maxcut")
        s = SampleSet(3, {"010": 1, "000": 9})
        assert flt.apply_filter("energy", s, q, FilterConfig(energy_keep=0.1)).counts == {"010": 1}
