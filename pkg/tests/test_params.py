import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qeopt import emulator as em
from qeopt import params as prm
from qeopt.emulator import QaoaParams
from qeopt.instances import generate_instances
from qeopt.problem import ProblemError, WeightedGraph, graph_diagonal


@pytest.fixture(scope="module")
def tables():
    return prm.load_tables()


def _regular(n, d, seed=0):
    return generate_instances("random_regular", {"n": n, "d": d}, seed)


class TestDegreeProfile:
    def test_star_weights(self):
        g = WeightedGraph(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)])
        assert prm.DegreeProfile.of(g).weights() == pytest.approx({3: 0.5, 1: 0.5})

    def test_weights_sum_to_one(self):
        g = generate_instances("erdos_renyi", {"n": 12, "p": 0.4}, 3)
        assert sum(prm.DegreeProfile.of(g).weights().values()) == pytest.approx(1.0)

    def test_isolated_vertices_ignored(self):
        g = WeightedGraph(5, [(0, 1, 1.0)])
        assert prm.DegreeProfile.of(g).weights() == {1: 1.0}

    def test_empty_graph_rejected(self):
        with pytest.raises(ProblemError):
            prm.DegreeProfile.of(WeightedGraph(3, [])).weights()


class TestTreeTable:
    def test_regular_graph_gives_row(self, tables):
        g = _regular(10, 3)
        for p in (1, 2, 3):
            got = prm.dweight_predict(g, p, tables.tree)
            row = tables.tree.row(3, p)
            np.testing.assert_allclose(got.gammas, row.gammas, atol=1e-12)
            np.testing.assert_allclose(got.betas, row.betas, atol=1e-12)

    def test_star_is_mean_of_rows(self, tables):
        g = WeightedGraph(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)])
        got = prm.dweight_predict(g, 2, tables.tree)
        a, b = tables.tree.row(3, 2), tables.tree.row(1, 2)
        np.testing.assert_allclose(got.gammas, (a.gammas + b.gammas) / 2, atol=1e-12)
        np.testing.assert_allclose(got.betas, (a.betas + b.betas) / 2, atol=1e-12)

    @pytest.mark.parametrize("p", range(1, prm.P_MAX + 1))
    def test_all_rows_present(self, tables, p):
        for d in list(range(1, 11)) + [20]:
            assert tables.tree.has(d, p)

    @pytest.mark.parametrize("p", [1, 2, 4])
    def test_interpolated_degree_within_hull(self, tables, p):
        r = tables.tree.row(15, p)
        lo, hi = tables.tree.row(10, p), tables.tree.row(20, p)
        assert np.all(np.isfinite(r.gammas)) and np.all(np.isfinite(r.betas))
        for v, a, b in ((r.gammas, lo.gammas, hi.gammas), (r.betas, lo.betas, hi.betas)):
            assert np.all(v >= np.minimum(a, b) - 1e-12)
            assert np.all(v <= np.maximum(a, b) + 1e-12)

    def test_large_degree_extrapolation_shrinks_gamma(self, tables):
        top, far = tables.tree.row(20, 2), tables.tree.row(80, 2)
        np.testing.assert_allclose(far.gammas, top.gammas * math.sqrt(19 / 79), rtol=1e-12)
        np.testing.assert_allclose(far.betas, top.betas)

    def test_degree_zero_rejected(self, tables):
        with pytest.raises(ProblemError):
            tables.tree.row(0, 1)

    def test_first_gamma_decreases_with_degree(self, tables):
        g1 = [tables.tree.row(d, 1).gammas[0] for d in range(2, 11)]
        assert all(a > b for a, b in zip(g1, g1[1:]))

    def test_single_edge_row_is_optimal(self, tables):
        diag = graph_diagonal(WeightedGraph(2, [(0, 1, 1.0)]), "maxcut")
        _, e_opt = em.optimize_params(diag, 1, restarts=8, seed=0)
        e_row, _ = em.energy_and_gradient(diag, tables.tree.row(1, 1))
        assert abs(e_row - e_opt) < 1e-3

    def test_p_out_of_range(self, tables):
        with pytest.raises(ProblemError):
            prm.dweight_predict(_regular(8, 3), prm.P_MAX + 1, tables.tree)

    def test_json_round_trip(self, tables):
        back = prm.TreeParamTable.from_json(tables.tree.to_json())
        assert back.rows.keys() == tables.tree.rows.keys()
        for k, v in tables.tree.rows.items():
            np.testing.assert_array_equal(back.rows[k].gammas, v.gammas)
            np.testing.assert_array_equal(back.rows[k].betas, v.betas)

    def test_wrong_kind_rejected(self, tables):
        with pytest.raises(ProblemError, match="expected"):
            prm.TreeParamTable.from_json(tables.sk.to_json())

    def test_wrong_schema_rejected(self, tables):
        doc = json.loads(tables.tree.to_json())
        doc["schema"] = -1
        with pytest.raises(ProblemError, match="schema"):
            prm.TreeParamTable.from_json(json.dumps(doc))


class TestSkatan:
    def test_degree_two_quarter_pi(self, tables):
        ring = WeightedGraph(6, [(i, (i + 1) % 6, 1.0) for i in range(6)])
        got = prm.skatan_predict(ring, 2, tables.sk)
        np.testing.assert_allclose(got.gammas, tables.sk.row(2).gammas * math.pi / 4, rtol=1e-12)
        np.testing.assert_allclose(got.betas, tables.sk.row(2).betas)

    def test_dense_graph_ratio(self, tables):
        g = WeightedGraph(101, [(i, j, 1.0) for i in range(101) for j in range(i + 1, 101)])
        got = prm.skatan_predict(g, 1, tables.sk)
        assert got.gammas[0] / tables.sk.row(1).gammas[0] == pytest.approx(math.atan(1 / math.sqrt(99)), rel=1e-12)

    def test_mean_degree_one_rejected(self, tables):
        with pytest.raises(ProblemError, match="exceed 1"):
            prm.skatan_predict(WeightedGraph(2, [(0, 1, 1.0)]), 1, tables.sk)

    def test_missing_row(self, tables):
        with pytest.raises(ProblemError):
            tables.sk.row(prm.P_MAX + 3)


class TestBalanced:
    @pytest.mark.parametrize("alpha, which", [(1.0, "sk"), (0.0, "tree")])
    def test_endpoints(self, tables, alpha, which):
        g = generate_instances("erdos_renyi", {"n": 10, "p": 0.5}, 2)
        got = prm.balanced_predict(g, 3, tables, alpha)
        ref = prm.skatan_predict(g, 3, tables.sk) if which == "sk" else prm.dweight_predict(g, 3, tables.tree)
        np.testing.assert_allclose(got.gammas, ref.gammas, atol=1e-12)
        np.testing.assert_allclose(got.betas, ref.betas, atol=1e-12)

    def test_midpoint(self, tables):
        g = generate_instances("erdos_renyi", {"n": 10, "p": 0.5}, 2)
        a = prm.skatan_predict(g, 2, tables.sk)
        b = prm.dweight_predict(g, 2, tables.tree)
        got = prm.balanced_predict(g, 2, tables, 0.5)
        np.testing.assert_allclose(got.gammas, (a.gammas + b.gammas) / 2, atol=1e-12)
        np.testing.assert_allclose(got.betas, (a.betas + b.betas) / 2, atol=1e-12)

    @pytest.mark.parametrize("alpha", [-0.1, 1.5])
    def test_alpha_range(self, tables, alpha):
        with pytest.raises(ProblemError):
            prm.balanced_predict(_regular(8, 3), 1, tables, alpha)


class TestRescale:
    base = QaoaParams([0.4, 0.6], [0.5, 0.2])

    def test_unit_magnitude_unchanged(self):
        g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, -1.0)])
        np.testing.assert_allclose(prm.rescale_for_weights(self.base, g).gammas, self.base.gammas)

    def test_uniform_weight_two(self):
        g = WeightedGraph(3, [(0, 1, 2.0), (1, 2, 2.0)])
        np.testing.assert_allclose(prm.rescale_for_weights(self.base, g).gammas, self.base.gammas / 2)

    def test_mixed_weights(self):
        g = WeightedGraph(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 2.0), (3, 0, 1.0)])
        got = prm.rescale_for_weights(self.base, g)
        np.testing.assert_allclose(got.gammas, self.base.gammas / math.sqrt(2.5))
        np.testing.assert_allclose(got.betas, self.base.betas)

    def test_zero_weights_rejected(self):
        with pytest.raises(ProblemError):
            prm.rescale_for_weights(self.base, WeightedGraph(2, [(0, 1, 0.0)]))

    def test_predict_applies_rescale(self, tables):
        g = _regular(10, 3)
        g2 = WeightedGraph(g.n, [(i, j, 3.0 * w) for i, j, w in g.edges])
        a = prm.predict(g, 2, "balanced", tables)
        b = prm.predict(g2, 2, "balanced", tables)
        np.testing.assert_allclose(b.gammas, a.gammas / 3)

    def test_unknown_method(self, tables):
        with pytest.raises(ProblemError, match="unknown"):
            prm.predict(_regular(8, 3), 1, "nope", tables)


class TestMis:
    def test_degree_rounding(self, tables):
        # 147 edges on 20 vertices: mean degree 14.7, betas capped at 12
        rng = np.random.default_rng(0)
        pairs = [(i, j) for i in range(20) for j in range(i + 1, 20)]
        pick = rng.choice(len(pairs), 147, replace=False)
        g = WeightedGraph(20, [(*pairs[k], 1.0) for k in pick])
        assert prm.mean_degree(g) == pytest.approx(14.7)
        got = prm.mis_predict(g, 2, tables.mis)
        np.testing.assert_array_equal(got.betas, tables.mis.beta(12, 2))

    def test_rounding_half_up(self, tables):
        ring = WeightedGraph(4, [(i, (i + 1) % 4, 1.0) for i in range(4)])
        chord = WeightedGraph(4, list(ring.edges) + [(0, 2, 1.0)])
        assert prm.mean_degree(chord) == 2.5
        np.testing.assert_array_equal(prm.mis_predict(chord, 1, tables.mis).betas, tables.mis.beta(3, 1))

    def test_isomorphic_graphs_agree(self, tables):
        g = generate_instances("erdos_renyi", {"n": 9, "p": 0.4}, 5)
        h = g.relabel(list(np.random.default_rng(1).permutation(g.n)))
        a, b = prm.predict(g, 3, "mis", tables), prm.predict(h, 3, "mis", tables)
        np.testing.assert_array_equal(a.gammas, b.gammas)
        np.testing.assert_array_equal(a.betas, b.betas)

    def test_beta_rows_cover_degrees(self, tables):
        for p in range(1, prm.P_MAX + 1):
            for d in range(1, prm.MIS_DEGREE_CAP + 1):
                b = tables.mis.beta(d, p)
                assert b.shape == (p,) and np.all(np.isfinite(b))

    def test_fit_recovers_synthetic_coefficients(self):
        c = (0.3, 1.2, 0.8, 1.5)
        dm = np.linspace(1.0, 12.0, 40)
        got, rms = prm.fit_gamma_curve(dm, prm.gamma_fit_curve(dm, *c))
        assert rms < 1e-6
        np.testing.assert_allclose(prm.gamma_fit_curve(dm, *got), prm.gamma_fit_curve(dm, *c), atol=1e-6)

    def test_fitted_first_gamma_is_monotone(self, tables):
        dm = np.linspace(1.0, 14.0, 60)
        g = np.array([tables.mis.gamma(1, 1, x) for x in dm])
        d = np.diff(g)
        assert np.all(d <= 1e-12) or np.all(d >= -1e-12)

    def test_fit_tables_fill_missing_degrees(self):
        samples = [(2.0, {1: QaoaParams([0.5], [0.3])}), (3.0, {1: QaoaParams([0.4], [0.2])}), (6.0, {1: QaoaParams([0.3], [0.1])}), (9.0, {1: QaoaParams([0.25], [0.05])})]
        t = prm.fit_mis_tables(samples, p_max=1)
        assert t.beta(1, 1)[0] == pytest.approx(0.3)
        assert t.beta(4, 1)[0] == pytest.approx(0.2)
        assert t.beta(12, 1)[0] == pytest.approx(0.05)

    def test_json_round_trip(self, tables):
        back = prm.MisFitTable.from_json(tables.mis.to_json())
        assert back.coeffs == tables.mis.coeffs
        for k, v in tables.mis.betas.items():
            np.testing.assert_array_equal(back.betas[k], v)

    def test_load_missing_directory(self, tmp_path):
        with pytest.raises(ProblemError, match="missing"):
            prm.load_tables(tmp_path)

    def test_save_and_load(self, tables, tmp_path):
        for kind in ("tree", "sk", "mis"):
            prm.save_table(getattr(tables, kind), tmp_path, kind)
        back = prm.load_tables(tmp_path)
        np.testing.assert_array_equal(back.sk.row(3).gammas, tables.sk.row(3).gammas)


class TestProperties:
    @given(st.integers(0, 10_000), st.integers(4, 14), st.floats(0.15, 0.9), st.integers(1, prm.P_MAX), st.sampled_from(prm.METHODS))
    @settings(max_examples=60)
    def test_predictions_are_finite(self, seed, n, pe, p, method):
        g = generate_instances("erdos_renyi", {"n": n, "p": pe}, seed)
        if g.m == 0 or (method in ("skatan", "balanced") and prm.mean_degree(g) <= 1):
            return
        par = prm.predict(g, p, method, prm.load_tables())
        assert par.p == p
        assert np.all(np.isfinite(par.gammas)) and np.all(np.isfinite(par.betas))

    @given(st.integers(0, 10_000), st.sampled_from(prm.METHODS))
    @settings(max_examples=25)
    def test_relabel_invariance(self, seed, method):
        g = generate_instances("erdos_renyi", {"n": 10, "p": 0.5}, seed)
        if g.m == 0 or prm.mean_degree(g) <= 1:
            return
        h = g.relabel(list(np.random.default_rng(seed).permutation(g.n)))
        t = prm.load_tables()
        a, b = prm.predict(g, 2, method, t), prm.predict(h, 2, method, t)
        np.testing.assert_allclose(a.gammas, b.gammas, atol=1e-12)
        np.testing.assert_allclose(a.betas, b.betas, atol=1e-12)
