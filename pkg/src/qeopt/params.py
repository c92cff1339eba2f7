"""Optimization-free QAOA angle prediction.

Max-Cut angles come from per-degree tables (Dweight), from a rescaled
Sherrington-Kirkpatrick schedule (SKatan) or from a blend of the two. MIS
angles come from a per-layer curve in the mean degree plus a per-degree
average of mixer angles. All tables are JSON assets built from emulator
optimizations; see ``scripts/build_tables.py``.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from . import emulator as em
from .emulator import QaoaParams
from .instances import generate_instances
from .io import atomic_write
from .problem import ProblemError, WeightedGraph, graph_diagonal

SCHEMA_VERSION = 1
TREE_DEGREES = tuple(range(1, 11)) + (20,)
P_MAX = 6
MIS_DEGREE_CAP = 12
DEFAULT_ALPHA = 0.5

_DATA_DIR = Path(__file__).with_name("data")


def asset_dir() -> Path:
    """Table directory; ``QEOPT_ASSETS`` overrides the packaged one."""
    env = os.environ.get("QEOPT_ASSETS")
    return Path(env) if env else _DATA_DIR


# ---------------------------------------------------------------------------
# degree statistics


@dataclass(frozen=True)
class DegreeProfile:
    histogram: dict[int, int]

    @classmethod
    def of(cls, g: WeightedGraph) -> "DegreeProfile":
        deg = g.degrees()
        vals, counts = np.unique(deg, return_counts=True)
        return cls({int(d): int(c) for d, c in zip(vals, counts)})

    @property
    def n(self) -> int:
        return sum(self.histogram.values())

    @property
    def mean_degree(self) -> float:
        return sum(d * c for d, c in self.histogram.items()) / self.n

    def weights(self) -> dict[int, float]:
        """Edge-endpoint share of each degree: ``d * count_d / sum``."""
        tot = sum(d * c for d, c in self.histogram.items())
        if tot == 0:
            raise ProblemError("graph has no edges")
        return {d: d * c / tot for d, c in self.histogram.items() if d > 0}


def mean_degree(g: WeightedGraph) -> float:
    return 2.0 * g.m / g.n if g.n else 0.0


# ---------------------------------------------------------------------------
# tables


def _row(gammas, betas) -> dict:
    return {"gammas": [float(x) for x in gammas], "betas": [float(x) for x in betas]}


@dataclass
class TreeParamTable:
    """Per-degree, per-depth Max-Cut angles."""

    rows: dict[tuple[int, int], QaoaParams]
    meta: dict = field(default_factory=dict)

    def degrees(self) -> list[int]:
        return sorted({d for d, _ in self.rows})

    def has(self, d: int, p: int) -> bool:
        return (d, p) in self.rows

    def row(self, d: int, p: int) -> QaoaParams:
        """Angles for degree ``d``; unseen degrees follow the degree scaling.

        Between two table degrees each coordinate is interpolated linearly in
        its scaling variable (``arctan(1/sqrt(d-1))`` for the single-layer
        gamma, ``1/sqrt(d-1)`` for deeper gammas and ``1/d`` for betas), so
        the result stays between the neighbouring rows. Past the largest
        degree gamma follows the same scaling towards zero and beta stays at
        its large-degree value.
        """
        if (d, p) in self.rows:
            return self.rows[(d, p)]
        if d < 1:
            raise ProblemError("degree must be >= 1")
        ds = [k for k in self.degrees() if (k, p) in self.rows and k >= 2]
        if not ds:
            raise ProblemError(f"table has no rows for p={p}")
        ug = _gamma_scale(p)
        if d > ds[-1]:
            top = self.rows[(ds[-1], p)]
            return QaoaParams(top.gammas * ug(d) / ug(ds[-1]), top.betas)
        lo = max(k for k in ds if k < d)
        hi = min(k for k in ds if k > d)
        a, b = self.rows[(lo, p)], self.rows[(hi, p)]
        tg = (ug(d) - ug(lo)) / (ug(hi) - ug(lo))
        tb = (1 / d - 1 / lo) / (1 / hi - 1 / lo)
        return QaoaParams(a.gammas + tg * (b.gammas - a.gammas), a.betas + tb * (b.betas - a.betas))

    def to_json(self) -> str:
        rows = {f"{d},{p}": _row(v.gammas, v.betas) for (d, p), v in sorted(self.rows.items())}
        return json.dumps({"schema": SCHEMA_VERSION, "kind": "tree", "meta": self.meta, "rows": rows}, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TreeParamTable":
        doc = _check_doc(json.loads(text), "tree")
        rows = {}
        for key, v in doc["rows"].items():
            d, p = (int(t) for t in key.split(","))
            rows[(d, p)] = QaoaParams(v["gammas"], v["betas"])
        return cls(rows, doc.get("meta", {}))


def _gamma_scale(p: int):
    if p == 1:
        return lambda d: math.atan(1.0 / math.sqrt(d - 1))
    return lambda d: 1.0 / math.sqrt(d - 1)


@dataclass
class SkParamTable:
    rows: dict[int, QaoaParams]
    meta: dict = field(default_factory=dict)

    def row(self, p: int) -> QaoaParams:
        if p not in self.rows:
            raise ProblemError(f"SK table has no row for p={p}")
        return self.rows[p]

    def to_json(self) -> str:
        rows = {str(p): _row(v.gammas, v.betas) for p, v in sorted(self.rows.items())}
        return json.dumps({"schema": SCHEMA_VERSION, "kind": "sk", "meta": self.meta, "rows": rows}, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SkParamTable":
        doc = _check_doc(json.loads(text), "sk")
        return cls({int(p): QaoaParams(v["gammas"], v["betas"]) for p, v in doc["rows"].items()}, doc.get("meta", {}))


def gamma_fit_curve(d, c1, c2, c3, c4):
    """``c1 + c2 / (d**c3 + c4)``: the MIS gamma model in the mean degree."""
    return c1 + c2 / (np.power(d, c3) + c4)


@dataclass
class MisFitTable:
    """Curve coefficients per (layer j, depth p) and betas per (degree, p)."""

    coeffs: dict[tuple[int, int], tuple[float, float, float, float]]
    betas: dict[tuple[int, int], np.ndarray]
    meta: dict = field(default_factory=dict)

    def gamma(self, j: int, p: int, dmean: float) -> float:
        return float(gamma_fit_curve(dmean, *self.coeffs[(j, p)]))

    def beta(self, d: int, p: int) -> np.ndarray:
        return self.betas[(min(max(d, 1), MIS_DEGREE_CAP), p)]

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA_VERSION,
            "kind": "mis",
            "meta": self.meta,
            "coeffs": {f"{j},{p}": list(map(float, c)) for (j, p), c in sorted(self.coeffs.items())},
            "betas": {f"{d},{p}": [float(x) for x in b] for (d, p), b in sorted(self.betas.items())},
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MisFitTable":
        doc = _check_doc(json.loads(text), "mis")
        coeffs = {tuple(int(t) for t in k.split(",")): tuple(v) for k, v in doc["coeffs"].items()}
        betas = {tuple(int(t) for t in k.split(",")): np.array(v) for k, v in doc["betas"].items()}
        return cls(coeffs, betas, doc.get("meta", {}))


def _check_doc(doc: dict, kind: str) -> dict:
    if doc.get("kind") != kind:
        raise ProblemError(f"expected a {kind!r} table, got {doc.get('kind')!r}")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ProblemError(f"unsupported table schema {doc.get('schema')!r}")
    return doc


@dataclass
class Tables:
    tree: TreeParamTable
    sk: SkParamTable
    mis: MisFitTable


_FILES = {"tree": "tree_table.json", "sk": "sk_table.json", "mis": "mis_table.json"}


def load_tables(directory=None) -> Tables:
    d = Path(directory) if directory is not None else asset_dir()
    try:
        return Tables(
            TreeParamTable.from_json((d / _FILES["tree"]).read_text()),
            SkParamTable.from_json((d / _FILES["sk"]).read_text()),
            MisFitTable.from_json((d / _FILES["mis"]).read_text()),
        )
    except FileNotFoundError as exc:
        raise ProblemError(f"missing parameter table: {exc.filename}") from exc


def save_table(table, directory, kind: str) -> Path:
    path = Path(directory) / _FILES[kind]
    atomic_write(path, table.to_json())
    return path


# ---------------------------------------------------------------------------
# predictors


def _check_p(p: int) -> None:
    if not 1 <= p <= P_MAX:
        raise ProblemError(f"p={p} outside table coverage 1..{P_MAX}")


def dweight_predict(g: WeightedGraph, p: int, table: TreeParamTable) -> QaoaParams:
    """Degree-distribution average of the per-degree rows."""
    _check_p(p)
    w = DegreeProfile.of(g).weights()
    rows = {d: table.row(d, p) for d in w}
    gam = sum(w[d] * rows[d].gammas for d in w)
    bet = sum(w[d] * rows[d].betas for d in w)
    return QaoaParams(gam, bet)


def skatan_predict(g: WeightedGraph, p: int, table: SkParamTable) -> QaoaParams:
    """SK schedule with gamma scaled by ``arctan(1/sqrt(<d> - 1))``."""
    _check_p(p)
    dm = mean_degree(g)
    if dm <= 1.0:
        raise ProblemError(f"mean degree {dm:.3g} must exceed 1")
    sk = table.row(p)
    return QaoaParams(sk.gammas * math.atan(1.0 / math.sqrt(dm - 1.0)), sk.betas)


def balanced_predict(g: WeightedGraph, p: int, tables: Tables, alpha: float = DEFAULT_ALPHA) -> QaoaParams:
    if not 0.0 <= alpha <= 1.0:
        raise ProblemError("alpha must lie in [0, 1]")
    a = skatan_predict(g, p, tables.sk)
    b = dweight_predict(g, p, tables.tree)
    return QaoaParams(alpha * a.gammas + (1 - alpha) * b.gammas, alpha * a.betas + (1 - alpha) * b.betas)


def rescale_for_weights(params: QaoaParams, g: WeightedGraph) -> QaoaParams:
    """Divide gamma by the root-mean-square edge weight."""
    if g.m == 0:
        raise ProblemError("graph has no edges")
    rms = math.sqrt(float(np.mean(np.square(g.weights))))
    if rms == 0.0:
        raise ProblemError("all edge weights are zero")
    return QaoaParams(params.gammas / rms, params.betas)


def mis_predict(g: WeightedGraph, p: int, table: MisFitTable) -> QaoaParams:
    _check_p(p)
    dm = mean_degree(g)
    gam = [table.gamma(j, p, dm) for j in range(1, p + 1)]
    d = int(math.floor(dm + 0.5))
    return QaoaParams(gam, table.beta(d, p))


METHODS = ("dweight", "skatan", "balanced", "mis")


def predict(g: WeightedGraph, p: int, method: str, tables: Tables | None = None, alpha: float = DEFAULT_ALPHA):
    """Prediction by name; Max-Cut methods include the weight rescaling."""
    tables = tables or load_tables()
    if method == "mis":
        return mis_predict(g, p, tables.mis)
    if method == "dweight":
        base = dweight_predict(g, p, tables.tree)
    elif method == "skatan":
        base = skatan_predict(g, p, tables.sk)
    elif method == "balanced":
        base = balanced_predict(g, p, tables, alpha)
    else:
        raise ProblemError(f"unknown prediction method {method!r}")
    return rescale_for_weights(base, g)


# ---------------------------------------------------------------------------
# table construction


def _joint_objective(diags):
    k = len(diags)

    def fun(v):
        par = QaoaParams.from_vector(v)
        tot, grad = 0.0, 0.0
        for d in diags:
            e, gr = em.energy_and_gradient(d, par)
            tot += e
            grad = grad + gr
        return tot / k, grad / k

    return fun


def optimize_schedule(diags, p_max: int, restarts: int = 0, seed=0, maxiter: int = 300) -> dict[int, tuple[QaoaParams, float]]:
    """Depth-by-depth optimization of the mean energy over ``diags``.

    Depth ``p`` starts from the depth ``p-1`` optimum stretched onto ``p``
    layers and from a linear ramp, plus ``restarts`` random points. Keeping
    to these smooth starts yields schedules that vary regularly with the
    instance, which is what the predictors interpolate.
    """
    rng = np.random.default_rng(seed)
    scale = float(np.mean([em.energy_scale(d) for d in diags]))
    fold = all(em.flip_symmetric(d) for d in diags)
    fun = _joint_objective(diags)
    out = {}
    prev = None
    for p in range(1, p_max + 1):
        ramp = em.linear_ramp(p)
        starts = [QaoaParams(ramp.gammas / scale, ramp.betas)]
        if prev is not None:
            starts.insert(0, em.interpolate_params(prev, p))
        starts = em.random_starts(starts, p, len(starts) + restarts, rng)
        res = em.local_minimize(fun, starts, maxiter, fold)
        out[p] = (res.params, res.energy)
        prev = res.params
    return out


def tree_proxy(d: int, seed: int = 0) -> WeightedGraph:
    """Finite stand-in for the infinite d-regular tree.

    A single edge for ``d=1``, a 16-cycle for ``d=2`` and otherwise the
    random d-regular graph with fewest short cycles among a few draws.
    """
    if d == 1:
        return WeightedGraph(2, [(0, 1, 1.0)])
    if d == 2:
        return WeightedGraph(16, [(i, (i + 1) % 16, 1.0) for i in range(16)])
    n = 16 if d <= 8 else 18
    best, best_key = None, None
    for s in range(8):
        g = generate_instances("random_regular", {"n": n, "d": d}, seed * 1000 + s)
        key = _short_cycle_counts(g)
        if best_key is None or key < best_key:
            best, best_key = g, key
    return best


def _short_cycle_counts(g: WeightedGraph) -> tuple[int, int]:
    """(triangles, 4-cycles) computed from adjacency powers."""
    A = g.adjacency(weighted=False)
    A2 = A @ A
    tri = int(round(np.trace(A2 @ A) / 6))
    deg = A.sum(axis=1)
    closed4 = np.trace(A2 @ A2) - 2 * (deg**2).sum() + deg.sum()
    return tri, int(round(closed4 / 8))


def build_tree_table(degrees=tuple(range(1, 11)), p_max: int = P_MAX, seed: int = 0, sk: SkParamTable | None = None, restarts: int = 0) -> TreeParamTable:
    """Optimize Max-Cut angles on degree-``d`` proxies for every (d, p).

    The large-degree row ``d=20`` is not emulable; when ``sk`` is given it is
    filled from the SK schedule with ``gamma`` scaled by ``arctan(1/sqrt(19))``.
    """
    rows, energies = {}, {}
    for d in degrees:
        g = tree_proxy(d, seed)
        sched = optimize_schedule([graph_diagonal(g, "maxcut")], p_max, restarts, seed + d)
        for p, (par, e) in sched.items():
            rows[(d, p)] = par
            energies[f"{d},{p}"] = e / max(g.m, 1)
    if sk is not None:
        f = math.atan(1.0 / math.sqrt(19.0))
        for p in range(1, p_max + 1):
            r = sk.row(p)
            rows[(20, p)] = QaoaParams(r.gammas * f, r.betas)
    meta = {
        "seed": seed,
        "proxy": "d=1 single edge; d=2 16-cycle; d>=3 random d-regular (n=16, n=18 for d>=9) with fewest short cycles; d=20 from the SK row",
        "energy_per_edge": energies,
    }
    return TreeParamTable(rows, meta)


def sk_instances(n: int = 14, count: int = 10, seed: int = 0) -> list[WeightedGraph]:
    return [generate_instances("sk", {"n": n}, seed + s) for s in range(count)]


def build_sk_table(n: int = 14, count: int = 10, p_max: int = P_MAX, seed: int = 0, restarts: int = 0) -> SkParamTable:
    """Angles minimizing the mean energy over ``count`` SK instances."""
    diags = [graph_diagonal(g, "maxcut") for g in sk_instances(n, count, seed)]
    sched = optimize_schedule(diags, p_max, restarts, seed)
    meta = {
        "seed": seed,
        "proxy": f"{count} SK instances, n={n}, couplings +-1/sqrt(n), mean energy optimized jointly",
        "mean_energy": {str(p): e for p, (_, e) in sched.items()},
    }
    return SkParamTable({p: par for p, (par, _) in sched.items()}, meta)


def mis_training_graphs(count: int = 105, n_range=(10, 20), p_range=(0.2, 0.7), seed: int = 0) -> list[WeightedGraph]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        pe = float(rng.uniform(*p_range))
        g = generate_instances("erdos_renyi", {"n": n, "p": pe}, int(rng.integers(2**31)))
        if g.m > 0:
            out.append(g)
    return out


def optimize_mis_angles(graphs, p_max: int = P_MAX, lam: float = 1.0, seed: int = 0, restarts: int = 0):
    """Per-graph optimized schedules: list of (mean degree, {p: params})."""
    out = []
    for i, g in enumerate(graphs):
        sched = optimize_schedule([graph_diagonal(g, "mis", lam=lam)], p_max, restarts, seed + i)
        out.append((mean_degree(g), {p: par for p, (par, _) in sched.items()}))
    return out


def fit_gamma_curve(dm, gam) -> tuple[tuple[float, float, float, float], float]:
    """Least-squares fit of ``gamma_fit_curve``; returns coefficients and RMS residual."""
    dm = np.asarray(dm, dtype=float)
    gam = np.asarray(gam, dtype=float)
    lo = [-10.0, -100.0, 1e-3, 0.0]
    hi = [10.0, 100.0, 10.0, 100.0]
    best = None
    for c3 in (0.5, 1.0, 2.0):
        for c4 in (0.0, 1.0, 5.0):
            x0 = [float(np.median(gam)), 1.0, c3, c4]
            try:
                with warnings.catch_warnings():
                    # the covariance is unused, an exact fit makes it singular
                    warnings.simplefilter("ignore", OptimizeWarning)
                    c, _ = curve_fit(gamma_fit_curve, dm, gam, p0=x0, bounds=(lo, hi), maxfev=20000)
            except (RuntimeError, ValueError):
                continue
            r = float(np.sqrt(np.mean((gamma_fit_curve(dm, *c) - gam) ** 2)))
            if best is None or r < best[1] - 1e-15:
                best = (tuple(float(v) for v in c), r)
    if best is None:
        raise RuntimeError("gamma curve fit failed")
    return best


def fit_mis_tables(samples, p_max: int = P_MAX, meta: dict | None = None) -> MisFitTable:
    """Fit the MIS tables from ``(mean degree, {p: params})`` samples.

    A failed (j, p) fit reuses the coefficients of the nearest fitted layer at
    the same depth. Degrees without training data take the betas of the
    nearest degree that has some.
    """
    coeffs, resid, betas = {}, {}, {}
    dm = np.array([s[0] for s in samples])
    for p in range(1, p_max + 1):
        for j in range(1, p + 1):
            gam = np.array([s[1][p].gammas[j - 1] for s in samples])
            try:
                coeffs[(j, p)], resid[f"{j},{p}"] = fit_gamma_curve(dm, gam)
            except RuntimeError:
                pass
        for j in range(1, p + 1):
            if (j, p) not in coeffs:
                near = min((k for k in range(1, p + 1) if (k, p) in coeffs), key=lambda k: abs(k - j), default=None)
                if near is None:
                    raise RuntimeError(f"no gamma fit succeeded at p={p}")
                coeffs[(j, p)] = coeffs[(near, p)]
                resid[f"{j},{p}"] = None
        rounded = np.clip(np.floor(dm + 0.5).astype(int), 1, MIS_DEGREE_CAP)
        have = {}
        for d in range(1, MIS_DEGREE_CAP + 1):
            sel = [s[1][p].betas for s, r in zip(samples, rounded) if r == d]
            if sel:
                have[d] = np.mean(sel, axis=0)
        if not have:
            raise RuntimeError("no training samples")
        for d in range(1, MIS_DEGREE_CAP + 1):
            near = min(have, key=lambda k: (abs(k - d), k))
            betas[(d, p)] = have[near]
    m = dict(meta or {})
    m["gamma_fit_rms"] = resid
    return MisFitTable(coeffs, betas, m)
