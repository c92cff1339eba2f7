"""Runtime-to-optimum statistics and cold-versus-warm experiments.

``F(T)`` is the fraction of restarts that reached the optimum within ``T``
iterations, ``C(T) = T / F(T)`` the expected iterations when restarting
every ``T`` iterations, ``R_min`` its minimum and ``Q = R_min(cold) /
R_min(warm)`` the speedup from warm starts.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import emulator as em
from . import filters as flt
from . import params as prm
from .heuristics import HIT_TOL, HeuristicConfig, RunTrace, WarmStartPool, multistart
from .instances import generate_instances
from .io import atomic_write, read_graph
from .problem import ProblemError, QuboInstance, brute_force_spectrum, to_qubo

log = logging.getLogger(__name__)


@dataclass
class FoptCurve:
    """``F[k]`` is the hit fraction within ``T = k + 1`` iterations."""

    F: np.ndarray

    @property
    def T(self) -> np.ndarray:
        return np.arange(1, self.F.size + 1)


def hit_iterations(trace: RunTrace, optimum: float, tol: float = HIT_TOL) -> np.ndarray:
    """First iteration each restart's best cost reached ``optimum`` (inf if never)."""
    out = np.full(len(trace.records), np.inf)
    for k, r in enumerate(trace.records):
        for it, c, _ in r.improvements:
            if c <= optimum + tol:
                out[k] = it
                break
    return out


def fopt_curve(trace: RunTrace, optimum: float | None = None, t_total: int | None = None) -> FoptCurve:
    optimum = trace.optimum if optimum is None else optimum
    if optimum is None:
        raise ProblemError("F_opt needs a known optimum")
    hits = hit_iterations(trace, optimum)
    if t_total is None:
        t_total = int(trace.meta.get("max_iters", max((r.iters for r in trace.records), default=1)))
    t_total = max(int(t_total), 1)
    return FoptCurve(fopt_from_hits(hits, t_total))


def fopt_from_hits(hits: np.ndarray, t_total: int) -> np.ndarray:
    hits = np.asarray(hits, dtype=float)
    if hits.size == 0:
        return np.zeros(t_total)
    finite = np.sort(hits[np.isfinite(hits)])
    T = np.arange(1, t_total + 1)
    return np.searchsorted(finite, T, side="right") / hits.size


def expected_runtime(curve: FoptCurve) -> tuple[float, int | None]:
    """``(R_min, T*)``; ``(inf, None)`` when no restart ever hits."""
    F = curve.F
    ok = F > 0
    if not ok.any():
        return math.inf, None
    T = curve.T
    C = np.full(F.size, np.inf)
    C[ok] = T[ok] / F[ok]
    k = int(np.argmin(C))  # first minimum = smallest T on ties
    return float(C[k]), int(T[k])


@dataclass
class QFactorReport:
    instance: str
    p: int | None
    filter: str
    Q: float | None
    rmin_cold: float
    rmin_warm: float
    tstar_cold: int | None
    tstar_warm: int | None
    restarts_cold: int
    restarts_warm: int
    pool: str = ""

    def row(self) -> list:
        return [self.instance, self.p, self.filter, _fmt(self.Q), _fmt(self.rmin_cold), _fmt(self.rmin_warm), _fmt(self.tstar_cold), _fmt(self.tstar_warm)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(round(v, 10))
    return str(v)


def q_from_curves(cold: FoptCurve, warm: FoptCurve) -> tuple[float | None, tuple, tuple]:
    rc = expected_runtime(cold)
    rw = expected_runtime(warm)
    if math.isinf(rc[0]) or math.isinf(rw[0]):
        return None, rc, rw
    return rc[0] / rw[0], rc, rw


def q_factor(cold: RunTrace, warm: RunTrace, optimum: float, t_total: int | None = None, instance: str = "", p=None, filter_name: str = "none") -> QFactorReport:
    fc = fopt_curve(cold, optimum, t_total)
    fw = fopt_curve(warm, optimum, t_total)
    Q, rc, rw = q_from_curves(fc, fw)
    return QFactorReport(instance, p, filter_name, Q, rc[0], rw[0], rc[1], rw[1], cold.restarts, warm.restarts, str(warm.meta.get("pool", "")))


def bootstrap_q(cold: RunTrace, warm: RunTrace, optimum: float, t_total: int, draws: int = 1000, seed=0) -> np.ndarray:
    """Q recomputed on restart-resampled traces (undefined draws dropped)."""
    rng = np.random.default_rng(seed)
    hc, hw = hit_iterations(cold, optimum), hit_iterations(warm, optimum)
    out = []
    for _ in range(draws):
        a = FoptCurve(fopt_from_hits(hc[rng.integers(hc.size, size=hc.size)], t_total))
        b = FoptCurve(fopt_from_hits(hw[rng.integers(hw.size, size=hw.size)], t_total))
        Q, _, _ = q_from_curves(a, b)
        if Q is not None:
            out.append(Q)
    return np.array(out)


def time_expected_runtime(trace: RunTrace, optimum: float | None = None) -> tuple[float, float | None]:
    """``(R_min seconds, t*)`` from the first time each run reached the optimum.

    ``C(t) = t / F(t)`` is evaluated at the observed positive hit times.
    """
    if optimum is None:
        times = trace.hit_times()
    else:
        times = np.full(len(trace.records), np.inf)
        for k, r in enumerate(trace.records):
            for _, c, t in r.improvements:
                if c <= optimum + HIT_TOL:
                    times[k] = t
                    break
    finite = np.sort(times[np.isfinite(times)])
    if finite.size == 0:
        return math.inf, None
    grid = np.unique(finite[finite > 0])
    if grid.size == 0:
        return 0.0, 0.0
    F = np.searchsorted(finite, grid, side="right") / times.size
    C = grid / F
    k = int(np.argmin(C))
    return float(C[k]), float(grid[k])


def approximation_ratio_curve(trace: RunTrace, q: QuboInstance, optimum: float | None = None, t_total: int | None = None) -> np.ndarray:
    """Median best-so-far objective over restarts divided by the optimum, for T = 0..T_total.

    The objective is the maximization framing ``-energy``; ``optimum`` is the
    optimal energy, whose objective must be positive.
    """
    optimum = trace.optimum if optimum is None else optimum
    if optimum is None:
        raise ProblemError("approximation ratio needs the optimum")
    best_obj = -optimum
    if best_obj <= 0:
        raise ProblemError("approximation ratio needs a positive optimal objective; shift the objective first")
    if t_total is None:
        t_total = int(trace.meta.get("max_iters", 1))
    bsf = trace.best_so_far(t_total)
    return np.median(-bsf, axis=0) / best_obj


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentSpec:
    """End-to-end cold-versus-warm experiment.

    ``instances`` entries are ``{"kind", "params", "seed"[, "id"]}`` for
    generated graphs or ``{"file"[, "id"]}``. ``filters`` lists filter chains
    such as ``"none"`` or ``"energy"`` or ``"readout+hamming"``. ``method`` is
    a prediction method name or ``"optimize"``. ``pool`` ``"uniform"``
    replaces the emulated samples by uniform random strings.
    """

    instances: list[dict]
    p: list[int]
    problem: str = "maxcut"
    shots: int = 1000
    method: str = "balanced"
    filters: list[str] = field(default_factory=lambda: ["none"])
    restarts: int = 1000
    heuristic: dict = field(default_factory=dict)
    seed: int = 0
    repeats: int = 1
    penalty: float = 1.0
    readout_noise: list[float] | None = None
    pool: str = "qaoa"
    filter_config: dict = field(default_factory=dict)
    write_curves: bool = True
    jobs: int | None = None
    id: str = "experiment"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ProblemError(f"unknown spec fields: {sorted(extra)}")
        spec = cls(**doc)
        spec.validate()
        return spec

    @classmethod
    def read(cls, path) -> "ExperimentSpec":
        path = Path(path)
        if not path.exists():
            raise ProblemError(f"spec file {path} not found")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ProblemError(f"spec file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def validate(self) -> None:
        if not self.instances:
            raise ProblemError("spec lists no instances")
        if not self.p or min(self.p) < 1:
            raise ProblemError("p values must be >= 1")
        if self.shots < 1 or self.restarts < 1 or self.repeats < 1:
            raise ProblemError("shots, restarts and repeats must be >= 1")
        if self.pool not in ("qaoa", "uniform"):
            raise ProblemError(f"unknown pool {self.pool!r}")
        for chain in self.filters:
            for k in chain.split("+"):
                if k not in flt.KINDS + ("none",):
                    raise ProblemError(f"unknown filter {k!r}")
        for inst in self.instances:
            if "file" in inst:
                if not Path(inst["file"]).exists():
                    raise ProblemError(f"instance file {inst['file']} not found")
            elif "kind" not in inst:
                raise ProblemError("instance entries need 'kind' or 'file'")


def _instance_id(inst: dict, k: int) -> str:
    if "id" in inst:
        return str(inst["id"])
    if "file" in inst:
        return Path(inst["file"]).stem
    parts = [inst["kind"]] + [f"{a}{b}" for a, b in sorted(inst.get("params", {}).items()) if a != "weights"]
    return "_".join(parts) + f"_s{inst.get('seed', 0)}"


def _load_instance(inst: dict):
    if "file" in inst:
        return read_graph(inst["file"])
    return generate_instances(inst["kind"], inst.get("params", {}), int(inst.get("seed", 0)))


def _seed(*key) -> int:
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1)[0])


def _angles(spec: ExperimentSpec, g, diag, p: int, tables, seed: int) -> em.QaoaParams:
    if spec.method == "optimize":
        return em.optimize_params(diag, p, seed=seed)[0]
    return prm.predict(g, p, spec.method, tables)


def _run_instance(args) -> dict:
    spec, k = args
    inst = spec.instances[k]
    base_id = _instance_id(inst, k)
    g = _load_instance(inst)
    q = to_qubo(g, spec.problem, spec.penalty)
    diag = brute_force_spectrum(q)
    opt = diag.lambda_min
    tables = prm.load_tables() if spec.method != "optimize" else None
    cfg_kw = dict(spec.heuristic)
    t_total = int(cfg_kw.get("max_iters", 500))
    fcfg = flt.FilterConfig(**spec.filter_config)
    rows, curves, errors = [], {}, []
    for r in range(spec.repeats):
        iid = base_id if spec.repeats == 1 else f"{base_id}#r{r}"
        cold_cfg = HeuristicConfig(**{**cfg_kw, "target": opt, "seed": _seed(spec.seed, k, r, 0)})
        cold = multistart(q, WarmStartPool.random(q.n), spec.restarts, cold_cfg)
        f_cold = fopt_curve(cold, opt, t_total)
        ar_cold = approximation_ratio_curve(cold, q, opt, t_total) if -opt > 0 else None
        for p in spec.p:
            try:
                if spec.pool == "uniform":
                    rng = np.random.default_rng(_seed(spec.seed, k, r, p, 1))
                    idx = rng.integers(0, 1 << q.n, size=spec.shots)
                    samples = em.SampleSet.from_indices(q.n, idx)
                else:
                    par = _angles(spec, g, diag, p, tables, _seed(spec.seed, k, r, p, 2))
                    samples = em.sample(em.qaoa_state(diag, par), spec.shots, _seed(spec.seed, k, r, p, 1))
                if spec.readout_noise is not None:
                    samples = em.inject_readout_noise(samples, spec.readout_noise, _seed(spec.seed, k, r, p, 3))
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                errors.append({"instance": iid, "p": p, "stage": "sample", "error": str(exc)})
                continue
            for fi, chain in enumerate(spec.filters):
                try:
                    s = samples
                    for kind in chain.split("+"):
                        model = flt.ReadoutModel.uniform(q.n, *spec.readout_noise) if kind == "readout" else None
                        s = flt.apply_filter(kind, s, q, fcfg, model)
                    pool = WarmStartPool.from_samples(s, _seed(spec.seed, k, r, p, fi, 4), source=spec.pool)
                    warm_cfg = HeuristicConfig(**{**cfg_kw, "target": opt, "seed": _seed(spec.seed, k, r, p, fi, 5)})
                    warm = multistart(q, pool, spec.restarts, warm_cfg)
                    f_warm = fopt_curve(warm, opt, t_total)
                    Q, rc, rw = q_from_curves(f_cold, f_warm)
                    rep = QFactorReport(iid, p, chain, Q, rc[0], rw[0], rc[1], rw[1], spec.restarts, spec.restarts, spec.pool)
                    rows.append(rep)
                    if spec.write_curves:
                        cell = f"{iid}_p{p}_{chain}".replace("#", "-").replace("+", "-")
                        ar_warm = approximation_ratio_curve(warm, q, opt, t_total) if ar_cold is not None else None
                        curves[cell] = (f_cold.F, f_warm.F, ar_cold, ar_warm)
                except Exception as exc:  # noqa: BLE001
                    errors.append({"instance": iid, "p": p, "filter": chain, "stage": "solve", "error": str(exc)})
    return {"rows": rows, "curves": curves, "errors": errors, "base": base_id}


QFACTOR_HEADER = ["instance", "p", "filter", "Q", "Rmin_cold", "Rmin_warm", "Tstar_cold", "Tstar_warm"]


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class ExperimentResult:
    reports: list[QFactorReport]
    errors: list[dict]
    files: list[Path]

    def median_q(self) -> dict[tuple[str, int, str], float]:
        """Median Q per (instance, p, filter) over repeats; undefined Q counted as 0."""
        groups: dict = {}
        for r in self.reports:
            key = (r.instance.split("#")[0], r.p, r.filter)
            groups.setdefault(key, []).append(r.Q if r.Q is not None else 0.0)
        return {k: float(np.median(v)) for k, v in groups.items()}


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int | None = None) -> ExperimentResult:
    """Run every (instance, repeat, p, filter) cell and write the report files.

    Writes ``qfactor.csv``, ``qfactor_summary.csv`` (median, min and max Q
    over repeats), ``fopt_<cell>.csv`` and ``ar_<cell>.csv`` into ``out_dir``
    and any per-cell failures to ``errors.json``. Wall-clock times are not
    written, so reruns with the same seeds give identical files.
    """
    spec.validate()
    jobs = jobs or spec.jobs or 1
    work = [(spec, k) for k in range(len(spec.instances))]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_run_instance, work))
    else:
        parts = [_run_instance(w) for w in work]
    reports = [r for part in parts for r in part["rows"]]
    errors = [e for part in parts for e in part["errors"]]
    files: list[Path] = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files.append(_write(out / "qfactor.csv", _csv(QFACTOR_HEADER, [r.row() for r in reports])))
        files.append(_write(out / "qfactor_summary.csv", _summary_csv(reports)))
        for part in parts:
            for cell, (fc, fw, ac, aw) in part["curves"].items():
                T = np.arange(1, fc.size + 1)
                files.append(_write(out / f"fopt_{cell}.csv", _csv(["T", "F_cold", "F_warm"], [[int(t), repr(float(a)), repr(float(b))] for t, a, b in zip(T, fc, fw)])))
                if ac is not None:
                    files.append(_write(out / f"ar_{cell}.csv", _csv(["T", "AR_cold", "AR_warm"], [[t, repr(float(a)), repr(float(b))] for t, a, b in zip(range(ac.size), ac, aw)])))
        if errors:
            files.append(_write(out / "errors.json", json.dumps(errors, indent=1) + "\n"))
        elif (out / "errors.json").exists():
            os.unlink(out / "errors.json")
    return ExperimentResult(reports, errors, files)


def _write(path: Path, text: str) -> Path:
    atomic_write(path, text)
    return path


def _summary_csv(reports: list[QFactorReport]) -> str:
    groups: dict = {}
    for r in reports:
        groups.setdefault((r.instance.split("#")[0], r.p, r.filter), []).append(r.Q)
    rows = []
    for (inst, p, f), qs in groups.items():
        vals = np.array([q if q is not None else 0.0 for q in qs])
        rows.append([inst, p, f, len(vals), _fmt(float(np.median(vals))), _fmt(float(vals.min())), _fmt(float(vals.max()))])
    return _csv(["instance", "p", "filter", "repeats", "Q_median", "Q_min", "Q_max"], rows)


def report_json(reports: list[QFactorReport]) -> str:
    return json.dumps([asdict(r) for r in reports], indent=1) + "\n"
