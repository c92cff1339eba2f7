"""Warm-startable 1-flip tabu search and a plain descent baseline.

All costs here are minimization energies (``QuboInstance.energy``). One
iteration is one accepted flip; the start string counts as iteration 0.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .emulator import SampleSet
from .problem import ProblemError, QuboInstance, as_bits, bitstring

HIT_TOL = 1e-9
_CHUNK = 256


@dataclass(frozen=True)
class HeuristicConfig:
    """Tabu search settings.

    ``tenure_min`` defaults to ``ceil(n/10)``; tenures are drawn uniformly
    from ``[tenure_min, tenure_min + tenure_span]``. ``stall_limit`` ends a
    restart after that many iterations without a new best. ``target`` ends
    a restart as soon as a cost at or below it is found.
    """

    max_iters: int = 500
    tenure_min: int | None = None
    tenure_span: int = 10
    stall_limit: int | None = None
    time_limit: float | None = None
    target: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ProblemError("max_iters must be >= 1")
        if self.tenure_min is not None and self.tenure_min < 1:
            raise ProblemError("tenure must be >= 1")
        if self.tenure_span < 0:
            raise ProblemError("tenure span must be >= 0")


@dataclass
class RestartRecord:
    restart: int
    start_hash: str
    start_cost: float
    best_cost: float
    best_iter: int
    hit_iter: int  # -1 when the target was never reached
    iters: int
    time_s: float
    hit_time: float = -1.0
    improvements: list[tuple[int, float, float]] = field(default_factory=list)
    best: str = ""


@dataclass
class RunTrace:
    records: list[RestartRecord]
    optimum: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def restarts(self) -> int:
        return len(self.records)

    def hit_iters(self) -> np.ndarray:
        """First iteration at which each restart reached the optimum (inf if never)."""
        return np.array([r.hit_iter if r.hit_iter >= 0 else np.inf for r in self.records], dtype=float)

    def hit_times(self) -> np.ndarray:
        return np.array([r.hit_time if r.hit_time >= 0 else np.inf for r in self.records], dtype=float)

    def best_cost(self) -> float:
        return min(r.best_cost for r in self.records)

    def best_so_far(self, T: int) -> np.ndarray:
        """``(restarts, T + 1)`` best cost after 0..T iterations."""
        out = np.empty((len(self.records), T + 1))
        for k, r in enumerate(self.records):
            row = np.full(T + 1, r.start_cost)
            for it, c, _ in r.improvements:
                if it <= T:
                    row[it:] = np.minimum(row[it:], c)
            out[k] = row
        return out

    def to_dict(self, times: bool = True) -> dict:
        recs = []
        for r in self.records:
            d = asdict(r)
            d["improvements"] = [list(x) for x in r.improvements]
            if not times:
                d.pop("time_s")
                d.pop("hit_time")
                d["improvements"] = [[i, c] for i, c, _ in r.improvements]
            recs.append(d)
        return {"optimum": self.optimum, "meta": self.meta, "records": recs}

    def dumps_json(self, times: bool = True) -> str:
        return json.dumps(self.to_dict(times), indent=1) + "\n"

    def dumps_csv(self) -> str:
        """One row per best-so-far improvement: ``restart,iter,best_cost,time_s``."""
        buf = io.StringIO()
        buf.write("restart,iter,best_cost,time_s\n")
        for r in self.records:
            for it, c, t in r.improvements:
                buf.write(f"{r.restart},{it},{c!r},{t:.6f}\n")
        return buf.getvalue()


def _hash(x: np.ndarray) -> str:
    return hashlib.sha1(bitstring(x).encode()).hexdigest()[:12]


class WarmStartPool:
    """Ordered start strings with a draw policy.

    ``cycle`` hands out the strings in order and wraps around; ``sample``
    draws with replacement. A pool without strings and with ``source`` set
    to ``random`` produces fresh uniform strings on each draw.
    """

    def __init__(self, n: int, strings: np.ndarray | None = None, policy: str = "cycle", source: str = "random"):
        if policy not in ("cycle", "sample"):
            raise ProblemError(f"unknown draw policy {policy!r}")
        self.n = n
        self.policy = policy
        self.source = source
        if strings is not None:
            strings = np.asarray(strings, dtype=np.int8).reshape(-1, n)
            if strings.shape[0] == 0:
                raise ProblemError("empty warm-start pool")
        elif source != "random":
            raise ProblemError("empty warm-start pool")
        self.strings = strings

    def __len__(self) -> int:
        return 0 if self.strings is None else self.strings.shape[0]

    @classmethod
    def random(cls, n: int) -> "WarmStartPool":
        return cls(n, None, source="random")

    @classmethod
    def from_samples(cls, s: SampleSet, seed=None, source: str = "qaoa", policy: str = "cycle") -> "WarmStartPool":
        """One entry per shot, shuffled once with ``seed`` so cycling is unbiased."""
        bits, counts = s.to_arrays()
        if counts.sum() == 0:
            raise ProblemError("empty warm-start pool")
        rows = np.repeat(bits, counts, axis=0)
        rows = rows[np.random.default_rng(seed).permutation(rows.shape[0])]
        return cls(s.n, rows, policy, source)

    @classmethod
    def from_strings(cls, strings, source: str = "file", policy: str = "cycle") -> "WarmStartPool":
        rows = [as_bits(x) for x in strings]
        if not rows:
            raise ProblemError("empty warm-start pool")
        return cls(len(rows[0]), np.array(rows), policy, source)

    def draw(self, k: int, rng: np.random.Generator) -> np.ndarray:
        if self.strings is None:
            return rng.integers(0, 2, size=self.n, dtype=np.int8)
        if self.policy == "cycle":
            return self.strings[k % len(self)].copy()
        return self.strings[rng.integers(len(self))].copy()


# ---------------------------------------------------------------------------
# tabu search


class _Tabu:
    """Resumable single tabu run over a minimization QUBO."""

    def __init__(self, Q: np.ndarray, c: np.ndarray, start: np.ndarray, cfg: HeuristicConfig, rng: np.random.Generator):
        n = c.size
        self.Q, self.c = Q, c
        self.x = np.ascontiguousarray(start, dtype=np.int64)
        self.grad = c + 2.0 * Q @ self.x
        cost = float(self.x @ Q @ self.x + c @ self.x)
        tmin = cfg.tenure_min if cfg.tenure_min is not None else max(1, math.ceil(n / 10))
        self.tenures = rng.integers(tmin, tmin + cfg.tenure_span + 1, size=4096).astype(np.int64)
        self.order = rng.permutation(n).astype(np.int64)
        self.tabu_until = np.zeros(n, dtype=np.int64)
        target = cfg.target if cfg.target is not None else -np.inf
        self.target = target
        hit = 0.0 if cost <= target + HIT_TOL else -1.0
        self.state = np.array([0.0, cost, cost, 0.0, hit, 0.0])
        self.hist_it = np.zeros(cfg.max_iters + 1, dtype=np.int64)
        self.hist_cost = np.zeros(cfg.max_iters + 1)
        self.best_x = self.x.copy()
        self.start_cost = cost
        self.times: list[tuple[int, float]] = []

    @property
    def t(self) -> int:
        return int(self.state[0])

    @property
    def done_target(self) -> bool:
        return self.state[4] >= 0

    def advance(self, t_end: int) -> None:
        nh0 = int(self.state[5])
        _kernels.tabu_run(
            self.Q, self.c, self.x, self.grad, self.state, self.tabu_until, self.order,
            self.tenures, t_end, self.target, self.hist_it, self.hist_cost, self.best_x,
        )
        return int(self.state[5]) - nh0


def _minimization(q: QuboInstance) -> tuple[np.ndarray, np.ndarray]:
    Q, c = q.minimization_form()
    return np.ascontiguousarray(Q, dtype=float), np.ascontiguousarray(c, dtype=float)


def _record(k: int, run: _Tabu, start: np.ndarray, elapsed: float, times: list[float] | None = None) -> RestartRecord:
    nh = int(run.state[5])
    ts = times if times is not None else [elapsed] * nh
    imps = [(0, run.start_cost, 0.0)] + [(int(run.hist_it[i]), float(run.hist_cost[i]), float(ts[i])) for i in range(nh)]
    hit = int(run.state[4])
    hit_time = -1.0
    if hit == 0:
        hit_time = 0.0
    elif hit > 0:
        hit_time = next(t for i, c, t in imps if i == hit)
    return RestartRecord(
        restart=k,
        start_hash=_hash(start),
        start_cost=run.start_cost,
        best_cost=float(run.state[2]),
        best_iter=int(run.state[3]),
        hit_iter=hit,
        iters=run.t,
        time_s=elapsed,
        hit_time=hit_time,
        improvements=imps,
        best=bitstring(run.best_x),
    )


def tabu_search(q: QuboInstance, start, cfg: HeuristicConfig = HeuristicConfig(), rng=None):
    """One tabu run from ``start``; returns ``(best_x, best_cost, record)``.

    Each iteration flips the non-tabu variable with the most negative cost
    change (aspiration admits a tabu flip that beats the best cost; if every
    move is tabu the best overall is taken). Ties go to the earliest variable
    in a per-run random order. A flipped variable stays tabu for a tenure
    drawn afresh for every flip.
    """
    x0 = as_bits(start) if isinstance(start, str) else np.asarray(start, dtype=np.int8)
    if x0.size != q.n:
        raise ProblemError(f"start has {x0.size} bits, instance has {q.n}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(cfg.seed if rng is None else rng)
    Q, c = _minimization(q)
    t0 = time.perf_counter()
    run = _Tabu(Q, c, x0, cfg, rng)
    _run_until(run, cfg, t0)
    rec = _record(0, run, x0, time.perf_counter() - t0, run_times(run, t0))
    return run.best_x.astype(np.int8), rec.best_cost, rec


def run_times(run: _Tabu, t0: float) -> list[float]:
    """Seconds since ``t0`` of each recorded improvement, at chunk resolution."""
    out: list[float] = []
    for n_hist, t in run.times:
        out += [t - t0] * (n_hist - len(out))
    return out


def _run_until(run: _Tabu, cfg: HeuristicConfig, t0: float, deadline: float | None = None) -> None:
    """Advance ``run`` to ``max_iters`` or the target, honouring the time and stall limits."""
    chunked = deadline is not None or cfg.time_limit is not None or cfg.stall_limit is not None
    if cfg.time_limit is not None:
        dl = t0 + cfg.time_limit
        deadline = dl if deadline is None else min(deadline, dl)
    if not chunked:
        run.advance(cfg.max_iters)
        run.times.append((int(run.state[5]), time.perf_counter()))
        return
    while run.t < cfg.max_iters and not run.done_target:
        run.advance(min(cfg.max_iters, run.t + _CHUNK))
        now = time.perf_counter()
        run.times.append((int(run.state[5]), now))
        if deadline is not None and now >= deadline:
            break
        if cfg.stall_limit is not None and run.t - int(run.state[3]) >= cfg.stall_limit:
            break


def multistart(q: QuboInstance, pool: WarmStartPool, restarts: int, cfg: HeuristicConfig = HeuristicConfig()) -> RunTrace:
    """``restarts`` independent tabu runs, restart ``k`` seeded by draw ``k``.

    Every restart has its own generator spawned from ``cfg.seed``, so the
    trace does not depend on execution order.
    """
    if restarts < 1:
        raise ProblemError("restarts must be >= 1")
    if pool.n != q.n:
        raise ProblemError("pool width differs from the instance size")
    Q, c = _minimization(q)
    seqs = np.random.SeedSequence(cfg.seed).spawn(restarts)
    recs = []
    for k in range(restarts):
        rng = np.random.default_rng(seqs[k])
        x0 = pool.draw(k, rng)
        t0 = time.perf_counter()
        run = _Tabu(Q, c, x0, cfg, rng)
        _run_until(run, cfg, t0)
        recs.append(_record(k, run, x0, time.perf_counter() - t0, run_times(run, t0)))
    return RunTrace(recs, cfg.target, {"pool": pool.source, "restarts": restarts, "max_iters": cfg.max_iters})


def timed_multistart(q: QuboInstance, pool: WarmStartPool, time_limit: float = 0.1, cfg: HeuristicConfig = HeuristicConfig(), run_index: int = 0) -> RestartRecord:
    """Restart tabu from successive pool draws until ``time_limit`` seconds pass.

    The clock starts after the pool exists. The returned record summarizes the
    whole timed run: ``improvements`` holds global best-so-far updates as
    (cumulative iteration, cost, seconds) and ``hit_time`` the first time the
    target was reached.
    """
    if time_limit <= 0:
        raise ProblemError("time limit must be positive")
    Q, c = _minimization(q)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, run_index]))
    t0 = time.perf_counter()
    deadline = t0 + time_limit
    best, best_x, start_cost = np.inf, None, None
    imps: list[tuple[int, float, float]] = []
    total_it = 0
    hit_iter, hit_time = -1, -1.0
    k = 0
    first = None
    while True:
        x0 = pool.draw(k, rng)
        if first is None:
            first = x0.copy()
        run = _Tabu(Q, c, x0, cfg, rng)
        if start_cost is None:
            start_cost = run.start_cost
        if run.start_cost < best - HIT_TOL:
            best, best_x = run.start_cost, x0.copy()
            imps.append((total_it, best, time.perf_counter() - t0))
        if run.done_target and hit_iter < 0:
            hit_iter, hit_time = total_it, time.perf_counter() - t0
        while run.t < cfg.max_iters and not run.done_target:
            nh0 = int(run.state[5])
            run.advance(min(cfg.max_iters, run.t + _CHUNK))
            now = time.perf_counter() - t0
            for i in range(nh0, int(run.state[5])):
                if run.hist_cost[i] < best - HIT_TOL:
                    best = float(run.hist_cost[i])
                    imps.append((total_it + int(run.hist_it[i]), best, now))
            if run.done_target and hit_iter < 0:
                hit_iter, hit_time = total_it + int(run.state[4]), now
            if now >= time_limit:
                break
        if run.state[2] <= best + HIT_TOL:
            best_x = run.best_x.copy()
        total_it += run.t
        k += 1
        if hit_iter >= 0 and cfg.target is not None:
            break
        if time.perf_counter() >= deadline:
            break
    return RestartRecord(
        restart=run_index,
        start_hash=_hash(first),
        start_cost=float(start_cost),
        best_cost=float(best),
        best_iter=imps[-1][0] if imps else 0,
        hit_iter=hit_iter,
        iters=total_it,
        time_s=time.perf_counter() - t0,
        hit_time=hit_time,
        improvements=imps,
        best=bitstring(best_x) if best_x is not None else "",
    )


def repeated_timed_runs(q: QuboInstance, pool: WarmStartPool, runs: int, time_limit: float = 0.1, cfg: HeuristicConfig = HeuristicConfig()) -> RunTrace:
    """Independent timed runs; one record per run, for time-based runtime estimates."""
    recs = [timed_multistart(q, pool, time_limit, cfg, k) for k in range(runs)]
    return RunTrace(recs, cfg.target, {"pool": pool.source, "runs": runs, "time_limit": time_limit})


def local_search_baseline(q: QuboInstance, start, cfg: HeuristicConfig = HeuristicConfig()):
    """Best-improvement 1-flip descent to a local minimum."""
    x0 = as_bits(start) if isinstance(start, str) else np.asarray(start, dtype=np.int8)
    if x0.size != q.n:
        raise ProblemError(f"start has {x0.size} bits, instance has {q.n}")
    Q, c = _minimization(q)
    x = x0.astype(np.int64)
    grad = c + 2.0 * Q @ x
    c0 = float(x @ Q @ x + c @ x)
    t0 = time.perf_counter()
    flips = _kernels.local_descent(Q, c, x, grad)
    cost = float(x @ Q @ x + c @ x)
    imps = [(0, c0, 0.0)] + ([(int(flips), cost, time.perf_counter() - t0)] if cost < c0 else [])
    hit = -1
    if cfg.target is not None:
        hit = 0 if c0 <= cfg.target + HIT_TOL else (int(flips) if cost <= cfg.target + HIT_TOL else -1)
    rec = RestartRecord(0, _hash(x0), c0, cost, int(flips), hit, int(flips), time.perf_counter() - t0, improvements=imps, best=bitstring(x))
    return x.astype(np.int8), cost, rec
