"""Post-processing of measured samples before they seed a classical solver.

Energy, frequency and Hamming filters select a sub-multiset of the shots.
Readout correction undoes independent per-qubit bit flips by applying the
inverse calibration matrix on a neighbourhood of the observed support and
projecting the result back onto the probability simplex.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .emulator import SampleSet
from .problem import ProblemError, QuboInstance, as_bits


@dataclass(frozen=True)
class ReadoutModel:
    """Per-qubit flip rates: ``p = P(read 1 | 0)`` and ``q = P(read 0 | 1)``."""

    p: np.ndarray
    q: np.ndarray

    def __init__(self, p, q):
        p = np.atleast_1d(np.array(p, dtype=float))
        q = np.atleast_1d(np.array(q, dtype=float))
        if p.shape != q.shape:
            raise ProblemError("p and q need one entry per qubit")
        if (p < 0).any() or (q < 0).any() or (p >= 1).any() or (q >= 1).any():
            raise ProblemError("flip rates must lie in [0, 1)")
        if (p + q >= 1).any():
            raise ProblemError("calibration matrix is singular (p + q >= 1)")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.p.size

    @classmethod
    def uniform(cls, n: int, p: float, q: float) -> "ReadoutModel":
        return cls(np.full(n, p), np.full(n, q))

    def matrix(self, j: int) -> np.ndarray:
        """Column-stochastic ``Lambda_j``: column = prepared bit, row = read bit."""
        p, q = self.p[j], self.q[j]
        return np.array([[1 - p, q], [p, 1 - q]])

    def inverse(self, j: int) -> np.ndarray:
        p, q = self.p[j], self.q[j]
        return np.array([[1 - q, -q], [-p, 1 - p]]) / (1 - p - q)

    def dumps(self) -> str:
        return json.dumps({"qubits": [{"p": float(a), "q": float(b)} for a, b in zip(self.p, self.q)]}, indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ReadoutModel":
        doc = json.loads(text)
        return cls([e["p"] for e in doc["qubits"]], [e["q"] for e in doc["qubits"]])


@dataclass(frozen=True)
class FilterConfig:
    energy_keep: float = 0.10
    frequency_threshold: float = 0.0005
    hamming_seed: float = 0.01
    hamming_expand: float = 0.09
    readout_radius: int = 2

    def __post_init__(self):
        for name in ("energy_keep", "frequency_threshold", "hamming_seed", "hamming_expand"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ProblemError(f"{name} must lie in (0, 1]")
        if self.hamming_seed + self.hamming_expand > 1.0:
            raise ProblemError("hamming seed and expansion fractions exceed 1")
        if self.readout_radius < 0:
            raise ProblemError("readout radius must be >= 0")

    @classmethod
    def read(cls, path) -> "FilterConfig":
        return cls(**json.loads(Path(path).read_text()))

    def dumps(self) -> str:
        return json.dumps(asdict(self), indent=1) + "\n"


# ---------------------------------------------------------------------------
# readout correction


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = 1}``."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def round_counts(probs: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder rounding of ``probs * total`` to integers summing to ``total``."""
    raw = probs * total
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        order = np.lexsort((np.arange(raw.size), -(raw - base)))
        base[order[:short]] += 1
    return base


def readout_correct(s: SampleSet, model: ReadoutModel, radius: int = 2) -> SampleSet:
    """Invert independent readout flips on the support grown by ``radius`` flips.

    The tensor-product inverse is applied term by term: a string ``s`` sends
    weight to every ``t`` within ``radius`` bit flips, scaled by the product
    of the per-qubit inverse entries. The quasi-distribution is projected onto
    the simplex and rounded back to the original shot count.
    """
    if model.n != s.n:
        raise ProblemError(f"readout model has {model.n} qubits, samples have {s.n}")
    if s.shots == 0:
        return SampleSet(s.n, {})
    n = s.n
    inv = np.stack([model.inverse(j) for j in range(n)])  # (n, read_t, observed_s)
    bits, counts = s.to_arrays()
    y = counts / counts.sum()
    acc: dict[int, float] = {}
    pw = 1 << np.arange(n)
    flips = [c for r in range(radius + 1) for c in itertools.combinations(range(n), r)]
    for b, w in zip(bits, y):
        b = b.astype(np.int64)
        stay = inv[np.arange(n), b, b]
        move = inv[np.arange(n), 1 - b, b]
        base = w * float(np.prod(stay))
        idx0 = int((b * pw).sum())
        for F in flips:
            if F:
                f = np.array(F)
                coef = base * float(np.prod(move[f] / stay[f]))
                idx = idx0 ^ int(pw[f].sum())
            else:
                coef, idx = base, idx0
            acc[idx] = acc.get(idx, 0.0) + coef
    keys = np.array(sorted(acc), dtype=np.int64)
    x = project_simplex(np.array([acc[k] for k in keys]))
    cnt = round_counts(x, s.shots)
    keep = cnt > 0
    return SampleSet.from_indices(n, np.repeat(keys[keep], cnt[keep]))


def tv_distance(a: dict, b: dict) -> float:
    """Total variation distance between two probability dicts."""
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# sample filters


def _energies(s: SampleSet, q: QuboInstance) -> dict[str, float]:
    if q.n != s.n:
        raise ProblemError(f"instance has {q.n} variables, samples have {s.n}")
    return {k: float(q.energy(as_bits(k))) for k in s.counts}


def _take(ranked: list[str], counts: dict[str, int], k: int) -> dict[str, int]:
    """First ``k`` occurrences when each string repeats ``counts`` times."""
    out = {}
    for key in ranked:
        if k <= 0:
            break
        c = min(counts[key], k)
        out[key] = c
        k -= c
    return out


def energy_filter(s: SampleSet, q: QuboInstance, cfg: FilterConfig = FilterConfig()) -> SampleSet:
    """Keep the ``ceil(keep * shots)`` lowest-energy shots (ties: lexicographic)."""
    if s.shots == 0:
        raise ProblemError("empty sample set")
    e = _energies(s, q)
    ranked = sorted(s.counts, key=lambda k: (e[k], k))
    return SampleSet(s.n, _take(ranked, s.counts, math.ceil(cfg.energy_keep * s.shots)))


def _frequency_once(s: SampleSet, threshold: float) -> SampleSet:
    counts = s.counts
    if len(set(counts.values())) <= 1:
        return s
    t = threshold
    while True:
        kept = {k: c for k, c in counts.items() if c >= t * s.shots}
        if kept:
            return SampleSet(s.n, kept)
        t /= 2


def frequency_filter(s: SampleSet, cfg: FilterConfig = FilterConfig()) -> SampleSet:
    """Keep strings seen with relative frequency at least the threshold.

    The threshold halves until something qualifies, and uniform histograms
    pass through. The rule is applied until the set stops changing, which
    makes the filter idempotent.
    """
    if s.shots == 0:
        raise ProblemError("empty sample set")
    cur = s
    while True:
        nxt = _frequency_once(cur, cfg.frequency_threshold)
        if nxt.counts == cur.counts:
            return nxt
        cur = nxt


def hamming_filter(s: SampleSet, q: QuboInstance, cfg: FilterConfig = FilterConfig()) -> SampleSet:
    """Lowest-energy seed shots plus the shots closest to them in Hamming distance.

    Seeds are the ``ceil(seed * shots)`` lowest-energy occurrences. The next
    ``ceil(expand * shots)`` occurrences are drawn from the rest, ranked by
    distance to the nearest seed string, then energy, then the string.
    """
    if s.shots == 0:
        raise ProblemError("empty sample set")
    e = _energies(s, q)
    ranked = sorted(s.counts, key=lambda k: (e[k], k))
    seeds = _take(ranked, s.counts, math.ceil(cfg.hamming_seed * s.shots))
    rest = {k: s.counts[k] - seeds.get(k, 0) for k in s.counts}
    rest = {k: c for k, c in rest.items() if c > 0}
    seed_bits = np.array([as_bits(k) for k in seeds], dtype=np.int8)
    keys = list(rest)
    if keys:
        cand = np.array([as_bits(k) for k in keys], dtype=np.int8)
        dist = (cand[:, None, :] != seed_bits[None, :, :]).sum(axis=2).min(axis=1)
        dmap = dict(zip(keys, dist.tolist()))
        order = sorted(keys, key=lambda k: (dmap[k], e[k], k))
        extra = _take(order, rest, math.ceil(cfg.hamming_expand * s.shots))
    else:
        extra = {}
    out = dict(seeds)
    for k, c in extra.items():
        out[k] = out.get(k, 0) + c
    return SampleSet(s.n, out)


KINDS = ("readout", "energy", "frequency", "hamming")


def apply_filter(kind: str, s: SampleSet, q: QuboInstance | None = None, cfg: FilterConfig = FilterConfig(), model: ReadoutModel | None = None) -> SampleSet:
    if kind == "none":
        return s
    if kind == "readout":
        if model is None:
            raise ProblemError("readout correction needs a readout model")
        return readout_correct(s, model, cfg.readout_radius)
    if kind == "frequency":
        return frequency_filter(s, cfg)
    if q is None:
        raise ProblemError(f"{kind} filter needs the problem instance")
    if kind == "energy":
        return energy_filter(s, q, cfg)
    if kind == "hamming":
        return hamming_filter(s, q, cfg)
    raise ProblemError(f"unknown filter {kind!r}")
