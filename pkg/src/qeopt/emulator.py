"""Noiseless QAOA statevector emulation, sampling and angle optimization.

The prepared state is

    |psi> = prod_{k=1..p} exp(i beta_k sum_j X_j) exp(i gamma_k C) |+>^n

with ``C`` the diagonal of minimization energies of the instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .problem import DEFAULT_EMULATION_CAP, CostDiagonal, ProblemError, as_bits, bitstring

GAMMA_BOUNDS = (-np.pi, np.pi)
BETA_BOUNDS = (-np.pi / 2, np.pi / 2)


@dataclass(frozen=True)
class QaoaParams:
    gammas: np.ndarray
    betas: np.ndarray

    def __init__(self, gammas, betas):
        g = np.atleast_1d(np.array(gammas, dtype=float))
        b = np.atleast_1d(np.array(betas, dtype=float))
        if g.shape != b.shape or g.ndim != 1 or g.size < 1:
            raise ValueError("gammas and betas must be equal-length vectors with p >= 1")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)

    @property
    def p(self) -> int:
        return self.gammas.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.gammas, self.betas])

    @classmethod
    def from_vector(cls, v) -> "QaoaParams":
        v = np.asarray(v, dtype=float)
        p = v.size // 2
        return cls(v[:p], v[p:])

    @classmethod
    def parse(cls, text: str) -> "QaoaParams":
        """Parse ``gamma1,beta1,gamma2,beta2,...``."""
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
        if len(vals) < 2 or len(vals) % 2:
            raise ValueError("angles must come in gamma,beta pairs")
        return cls(vals[0::2], vals[1::2])

    def canonical(self, fold_beta: bool = False) -> "QaoaParams":
        """Representative with ``gamma_1 >= 0`` under the conjugation symmetry.

        With ``fold_beta`` each beta is also reduced modulo pi/2 into
        (-pi/4, pi/4], which leaves energies unchanged whenever the cost is
        invariant under flipping every bit.
        """
        g, b = self.gammas, self.betas
        if g[0] < 0:
            g, b = -g, -b
        if fold_beta:
            b = -(np.mod(-b + np.pi / 4, np.pi / 2) - np.pi / 4)
        return QaoaParams(g, b)

    def to_dict(self) -> dict:
        return {"p": self.p, "gammas": self.gammas.tolist(), "betas": self.betas.tolist()}


@dataclass
class SampleSet:
    """Histogram of measured bit-strings."""

    n: int
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, c in self.counts.items():
            key = key if isinstance(key, str) else bitstring(key)
            if len(key) != self.n:
                raise ValueError(f"bit-string {key!r} does not have width {self.n}")
            c = int(c)
            if c < 0:
                raise ValueError("counts must be non-negative")
            if c:
                clean[key] = clean.get(key, 0) + c
        self.counts = dict(sorted(clean.items()))

    @property
    def shots(self) -> int:
        return int(sum(self.counts.values()))

    def __len__(self) -> int:
        return len(self.counts)

    def strings(self) -> list[str]:
        return list(self.counts)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """``(bits, counts)`` with one row of ``bits`` per distinct string."""
        keys = list(self.counts)
        if not keys:
            return np.zeros((0, self.n), dtype=np.int8), np.zeros(0, dtype=np.int64)
        bits = np.array([as_bits(k) for k in keys], dtype=np.int8).reshape(len(keys), self.n)
        return bits, np.array([self.counts[k] for k in keys], dtype=np.int64)

    def expand(self) -> list[str]:
        """One entry per shot, in sorted string order."""
        return [k for k, c in self.counts.items() for _ in range(c)]

    def probabilities(self) -> dict[str, float]:
        tot = self.shots
        return {k: c / tot for k, c in self.counts.items()}

    @classmethod
    def from_indices(cls, n: int, indices) -> "SampleSet":
        idx, cnt = np.unique(np.asarray(indices, dtype=np.int64), return_counts=True)
        return cls(n, {_index_string(int(k), n): int(c) for k, c in zip(idx, cnt)})

    # -- file formats ------------------------------------------------------
    def dumps_text(self) -> str:
        return "".join(f"{k} {c}\n" for k, c in self.counts.items())

    def dumps_json(self) -> str:
        return json.dumps({"n": self.n, "shots": self.shots, "counts": self.counts}, indent=1) + "\n"

    @classmethod
    def loads(cls, text: str, fmt: str = "text") -> "SampleSet":
        if fmt == "json":
            doc = json.loads(text)
            s = cls(int(doc["n"]), {k: int(v) for k, v in doc["counts"].items()})
            if "shots" in doc and int(doc["shots"]) != s.shots:
                raise ValueError("shots field disagrees with counts")
            return s
        counts: dict[str, int] = {}
        for ln in text.splitlines():
            parts = ln.split()
            if not parts:
                continue
            counts[parts[0]] = counts.get(parts[0], 0) + int(parts[1])
        if not counts:
            raise ValueError("empty sample file")
        return cls(len(next(iter(counts))), counts)

    @classmethod
    def read(cls, path) -> "SampleSet":
        path = Path(path)
        return cls.loads(path.read_text(), "json" if path.suffix == ".json" else "text")


def _index_string(k: int, n: int) -> str:
    return "".join("1" if (k >> j) & 1 else "0" for j in range(n))


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise ProblemError(f"n={n} exceeds the emulation cap of {cap}")


_LEVEL_TABLE_MAX = 4096
_STORE_STATES_MAX_N = 20


def _phase_fn(diag: CostDiagonal):
    """Return ``f(psi, gamma)`` applying exp(i gamma C) in place."""
    levels, index = diag.levels()
    if levels.size <= _LEVEL_TABLE_MAX:
        return lambda psi, g: _kernels.apply_phase_levels(psi, index, levels, g)
    e = np.ascontiguousarray(diag.energies)
    return lambda psi, g: _kernels.apply_phase(psi, e, g)


def qaoa_state(diag: CostDiagonal, params: QaoaParams, cap: int = DEFAULT_EMULATION_CAP) -> np.ndarray:
    """Statevector after ``p`` QAOA layers (cost layer first in each)."""
    n = diag.n
    _check_cap(n, cap)
    phase = _phase_fn(diag)
    psi = np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)
    for g, b in zip(params.gammas, params.betas):
        phase(psi, float(g))
        _kernels.apply_mixer(psi, n, float(b))
    return psi


def expectation(state: np.ndarray, diag: CostDiagonal) -> float:
    if state.shape[0] != diag.values.shape[0]:
        raise ValueError("state and diagonal dimensions differ")
    return float(np.dot(np.abs(state) ** 2, diag.energies))


def energy_and_gradient(diag: CostDiagonal, params: QaoaParams) -> tuple[float, np.ndarray]:
    """Expected energy and its exact gradient by one reverse sweep.

    The gradient is ordered ``[d/dgamma_1..p, d/dbeta_1..p]``. Intermediate
    states are kept for ``n <= 20`` and recomputed by inverse layers above.
    """
    n = diag.n
    e = np.ascontiguousarray(diag.energies)
    phase = _phase_fn(diag)
    p = params.p
    gs = [float(g) for g in params.gammas]
    bs = [float(b) for b in params.betas]
    store = n <= _STORE_STATES_MAX_N
    psi = np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)
    after_phase, after_mix = [], []
    for k in range(p):
        phase(psi, gs[k])
        if store:
            after_phase.append(psi.copy())
        _kernels.apply_mixer(psi, n, bs[k])
        if store:
            after_mix.append(psi.copy())
    energy = float(np.dot(psi.real**2 + psi.imag**2, e))
    mu = e * psi
    dg = np.zeros(p)
    db = np.zeros(p)
    for k in range(p - 1, -1, -1):
        cur = after_mix[k] if store else psi
        # 2 Re <mu| i B |psi_k>
        db[k] = -2.0 * _kernels.mixer_overlap_imag(mu, cur, n)
        _kernels.apply_mixer(mu, n, -bs[k])
        if store:
            cur = after_phase[k]
        else:
            _kernels.apply_mixer(psi, n, -bs[k])
            cur = psi
        dg[k] = -2.0 * _kernels.cost_overlap_imag(mu, cur, e)
        phase(mu, -gs[k])
        if not store:
            phase(psi, -gs[k])
    return energy, np.concatenate([dg, db])


def sample(state: np.ndarray, shots: int, seed=None) -> SampleSet:
    """Draw ``shots`` computational-basis measurements (inverse CDF)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = state.shape[0].bit_length() - 1
    probs = np.abs(state) ** 2
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    u = np.random.default_rng(seed).random(shots)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1)
    return SampleSet.from_indices(n, idx)


def ar_star(energy: float, diag: CostDiagonal) -> float:
    """Rescaled approximation ratio: 1 at the ground state, 0 at the top."""
    lo, hi = diag.lambda_min, diag.lambda_max
    if hi <= lo:
        return 1.0
    return 1.0 - (energy - lo) / (hi - lo)


def linear_ramp(p: int, dt: float = 0.75) -> QaoaParams:
    """Trotterized anneal: gamma grows and |beta| shrinks across layers."""
    s = (np.arange(1, p + 1) - 0.5) / p
    return QaoaParams(s * dt, -(1 - s) * dt)


def energy_scale(diag: CostDiagonal) -> float:
    """Typical magnitude of a local energy change; sets the ramp's gamma scale."""
    e = diag.energies
    n = diag.n
    if n == 0:
        return 1.0
    # mean |E(x) - E(x with bit 0..n-1 flipped)| over a subsample of x
    k = np.arange(0, e.size, max(1, e.size // 4096))
    diffs = [np.abs(e[k] - e[k ^ (1 << j)]).mean() for j in range(n)]
    s = float(np.mean(diffs))
    return s if s > 1e-12 else 1.0


@dataclass
class OptimizeResult:
    params: QaoaParams
    energy: float
    history: list[tuple[QaoaParams, float]]


def optimize_params(
    diag: CostDiagonal,
    p: int,
    restarts: int = 5,
    seed=None,
    init: list[QaoaParams] | None = None,
    maxiter: int = 200,
) -> tuple[QaoaParams, float]:
    """Bounded L-BFGS-B over (gamma, beta) from several starting points.

    The starts are ``init`` (if given), a linear ramp, then uniform random
    points in the box, ``restarts`` in total.
    """
    res = optimize_params_full(diag, p, restarts, seed, init, maxiter)
    return res.params, res.energy


def optimize_params_full(diag, p, restarts=5, seed=None, init=None, maxiter=200) -> OptimizeResult:
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    init = [q for q in (init or []) if q.p == p]
    ramp = linear_ramp(p, dt=0.75)
    starts = init + [QaoaParams(np.clip(ramp.gammas / energy_scale(diag), *GAMMA_BOUNDS), ramp.betas)]
    starts = random_starts(starts, p, max(restarts, len(init)), seed)

    def fun(v):
        return energy_and_gradient(diag, QaoaParams.from_vector(v))

    return local_minimize(fun, starts, maxiter, flip_symmetric(diag))


def random_starts(starts: list[QaoaParams], p: int, total: int, seed=None) -> list[QaoaParams]:
    """Pad ``starts`` with uniform draws from the angle box up to ``total``."""
    rng = np.random.default_rng(seed)
    starts = list(starts)[:total]
    while len(starts) < total:
        starts.append(QaoaParams(rng.uniform(*GAMMA_BOUNDS, size=p), rng.uniform(*BETA_BOUNDS, size=p)))
    return starts


def flip_symmetric(diag: CostDiagonal) -> bool:
    """True when flipping every bit leaves the cost unchanged."""
    e = diag.energies
    return bool(np.array_equal(e, e[::-1]))


def local_minimize(fun, starts: list[QaoaParams], maxiter: int = 200, fold_beta: bool = False) -> OptimizeResult:
    """Run bounded L-BFGS-B from each start; ``fun`` returns (value, gradient)."""
    p = starts[0].p
    bounds = [GAMMA_BOUNDS] * p + [BETA_BOUNDS] * p
    history = []
    best = None
    for x0 in starts:
        v0 = np.clip(x0.to_vector(), [b[0] for b in bounds], [b[1] for b in bounds])
        r = minimize(fun, v0, jac=True, method="L-BFGS-B", bounds=bounds, options={"maxiter": maxiter})
        par = QaoaParams.from_vector(r.x)
        history.append((par, float(r.fun)))
        if best is None or r.fun < best[1] - 1e-12:
            best = (par, float(r.fun))
    return OptimizeResult(best[0].canonical(fold_beta), best[1], history)


def interpolate_params(params: QaoaParams, p: int) -> QaoaParams:
    """Stretch a schedule onto ``p`` layers by linear interpolation in layer position."""
    if params.p == p:
        return params
    if params.p == 1:
        return QaoaParams(np.full(p, params.gammas[0]), np.full(p, params.betas[0]))
    src = np.linspace(0.0, 1.0, params.p)
    dst = np.linspace(0.0, 1.0, p)
    return QaoaParams(np.interp(dst, src, params.gammas), np.interp(dst, src, params.betas))


def inject_readout_noise(s: SampleSet, flips, seed=None) -> SampleSet:
    """Flip each measured bit independently: 0->1 w.p. p_j, 1->0 w.p. q_j.

    ``flips`` is a single ``(p, q)`` pair for every qubit or one pair per qubit.
    """
    flips = np.asarray(flips, dtype=float)
    if flips.ndim == 1:
        flips = np.tile(flips, (s.n, 1))
    if flips.shape != (s.n, 2) or flips.min() < 0 or flips.max() > 1:
        raise ValueError("flip probabilities must be (p, q) pairs in [0, 1]")
    rng = np.random.default_rng(seed)
    bits, counts = s.to_arrays()
    shots = np.repeat(bits, counts, axis=0).astype(np.int8)
    if shots.size == 0:
        return SampleSet(s.n, {})
    u = rng.random(shots.shape)
    p01 = flips[:, 0][None, :]
    p10 = flips[:, 1][None, :]
    flip = np.where(shots == 0, u < p01, u < p10)
    noisy = shots ^ flip.astype(np.int8)
    idx = (noisy.astype(np.int64) << np.arange(s.n)).sum(axis=1)
    return SampleSet.from_indices(s.n, idx)


def distribution(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def basis_state(n: int, k: int = 0) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[k] = 1.0
    return psi
