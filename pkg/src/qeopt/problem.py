"""Problem instances: weighted graphs, QUBOs, Max-Cut and MIS encodings.

Bit-strings are indexed little-endian: basis index ``k`` has ``x_j = (k >> j) & 1``,
and the string form writes ``x_0`` first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_EMULATION_CAP = 26

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


class ProblemError(ValueError):
    """Invalid instance data or an operation outside its domain."""


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with real edge weights and optional node weights.

    Parameters
    ----------
    n : int
        Vertex count.
    edges : sequence of (i, j, w)
        Edges with ``i < j``. Duplicates and self-loops are rejected.
    node_weights : sequence of float, optional
        Per-vertex weights (length ``n``).
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    node_weights: tuple[float, ...] | None = None

    def __init__(self, n: int, edges: Iterable[Sequence], node_weights: Sequence[float] | None = None):
        n = int(n)
        if n < 0:
            raise ProblemError("vertex count must be non-negative")
        clean = []
        seen = set()
        for e in edges:
            if len(e) == 2:
                i, j, w = int(e[0]), int(e[1]), 1.0
            else:
                i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise ProblemError(f"self-loop on vertex {i}")
            if i > j:
                i, j = j, i
            if i < 0 or j >= n:
                raise ProblemError(f"edge ({i}, {j}) out of range for n={n}")
            if (i, j) in seen:
                raise ProblemError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            clean.append((i, j, w))
        clean.sort()
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(clean))
        if node_weights is not None:
            node_weights = tuple(float(v) for v in node_weights)
            if len(node_weights) != n:
                raise ProblemError("node_weights must have length n")
        object.__setattr__(self, "node_weights", node_weights)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def adjacency(self, weighted: bool = True) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = a[j, i] = w if weighted else 1.0
        return a

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        adj = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    def unweighted(self) -> "WeightedGraph":
        return WeightedGraph(self.n, [(i, j, 1.0) for i, j, _ in self.edges])

    def relabel(self, perm: Sequence[int]) -> "WeightedGraph":
        """Return the graph with vertex ``v`` renamed to ``perm[v]``."""
        return WeightedGraph(self.n, [(perm[i], perm[j], w) for i, j, w in self.edges])


@dataclass(frozen=True)
class QuboInstance:
    """Objective ``x^T Q x + c^T x`` over ``x in {0,1}^n`` with a sense.

    On construction the diagonal of ``Q`` is folded into ``c`` (``x_i^2 = x_i``)
    and the off-diagonal part is symmetrized, so ``Q`` is symmetric with a zero
    diagonal. The objective value of every ``x`` is unchanged by this.
    """

    Q: np.ndarray
    c: np.ndarray
    sense: str = MAXIMIZE

    def __init__(self, Q, c=None, sense: str = MAXIMIZE):
        Q = np.array(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ProblemError("Q must be square")
        n = Q.shape[0]
        c = np.zeros(n) if c is None else np.array(c, dtype=float).reshape(-1)
        if c.shape != (n,):
            raise ProblemError(f"c has length {c.shape[0]}, expected {n}")
        if sense not in (MAXIMIZE, MINIMIZE):
            raise ProblemError(f"unknown sense {sense!r}")
        lin = c + np.diag(Q)
        off = Q - np.diag(np.diag(Q))
        sym = (off + off.T) / 2.0
        sym.setflags(write=False)
        lin.setflags(write=False)
        object.__setattr__(self, "Q", sym)
        object.__setattr__(self, "c", lin)
        object.__setattr__(self, "sense", sense)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def sign(self) -> float:
        """Multiplier taking objective values to minimization energies."""
        return -1.0 if self.sense == MAXIMIZE else 1.0

    def minimization_form(self) -> tuple[np.ndarray, np.ndarray]:
        """``(Q, c)`` of the equivalent minimization problem."""
        return self.sign * self.Q, self.sign * self.c

    def energy(self, x) -> float:
        """Minimization energy of ``x`` (objective negated for maximize)."""
        return self.sign * qubo_energy(self, x)

    def quadratic_terms(self) -> list[tuple[int, int, float]]:
        """Nonzero ``(i, j, coefficient of x_i x_j)`` with ``i < j``."""
        iu, ju = np.nonzero(np.triu(self.Q, 1))
        return [(int(i), int(j), 2.0 * float(self.Q[i, j])) for i, j in zip(iu, ju)]

    def interaction_graph(self) -> WeightedGraph:
        return WeightedGraph(self.n, self.quadratic_terms())


@dataclass(frozen=True)
class CostDiagonal:
    """Objective value of every bit-string of a small instance.

    ``values`` are in the instance's own sense; ``energies`` are the
    minimization form the emulator works with. ``lambda_min`` and
    ``lambda_max`` are the extreme eigenvalues of that cost Hamiltonian.
    """

    values: np.ndarray
    sense: str = MINIMIZE
    n: int = field(init=False)
    _energies: np.ndarray = field(init=False, repr=False, compare=False)
    _levels: tuple | None = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        size = v.shape[0]
        n = size.bit_length() - 1
        if size != 1 << n:
            raise ProblemError("diagonal length must be a power of two")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "n", n)
        e = -v if self.sense == MAXIMIZE else v
        e.setflags(write=False)
        object.__setattr__(self, "_energies", e)

    @property
    def energies(self) -> np.ndarray:
        return self._energies

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    @property
    def lambda_min(self) -> float:
        return float(self._energies.min())

    @property
    def lambda_max(self) -> float:
        return float(self._energies.max())

    @property
    def optimum(self) -> float:
        """Best objective value in the instance's own sense."""
        return self.max_value if self.sense == MAXIMIZE else self.min_value

    def optimal_indices(self, atol: float = 1e-9) -> np.ndarray:
        return np.flatnonzero(np.abs(self._energies - self.lambda_min) <= atol)

    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct energies and the level index of every basis state (cached)."""
        if self._levels is None:
            u, inv = np.unique(self._energies, return_inverse=True)
            object.__setattr__(self, "_levels", (u, inv.astype(np.int32)))
        return self._levels


# ---------------------------------------------------------------------------
# bit-string helpers


def bits_of(k: int, n: int) -> np.ndarray:
    return np.array([(k >> j) & 1 for j in range(n)], dtype=np.int8)


def index_of(x) -> int:
    x = as_bits(x)
    return int(sum(int(b) << j for j, b in enumerate(x)))


def as_bits(x, n: int | None = None) -> np.ndarray:
    """Coerce a bit-string (str, sequence or array) to an int8 array."""
    if isinstance(x, str):
        arr = np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
        if arr.size and (arr.max() > 1):
            raise ProblemError(f"not a bit-string: {x!r}")
        arr = arr.astype(np.int8)
    else:
        arr = np.asarray(x).astype(np.int8).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise ProblemError(f"bit-string has length {arr.shape[0]}, expected {n}")
    return arr


def bitstring(x) -> str:
    return "".join("1" if b else "0" for b in as_bits(x))


def spins_to_bits(z) -> np.ndarray:
    z = np.asarray(z)
    return ((1 - z) // 2).astype(np.int8)


def bits_to_spins(x) -> np.ndarray:
    return (1 - 2 * as_bits(x).astype(int)).astype(int)


def all_bits(n: int) -> np.ndarray:
    """``(2^n, n)`` array whose row ``k`` is the bit-string with index ``k``."""
    k = np.arange(1 << n, dtype=np.int64)
    return ((k[:, None] >> np.arange(n)) & 1).astype(np.int8)


# ---------------------------------------------------------------------------
# objectives


def maxcut_energy(g: WeightedGraph, z) -> float:
    """Spin energy ``sum w_ij z_i z_j``; lower means a larger cut."""
    z = np.asarray(z)
    if z.shape != (g.n,):
        raise ProblemError(f"spin vector has shape {z.shape}, expected ({g.n},)")
    if g.m == 0:
        return 0.0
    e = np.array([(i, j) for i, j, _ in g.edges])
    return float(np.sum(g.weights * z[e[:, 0]] * z[e[:, 1]]))


def cut_value(g: WeightedGraph, x) -> float:
    x = as_bits(x, g.n)
    return float(sum(w for i, j, w in g.edges if x[i] != x[j]))


def qubo_energy(q: QuboInstance, x) -> float:
    """Objective ``x^T Q x + c^T x`` in the instance's own sense."""
    x = as_bits(x, q.n).astype(float)
    return float(x @ q.Q @ x + q.c @ x)


def maxcut_to_qubo(g: WeightedGraph) -> QuboInstance:
    """Cut value ``sum w_ij (x_i + x_j - 2 x_i x_j)`` as a maximization QUBO."""
    Q = np.zeros((g.n, g.n))
    c = np.zeros(g.n)
    for i, j, w in g.edges:
        c[i] += w
        c[j] += w
        Q[i, j] -= w
        Q[j, i] -= w
    return QuboInstance(Q, c, MAXIMIZE)


def mis_to_qubo(g: WeightedGraph, lam: float = 1.0) -> QuboInstance:
    """Penalized independent set ``sum x_i - lam sum_E x_i x_j`` (maximize)."""
    if lam < 1:
        raise ProblemError(f"penalty lam must be >= 1, got {lam}")
    Q = np.zeros((g.n, g.n))
    for i, j, _ in g.edges:
        Q[i, j] -= lam / 2.0
        Q[j, i] -= lam / 2.0
    return QuboInstance(Q, np.ones(g.n), MAXIMIZE)


@dataclass(frozen=True)
class IsingCoefficients:
    """``constant + sum_i h_i z_i + sum_{i<j} J_ij z_i z_j`` (minimization form)."""

    constant: float
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]

    def evaluate(self, z) -> float:
        z = np.asarray(z, dtype=float)
        val = self.constant + float(self.linear @ z)
        for (i, j), J in self.quadratic.items():
            val += J * z[i] * z[j]
        return val


def cost_hamiltonian_coeffs(q: QuboInstance) -> IsingCoefficients:
    """Z/ZZ expansion of the minimization energy under ``x = (1 - z)/2``."""
    Qm, cm = q.minimization_form()
    n = q.n
    const = 0.5 * float(cm.sum())
    h = -0.5 * cm.copy()
    quad: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            a = 2.0 * Qm[i, j]  # coefficient of x_i x_j
            if a == 0.0:
                continue
            # a (1 - z_i)(1 - z_j) / 4
            const += a / 4.0
            h[i] -= a / 4.0
            h[j] -= a / 4.0
            quad[(i, j)] = a / 4.0
    return IsingCoefficients(const, h, quad)


def maxcut_hamiltonian_coeffs(g: WeightedGraph) -> IsingCoefficients:
    """The Max-Cut Hamiltonian ``sum w_ij Z_i Z_j`` exactly as written.

    This is twice the minimization energy of :func:`maxcut_to_qubo` plus a
    constant, so both give the same QAOA dynamics up to a rescaling of gamma.
    """
    return IsingCoefficients(0.0, np.zeros(g.n), {(i, j): w for i, j, w in g.edges})


def brute_force_spectrum(q: QuboInstance, cap: int = DEFAULT_EMULATION_CAP) -> CostDiagonal:
    """Objective value for all ``2^n`` bit-strings."""
    n = q.n
    if n > cap:
        raise ProblemError(f"n={n} exceeds the emulation cap of {cap}")
    values = np.zeros(1 << n)
    k = np.arange(1 << n, dtype=np.int64)
    bit = [((k >> j) & 1).astype(float) for j in range(n)]
    for i in range(n):
        if q.c[i] != 0.0:
            values += q.c[i] * bit[i]
    iu, ju = np.nonzero(np.triu(q.Q, 1))
    for i, j in zip(iu, ju):
        values += 2.0 * q.Q[i, j] * (bit[i] * bit[j])
    return CostDiagonal(values, q.sense)


def graph_diagonal(g: WeightedGraph, problem: str = "maxcut", lam: float = 1.0, cap: int = DEFAULT_EMULATION_CAP) -> CostDiagonal:
    return brute_force_spectrum(to_qubo(g, problem, lam), cap)


def to_qubo(g: WeightedGraph, problem: str = "maxcut", lam: float = 1.0) -> QuboInstance:
    if problem == "maxcut":
        return maxcut_to_qubo(g)
    if problem == "mis":
        return mis_to_qubo(g, lam)
    raise ProblemError(f"unknown problem type {problem!r}")
