"""Benchmark instance generators.

Every generator is a pure function of ``(kind, params, seed)``.
"""

from __future__ import annotations

from typing import Any

import networkx as nx
import numpy as np

from .problem import ProblemError, WeightedGraph

KINDS = ("erdos_renyi", "random_regular", "line", "defect_lattice", "swap_enhanced", "grid", "sk")


def _weights(m: int, spec: Any, rng: np.random.Generator) -> np.ndarray:
    if spec in (None, "unit"):
        return np.ones(m)
    if spec == "uniform":
        return rng.uniform(-1.0, 1.0, size=m)
    if spec == "signs":
        return rng.choice([-1.0, 1.0], size=m)
    if isinstance(spec, (list, tuple)) and len(spec) == 2:
        return rng.uniform(float(spec[0]), float(spec[1]), size=m)
    raise ProblemError(f"unknown weight spec {spec!r}")


def _from_nx(G: nx.Graph, weights: Any, rng: np.random.Generator) -> WeightedGraph:
    edges = sorted((min(u, v), max(u, v)) for u, v in G.edges())
    w = _weights(len(edges), weights, rng)
    return WeightedGraph(G.number_of_nodes(), [(i, j, float(x)) for (i, j), x in zip(edges, w)])


def line_graph(n: int) -> WeightedGraph:
    return WeightedGraph(n, [(i, i + 1, 1.0) for i in range(n - 1)])


def grid_graph(rows: int, cols: int) -> WeightedGraph:
    idx = lambda r, c: r * cols + c  # noqa: E731
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((idx(r, c), idx(r, c + 1), 1.0))
            if r + 1 < rows:
                edges.append((idx(r, c), idx(r + 1, c), 1.0))
    return WeightedGraph(rows * cols, edges)


def defect_lattice(rows: int, cols: int, defect: tuple[int, int] | None = None) -> WeightedGraph:
    """Square lattice with one vertex removed and its column contracted.

    The vertex at ``defect`` (default: the lattice centre) is deleted and every
    vertex below it in the same column moves up one row. The shifted column
    sits on the opposite checkerboard sublattice from its neighbours, which
    leaves a single domain wall in the MIS ground state.
    """
    if rows < 3 or cols < 3:
        raise ProblemError("defect lattice needs at least 3x3 sites")
    r0, c0 = defect if defect is not None else (rows // 2, cols // 2)
    if not (0 < r0 < rows - 1 and 0 < c0 < cols - 1):
        raise ProblemError("defect must be an interior site")
    pos = {}
    for r in range(rows):
        for c in range(cols):
            if (r, c) == (r0, c0):
                continue
            nr = r - 1 if (c == c0 and r > r0) else r
            pos[(nr, c)] = len(pos)
    edges = []
    for (r, c), i in pos.items():
        for dr, dc in ((0, 1), (1, 0)):
            j = pos.get((r + dr, c + dc))
            if j is not None:
                edges.append((i, j, 1.0))
    return WeightedGraph(len(pos), edges)


def generate_instances(kind: str, params: dict | None = None, seed: int = 0) -> WeightedGraph:
    """Build a benchmark graph.

    Parameters
    ----------
    kind : str
        One of ``erdos_renyi`` (n, p), ``random_regular`` (n, d), ``line`` (n),
        ``grid`` (rows, cols), ``defect_lattice`` (rows, cols, defect),
        ``swap_enhanced`` (n, n_swap) or ``sk`` (n).
    params : dict
        Kind-specific parameters plus an optional ``weights`` entry:
        ``"unit"`` (default), ``"uniform"`` for U[-1, 1], ``"signs"`` or a
        ``[low, high]`` pair.
    seed : int
        Seed for every random choice.
    """
    params = dict(params or {})
    weights = params.pop("weights", None)
    rng = np.random.default_rng(seed)
    if kind == "line":
        g = line_graph(int(params["n"]))
        return WeightedGraph(g.n, [(i, j, float(w)) for (i, j, _), w in zip(g.edges, _weights(g.m, weights, rng))])
    if kind == "grid":
        g = grid_graph(int(params["rows"]), int(params["cols"]))
        return WeightedGraph(g.n, [(i, j, float(w)) for (i, j, _), w in zip(g.edges, _weights(g.m, weights, rng))])
    if kind == "erdos_renyi":
        n, p = int(params["n"]), float(params["p"])
        if not 0.0 <= p <= 1.0:
            raise ProblemError(f"edge probability {p} outside [0, 1]")
        return _from_nx(nx.gnp_random_graph(n, p, seed=seed), weights, rng)
    if kind == "random_regular":
        n, d = int(params["n"]), int(params["d"])
        if n * d % 2 or d >= n or d < 0:
            raise ProblemError(f"no {d}-regular graph on {n} vertices")
        return _from_nx(nx.random_regular_graph(d, n, seed=seed), weights, rng)
    if kind == "defect_lattice":
        defect = params.get("defect")
        g = defect_lattice(int(params["rows"]), int(params["cols"]), tuple(defect) if defect else None)
        return WeightedGraph(g.n, [(i, j, float(w)) for (i, j, _), w in zip(g.edges, _weights(g.m, weights, rng))])
    if kind == "sk":
        n = int(params["n"])
        J = rng.choice([-1.0, 1.0], size=n * (n - 1) // 2) / np.sqrt(n)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        return WeightedGraph(n, [(i, j, float(w)) for (i, j), w in zip(pairs, J)])
    if kind == "swap_enhanced":
        from .routing.swap_enhanced import swap_enhanced_instance

        return swap_enhanced_instance(int(params["n"]), int(params.get("n_swap", 2)), weights, seed)
    raise ProblemError(f"unknown instance kind {kind!r}")
