"""Initial placements of problem vertices on hardware qubits."""

from __future__ import annotations

import numpy as np
from scipy.optimize import quadratic_assignment

from ..problem import ProblemError, WeightedGraph
from .hardware import HardwareGraph


def _check_fits(g: WeightedGraph, h: HardwareGraph) -> None:
    if g.n > h.q:
        raise ProblemError(f"{g.n} vertices do not fit on {h.q} qubits")


def random_layout(g: WeightedGraph, h: HardwareGraph, seed=None) -> np.ndarray:
    _check_fits(g, h)
    return np.random.default_rng(seed).permutation(h.q)[: g.n].astype(np.int64)


def fiedler_order(g: WeightedGraph) -> np.ndarray:
    """Vertices sorted by their Fiedler-vector entry (unweighted Laplacian)."""
    if g.n == 0:
        return np.zeros(0, dtype=np.int64)
    if not g.is_connected():
        raise ProblemError("Fiedler layout needs a connected problem graph")
    if g.n == 1:
        return np.zeros(1, dtype=np.int64)
    A = g.adjacency(weighted=False)
    L = np.diag(A.sum(axis=1)) - A
    _, vecs = np.linalg.eigh(L)
    f = vecs[:, 1]
    # fix the eigenvector sign so the order is reproducible
    if f[np.argmax(np.abs(f))] < 0:
        f = -f
    return np.lexsort((np.arange(g.n), np.round(f, 12)))


def hardware_path(h: HardwareGraph, length: int, max_starts: int | None = None) -> list[int] | None:
    """Simple path of ``length`` qubits, by DFS with fewest-exits-first ordering.

    Returns None when no start vertex yields a long enough path within the
    search budget.
    """
    if length <= 0:
        return []
    budget = 20000
    starts = sorted(range(h.q), key=lambda v: (len(h.adj[v]), v))
    if max_starts is not None:
        starts = starts[:max_starts]
    for s in starts:
        path = [s]
        on = {s}
        stack = [iter(_ordered(h, s, on))]
        steps = 0
        while stack and steps < budget:
            if len(path) == length:
                return path
            steps += 1
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                on.discard(path.pop())
                continue
            path.append(nxt)
            on.add(nxt)
            stack.append(iter(_ordered(h, nxt, on)))
        if len(path) == length:
            return path
    return None


def _ordered(h: HardwareGraph, v: int, on: set[int]) -> list[int]:
    free = [x for x in h.adj[v] if x not in on]
    return sorted(free, key=lambda x: (sum(1 for y in h.adj[x] if y not in on), x))


def bfs_chain(h: HardwareGraph, length: int) -> list[int]:
    """Fallback chain: breadth-first order from the lowest-degree qubit."""
    start = min(range(h.q), key=lambda v: (len(h.adj[v]), v))
    order, seen = [start], {start}
    k = 0
    while len(order) < length:
        for x in h.adj[order[k]]:
            if x not in seen:
                seen.add(x)
                order.append(x)
        k += 1
    return order[:length]


def fiedler_layout(g: WeightedGraph, h: HardwareGraph) -> np.ndarray:
    """Spectral order of the vertices laid along a hardware path."""
    _check_fits(g, h)
    order = fiedler_order(g)
    path = hardware_path(h, g.n)
    if path is None:
        path = bfs_chain(h, g.n)
    l2p = np.empty(g.n, dtype=np.int64)
    l2p[order] = path
    return l2p


def overlap(g: WeightedGraph, h: HardwareGraph, l2p) -> int:
    """Number of problem edges placed on hardware edges."""
    return sum(1 for i, j, _ in g.edges if h.dist[l2p[i], l2p[j]] == 1)


def total_distance(g: WeightedGraph, h: HardwareGraph, l2p) -> int:
    return int(sum(h.dist[l2p[i], l2p[j]] for i, j, _ in g.edges))


def qap_layout(g: WeightedGraph, h: HardwareGraph, seed=None, inits: int = 8) -> np.ndarray:
    """Placement maximizing the number of problem edges on hardware edges.

    The problem adjacency is padded with isolated vertices to the hardware
    size and handed to the FAQ quadratic-assignment solver from several
    random starts. The best result is polished by pairwise exchanges, which
    also lower the total term distance when the overlap ties.
    """
    _check_fits(g, h)
    rng = np.random.default_rng(seed)
    A = np.zeros((h.q, h.q))
    A[: g.n, : g.n] = g.adjacency(weighted=False)
    B = (h.dist == 1).astype(float)
    best, best_key = None, None
    for _ in range(inits):
        res = quadratic_assignment(A, B, method="faq", options={"maximize": True, "P0": "randomized", "rng": rng})
        l2p = np.asarray(res.col_ind[: g.n], dtype=np.int64)
        key = (overlap(g, h, l2p), -total_distance(g, h, l2p))
        if best_key is None or key > best_key:
            best, best_key = l2p, key
    return _polish(g, h, best)


def _polish(g: WeightedGraph, h: HardwareGraph, l2p: np.ndarray, rounds: int = 20) -> np.ndarray:
    l2p = l2p.copy()
    p2l = np.full(h.q, -1, dtype=np.int64)
    p2l[l2p] = np.arange(g.n)
    nbrs = g.neighbors()
    D = h.dist

    def local(u, pos, skip):
        ov = ds = 0
        for v in nbrs[u]:
            if v == skip:
                continue
            d = D[pos, l2p[v]]
            ov += d == 1
            ds += d
        return ov, ds

    for _ in range(rounds):
        improved = False
        for u in range(g.n):
            for x in range(h.q):
                a = l2p[u]
                if x == a:
                    continue
                v = p2l[x]
                o1, d1 = local(u, a, v)
                o2, d2 = local(u, x, v)
                if v >= 0:
                    p1, e1 = local(v, x, u)
                    p2, e2 = local(v, a, u)
                    o1, d1, o2, d2 = o1 + p1, d1 + e1, o2 + p2, d2 + e2
                if (o2, -d2) > (o1, -d1):
                    l2p[u] = x
                    p2l[x] = u
                    p2l[a] = v
                    if v >= 0:
                        l2p[v] = a
                    improved = True
        if not improved:
            break
    return l2p


LAYOUTS = ("fiedler", "qap", "random")


def layout(name: str, g: WeightedGraph, h: HardwareGraph, seed=None) -> np.ndarray:
    if name == "fiedler":
        return fiedler_layout(g, h)
    if name == "qap":
        return qap_layout(g, h, seed)
    if name == "random":
        return random_layout(g, h, seed)
    raise ProblemError(f"unknown layout {name!r}")
