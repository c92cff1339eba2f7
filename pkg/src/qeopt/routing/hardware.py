"""Hardware coupling graphs with precomputed distances."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ..problem import ProblemError

TOPOLOGY_DIR = Path(__file__).resolve().parent.parent / "data" / "topologies"


@dataclass(frozen=True)
class HardwareGraph:
    """Undirected connected coupling graph on ``q`` physical qubits."""

    q: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""
    dist: np.ndarray = field(init=False, repr=False, compare=False)
    adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        es = sorted({(min(a, b), max(a, b)) for a, b in self.edges})
        if any(a == b or a < 0 or b >= self.q for a, b in es):
            raise ProblemError("hardware edges must join distinct qubits in range")
        object.__setattr__(self, "edges", tuple(es))
        nb = [[] for _ in range(self.q)]
        for a, b in es:
            nb[a].append(b)
            nb[b].append(a)
        object.__setattr__(self, "adj", tuple(tuple(sorted(x)) for x in nb))
        if self.q:
            r = [a for a, b in es] + [b for a, b in es]
            c = [b for a, b in es] + [a for a, b in es]
            m = csr_matrix((np.ones(len(r)), (r, c)), shape=(self.q, self.q))
            d = shortest_path(m, unweighted=True)
            if np.isinf(d).any():
                raise ProblemError("hardware graph must be connected")
            d = d.astype(np.int64)
        else:
            d = np.zeros((0, 0), dtype=np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def diameter(self) -> int:
        return int(self.dist.max()) if self.q else 0

    def has_edge(self, a: int, b: int) -> bool:
        return self.dist[a, b] == 1

    def neighbors(self, a: int) -> tuple[int, ...]:
        return self.adj[a]

    def next_hop(self, a: int, b: int) -> int:
        """Smallest neighbour of ``a`` one step closer to ``b``."""
        d = self.dist[a, b]
        return min(x for x in self.adj[a] if self.dist[x, b] == d - 1)

    def dumps(self) -> str:
        return f"{self.q} {len(self.edges)}\n" + "".join(f"{a} {b}\n" for a, b in self.edges)

    @classmethod
    def loads(cls, text: str, name: str = "") -> "HardwareGraph":
        rows = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
        rows = [r for r in rows if r]
        q, m = int(rows[0][0]), int(rows[0][1])
        if len(rows) - 1 != m:
            raise ProblemError(f"topology declares {m} edges, found {len(rows) - 1}")
        return cls(q, tuple((int(a), int(b)) for a, b in rows[1:]), name)


def path_hardware(q: int) -> HardwareGraph:
    return HardwareGraph(q, tuple((i, i + 1) for i in range(q - 1)), f"path:{q}")


def grid_hardware(rows: int, cols: int) -> HardwareGraph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                edges.append((k, k + 1))
            if r + 1 < rows:
                edges.append((k, k + cols))
    return HardwareGraph(rows * cols, tuple(edges), f"grid:{rows}x{cols}")


def heavy_hex_edges(rows: int = 8, width: int = 16) -> tuple[int, list[tuple[int, int]]]:
    """Heavy-hex lattice: ``rows`` chains of ``width`` qubits joined by bridges.

    Between consecutive chains sit four bridge qubits; each bridge couples the
    same column in the chain above and below. Bridge columns alternate
    between ``3, 7, 11, 15`` and ``1, 5, 9, 13`` so that every hexagon has
    twelve qubits. With the defaults this gives 156 qubits.
    """
    edges = []
    chain_start = []
    k = 0
    for r in range(rows):
        chain_start.append(k)
        edges += [(k + c, k + c + 1) for c in range(width - 1)]
        k += width
        if r + 1 < rows:
            cols = (3, 7, 11, 15) if r % 2 == 0 else (1, 5, 9, 13)
            cols = [c for c in cols if c < width]
            for i, c in enumerate(cols):
                b = k + i
                edges.append((chain_start[r] + c, b))
                edges.append((b, k + len(cols) + c))
            k += len(cols)
    return k, edges


def heavy_hex_156() -> HardwareGraph:
    return load_topology_file(TOPOLOGY_DIR / "heavyhex156.txt", "heavyhex:156")


def load_topology_file(path, name: str | None = None) -> HardwareGraph:
    path = Path(path)
    return HardwareGraph.loads(path.read_text(), name or f"file:{path}")


def topology(spec: str) -> HardwareGraph:
    """Resolve ``grid:RxC``, ``heavyhex:156``, ``path:Q`` or ``file:PATH``."""
    kind, _, arg = spec.partition(":")
    if kind == "grid":
        try:
            r, c = (int(t) for t in arg.lower().split("x"))
        except ValueError:
            raise ProblemError(f"bad grid size {arg!r}, expected RxC") from None
        return grid_hardware(r, c)
    if kind == "heavyhex":
        if arg not in ("", "156"):
            raise ProblemError("only heavyhex:156 is available")
        return heavy_hex_156()
    if kind == "path":
        return path_hardware(int(arg))
    if kind == "file":
        return load_topology_file(arg)
    raise ProblemError(f"unknown topology {spec!r}")
