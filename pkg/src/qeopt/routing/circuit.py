"""Routed cost layers: event lists, metrics, swap/ZZ merging and checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..problem import ProblemError, WeightedGraph
from .hardware import HardwareGraph

SWAP = "swap"
INTERACTION = "interaction"
MERGED = "merged"
CNOTS = {SWAP: 3, INTERACTION: 2, MERGED: 3}


@dataclass(frozen=True)
class Event:
    """One two-qubit operation on physical edge ``(a, b)``.

    ``term`` is the problem-edge index for interactions and merged events,
    and -1 for bare swaps. A merged event applies the term's ZZ phase and
    then exchanges the two qubits.
    """

    kind: str
    a: int
    b: int
    term: int = -1

    @property
    def edge(self) -> tuple[int, int]:
        return (min(self.a, self.b), max(self.a, self.b))

    @property
    def swaps(self) -> bool:
        return self.kind in (SWAP, MERGED)

    def to_dict(self) -> dict:
        d = {"type": self.kind, "edge": list(self.edge)}
        if self.kind != SWAP:
            d["term"] = self.term
        return d


@dataclass
class RoutedCircuit:
    events: list[Event]
    initial: np.ndarray
    final: np.ndarray
    q: int
    meta: dict = field(default_factory=dict)

    @property
    def metrics(self) -> dict:
        return circuit_metrics(self)

    def reversed(self) -> "RoutedCircuit":
        """The same layer run backwards, from ``final`` to ``initial``."""
        return RoutedCircuit(list(reversed(self.events)), self.final.copy(), self.initial.copy(), self.q, dict(self.meta))

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "initial_mapping": [int(x) for x in self.initial],
            "final_mapping": [int(x) for x in self.final],
            "events": [e.to_dict() for e in self.events],
            "metrics": circuit_metrics(self),
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "RoutedCircuit":
        ev = [Event(e["type"], e["edge"][0], e["edge"][1], e.get("term", -1)) for e in doc["events"]]
        return cls(ev, np.array(doc["initial_mapping"]), np.array(doc["final_mapping"]), int(doc["q"]), doc.get("meta", {}))


def circuit_metrics(c: RoutedCircuit) -> dict:
    """Swap count, CNOT count and two-qubit depth (ASAP layering)."""
    swaps = sum(1 for e in c.events if e.swaps)
    cnots = sum(CNOTS[e.kind] for e in c.events)
    level: dict[int, int] = {}
    depth = 0
    for e in c.events:
        t = max(level.get(e.a, 0), level.get(e.b, 0)) + 1
        level[e.a] = level[e.b] = t
        depth = max(depth, t)
    return {"swaps": swaps, "cnots": cnots, "depth": depth}


def metrics_line(c: RoutedCircuit) -> str:
    m = circuit_metrics(c)
    return f"swaps={m['swaps']} cnots={m['cnots']} depth={m['depth']}"


def merge_swap_zz(c: RoutedCircuit) -> RoutedCircuit:
    """Fuse an interaction and a swap on the same edge into one merged event.

    Two events are fused when nothing acts on either of their qubits in
    between; the events in between then commute with both, so the merged
    event can take the earlier position.
    """
    out: list[Event | None] = list(c.events)
    last: dict[int, int] = {}
    for k, e in enumerate(c.events):
        ja, jb = last.get(e.a), last.get(e.b)
        if ja is not None and ja == jb and e.kind != MERGED:
            prev = out[ja]
            pair = {prev.kind, e.kind}
            if prev.edge == e.edge and pair == {SWAP, INTERACTION}:
                term = prev.term if prev.kind == INTERACTION else e.term
                out[ja] = Event(MERGED, prev.a, prev.b, term)
                out[k] = None
                continue
        last[e.a] = last[e.b] = k
    return RoutedCircuit([e for e in out if e is not None], c.initial.copy(), c.final.copy(), c.q, dict(c.meta))


def replay(c: RoutedCircuit) -> np.ndarray:
    """Logical-to-physical map after applying every swap to ``initial``."""
    l2p = np.array(c.initial, dtype=np.int64)
    p2l = np.full(c.q, -1, dtype=np.int64)
    p2l[l2p] = np.arange(l2p.size)
    for e in c.events:
        if e.swaps:
            u, v = p2l[e.a], p2l[e.b]
            p2l[e.a], p2l[e.b] = v, u
            if u >= 0:
                l2p[u] = e.b
            if v >= 0:
                l2p[v] = e.a
    return l2p


def check_circuit(c: RoutedCircuit, g: WeightedGraph, h: HardwareGraph) -> None:
    """Raise ``ProblemError`` unless ``c`` is a valid routing of ``g`` on ``h``.

    Checks edge validity, that every term runs exactly once on the qubits
    holding its endpoints at that moment, and that replaying the swaps
    reproduces the recorded final mapping.
    """
    l2p = np.array(c.initial, dtype=np.int64)
    if l2p.size != g.n or len(set(l2p.tolist())) != g.n or l2p.min(initial=0) < 0 or l2p.max(initial=-1) >= h.q:
        raise ProblemError("initial mapping is not injective into the hardware")
    p2l = np.full(h.q, -1, dtype=np.int64)
    p2l[l2p] = np.arange(g.n)
    seen = np.zeros(g.m, dtype=int)
    for k, e in enumerate(c.events):
        if not h.has_edge(e.a, e.b):
            raise ProblemError(f"event {k} uses non-edge {e.edge}")
        if e.kind != SWAP:
            if not 0 <= e.term < g.m:
                raise ProblemError(f"event {k} names unknown term {e.term}")
            i, j, _ = g.edges[e.term]
            if {int(p2l[e.a]), int(p2l[e.b])} != {i, j}:
                raise ProblemError(f"event {k} runs term {e.term} on the wrong qubits")
            seen[e.term] += 1
        if e.swaps:
            u, v = p2l[e.a], p2l[e.b]
            p2l[e.a], p2l[e.b] = v, u
            if u >= 0:
                l2p[u] = e.b
            if v >= 0:
                l2p[v] = e.a
    if not (seen == 1).all():
        raise ProblemError(f"terms not run exactly once: {np.flatnonzero(seen != 1).tolist()}")
    if not np.array_equal(l2p, np.asarray(c.final)):
        raise ProblemError("swap replay disagrees with the final mapping")


# ---------------------------------------------------------------------------
# physical-level emulation (small cases, used to certify routed layers)


def _apply_2q(psi, nq, a, b, U):
    """Apply 4x4 ``U`` on qubits (a, b); basis order |x_a x_b> = 00, 01, 10, 11."""
    t = psi.reshape([2] * nq)
    ax_a, ax_b = nq - 1 - a, nq - 1 - b
    t = np.moveaxis(t, (ax_a, ax_b), (0, 1)).reshape(4, -1)
    t = U @ t
    t = np.moveaxis(t.reshape([2, 2] + [2] * (nq - 2)), (0, 1), (ax_a, ax_b))
    return t.reshape(-1)


_SWAP4 = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def emulate_routed(g: WeightedGraph, layers: list[RoutedCircuit], gammas, betas) -> np.ndarray:
    """Measurement distribution over logical bit-strings of a routed QAOA run.

    Each entry of ``layers`` is one routed cost layer; layer ``k`` must start
    from the final mapping of layer ``k-1``. The cost is the Max-Cut energy
    ``sum_ij w_ij (z_i z_j - 1) / 2`` so results compare with
    ``qaoa_state(graph_diagonal(g, "maxcut"), ...)``. Physical qubits not
    holding a vertex start in ``|0>``. Only qubits touched by the circuit
    are simulated.
    """
    used = sorted(set(np.asarray(layers[0].initial).tolist()) | {x for c in layers for e in c.events for x in (e.a, e.b)})
    if len(used) > 16:
        raise ProblemError("routed emulation limited to 16 physical qubits")
    loc = {p: i for i, p in enumerate(used)}
    nq = len(used)
    psi = np.zeros(1 << nq, dtype=complex)
    psi[0] = 1.0
    l2p = np.array(layers[0].initial)
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    for u in range(g.n):
        psi = _apply_1q(psi, nq, loc[int(l2p[u])], np.outer(plus, [1, 0]))
    for c, gam, bet in zip(layers, gammas, betas):
        if not np.array_equal(np.asarray(c.initial), l2p):
            raise ProblemError("layers do not chain")
        for e in c.events:
            a, b = loc[e.a], loc[e.b]
            if e.kind != SWAP:
                w = g.edges[e.term][2]
                # exp(i gamma w (zz - 1)/2): phase 1 on equal bits, e^{-i gamma w} on unequal
                ph = np.exp(-1j * gam * w)
                U = np.diag([1, ph, ph, 1]).astype(complex)
                psi = _apply_2q(psi, nq, a, b, U)
            if e.swaps:
                psi = _apply_2q(psi, nq, a, b, _SWAP4)
        l2p = np.asarray(c.final)
        mx = np.array([[np.cos(bet), 1j * np.sin(bet)], [1j * np.sin(bet), np.cos(bet)]])
        for u in range(g.n):
            psi = _apply_1q(psi, nq, loc[int(l2p[u])], mx)
    probs = np.abs(psi) ** 2
    out = np.zeros(1 << g.n)
    idx = np.arange(probs.size)
    logical = np.zeros(probs.size, dtype=np.int64)
    for u in range(g.n):
        logical |= ((idx >> loc[int(l2p[u])]) & 1) << u
    np.add.at(out, logical, probs)
    return out


def _apply_1q(psi, nq, a, U):
    t = psi.reshape([2] * nq)
    ax = nq - 1 - a
    t = np.moveaxis(np.tensordot(U, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def alternate_layers(c: RoutedCircuit, p: int) -> list[RoutedCircuit]:
    """Odd layers run ``c``; even layers run it reversed, undoing the permutation."""
    return [c if k % 2 == 0 else c.reversed() for k in range(p)]
