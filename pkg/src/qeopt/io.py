"""Readers and writers for instance and sample files.

Instance text format::

    n m sense
    i j w      # quadratic term / edge, i < j
    i i w      # linear term / node weight

The JSON form is ``{"n", "sense", "linear": [...], "quadratic": [[i, j, w], ...]}``.
Floats are written with ``repr`` so both formats round-trip bit-exactly.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .problem import MAXIMIZE, MINIMIZE, ProblemError, QuboInstance, WeightedGraph


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _terms_of(obj) -> tuple[int, str, list[float], list[tuple[int, int, float]]]:
    if isinstance(obj, WeightedGraph):
        linear = list(obj.node_weights) if obj.node_weights is not None else [0.0] * obj.n
        return obj.n, MAXIMIZE, linear, [(i, j, w) for i, j, w in obj.edges]
    if isinstance(obj, QuboInstance):
        return obj.n, obj.sense, [float(v) for v in obj.c], obj.quadratic_terms()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_text(obj) -> str:
    n, sense, linear, quad = _terms_of(obj)
    lines = [f"{i} {i} {w!r}" for i, w in enumerate(linear) if w != 0.0]
    lines += [f"{i} {j} {w!r}" for i, j, w in quad]
    return "\n".join([f"{n} {len(lines)} {sense}", *lines]) + "\n"


def dumps_json(obj) -> str:
    n, sense, linear, quad = _terms_of(obj)
    doc = {"n": n, "sense": sense, "linear": linear, "quadratic": [[i, j, w] for i, j, w in quad]}
    return json.dumps(doc, indent=1) + "\n"


def _parse_text(text: str):
    rows = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows or len(rows[0]) != 3:
        raise ProblemError("missing header 'n m sense'")
    n, m, sense = int(rows[0][0]), int(rows[0][1]), rows[0][2]
    body = rows[1:]
    if len(body) != m:
        raise ProblemError(f"header declares {m} terms, found {len(body)}")
    linear = [0.0] * n
    quad = []
    for r in body:
        i, j, w = int(r[0]), int(r[1]), float(r[2])
        if i == j:
            linear[i] += w
        else:
            quad.append((i, j, w))
    return n, sense, linear, quad


def _parse_json(text: str):
    doc = json.loads(text)
    n = int(doc["n"])
    linear = [float(v) for v in doc.get("linear", [0.0] * n)]
    if len(linear) != n:
        raise ProblemError("linear must have length n")
    quad = [(int(i), int(j), float(w)) for i, j, w in doc.get("quadratic", [])]
    return n, doc.get("sense", MAXIMIZE), linear, quad


def _parse(path_or_text, fmt: str | None):
    text = Path(path_or_text).read_text() if fmt is None or isinstance(path_or_text, Path) else path_or_text
    if fmt is None:
        fmt = "json" if str(path_or_text).endswith(".json") else "text"
    return _parse_json(text) if fmt == "json" else _parse_text(text)


def to_graph(n, linear, quad) -> WeightedGraph:
    nw = linear if any(v != 0.0 for v in linear) else None
    return WeightedGraph(n, quad, nw)


def to_qubo(n, sense, linear, quad) -> QuboInstance:
    if sense not in (MAXIMIZE, MINIMIZE):
        raise ProblemError(f"unknown sense {sense!r}")
    Q = np.zeros((n, n))
    seen = set()
    for i, j, w in quad:
        a, b = min(i, j), max(i, j)
        if (a, b) in seen:
            raise ProblemError(f"duplicate term ({a}, {b})")
        seen.add((a, b))
        Q[a, b] = Q[b, a] = w / 2.0
    return QuboInstance(Q, np.array(linear, dtype=float), sense)


def read_graph(path) -> WeightedGraph:
    n, _, linear, quad = _parse(path, None)
    return to_graph(n, linear, quad)


def read_qubo(path) -> QuboInstance:
    n, sense, linear, quad = _parse(path, None)
    return to_qubo(n, sense, linear, quad)


def loads_graph(text: str, fmt: str = "text") -> WeightedGraph:
    n, _, linear, quad = _parse(text, fmt)
    return to_graph(n, linear, quad)


def loads_qubo(text: str, fmt: str = "text") -> QuboInstance:
    n, sense, linear, quad = _parse(text, fmt)
    return to_qubo(n, sense, linear, quad)


def write_instance(obj, path) -> None:
    path = Path(path)
    atomic_write(path, dumps_json(obj) if path.suffix == ".json" else dumps_text(obj))
