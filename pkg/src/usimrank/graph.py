"""Uncertain and deterministic directed graphs.

An uncertain graph is a directed graph whose arcs carry independent
existence probabilities in (0, 1].  Under possible-world semantics it
represents a distribution over deterministic subgraphs: each arc is kept
independently with its probability.
"""

from __future__ import annotations

import math
import random
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "GraphFormatError",
    "UncertainGraph",
    "DeterministicGraph",
    "load_edge_list",
    "save_edge_list",
    "degenerate",
    "sample_world",
    "gen_rmat",
    "RMAT_DEFAULT_WEIGHTS",
]

RMAT_DEFAULT_WEIGHTS = (0.57, 0.19, 0.19, 0.05)


class GraphFormatError(ValueError):
    """Raised when an edge-list file or arc set violates the graph model."""


class UncertainGraph:
    """Immutable directed graph with per-arc existence probabilities.

    Vertex ids are dense integers ``0..vertex_count-1``.  Arc probabilities
    lie in (0, 1]; parallel arcs are rejected, self-loops are allowed.
    Both out- and in-adjacency views are kept so the graph can be walked
    in either direction.  Instances are safe for concurrent shared reads.
    """

    __slots__ = ("_n", "_out", "_in", "_arc_count")

    def __init__(self, vertex_count: int, arcs: Iterable[tuple[int, int, float]]):
        if vertex_count < 0:
            raise GraphFormatError("vertex_count must be non-negative")
        self._n = int(vertex_count)
        out: list[dict[int, float]] = [dict() for _ in range(self._n)]
        in_: list[dict[int, float]] = [dict() for _ in range(self._n)]
        count = 0
        for u, v, p in arcs:
            if not (0 <= u < self._n and 0 <= v < self._n):
                raise GraphFormatError(f"vertex id out of range in arc ({u}, {v})")
            if not (0.0 < p <= 1.0):
                raise GraphFormatError(
                    f"arc ({u}, {v}) probability {p!r} outside (0, 1]"
                )
            if v in out[u]:
                raise GraphFormatError(f"duplicate arc ({u}, {v})")
            out[u][v] = float(p)
            in_[v][u] = float(p)
            count += 1
        self._out = out
        self._in = in_
        self._arc_count = count

    @property
    def vertex_count(self) -> int:
        return self._n

    @property
    def arc_count(self) -> int:
        return self._arc_count

    def vertices(self) -> range:
        return range(self._n)

    def out_dict(self, v: int) -> dict[int, float]:
        """Out-neighbors of ``v`` as a target -> probability mapping."""
        return self._out[v]

    def in_dict(self, v: int) -> dict[int, float]:
        return self._in[v]

    def out_targets(self, v: int) -> tuple[int, ...]:
        return tuple(self._out[v])

    def in_sources(self, v: int) -> tuple[int, ...]:
        return tuple(self._in[v])

    def out_degree(self, v: int) -> int:
        return len(self._out[v])

    def has_arc(self, u: int, v: int) -> bool:
        return v in self._out[u]

    def arc_prob(self, u: int, v: int) -> float:
        try:
            return self._out[u][v]
        except KeyError:
            raise KeyError(f"no arc ({u}, {v})") from None

    def arcs(self) -> Iterator[tuple[int, int, float]]:
        """All arcs in canonical (source, insertion) order."""
        for u, nbrs in enumerate(self._out):
            for v, p in nbrs.items():
                yield u, v, p

    def __repr__(self) -> str:
        return f"UncertainGraph(|V|={self._n}, |E|={self._arc_count})"


class DeterministicGraph:
    """Directed graph without probabilities; same structural rules."""

    __slots__ = ("_n", "_out", "_in", "_arc_count")

    def __init__(self, vertex_count: int, arcs: Iterable[tuple[int, int]]):
        if vertex_count < 0:
            raise GraphFormatError("vertex_count must be non-negative")
        self._n = int(vertex_count)
        out: list[dict[int, None]] = [dict() for _ in range(self._n)]
        in_: list[dict[int, None]] = [dict() for _ in range(self._n)]
        count = 0
        for u, v in arcs:
            if not (0 <= u < self._n and 0 <= v < self._n):
                raise GraphFormatError(f"vertex id out of range in arc ({u}, {v})")
            if v in out[u]:
                raise GraphFormatError(f"duplicate arc ({u}, {v})")
            out[u][v] = None
            in_[v][u] = None
            count += 1
        self._out = out
        self._in = in_
        self._arc_count = count

    @property
    def vertex_count(self) -> int:
        return self._n

    @property
    def arc_count(self) -> int:
        return self._arc_count

    def vertices(self) -> range:
        return range(self._n)

    def out_targets(self, v: int) -> tuple[int, ...]:
        return tuple(self._out[v])

    def in_sources(self, v: int) -> tuple[int, ...]:
        return tuple(self._in[v])

    def out_degree(self, v: int) -> int:
        return len(self._out[v])

    def has_arc(self, u: int, v: int) -> bool:
        return v in self._out[u]

    def arcs(self) -> Iterator[tuple[int, int]]:
        for u, nbrs in enumerate(self._out):
            for v in nbrs:
                yield u, v

    def transition_matrix(self) -> np.ndarray:
        """Row-normalized adjacency; rows of out-degree-0 vertices are zero."""
        A = np.zeros((self._n, self._n))
        for u, nbrs in enumerate(self._out):
            if nbrs:
                w = 1.0 / len(nbrs)
                for v in nbrs:
                    A[u, v] = w
        return A

    def __repr__(self) -> str:
        return f"DeterministicGraph(|V|={self._n}, |E|={self._arc_count})"


def load_edge_list(path) -> UncertainGraph:
    """Read an uncertain graph from a tab-separated edge-list file.

    Each data line is ``u<TAB>v<TAB>p`` with non-negative integer vertex
    ids and a decimal probability in (0, 1].  Lines starting with ``#``
    are comments.  The vertex count is one more than the largest id seen;
    an empty file yields the empty graph.

    Raises
    ------
    GraphFormatError
        On a malformed line, an out-of-range probability, or a duplicate
        arc; the message carries the 1-based line number.
    """
    arcs: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()
    max_id = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split("\t")
            if len(fields) != 3:
                raise GraphFormatError(
                    f"{path}: line {lineno}: expected 3 tab-separated fields, "
                    f"got {len(fields)}"
                )
            try:
                u = int(fields[0])
                v = int(fields[1])
                p = float(fields[2])
            except ValueError:
                raise GraphFormatError(
                    f"{path}: line {lineno}: non-numeric field"
                ) from None
            if u < 0 or v < 0:
                raise GraphFormatError(
                    f"{path}: line {lineno}: negative vertex id"
                )
            if not (0.0 < p <= 1.0):
                raise GraphFormatError(
                    f"{path}: line {lineno}: probability {fields[2]} outside (0, 1]"
                )
            if (u, v) in seen:
                raise GraphFormatError(
                    f"{path}: line {lineno}: duplicate arc ({u}, {v})"
                )
            seen.add((u, v))
            arcs.append((u, v, p))
            max_id = max(max_id, u, v)
    return UncertainGraph(max_id + 1, arcs)


def save_edge_list(g: UncertainGraph, path) -> None:
    """Write ``g`` in the edge-list format accepted by :func:`load_edge_list`."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, p in g.arcs():
            fh.write(f"{u}\t{v}\t{p!r}\n")


def degenerate(g: UncertainGraph) -> DeterministicGraph:
    """Strip probabilities, keeping the topology."""
    return DeterministicGraph(g.vertex_count, ((u, v) for u, v, _ in g.arcs()))


def sample_world(g: UncertainGraph, rng: random.Random) -> DeterministicGraph:
    """Draw one possible world: each arc kept independently with its probability."""
    kept = [(u, v) for u, v, p in g.arcs() if rng.random() < p]
    return DeterministicGraph(g.vertex_count, kept)


def gen_rmat(
    vertices: int,
    edges: int,
    weights: tuple[float, float, float, float] = RMAT_DEFAULT_WEIGHTS,
    seed: int = 0,
) -> UncertainGraph:
    """Generate a random uncertain graph with the recursive-quadrant (R-MAT) model.

    ``vertices`` must be a power of two.  Each arc is placed by descending
    the adjacency matrix quadrant by quadrant according to ``weights``
    (probabilities for the NW, NE, SW, SE quadrants).  Duplicate arcs are
    re-drawn until ``edges`` distinct arcs exist; arc probabilities are
    uniform on (0, 1].  Output is deterministic for a fixed seed.
    """
    if vertices < 1 or vertices & (vertices - 1):
        raise ValueError(f"vertex count {vertices} is not a power of two")
    if edges < 0:
        raise ValueError("edge count must be non-negative")
    if edges > vertices * vertices:
        raise ValueError(
            f"edge count {edges} exceeds capacity {vertices * vertices}"
        )
    if len(weights) != 4 or any(w < 0 for w in weights):
        raise ValueError("weights must be 4 non-negative numbers")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")

    rng = np.random.default_rng(seed)
    levels = max(1, int(math.log2(vertices))) if vertices > 1 else 0
    codes: set[int] = set()
    needed = edges
    stall_rounds = 0
    while needed > 0:
        batch = max(needed, 64)
        if vertices == 1:
            quad = np.zeros((batch, 0), dtype=np.int64)
        else:
            quad = rng.choice(4, size=(batch, levels), p=np.asarray(weights))
        row_bits = quad >> 1
        col_bits = quad & 1
        place = 1 << np.arange(levels - 1, -1, -1, dtype=np.int64)
        us = row_bits @ place if levels else np.zeros(batch, dtype=np.int64)
        vs = col_bits @ place if levels else np.zeros(batch, dtype=np.int64)
        before = len(codes)
        for u, v in zip(us.tolist(), vs.tolist()):
            if len(codes) == edges:
                break
            codes.add(u * vertices + v)
        gained = len(codes) - before
        needed = edges - len(codes)
        stall_rounds = stall_rounds + 1 if gained == 0 else 0
        if stall_rounds > 200:
            raise RuntimeError(
                "R-MAT generation stalled; weights leave too few reachable cells"
            )
    pairs = sorted(codes)
    probs = 1.0 - rng.random(len(pairs))  # uniform on (0, 1]
    arcs = [
        (code // vertices, code % vertices, float(p))
        for code, p in zip(pairs, probs)
    ]
    return UncertainGraph(vertices, arcs)
