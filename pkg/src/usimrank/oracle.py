"""Brute-force ground truth by possible-world enumeration.

Everything here enumerates all 2^|E| worlds of an uncertain graph, so it
only works on small graphs (the default cap is 20 arcs).  It exists to
test the production code paths and is never called by them.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .graph import DeterministicGraph, UncertainGraph
from .transmat import TransMatrix

__all__ = [
    "EnumerationCapError",
    "enumerate_worlds",
    "enumerated_walk_probability",
    "exact_kstep",
    "exact_kstep_all",
    "exact_meeting",
    "exact_simrank_uncertain",
    "deterministic_simrank_series",
]

DEFAULT_ARC_CAP = 20


class EnumerationCapError(ValueError):
    """Graph has too many arcs to enumerate its worlds."""


def _check_cap(g: UncertainGraph, arc_cap: int) -> None:
    if g.arc_count > arc_cap:
        raise EnumerationCapError(
            f"graph has {g.arc_count} arcs; enumeration is capped at {arc_cap}"
        )


def enumerate_worlds(
    g: UncertainGraph, arc_cap: int = DEFAULT_ARC_CAP
) -> Iterator[tuple[DeterministicGraph, float]]:
    """Yield every possible world with its probability.

    A world keeps an arbitrary subset of the arcs; its probability is the
    product of kept-arc probabilities times the complement product over
    dropped arcs.  The probabilities over all 2^|E| worlds sum to 1.
    """
    _check_cap(g, arc_cap)
    arc_list = list(g.arcs())
    m = len(arc_list)
    n = g.vertex_count
    for mask in range(1 << m):
        prob = 1.0
        kept = []
        for i, (u, v, p) in enumerate(arc_list):
            if mask >> i & 1:
                prob *= p
                kept.append((u, v))
            else:
                prob *= 1.0 - p
        yield DeterministicGraph(n, kept), prob


def enumerated_walk_probability(
    g: UncertainGraph, walk: tuple[int, ...], arc_cap: int = DEFAULT_ARC_CAP
) -> float:
    """Walk probability as the expectation over worlds.

    For each world containing every arc of the walk, the walk's chance is
    the product over steps of 1/out-degree at the step's source vertex in
    that world; worlds missing an arc contribute 0.
    """
    steps = [(walk[i], walk[i + 1]) for i in range(len(walk) - 1)]
    for u, v in steps:
        if not g.has_arc(u, v):
            raise ValueError(f"({u}, {v}) is not an arc of the graph")
    total = 0.0
    for world, prob in enumerate_worlds(g, arc_cap):
        if prob == 0.0:
            continue
        if not all(world.has_arc(u, v) for u, v in steps):
            continue
        q = prob
        for u, _ in steps:
            q /= world.out_degree(u)
        total += q
    return total


def exact_kstep_all(
    g: UncertainGraph, k_max: int, arc_cap: int = DEFAULT_ARC_CAP
) -> list[TransMatrix]:
    """Exact k-step transition matrices for k = 1..k_max, in one pass.

    Each world contributes its probability times the k-th power of its
    row-normalized adjacency matrix (rows of dangling vertices are zero,
    so a walk that reaches them dies).
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n = g.vertex_count
    acc = [np.zeros((n, n)) for _ in range(k_max)]
    for world, prob in enumerate_worlds(g, arc_cap):
        if prob == 0.0:
            continue
        A = world.transition_matrix()
        P = A
        acc[0] += prob * P
        for k in range(1, k_max):
            P = P @ A
            acc[k] += prob * P
    return [TransMatrix(k + 1, acc[k]) for k in range(k_max)]


def exact_kstep(
    g: UncertainGraph, k: int, arc_cap: int = DEFAULT_ARC_CAP
) -> TransMatrix:
    """Exact k-step transition matrix by world enumeration."""
    return exact_kstep_all(g, k, arc_cap)[-1]


def exact_meeting(
    g: UncertainGraph, u: int, v: int, k: int, arc_cap: int = DEFAULT_ARC_CAP
) -> float:
    """Probability that independent k-step walks from u and v share a vertex.

    Step 0 is the identity: the walks "meet" iff u == v.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0 if u == v else 0.0
    W = exact_kstep(g, k, arc_cap)
    return float(np.dot(W.row(u), W.row(v)))


def exact_simrank_uncertain(
    g: UncertainGraph,
    u: int,
    v: int,
    n: int,
    c: float,
    arc_cap: int = DEFAULT_ARC_CAP,
) -> float:
    """Truncated SimRank on the uncertain graph, fully by enumeration.

    The n-th value discounts a meeting after k steps by c^k, keeps a
    (1 - c) mass on each truncation level below n, and puts the full c^n
    weight on the final term.
    """
    if not (0.0 < c < 1.0):
        raise ValueError("decay factor c must be in (0, 1)")
    if n < 1:
        raise ValueError("n must be >= 1")
    mats = exact_kstep_all(g, n, arc_cap)
    meet = [1.0 if u == v else 0.0]
    meet += [float(np.dot(m.row(u), m.row(v))) for m in mats]
    s = c**n * meet[n]
    for k in range(n):
        s += (1.0 - c) * c**k * meet[k]
    return s


def deterministic_simrank_series(
    G: DeterministicGraph, n: int, c: float
) -> np.ndarray:
    """Truncated SimRank matrix of a deterministic graph.

    Built directly from the meeting-probability series: with W the
    row-normalized adjacency matrix, the k-step meeting matrix is
    W^k (W^k)^T and the n-th SimRank matrix is

        c^n W^n (W^n)^T + (1 - c) * sum_{k=0}^{n-1} c^k W^k (W^k)^T.

    n = 0 returns the identity.
    """
    if not (0.0 < c < 1.0):
        raise ValueError("decay factor c must be in (0, 1)")
    if n < 0:
        raise ValueError("n must be >= 0")
    nv = G.vertex_count
    S = np.eye(nv) if n == 0 else (1.0 - c) * np.eye(nv)
    if n == 0:
        return S
    A = G.transition_matrix()
    P = np.eye(nv)
    for k in range(1, n + 1):
        P = P @ A
        coeff = c**k if k == n else (1.0 - c) * c**k
        S += coeff * (P @ P.T)
    return S
