"""SimRank evaluation over materialized transition matrices.

The n-th SimRank value between u and v combines the probabilities that
two independent random walks from u and v occupy the same vertex after
k steps, geometrically discounted by a decay factor c:

    value = c^n * m(n)  +  (1 - c) * sum_{k=0}^{n-1} c^k * m(k)

with m(0) = 1 iff u == v.  The coefficients sum to 1, so the value always
lies in [0, 1], and truncating at n costs at most c^(n+1).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .graph import UncertainGraph
from .transmat import (
    DEFAULT_BUDGET_BYTES,
    DEFAULT_K_MAX,
    MatrixStore,
    trans_pr,
)

__all__ = [
    "SimEstimate",
    "convergence_bound",
    "meeting_prob_exact",
    "exact_meeting_from_store",
    "simrank_baseline",
]


@dataclass
class SimEstimate:
    """A SimRank value with the parameters that produced it.

    ``bound`` is the a-priori absolute error bound when one is defined
    for the method; ``wall_ms`` the wall-clock cost of the query.
    """

    value: float
    method: str
    n: int
    c: float
    N: int | None = None
    l: int | None = None
    bound: float | None = None
    wall_ms: float = 0.0

    def __post_init__(self):
        if not (-1e-12 <= self.value <= 1.0 + 1e-12):
            raise ValueError(f"similarity {self.value} outside [0, 1]")
        if self.bound is not None and self.bound < 0:
            raise ValueError("error bound must be non-negative")


def convergence_bound(n: int, c: float) -> float:
    """Truncation error bound of the n-th SimRank value: c^(n+1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 < c < 1.0):
        raise ValueError("decay factor c must be in (0, 1)")
    return c ** (n + 1)


def meeting_prob_exact(row_u, row_v) -> float:
    """Probability two walks land on the same vertex, from their k-step rows.

    Both arguments are the full length-|V| vectors of k-step transition
    probabilities out of u and v; the meeting probability is their dot
    product over target vertices.
    """
    row_u = np.asarray(row_u, dtype=np.float64)
    row_v = np.asarray(row_v, dtype=np.float64)
    if row_u.shape != row_v.shape or row_u.ndim != 1:
        raise ValueError("row vectors must be one-dimensional and equal-length")
    return float(np.dot(row_u, row_v))


def exact_meeting_from_store(store: MatrixStore, k: int, u: int, v: int) -> float:
    """k-step meeting probability from a matrix store; step 0 is the identity."""
    if k == 0:
        return 1.0 if u == v else 0.0
    return meeting_prob_exact(store.row(k, u), store.row(k, v))


def _combine(c: float, n: int, meetings) -> float:
    """Discounted combination of the per-step meeting probabilities 0..n."""
    s = c**n * meetings[n]
    for k in range(n):
        s += (1.0 - c) * c**k * meetings[k]
    return min(1.0, max(0.0, s))


def simrank_baseline(
    g: UncertainGraph,
    u: int,
    v: int,
    n: int,
    c: float,
    store: MatrixStore | None = None,
    *,
    k_max: int = DEFAULT_K_MAX,
    budget_bytes: int = DEFAULT_BUDGET_BYTES,
) -> SimEstimate:
    """Exact n-th SimRank value via materialized transition matrices.

    Materializes steps 1..n into ``store`` (or a fresh in-memory store)
    unless they are already present.  The recorded bound is the truncation
    bound c^(n+1); the value itself is exact for the given n.
    """
    start = time.perf_counter()
    _check_query(g, u, v, n, c)
    if store is None:
        store = MatrixStore()
    if not all(store.has(k) for k in range(1, n + 1)):
        trans_pr(g, n, store, k_max=max(k_max, n), budget_bytes=budget_bytes)
    meetings = [exact_meeting_from_store(store, k, u, v) for k in range(n + 1)]
    value = _combine(c, n, meetings)
    return SimEstimate(
        value=value,
        method="baseline",
        n=n,
        c=c,
        bound=convergence_bound(n, c),
        wall_ms=(time.perf_counter() - start) * 1e3,
    )


def _check_query(g, u: int, v: int, n: int, c: float) -> None:
    if not (0 <= u < g.vertex_count and 0 <= v < g.vertex_count):
        raise ValueError(f"vertex pair ({u}, {v}) out of range")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 < c < 1.0):
        raise ValueError("decay factor c must be in (0, 1)")
