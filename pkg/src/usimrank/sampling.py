"""Monte-Carlo SimRank estimation via lazily instantiated worlds.

Sampling a whole possible world per walk would cost O(|E|); instead each
walk realizes the world lazily.  The first time a walk visits a vertex it
flips every out-arc once and freezes the outcome; later visits within the
same walk reuse the frozen arcs but re-choose the successor uniformly at
random among them.  A vertex whose frozen arc set is empty kills the walk.
Walks are independent of each other: the frozen state is per walk.
"""

from __future__ import annotations

import math
import random
import time

from .graph import UncertainGraph
from .simrank import SimEstimate, _check_query, _combine
from .walks import Walk

__all__ = [
    "LazyWorld",
    "sample_walk",
    "sample_walks",
    "estimate_meeting",
    "required_samples",
    "sampling_bound",
    "simrank_sampling",
]


class LazyWorld:
    """Per-walk frozen view of one possible world.

    Out-arcs of a vertex are realized on first access and reused for
    every later access, so revisits of a vertex see the same arc set.
    """

    __slots__ = ("_g", "_rng", "_frozen")

    def __init__(self, g: UncertainGraph, rng: random.Random):
        self._g = g
        self._rng = rng
        self._frozen: dict[int, list[int]] = {}

    def options(self, v: int) -> list[int]:
        got = self._frozen.get(v)
        if got is None:
            rnd = self._rng.random
            got = [w for w, p in self._g.out_dict(v).items() if rnd() < p]
            self._frozen[v] = got
        return got


def sample_walk(g: UncertainGraph, start: int, n: int, rng: random.Random) -> Walk:
    """One random walk of up to n steps in a lazily realized world.

    Each step chooses uniformly among the current vertex's frozen
    instantiated arcs; the walk ends early if there are none.
    """
    if n < 1:
        raise ValueError("walk length must be >= 1")
    world = LazyWorld(g, rng)
    walk = [start]
    v = start
    for _ in range(n):
        options = world.options(v)
        if not options:
            break
        v = options[rng.randrange(len(options))] if len(options) > 1 else options[0]
        walk.append(v)
    return tuple(walk)


def sample_walks(
    g: UncertainGraph, start: int, n: int, count: int, rng: random.Random
) -> list[Walk]:
    """``count`` independent walks from ``start``."""
    return [sample_walk(g, start, n, rng) for _ in range(count)]


def estimate_meeting(walks_u: list[Walk], walks_v: list[Walk], k: int) -> float:
    """Fraction of paired walks occupying the same vertex at step k.

    A walk shorter than k steps occupies nothing at step k and never
    counts as a meeting.
    """
    if len(walks_u) != len(walks_v):
        raise ValueError("need equally many walks from both start vertices")
    if not walks_u:
        raise ValueError("need at least one walk per side")
    if k < 0:
        raise ValueError("step index must be >= 0")
    hits = 0
    for wu, wv in zip(walks_u, walks_v):
        if len(wu) > k and len(wv) > k and wu[k] == wv[k]:
            hits += 1
    return hits / len(walks_u)


def required_samples(epsilon: float, delta: float) -> int:
    """Walks per side so each meeting estimate is within ``epsilon`` of its
    mean with probability at least 1 - delta (Chernoff bound)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must be in (0, 1)")
    return math.ceil(3.0 / (epsilon * epsilon) * math.log(2.0 / delta))


def sampling_bound(n: int, c: float, epsilon: float) -> float:
    """A-priori absolute error bound of the sampled value: (c - c^n) * epsilon."""
    return (c - c**n) * epsilon


def simrank_sampling(
    g: UncertainGraph,
    u: int,
    v: int,
    n: int,
    c: float,
    N: int | None = None,
    rng: random.Random | None = None,
    *,
    epsilon: float | None = None,
    delta: float | None = None,
) -> SimEstimate:
    """Estimate the n-th SimRank value from N sampled walks per side.

    Pass either ``N`` directly or an ``(epsilon, delta)`` accuracy target,
    in which case N comes from :func:`required_samples` and the estimate
    records the matching a-priori bound.  The step-0 term is the exact
    indicator of u == v; dead walks contribute no meetings at the steps
    they no longer reach.
    """
    start_time = time.perf_counter()
    _check_query(g, u, v, n, c)
    if (epsilon is None) != (delta is None):
        raise ValueError("epsilon and delta must be given together")
    bound = None
    if epsilon is not None:
        N = required_samples(epsilon, delta)
        bound = sampling_bound(n, c, epsilon)
    if N is None or N < 1:
        raise ValueError("sample count N must be >= 1")
    if rng is None:
        rng = random.Random()
    walks_u = sample_walks(g, u, n, N, rng)
    walks_v = sample_walks(g, v, n, N, rng)
    meetings = [1.0 if u == v else 0.0]
    meetings += [estimate_meeting(walks_u, walks_v, k) for k in range(1, n + 1)]
    return SimEstimate(
        value=_combine(c, n, meetings),
        method="sampling",
        n=n,
        c=c,
        N=N,
        bound=bound,
        wall_ms=(time.perf_counter() - start_time) * 1e3,
    )
