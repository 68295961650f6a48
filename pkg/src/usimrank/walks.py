"""Exact walk probabilities on uncertain graphs.

On a deterministic graph the probability of a walk is the product of its
one-step transition probabilities.  On an uncertain graph that product is
wrong whenever the walk revisits a vertex, because every visit to a vertex
sees the same realized set of out-arcs.  The correct value factorizes over
the *distinct* vertices of the walk: each vertex v contributes the
expectation, over realized worlds that contain all of the walk's out-arcs
of v, of (1 / out-degree)^(number of departures from v).
"""

from __future__ import annotations

import math
from collections.abc import Collection

__all__ = [
    "Walk",
    "validate_walk",
    "walk_profile",
    "out_degree_distribution",
    "vertex_factor",
    "walk_probability",
    "one_step_probability",
    "extend_walk_probability",
    "girth",
]

# A walk is the tuple of visited vertices; its length is the number of arcs.
Walk = tuple[int, ...]


def validate_walk(g, walk: Walk) -> None:
    """Reject sequences whose consecutive pairs are not arcs of ``g``."""
    if len(walk) == 0:
        raise ValueError("a walk must contain at least its start vertex")
    for i in range(len(walk) - 1):
        if not g.has_arc(walk[i], walk[i + 1]):
            raise ValueError(f"({walk[i]}, {walk[i + 1]}) is not an arc")


def walk_profile(walk: Walk) -> dict[int, tuple[set[int], int]]:
    """Per-vertex view of a walk: (out-neighbors used, departure count).

    The departure count of v is how many arcs of the walk leave v; it can
    exceed the number of distinct targets when the walk repeats an arc.
    """
    profile: dict[int, tuple[set[int], int]] = {}
    for v in walk:
        if v not in profile:
            profile[v] = (set(), 0)
    for i in range(len(walk) - 1):
        u = walk[i]
        targets, count = profile[u]
        targets.add(walk[i + 1])
        profile[u] = (targets, count + 1)
    return profile


def out_degree_distribution(g, v: int, forced: Collection[int] = ()) -> list[float]:
    """Distribution of how many non-forced out-arcs of ``v`` are realized.

    ``forced`` is a set of out-neighbors whose arcs are conditioned to
    exist; the remaining out-arcs of v are independent coin flips.  Entry
    x of the result is the probability that exactly x of them exist.  The
    vector has length (out-degree - |forced|) + 1 and sums to 1.
    """
    out = g.out_dict(v)
    forced_set = set(forced)
    for w in forced_set:
        if w not in out:
            raise ValueError(f"forced target {w} is not an out-neighbor of {v}")
    probs = [p for w, p in out.items() if w not in forced_set]
    # Bernoulli-sum DP over the free arcs; two rolling rows keep memory
    # at O(out-degree).
    row = [1.0]
    for p in probs:
        nxt = [0.0] * (len(row) + 1)
        for j, r in enumerate(row):
            nxt[j] += r * (1.0 - p)
            nxt[j + 1] += r * p
        row = nxt
    return row


def _inv(x: int) -> float:
    return 1.0 / x if x else 1.0


def vertex_factor(
    g, v: int, walk_out: Collection[int], visit_count: int
) -> float:
    """Contribution of one vertex to a walk's probability.

    ``walk_out`` is the set of v's out-neighbors the walk uses and
    ``visit_count`` the number of departures from v.  The factor is the
    product of the used arcs' probabilities times the expectation of
    (1 / realized out-degree)^visit_count over the free out-arcs of v.
    A terminal vertex (visit_count 0, no used arcs) contributes exactly 1.
    """
    walk_out = set(walk_out)
    if visit_count < 0:
        raise ValueError("visit_count must be >= 0")
    if visit_count == 0:
        if walk_out:
            raise ValueError("a vertex with no departures cannot use out-arcs")
        return 1.0
    if not walk_out:
        raise ValueError("a departed-from vertex must use at least one out-arc")
    if visit_count < len(walk_out):
        raise ValueError("visit_count cannot be below the number of used out-arcs")
    out = g.out_dict(v)
    forced_product = 1.0
    for w in walk_out:
        try:
            forced_product *= out[w]
        except KeyError:
            raise ValueError(f"{w} is not an out-neighbor of {v}") from None
    dist = out_degree_distribution(g, v, walk_out)
    base = len(walk_out)
    expect = sum(r * _inv(x + base) ** visit_count for x, r in enumerate(dist))
    return forced_product * expect


def walk_probability(g, walk: Walk) -> float:
    """Probability that a random walk in a random world follows ``walk``.

    Equals the expectation over possible worlds of the deterministic walk
    probability, and factorizes as the product of :func:`vertex_factor`
    over the distinct vertices of the walk.
    """
    validate_walk(g, walk)
    p = 1.0
    for v, (targets, count) in walk_profile(walk).items():
        p *= vertex_factor(g, v, targets, count)
    return p


def one_step_probability(g, u: int, v: int) -> float:
    """Probability that a one-step walk from u lands on v."""
    return vertex_factor(g, u, {v}, 1)


def extend_walk_probability(
    g, walk: Walk, prob: float, last_factor: float, nxt: int
) -> tuple[float, float]:
    """Extend a walk by one vertex, updating its probability incrementally.

    ``prob`` must be the walk's probability and ``last_factor`` the
    :func:`vertex_factor` of its last vertex.  When no vertex of the
    extended walk departs twice, each vertex factor is a plain one-step
    probability and the update is a single multiplication; otherwise only
    the old last vertex's factor changes, so the update is one factor
    ratio.  Returns the extended walk's probability and the factor of its
    new last vertex.
    """
    last = walk[-1]
    if not g.has_arc(last, nxt):
        raise ValueError(f"({last}, {nxt}) is not an arc")
    extended = walk + (nxt,)
    profile = walk_profile(extended)
    if all(count <= 1 for _, count in profile.values()):
        new_prob = prob * one_step_probability(g, last, nxt)
    else:
        new_targets, new_count = profile[last]
        new_last_factor = vertex_factor(g, last, new_targets, new_count)
        new_prob = prob * new_last_factor / last_factor
    tail_targets, tail_count = profile[nxt]
    tail_factor = vertex_factor(g, nxt, tail_targets, tail_count)
    return new_prob, tail_factor


def girth(g):
    """Length of the shortest directed cycle, or ``math.inf`` if acyclic.

    Runs a BFS from every vertex over the support graph (arc probabilities
    ignored); a self-loop gives girth 1.
    """
    n = g.vertex_count
    best = math.inf
    for s in range(n):
        dist = {s: 0}
        queue = [s]
        while queue:
            nxt_queue = []
            for u in queue:
                du = dist[u]
                if du + 1 >= best:
                    continue
                for w in g.out_targets(u):
                    if w == s:
                        best = min(best, du + 1)
                    elif w not in dist:
                        dist[w] = du + 1
                        nxt_queue.append(w)
            queue = nxt_queue
    return best
