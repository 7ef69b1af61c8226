"""Exact shortest-path ground truth.

Deliberately the dumb, exact baseline: binary-heap Dijkstra recomputed from
scratch whenever asked. Distances are exact for integer lengths (values stay
far below 2**53). A Bellman-Ford variant is kept as an independent oracle for
the test suite.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .graph import DynamicGraph


@dataclass
class ShortestPathTree:
    dist: np.ndarray  # exact distances, +inf when unreachable
    parent_edge: list  # edge id into each vertex, None at source / unreachable
    step: int = 0  # caller-supplied snapshot index


def dijkstra(g: DynamicGraph, s: int | None = None) -> ShortestPathTree:
    """Exact SSSP tree; ties broken toward the smaller vertex id."""
    if s is None:
        s = g.source
    for ell in g.length:
        if ell < 0:
            raise ValueError("negative edge length")
    dist = np.full(g.n, math.inf)
    parent: list = [None] * g.n
    dist[s] = 0.0
    done = [False] * g.n
    heap: list[tuple[float, int]] = [(0.0, s)]
    tails, heads, lengths = g.tail, g.head, g.length
    while heap:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for eid in g.out_edges[v]:
            w = heads[eid]
            if done[w]:
                continue
            nd = d + lengths[eid]
            if nd < dist[w]:
                dist[w] = nd
                parent[w] = eid
                heapq.heappush(heap, (nd, w))
    return ShortestPathTree(dist=dist, parent_edge=parent)


def bellman_ford(g: DynamicGraph, s: int | None = None) -> np.ndarray:
    """Independent distance oracle for cross-checking dijkstra in tests."""
    if s is None:
        s = g.source
    dist = np.full(g.n, math.inf)
    dist[s] = 0.0
    for _ in range(max(g.n - 1, 1)):
        changed = False
        for eid in range(g.m):
            u, v = g.tail[eid], g.head[eid]
            if dist[u] + g.length[eid] < dist[v]:
                dist[v] = dist[u] + g.length[eid]
                changed = True
        if not changed:
            break
    return dist


def tree_path(g: DynamicGraph, tree: ShortestPathTree, v: int) -> list[int]:
    """Edge ids of the tree path from the source to ``v`` (in path order)."""
    if math.isinf(tree.dist[v]):
        raise ValueError(f"vertex {v} unreachable")
    path: list[int] = []
    while tree.parent_edge[v] is not None:
        eid = tree.parent_edge[v]
        path.append(eid)
        v = g.tail[eid]
    path.reverse()
    return path


def assert_tree_valid(g: DynamicGraph, tree: ShortestPathTree, s: int | None = None) -> None:
    """Feasibility and tightness of the tree, exact."""
    if s is None:
        s = g.source
    dist = tree.dist
    assert dist[s] == 0.0
    for eid in range(g.m):
        u, v = g.tail[eid], g.head[eid]
        if not math.isinf(dist[u]):
            assert dist[v] <= dist[u] + g.length[eid], f"edge {eid} violates feasibility"
    for v in range(g.n):
        if v == s or math.isinf(dist[v]):
            continue
        total = sum(g.length[eid] for eid in tree_path(g, tree, v))
        assert total == dist[v], f"tree path to {v} not tight"


def total_distance(g: DynamicGraph, s: int | None = None):
    """Sum of exact distances to every vertex other than the source."""
    if s is None:
        s = g.source
    dist = dijkstra(g, s).dist
    tot = 0
    for v in range(g.n):
        if v == s:
            continue
        if math.isinf(dist[v]):
            raise ValueError(f"vertex {v} unreachable from {s}")
        tot += int(dist[v]) if float(dist[v]).is_integer() else dist[v]
    return tot


def threshold_watch(totals, F, alpha: float):
    """First index with ``totals[i] < (1 - alpha/2) * F``, or None.

    Expects the nonincreasing totals of an incremental graph.
    """
    prev = math.inf
    cutoff = (1.0 - alpha / 2.0) * F
    for i, t in enumerate(totals):
        if t > prev:
            raise ValueError(f"totals increased at index {i}")
        prev = t
        if t < cutoff:
            return i
    return None
