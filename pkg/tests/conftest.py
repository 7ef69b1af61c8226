"""Shared helpers: stream generation and an independent distance oracle."""

from __future__ import annotations

import math
import random

import networkx as nx

from ipm_sssp.graph import DynamicGraph


def random_stream(seed: int, n: int, steps: int, wmax: int = 16) -> list:
    """Deterministic list of (u, v, w) insertions, no self-loops."""
    rng = random.Random(seed)
    out = []
    for _ in range(steps):
        u = rng.randrange(n)
        v = rng.randrange(n)
        while v == u:
            v = rng.randrange(n)
        out.append((u, v, rng.randint(1, wmax)))
    return out


def nx_distances(g: DynamicGraph) -> dict:
    """Distances from the source via networkx, independent of the package."""
    h = nx.MultiDiGraph()
    h.add_nodes_from(range(g.n))
    for e in range(g.m):
        h.add_edge(g.tail[e], g.head[e], weight=g.length[e])
    return nx.single_source_dijkstra_path_length(h, g.source, weight="weight")


def nx_distances_from_edges(n: int, source: int, edges: list) -> dict:
    h = nx.MultiDiGraph()
    h.add_nodes_from(range(n))
    for u, v, w in edges:
        h.add_edge(u, v, weight=w)
    return nx.single_source_dijkstra_path_length(h, source, weight="weight")


def path_length(g: DynamicGraph, edge_ids: list) -> int:
    return sum(g.length[e] for e in edge_ids)


def assert_valid_path(g: DynamicGraph, edge_ids: list, target: int) -> None:
    """The edges must chain from the source to ``target`` in ``g``."""
    at = g.source
    for e in edge_ids:
        assert 0 <= e < g.m, f"edge id {e} out of range"
        assert g.tail[e] == at, f"edge {e} starts at {g.tail[e]}, expected {at}"
        at = g.head[e]
    assert at == target, f"path ends at {at}, expected {target}"


def is_inf(x: float) -> bool:
    return math.isinf(x) and x > 0
