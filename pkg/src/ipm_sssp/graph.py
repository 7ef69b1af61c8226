"""Insertion-only directed multigraph and the incidence conventions.

Sign conventions, fixed here and relied on everywhere else:

* ``divergence(v)`` is flow leaving ``v`` minus flow entering ``v``, so one
  unit on every edge of a star out of ``s`` gives ``(n-1, -1, ..., -1)``.
* ``potential_drop(phi, e) = phi(u) - phi(v)`` for an edge ``e = (u, v)``,
  so a feasible shortest-path potential satisfies
  ``phi(v) - phi(u) <= length(e)`` on every edge.

Under these choices ``sum_e f_e * potential_drop(phi, e)`` equals
``sum_v divergence(f)(v) * phi(v)`` (adjointness of the incidence matrix and
its transpose).

Edge vectors and vertex vectors are plain numpy float arrays, indexed by the
dense edge / vertex ids owned by :class:`DynamicGraph`.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class EdgeKind(Enum):
    ORIGINAL = "original"
    AUGMENTED = "augmented"
    SHORTCUT = "shortcut"


class DynamicGraph:
    """Directed multigraph supporting only edge insertions.

    Edge ids are dense and stable: the i-th inserted edge has id ``i``.
    Parallel edges are kept distinct. Lengths are nonnegative; ORIGINAL
    edges are expected to carry positive integer lengths, SHORTCUT edges
    may be zero-length auxiliaries, AUGMENTED edges are the detector's
    source-to-vertex distance edges.
    """

    def __init__(self, n: int, source: int = 0):
        if n < 1:
            raise ValueError(f"vertex count must be >= 1, got {n}")
        if not 0 <= source < n:
            raise ValueError(f"source {source} out of range for n={n}")
        self.n = n
        self.source = source
        self.tail: list[int] = []
        self.head: list[int] = []
        self.length: list = []
        self.kind: list[EdgeKind] = []
        self.out_edges: list[list[int]] = [[] for _ in range(n)]
        self.in_edges: list[list[int]] = [[] for _ in range(n)]

    @property
    def m(self) -> int:
        return len(self.tail)

    def insert_edge(self, u: int, v: int, length, kind: EdgeKind = EdgeKind.ORIGINAL) -> int:
        if not 0 <= u < self.n:
            raise ValueError(f"tail {u} out of range for n={self.n}")
        if not 0 <= v < self.n:
            raise ValueError(f"head {v} out of range for n={self.n}")
        if length < 0:
            raise ValueError(f"negative length {length}")
        eid = len(self.tail)
        self.tail.append(u)
        self.head.append(v)
        self.length.append(length)
        self.kind.append(kind)
        self.out_edges[u].append(eid)
        self.in_edges[v].append(eid)
        return eid

    def add_vertex(self) -> int:
        """Append an isolated vertex and return its id."""
        vid = self.n
        self.n += 1
        self.out_edges.append([])
        self.in_edges.append([])
        return vid

    def edge(self, e: int) -> tuple[int, int]:
        return self.tail[e], self.head[e]

    def divergence(self, f) -> np.ndarray:
        """Net outflow per vertex for the edge vector ``f``."""
        f = np.asarray(f, dtype=float)
        if f.shape != (self.m,):
            raise ValueError(f"flow has shape {f.shape}, expected ({self.m},)")
        div = np.zeros(self.n)
        np.add.at(div, self.tail, f)
        np.subtract.at(div, self.head, f)
        return div

    def potential_drop(self, phi, e: int) -> float:
        """``phi(u) - phi(v)`` for edge ``e = (u, v)``."""
        return float(phi[self.tail[e]] - phi[self.head[e]])

    def is_circulation(self, delta, tol: float) -> bool:
        return bool(np.max(np.abs(self.divergence(delta)), initial=0.0) <= tol)

    def copy(self) -> "DynamicGraph":
        g = DynamicGraph(self.n, self.source)
        g.tail = list(self.tail)
        g.head = list(self.head)
        g.length = list(self.length)
        g.kind = list(self.kind)
        g.out_edges = [list(a) for a in self.out_edges]
        g.in_edges = [list(a) for a in self.in_edges]
        return g
