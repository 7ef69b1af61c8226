"""Incremental (1+eps)-approximate single-source shortest paths.

The engine keeps a hierarchy of levels. Each level runs in phases. At phase
start it snapshots an exact shortest-path tree (distances ``d0``) and starts
a fresh set ``S = {s}`` of vertices whose distance may since have dropped.
For every relevant distance scale ``L`` (a power of two) it builds a banded
view of the graph -- a new super-source ``s'`` with an edge ``(s', s, L)``
and umbrella edges ``(s', v, 2L)`` -- and hands it to a barrier-descent
detector. Detectors emit vertices whose distance may have fallen; emitted
vertices join ``S`` and are forwarded to a recursively maintained contracted
graph (exact at the bottom level) that re-estimates their distances:

* EstimateEdge ``(s, v, d0(v))`` when v joins S,
* ShortcutEdge ``(s, v, d0(u) + len)`` for each in-edge (u, v),
* RealEdge ``(u, v, len)`` once both endpoints are in S.

The answer for ``v`` is ``d0(v)`` if v never entered S, else the minimum of
``d0(v)`` and the child's estimate. When any detector terminates (its band
has drifted too far) the whole phase restarts with fresh snapshots. Every
estimate is a true upper bound at all times; the phase/emission machinery
keeps it within ``(1 + eps)`` of the exact distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .barrier import IpmParams
from .detector import DangerDetector
from .graph import DynamicGraph, EdgeKind
from .oracle import ShortestPathTree, dijkstra, tree_path


@dataclass
class EngineConfig:
    epsilon: float = 0.2
    levels: int = 2
    p: int | None = None
    gamma: float = 0.5
    accelerate: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.levels < 0:
            raise ValueError(f"levels must be >= 0, got {self.levels}")

    def child(self) -> "EngineConfig":
        return replace(self, levels=self.levels - 1)


# -- contraction provenance ---------------------------------------------------


@dataclass
class EstimateEdge:
    vertex: int


@dataclass
class ShortcutEdge:
    parent_edge: int


@dataclass
class RealEdge:
    parent_edge: int


class ContractionState:
    """The contracted graph's edge set, derived from (d0, S) on the parent.

    Methods return the child insertions implied by an event; the engine
    feeds them to the child structure and records provenance per child edge
    id, used later to expand child paths into parent paths.
    """

    def __init__(self, parent: DynamicGraph, d0: np.ndarray):
        self.parent = parent
        self.d0 = d0
        self.source = parent.source
        self.S: set[int] = {parent.source}
        self.provenance: list = []

    def _finite(self, v: int) -> bool:
        return math.isfinite(self.d0[v])

    def add_vertex(self, v: int) -> list:
        if v in self.S or v == self.source:
            raise ValueError(f"vertex {v} already contracted")
        g, s = self.parent, self.source
        ops = []
        if self._finite(v):
            ops.append((s, v, int(self.d0[v]), EstimateEdge(v)))
        for e in g.in_edges[v]:
            u = g.tail[e]
            if u == v:
                continue
            if self._finite(u):
                ops.append((s, v, int(self.d0[u]) + g.length[e], ShortcutEdge(e)))
            if u in self.S:
                ops.append((u, v, g.length[e], RealEdge(e)))
        for e in g.out_edges[v]:
            x = g.head[e]
            if x == v or x == s:
                continue
            if x in self.S:
                ops.append((v, x, g.length[e], RealEdge(e)))
        self.S.add(v)
        return ops

    def on_parent_edge(self, e: int) -> list:
        g, s = self.parent, self.source
        u, v = g.tail[e], g.head[e]
        if v == s or u == v:
            return []  # cannot shorten any distance from s
        ops = []
        if v in self.S:
            if self._finite(u):
                ops.append((s, v, int(self.d0[u]) + g.length[e], ShortcutEdge(e)))
            if u in self.S:
                ops.append((u, v, g.length[e], RealEdge(e)))
        return ops


# -- exact bottom level -------------------------------------------------------


class ExactSssp:
    """Exact structure used at the recursion's bottom level."""

    def __init__(self, graph: DynamicGraph):
        self.g = graph
        self._tree: ShortestPathTree | None = None

    def insert(self, u: int, v: int, length) -> None:
        self.g.insert_edge(u, v, length)
        self._tree = None

    def add_vertex(self) -> int:
        self._tree = None
        return self.g.add_vertex()

    def tree(self) -> ShortestPathTree:
        if self._tree is None:
            self._tree = dijkstra(self.g)
        return self._tree

    def query_distance(self, v: int) -> float:
        return float(self.tree().dist[v])

    def query_path(self, v: int) -> list:
        if not math.isfinite(self.tree().dist[v]):
            raise ValueError(f"vertex {v} unreachable")
        return tree_path(self.g, self.tree(), v)

    def estimates(self) -> np.ndarray:
        return self.tree().dist.copy()

    def metrics_snapshot(self) -> dict:
        return {}


# -- the engine ---------------------------------------------------------------


def _ceil_pow2(x: int) -> int:
    return 1 << max(0, (int(x) - 1).bit_length())


def _equilibrium_weight(p: int) -> float:
    """Weight an augmented edge settles at next to an equal-length path.

    Every augmented edge (s, v) of length d(s, v) has an exactly parallel
    alternative: the shortest path itself. Descent sheds flow x onto it
    until the barriers balance, x = (1 - x)^(p+1), leaving the augmented
    weight at (1 - x)^-(p+1) = 1/x even though no distance dropped. The
    danger threshold must sit above this baseline or every vertex emits.
    """
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if mid - (1.0 - mid) ** (p + 1) < 0:
            lo = mid
        else:
            hi = mid
    return 2.0 / (lo + hi)


@dataclass
class _ScaleSlot:
    L: int
    detector: DangerDetector


_COUNTER_KEYS = ("phases", "ipm_steps", "solver_calls", "gradient_updates", "slack_bumps", "recourse")
_MAX_KEYS = ("max_step_ratio", "max_recourse_ratio", "max_crossing_ratio")


class SsspEngine:
    """One approximate level; recursively owns the levels below it."""

    def __init__(self, graph: DynamicGraph, config: EngineConfig, eps_bar: float | None = None):
        if config.levels < 1:
            raise ValueError("SsspEngine needs levels >= 1; use make_sssp for levels == 0")
        self.g = graph
        self.config = config
        self.s = graph.source
        self.W_est = max(max(graph.length, default=1), 1)
        self._fixed_eps_bar = eps_bar
        self._acc = dict.fromkeys(_COUNTER_KEYS, 0)
        self._acc.update(dict.fromkeys(_MAX_KEYS, 0.0))
        self._init_phase()

    # -- phase machinery --

    def _eps_bar(self) -> float:
        if self._fixed_eps_bar is not None:
            return self._fixed_eps_bar
        eps, B = self.config.epsilon, self.config.levels
        # (1 + 5*eps_bar)^B <= 1 + eps: per-level slack compounds across levels
        return ((1 + eps) ** (1 / B) - 1) / 5

    def _init_phase(self) -> None:
        self._acc["phases"] += 1
        g = self.g
        tree = dijkstra(g)
        self.phase_tree = tree
        self.d0 = tree.dist.copy()
        self.eps_bar = self._eps_bar()
        m_eff = max(g.m + g.n, 2)
        # alpha is capped so the danger threshold eps_bar/(10 alpha) clears
        # twice the parallel-path equilibrium weight; p itself depends on
        # alpha, so iterate the pair to its (monotone, small) fixed point
        alpha = m_eff ** (-1 / self.config.levels)
        for _ in range(4):
            p = self.config.p if self.config.p is not None else IpmParams.default_p(alpha)
            cap = self.eps_bar / (20.0 * _equilibrium_weight(p))
            alpha = min(m_eff ** (-1 / self.config.levels), cap)
        self.alpha = alpha

        self._had_unreachable = any(
            not math.isfinite(self.d0[v]) for v in range(g.n) if v != self.s
        )
        ks = {_ceil_pow2(int(self.d0[v])) for v in range(g.n)
              if v != self.s and math.isfinite(self.d0[v]) and self.d0[v] > 0}
        if self._had_unreachable and g.n > 1:
            ks.add(_ceil_pow2(4 * g.n * self.W_est))
        self.scales = [self._build_scale(L) for L in sorted(ks)]

        self.contraction = ContractionState(g, self.d0)
        child_graph = DynamicGraph(g.n, source=self.s)
        if self.config.levels == 1:
            self.child = ExactSssp(child_graph)
        else:
            self.child = SsspEngine(child_graph, self.config.child(), eps_bar=self.eps_bar)
        for slot in self.scales:
            for v in slot.detector.initial_dangerous:
                self._admit(v)

    def _build_scale(self, L: int) -> _ScaleSlot:
        g = self.g
        sg = DynamicGraph(g.n + 1, source=g.n)
        sp = g.n
        sg.insert_edge(sp, self.s, L, kind=EdgeKind.SHORTCUT)
        for v in range(g.n):
            if v != self.s:
                sg.insert_edge(sp, v, 2 * L, kind=EdgeKind.SHORTCUT)
        for e in range(g.m):
            # edges longer than 2L cannot lie on any path shorter than the
            # band ceiling, so the banded view omits them
            if g.length[e] <= 2 * L:
                sg.insert_edge(g.tail[e], g.head[e], g.length[e], kind=g.kind[e])
        params = IpmParams.make(
            alpha=self.alpha,
            epsilon=self.eps_bar,
            m_hint=sg.m + sg.n,
            p=self.config.p,
            gamma=self.config.gamma,
        )
        det = DangerDetector(sg, params, L=L, accelerate=self.config.accelerate)
        return _ScaleSlot(L=L, detector=det)

    def _fold_metrics(self) -> None:
        self._fold_into(self._acc)

    def _fold_into(self, acc: dict) -> None:
        for slot in self.scales:
            met = slot.detector.metrics
            acc["ipm_steps"] += met.ipm_steps
            acc["solver_calls"] += met.solver_calls
            acc["gradient_updates"] += met.gradient_updates
            acc["slack_bumps"] += met.slack_bumps
            acc["recourse"] += met.recourse
            for k, v in slot.detector.bound_ratios().items():
                acc[k] = max(acc[k], v)
        child = self.child.metrics_snapshot()
        for k in _COUNTER_KEYS:
            acc[k] += child.get(k, 0)
        for k in _MAX_KEYS:
            acc[k] = max(acc[k], child.get(k, 0.0))

    def _restart_phase(self) -> None:
        self._fold_metrics()
        self._init_phase()

    # -- updates --

    def insert(self, u: int, v: int, length) -> None:
        eid = self.g.insert_edge(u, v, length)
        if length > self.W_est:
            self.W_est = length
            if self._had_unreachable:
                # the top band was sized for the old maximum length; resize
                self._restart_phase()
                return
        dist = dijkstra(self.g).dist if self.scales else None
        for slot in self.scales:
            if length > 2 * slot.L:
                continue
            # total distance in the banded view, from one shared oracle run:
            # d(s', x) = min(2L, L + d(s, x)) plus L for s itself
            L = slot.L
            total = L + sum(
                min(2 * L, L + int(dist[x]))
                if math.isfinite(dist[x]) else 2 * L
                for x in range(self.g.n) if x != self.s
            )
            rep = slot.detector.insert(u, v, length, total_hint=total)
            if rep.terminated:
                self._restart_phase()
                return
            for d in rep.dangerous:
                self._admit(d)
        for op in self.contraction.on_parent_edge(eid):
            self._child_insert(op)

    def _admit(self, v: int) -> None:
        if v == self.s or v >= self.g.n or v in self.contraction.S:
            return
        for op in self.contraction.add_vertex(v):
            self._child_insert(op)

    def _child_insert(self, op) -> None:
        u, v, length, prov = op
        self.child.insert(u, v, length)
        self.contraction.provenance.append(prov)

    def add_vertex(self) -> int:
        """Grow the vertex set; restarts the phase (bands are sized per n)."""
        vid = self.g.add_vertex()
        self._restart_phase()
        return vid

    # -- queries --

    def query_distance(self, v: int) -> float:
        if v == self.s:
            return 0.0
        d = float(self.d0[v])
        if v in self.contraction.S:
            d = min(d, self.child.query_distance(v))
        return d

    def estimates(self) -> np.ndarray:
        return np.array([self.query_distance(v) for v in range(self.g.n)])

    def query_path(self, v: int) -> list:
        """Parent edge ids of an s -> v path of length <= query_distance(v)."""
        if v == self.s:
            return []
        d0v = float(self.d0[v])
        use_child = v in self.contraction.S and self.child.query_distance(v) < d0v
        if use_child:
            return self._expand(self.child.query_path(v))
        if not math.isfinite(d0v):
            raise ValueError(f"vertex {v} unreachable")
        return tree_path(self.g, self.phase_tree, v)

    def _expand(self, child_edges: list) -> list:
        out: list = []
        for ce in child_edges:
            prov = self.contraction.provenance[ce]
            if isinstance(prov, RealEdge):
                out.append(prov.parent_edge)
            elif isinstance(prov, ShortcutEdge):
                pe = prov.parent_edge
                out.extend(tree_path(self.g, self.phase_tree, self.g.tail[pe]))
                out.append(pe)
            else:
                out.extend(tree_path(self.g, self.phase_tree, prov.vertex))
        return out

    def metrics_snapshot(self) -> dict:
        snap = dict(self._acc)
        self._fold_into(snap)
        return snap


def make_sssp(graph: DynamicGraph, config: EngineConfig):
    if config.levels == 0:
        return ExactSssp(graph)
    return SsspEngine(graph, config)


# -- degree reduction ---------------------------------------------------------


class _Chain:
    """Auxiliary chain absorbing a vertex's surplus in- or out-edges."""

    __slots__ = ("nodes", "counts", "root_count")

    def __init__(self):
        self.nodes: list[int] = []
        self.counts: list[int] = []
        self.root_count = 0


class DegreeReducer:
    """Rewrites insertions so every vertex keeps in- and out-degree <= 3.

    Surplus out-edges of ``v`` hang off a chain of auxiliary vertices
    reached from ``v`` by zero-length edges (and symmetrically for
    in-edges). Distances from the source are preserved exactly. Each
    original insertion becomes at most 3 reduced insertions; original
    vertices keep their ids, auxiliaries are appended.
    """

    def __init__(self, n: int):
        self.n = n
        self.out_chains = [_Chain() for _ in range(n)]
        self.in_chains = [_Chain() for _ in range(n)]

    def _attach(self, chain: _Chain, new_vertex, link) -> tuple[int | None, list]:
        """Pick the chain slot for one more edge; returns (anchor, link ops).

        anchor is None when the edge sits at the root. ``link`` emits the
        zero-length chain edge given (prev_anchor_or_None, new_node).
        """
        ops = []
        if chain.root_count < 1:
            chain.root_count += 1
            return None, ops
        if not chain.nodes or chain.counts[-1] >= 1:
            prev = chain.nodes[-1] if chain.nodes else None
            node = new_vertex()
            chain.nodes.append(node)
            chain.counts.append(0)
            ops.append(link(prev, node))
        chain.counts[-1] += 1
        return chain.nodes[-1], ops

    def map_insert(self, u: int, v: int, length) -> tuple[int, list]:
        """Returns (new vertex count, reduced insertions (tail, head, len))."""
        ops: list = []

        def new_vertex() -> int:
            vid = self.n
            self.n += 1
            return vid

        anchor_u, link_ops = self._attach(
            self.out_chains[u], new_vertex, lambda prev, node: (u if prev is None else prev, node, 0)
        )
        ops.extend(link_ops)
        tail = u if anchor_u is None else anchor_u
        anchor_v, link_ops = self._attach(
            self.in_chains[v], new_vertex, lambda prev, node: (node, v if prev is None else prev, 0)
        )
        ops.extend(link_ops)
        head = v if anchor_v is None else anchor_v
        ops.append((tail, head, length))
        assert len(ops) <= 3
        return self.n, ops


def degree_reduce(g: DynamicGraph) -> tuple[DynamicGraph, list]:
    """Static reduction of ``g``: returns (reduced graph, edge map).

    The edge map gives, per original edge id, the reduced edge id carrying
    its length. Original vertex ids are preserved.
    """
    red = DegreeReducer(g.n)
    out = DynamicGraph(g.n, source=g.source)
    edge_map = []
    for e in range(g.m):
        n_new, ops = red.map_insert(g.tail[e], g.head[e], g.length[e])
        while out.n < n_new:
            out.add_vertex()
        for u, v, length in ops[:-1]:
            out.insert_edge(u, v, length, kind=EdgeKind.SHORTCUT)
        u, v, length = ops[-1]
        edge_map.append(out.insert_edge(u, v, length, kind=g.kind[e]))
    return out, edge_map


class DegreeReducedSssp:
    """Engine wrapper running on the degree-reduced image of the graph."""

    def __init__(self, n: int, source: int, config: EngineConfig):
        self.reducer = DegreeReducer(n)
        self.g = DynamicGraph(n, source=source)
        self.rg = DynamicGraph(n, source=source)
        self.engine = make_sssp(self.rg, config)
        self.edge_map: list[int] = []  # original edge id -> reduced edge id
        self._rev: dict[int, int] = {}

    def insert(self, u: int, v: int, length) -> None:
        self.g.insert_edge(u, v, length)
        n_new, ops = self.reducer.map_insert(u, v, length)
        while self.rg.n < n_new:
            self.engine.add_vertex()
        for tu, tv, tl in ops[:-1]:
            self.engine.insert(tu, tv, tl)
        tu, tv, tl = ops[-1]
        rid = self.rg.m
        self.engine.insert(tu, tv, tl)
        self._rev[rid] = len(self.edge_map)
        self.edge_map.append(rid)

    def query_distance(self, v: int) -> float:
        return self.engine.query_distance(v)

    def query_path(self, v: int) -> list:
        # zero-length auxiliary edges drop out; length is unchanged
        return [self._rev[e] for e in self.engine.query_path(v) if e in self._rev]

    def estimates(self) -> np.ndarray:
        return self.engine.estimates()[: self.g.n]

    def metrics_snapshot(self) -> dict:
        return self.engine.metrics_snapshot()
