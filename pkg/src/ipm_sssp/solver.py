"""Exact min-ratio cycle solver behind the detector's step interface.

The solver maintains a flow ``f`` and answers ApplyCycle calls: either it
finds a circulation ``Delta`` with ``g^T Delta / ||W Delta||_1 <= -q`` and
pushes it (returning the set ``E'`` of edges whose flow it changed), or it
certifies that no such circulation exists and hands back dual potentials
``phi`` with ``|g_e + phi(u) - phi(v)| <= q * w_e`` on every edge.

Reference algorithm: a circulation of ratio ``<= -q`` exists iff the
bidirected residual graph (every edge traversable forward at cost ``g_e``
and backward at cost ``-g_e``, both at weight ``w_e``) contains a cycle with
``sum(cost + q * weight) < 0``. One Bellman-Ford negative-cycle detection
answers that; when no negative cycle exists the converged distance labels
are exactly the dual potentials. This is an exact solver: quality factor 1.

Cycle magnitudes are uniform, ``Gamma / sum(w_e over the cycle)`` per edge,
so the pushed circulation has ``||W Delta||_1 = Gamma``. A caller-provided
``step_scale`` hook may enlarge (never shrink) the push along the found
cycle; without it every push is exactly the conformance-mode step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ContractViolation(RuntimeError):
    """An edge was updated without appearing in the last returned set E'."""


@dataclass
class DualCertificate:
    phi: np.ndarray  # vertex potentials, phi[source] == 0
    beta: float  # max_e |g_e + phi(u) - phi(v)| / w_e, <= q


@dataclass
class Applied:
    edge_ids: list  # cycle edges, in traversal order
    deltas: list  # signed flow change actually applied per edge
    flows: dict  # edge id -> exact maintained flow after the push
    returned: list  # the set E' (here: the cycle edges)
    ratio: float  # g~^T Delta / ||W~ Delta||_1 of the found cycle
    scale: float  # enlargement applied on top of the base step


@dataclass
class Certified:
    lambda_star: float  # certified lower bound on any circulation's ratio
    dual: DualCertificate


@dataclass
class _Edge:
    tail: int
    head: int
    w: float
    g: float
    ell: float
    f: float


class SolverMirror:
    """Min-ratio cycle solver state (Definition-3.7-style interface)."""

    def __init__(
        self,
        n: int,
        source: int,
        q: float,
        Gamma: float,
        eps_acc: float,
        step_scale=None,
    ):
        if not 0 < q < 1:
            raise ValueError(f"need 0 < q < 1, got {q}")
        if Gamma <= 0 or eps_acc <= 0:
            raise ValueError("Gamma and eps_acc must be positive")
        self.n = n
        self.source = source
        self.q = q
        self.Gamma = Gamma
        self.eps_acc = eps_acc
        self.step_scale = step_scale
        self.edges: list[_Edge] = []
        self._eligible: set[int] = set()
        self._cached_cycle: list[tuple[int, int]] | None = None  # (edge id, sign)
        self.calls = 0
        self.returned_total = 0
        self.pushed_total = 0.0

    @property
    def m(self) -> int:
        return len(self.edges)

    # -- updates -----------------------------------------------------------

    def insert_edge(self, e: int, u: int, v: int, w: float, g: float, ell: float, flow: float = 0.0) -> None:
        """Add edge ``e`` (must be the next dense id). Flow starts at 0 unless
        the caller is loading the solver's initial flow."""
        if e != len(self.edges):
            raise ValueError(f"edge id {e} not dense (expected {len(self.edges)})")
        if w <= 0:
            raise ValueError(f"weight must be positive, got {w}")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError("endpoint out of range")
        self.edges.append(_Edge(u, v, w, g, ell, flow))
        self._eligible.add(e)

    def update_edge(self, e: int, w: float, g: float) -> None:
        if e not in self._eligible:
            raise ContractViolation(f"edge {e} was not in the last returned set E'")
        if w <= 0:
            raise ValueError(f"weight must be positive, got {w}")
        self.edges[e].w = w
        self.edges[e].g = g

    def set_gradient_scale(self, c: float) -> None:
        """Global refresh g_e = c * ell_e - w_e for every edge.

        The gradient's length term carries a single global multiplier, so a
        drift of the tracked cost gap (or a change of the edge count) is one
        scalar refresh rather than per-edge update traffic.
        """
        for ed in self.edges:
            ed.g = c * ed.ell - ed.w

    # -- queries -----------------------------------------------------------

    def return_cost(self) -> float:
        return math.fsum(ed.ell * ed.f for ed in self.edges)

    def return_flow(self) -> np.ndarray:
        return np.array([ed.f for ed in self.edges])

    def divergence(self) -> np.ndarray:
        div = np.zeros(self.n)
        for ed in self.edges:
            div[ed.tail] += ed.f
            div[ed.head] -= ed.f
        return div

    # -- the step ----------------------------------------------------------

    def apply_cycle(self):
        """One step: push a qualifying circulation or certify none exists."""
        self.calls += 1
        cycle = self._take_cached_cycle()
        if cycle is None:
            cycle = self._find_negative_cycle()
        if cycle is None:
            phi, beta = self._dual_potentials()
            self._eligible = set()
            return Certified(lambda_star=-beta, dual=DualCertificate(phi=phi, beta=beta))

        self._cached_cycle = cycle
        wsum = sum(self.edges[e].w for e, _ in cycle)
        gsum = sum(s * self.edges[e].g for e, s in cycle)
        ratio = gsum / wsum
        mu = self.Gamma / wsum
        edge_ids = [e for e, _ in cycle]
        base = [s * mu for _, s in cycle]
        scale = 1.0
        if self.step_scale is not None:
            scale = max(1.0, float(self.step_scale(edge_ids, base)))
        deltas = [d * scale for d in base]
        for e, d in zip(edge_ids, deltas):
            self.edges[e].f += d
        flows = {e: self.edges[e].f for e in edge_ids}
        self._eligible = set(edge_ids)
        self.returned_total += len(edge_ids)
        self.pushed_total += self.Gamma * scale
        if self.step_scale is None:
            # Def-3.7 return-set budget, enforced in conformance mode
            budget = self.calls * self.Gamma / (self.eps_acc * self.q)
            assert self.returned_total <= budget * (1 + 1e-9), "return-set budget exceeded"
        return Applied(
            edge_ids=edge_ids,
            deltas=deltas,
            flows=flows,
            returned=edge_ids,
            ratio=ratio,
            scale=scale,
        )

    # -- internals ---------------------------------------------------------

    def _take_cached_cycle(self):
        """Reuse the last found cycle while it still qualifies at -q."""
        cycle = self._cached_cycle
        if cycle is None:
            return None
        wsum = sum(self.edges[e].w for e, _ in cycle)
        gsum = sum(s * self.edges[e].g for e, s in cycle)
        if gsum / wsum <= -self.q:
            return cycle
        self._cached_cycle = None
        return None

    def _find_negative_cycle(self):
        """Synchronous Bellman-Ford from a virtual source (dist 0 everywhere)
        on the bidirected arcs with modified cost ``sign * g + q * w``; a
        strict relaxation after n rounds pins a negative cycle, extracted
        from the predecessor chain. Deterministic: on ties the smallest arc
        id (forward arcs before backward) wins."""
        n = self.n
        if n == 0 or not self.edges:
            return None
        m = len(self.edges)
        tails = np.fromiter((ed.tail for ed in self.edges), dtype=np.int64, count=m)
        heads = np.fromiter((ed.head for ed in self.edges), dtype=np.int64, count=m)
        gv = np.fromiter((ed.g for ed in self.edges), dtype=float, count=m)
        qw = self.q * np.fromiter((ed.w for ed in self.edges), dtype=float, count=m)
        two = self._find_two_arc_cycle(tails, heads, gv, qw)
        if two is not None:
            return two
        arc_tail = np.concatenate([tails, heads])
        arc_head = np.concatenate([heads, tails])
        cost = np.concatenate([gv + qw, -gv + qw])
        arc_ids = np.arange(2 * m)

        dist = np.zeros(n)
        pred = np.full(n, -1, dtype=np.int64)
        marked = None
        for rnd in range(n + 1):
            cand = dist[arc_tail] + cost
            best = dist.copy()
            np.minimum.at(best, arc_head, cand)
            improved = best < dist
            if not improved.any():
                self._converged_dist = dist
                return None
            win = cand <= best[arc_head]
            win &= improved[arc_head]
            # reversed order: the smallest arc id writes last
            idx = arc_ids[win][::-1]
            pred[arc_head[idx]] = idx
            dist = best
            if rnd == n:
                marked = int(np.flatnonzero(improved)[0])
        # walk n steps back from a vertex relaxed in the extra round
        v = marked
        for _ in range(n):
            v = int(arc_tail[pred[v]])
        cycle_rev = []
        start = v
        while True:
            a = int(pred[v])
            e, sign = (a, 1) if a < m else (a - m, -1)
            cycle_rev.append((e, sign))
            v = int(arc_tail[a])
            if v == start:
                break
        cycle = list(reversed(cycle_rev))
        wsum = sum(self.edges[e].w for e, _ in cycle)
        gsum = sum(s * self.edges[e].g for e, s in cycle)
        assert gsum / wsum <= -self.q + 1e-12, "extracted cycle does not qualify"
        self._converged_dist = None
        return cycle

    def _find_two_arc_cycle(self, tails, heads, gv, qw):
        """O(m) screen for qualifying 2-arc cycles (one arc each way between
        a vertex pair); these dominate during rerouting between parallel
        routes and skipping the full Bellman-Ford for them is a large win.
        Falls through (returns None) when no 2-arc cycle qualifies."""
        m = len(gv)
        best: dict[tuple[int, int], tuple[float, int]] = {}
        a = gv + qw  # forward arc cost, direction tail -> head
        b = qw - gv  # backward arc cost, direction head -> tail
        for e in range(m):
            u, v = int(tails[e]), int(heads[e])
            cur = best.get((u, v))
            if cur is None or a[e] < cur[0]:
                best[(u, v)] = (float(a[e]), e)
        for e in range(m):
            u, v = int(heads[e]), int(tails[e])
            cur = best.get((u, v))
            if cur is None or b[e] < cur[0]:
                best[(u, v)] = (float(b[e]), e + m)
        top = None
        for (u, v), (c1, arc1) in best.items():
            if u > v:
                continue
            back = best.get((v, u))
            if back is None:
                continue
            c2, arc2 = back
            total = c1 + c2
            if total < 0 and (top is None or total < top[0]):
                top = (total, u, v, arc1, arc2)
        if top is None:
            return None
        _, _, _, arc1, arc2 = top
        cycle = []
        for arc in (arc1, arc2):
            cycle.append((arc, 1) if arc < m else (arc - m, -1))
        return cycle

    def _dual_potentials(self):
        """Potentials from the converged Bellman-Ford labels."""
        dist = getattr(self, "_converged_dist", None)
        if dist is None:
            dist = [0.0] * self.n
        phi = np.array(dist, dtype=float)
        if self.n:
            phi -= phi[self.source]
        beta = 0.0
        slack = 0.0
        for ed in self.edges:
            resid = abs(ed.g + phi[ed.tail] - phi[ed.head]) / ed.w
            beta = max(beta, resid)
            # rounding head-room: labels and gradients can dwarf q * w
            slack = max(slack, 1e-12 * (abs(ed.g) + abs(phi[ed.tail]) + abs(phi[ed.head])) / ed.w)
        assert beta <= self.q * (1 + 1e-9) + slack, f"certificate residual {beta} exceeds q={self.q}"
        return phi, beta


def brute_force_min_ratio(n: int, edges, g, w):
    """Exact min of ``sum(sign * g) / sum(w)`` over simple cycles of the
    bidirected graph; test oracle, capped at 12 edges.

    ``edges`` is a list of (tail, head); returns ``(ratio, cycle)`` where
    cycle is a list of (edge index, sign), or ``(inf, None)`` if the graph
    has no cycle.
    """
    if len(edges) > 12:
        raise ValueError("brute force capped at 12 edges")
    arcs_from: dict[int, list] = {v: [] for v in range(n)}
    for idx, (u, v) in enumerate(edges):
        arcs_from[u].append((v, idx, 1))
        arcs_from[v].append((u, idx, -1))

    best_ratio = math.inf
    best_cycle = None

    def consider(path):
        nonlocal best_ratio, best_cycle
        gsum = sum(s * g[e] for e, s in path)
        wsum = sum(w[e] for e, s in path)
        ratio = gsum / wsum
        if ratio < best_ratio:
            best_ratio = ratio
            best_cycle = list(path)

    def dfs(start, v, used, visited, path):
        for to, e, s in arcs_from[v]:
            if e in used:
                continue
            if to == start:
                path.append((e, s))
                consider(path)
                path.pop()
            elif to > start and to not in visited:
                used.add(e)
                visited.add(to)
                path.append((e, s))
                dfs(start, to, used, visited, path)
                path.pop()
                visited.discard(to)
                used.discard(e)

    for start in range(n):
        dfs(start, start, set(), set(), [])
    return best_ratio, best_cycle
