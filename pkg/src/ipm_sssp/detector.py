"""Detection of vertices whose distance from the source may have dropped.

The detector watches one distance band: every vertex must start at distance
``d(s, v)`` in ``[L, 2L]``. It augments the graph with an edge ``(s, v)`` of
length ``d(s, v)`` per vertex, puts one unit of flow on each augmented edge,
and runs barrier descent on

    Phi(f) = 10 m log(l^T f - F*) - sum_E log(f_e + delta_e) + sum_Aug V(f_e)

where ``V`` is a high-power reciprocal barrier that blows up as augmented
flow drains, and ``F* = (1 - alpha) F`` with ``F`` the initial total
distance. Rerouting flow off an augmented edge (s, v) is only profitable
when the graph offers a substantially shorter alternative to v, so a large
barrier weight on (s, v) flags v as dangerous: its distance may have dropped
below ``(1 - eps)`` of its starting value. Each vertex is emitted at most
once over the detector's lifetime.

The detector terminates exactly when the true total distance falls below
``(1 - alpha/2) F``; past that point the band has drifted too far and the
caller must rebuild.

All lengths are scaled by ``1/L`` internally (exact when L is a power of
two); emission thresholds and weights are scale-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barrier import (
    _LOG_OVERFLOW,
    IpmParams,
    barrier_value,
    barrier_weight,
    edge_weight,
    potential_value,
)
from .graph import DynamicGraph, EdgeKind
from .oracle import dijkstra, total_distance
from .solver import Applied, Certified, SolverMirror

CROSSING_LEVELS = (8, 32, 128)


class DetectorTerminated(RuntimeError):
    """Insert after termination; the caller should have rebuilt."""


class IterationBudgetExceeded(RuntimeError):
    pass


class PotentialIncreased(RuntimeError):
    pass


@dataclass
class Metrics:
    ipm_steps: int = 0
    step_units: int = 0  # steps weighted by ceil(stretch); one per base-norm push
    solver_calls: int = 0
    gradient_updates: int = 0  # update_edge calls issued to the solver
    slack_bumps: int = 0
    recourse: int = 0  # total vertices emitted
    rescale_refreshes: int = 0
    phi_drops: list = field(default_factory=list)
    crossings: dict = field(default_factory=lambda: {K: set() for K in CROSSING_LEVELS})

    def crossing_counts(self) -> dict:
        return {K: len(s) for K, s in self.crossings.items()}


@dataclass
class InsertionReport:
    dangerous: list  # newly emitted vertices, ascending
    terminated: bool
    steps: int


class DangerDetector:
    def __init__(self, graph: DynamicGraph, params: IpmParams, L: int = 1, accelerate: bool = True):
        if L < 1 or (L & (L - 1)) != 0:
            raise ValueError(f"L must be a power of two, got {L}")
        self.g = graph  # takes ownership
        self.params = params
        self.L = L
        s = graph.source
        tree = dijkstra(graph)
        for v in range(graph.n):
            if v == s:
                continue
            d = tree.dist[v]
            if not (L <= d <= 2 * L):
                raise ValueError(f"d(s,{v}) = {d} outside band [{L}, {2 * L}]")
        self.m_original = graph.m
        dists = [int(tree.dist[v]) for v in range(graph.n) if v != s]
        self.aug_head = [v for v in range(graph.n) if v != s]
        for v, d in zip(self.aug_head, dists):
            graph.insert_edge(s, v, d, kind=EdgeKind.AUGMENTED)

        self.F_int = sum(dists)  # total distance, original units
        self.F = self.F_int / L
        self.F_star = (1 - params.alpha) * self.F
        self.cost = self.F  # l^T f, incrementally tracked
        self.r = self.F - self.F_star

        m = graph.m
        self.ell = [graph.length[e] / L for e in range(m)]
        self.f = [0.0] * self.m_original + [1.0] * len(self.aug_head)
        self.f_tilde = list(self.f)
        self.aug = [False] * self.m_original + [True] * len(self.aug_head)
        self.slack = [self._fresh_slack(self.ell[e]) for e in range(self.m_original)]
        self.slack += [0.0] * len(self.aug_head)

        self.mirror = SolverMirror(
            graph.n,
            source=s,
            q=params.q,
            Gamma=params.Gamma,
            eps_acc=params.stale_tol,
            step_scale=self._line_search if accelerate else None,
        )
        c = 10 * m / self.r
        for e in range(m):
            w = self._exact_weight(e)
            self.mirror.insert_edge(
                e, graph.tail[e], graph.head[e], w, c * self.ell[e] - w, self.ell[e], flow=self.f[e]
            )
        self.c = c
        self.phi = self._phi_exact()
        self.emitted: set[int] = set()
        self.terminated = False
        self.inserts = 0
        self.metrics = Metrics()
        self._last_certificate = None
        self.initial_dangerous = self._scan_emissions()

    # -- weights / potential -------------------------------------------------

    def _fresh_slack(self, ell: float) -> float:
        # A fresh edge enters with zero flow, so its barrier weight is
        # 1/slack. Sizing the slack near the gradient-equilibrium depth
        # r / (10 m l_e) lets the edge start close to equilibrium instead of
        # triggering a long rerouting descent. Backward flow through the
        # slack can undercut the cost by (l_e + d(tail)) * slack_e per edge
        # (it acts as a negative-length shortcut), and banded distances are
        # at most 2 in scaled units, so the (l_e + 2) denominator keeps the
        # total possible undercut below r / 10, a tenth of the cost gap.
        return max(self.params.delta, self.r / (10 * self.g.m * (ell + 2.0)))

    def _exact_weight(self, e: int, flow: float | None = None) -> float:
        x = self.f[e] if flow is None else flow
        return edge_weight(self.aug[e], x, self.slack[e], self.params.p)

    def _tilde_weight(self, e: int) -> float:
        return edge_weight(self.aug[e], self.f_tilde[e], self.slack[e], self.params.p)

    def _phi_exact(self) -> float:
        return potential_value(
            np.array(self.ell),
            np.array(self.f),
            np.array(self.slack),
            np.array(self.aug),
            self.F_star,
            self.params.p,
            self.g.m,
        )

    def _barrier_term(self, e: int, flow: float) -> float:
        if self.aug[e]:
            return barrier_value(flow, self.params.p)
        return -math.log(flow + self.slack[e])

    # -- public ----------------------------------------------------------------

    def insert(self, u: int, v: int, length: int, total_hint: int | None = None) -> InsertionReport:
        """Feed one edge insertion; ``total_hint`` may carry the exact total
        distance of the updated graph (callers that already ran the oracle)."""
        if self.terminated:
            raise DetectorTerminated("insert after termination")
        self.inserts += 1
        eid = self.g.insert_edge(u, v, length)
        ell = length / self.L
        self.ell.append(ell)
        self.f.append(0.0)
        self.f_tilde.append(0.0)
        self.slack.append(self._fresh_slack(ell))
        self.aug.append(False)
        w = 1.0 / self.slack[-1]
        self.c = 10 * self.g.m / self.r
        self.mirror.insert_edge(eid, u, v, w, self.c * ell - w, ell, flow=0.0)
        self.mirror.set_gradient_scale(self.c)  # m changed
        self.metrics.gradient_updates += 1
        self.phi = self._phi_exact()  # the 10m log-gap coefficient changed

        # exact termination test, before any descent: the invariants behind
        # the descent loop assume the true total is still >= (1 - alpha/2) F
        if total_hint is not None:
            total = total_hint
        else:
            # augmented edges have length d0(v) >= d(s, v), so they never
            # shorten anything; leaving them in keeps every vertex reachable
            total = total_distance(self.g)
        if total < (1 - self.params.alpha / 2) * self.F_int:
            self.terminated = True
            return InsertionReport(dangerous=[], terminated=True, steps=0)

        steps = self._descend()
        dangerous = self._scan_emissions()
        return InsertionReport(dangerous=dangerous, terminated=False, steps=steps)

    def bound_ratios(self) -> dict:
        """Lifetime counters divided by their analytic bounds (all must be <= 1).

        * step ratio: descent steps vs the lifetime iteration budget,
        * recourse ratio: emitted vertices vs 100 (alpha/eps) m log^2 m,
        * crossing ratio: per threshold K, augmented edges whose weight ever
          reached K vs 100 K^(-p/(p+1)) T, with T the base-norm step units
          taken (a stretched step of factor s counts as ceil(s) units).
        """
        p = self.params
        m = self.g.m
        rec_bound = 100.0 * (p.alpha / p.epsilon) * m * math.log(m + 2) ** 2
        T = max(self.metrics.step_units, 1)
        cross = 0.0
        for K, cnt in self.metrics.crossing_counts().items():
            cross = max(cross, cnt / (100.0 * K ** (-p.p / (p.p + 1)) * T))
        return {
            "max_step_ratio": self.metrics.ipm_steps / p.iteration_budget,
            "max_recourse_ratio": self.metrics.recourse / rec_bound,
            "max_crossing_ratio": cross,
        }

    def dual_snapshot(self):
        """Certified distance lower bounds from the last Certified step.

        Returns ``(phi_hat, report)`` where ``phi_hat`` (original length
        units) satisfies ``phi_hat[v] <= d(s, v)`` and the per-edge sandwich
        ``c w_e / 2 <= l_e - (phi_hat(v) - phi_hat(u)) <= 2 c w_e``.
        """
        cert = self._last_certificate
        if cert is None:
            raise RuntimeError("no dual certificate available (last step was not Certified)")
        cost = self.mirror.return_cost()
        gap = cost - self.F_star
        lo = (1 - self.params.alpha / 2) * self.F
        hi = (1 + 5 * self.params.alpha) * self.F
        if not (lo - 1e-9 * self.F <= cost <= hi + 1e-9 * self.F):
            raise ValueError(f"cost {cost} outside admissible band [{lo}, {hi}]")
        m = self.g.m
        cval = gap / (10 * m)
        phi = cert.dual.phi - cert.dual.phi[self.g.source]
        phi_hat = cval * phi

        max_lower = 0.0
        max_upper = 0.0
        for e in range(m):
            w = self._exact_weight(e)
            resid = self.ell[e] - (phi_hat[self.g.head[e]] - phi_hat[self.g.tail[e]])
            max_lower = max(max_lower, 0.5 * cval * w - resid)
            max_upper = max(max_upper, resid - 2 * cval * w)
        tree = dijkstra(self.g)
        pot_viol = 0.0
        for v in range(self.g.n):
            if math.isfinite(tree.dist[v]):
                pot_viol = max(pot_viol, phi_hat[v] - tree.dist[v] / self.L)
        report = {
            "sandwich_ok": max_lower <= 1e-9 and max_upper <= 1e-9,
            "max_lower_violation": max_lower,
            "max_upper_violation": max_upper,
            "potential_ok": pot_viol <= 1e-9,
            "max_potential_violation": pot_viol,
            "beta": cert.dual.beta,
        }
        return phi_hat * self.L, report

    # -- descent ----------------------------------------------------------------

    def _descend(self) -> int:
        steps = 0
        while True:
            if self.metrics.ipm_steps >= self.params.iteration_budget:
                raise IterationBudgetExceeded(
                    f"exceeded {self.params.iteration_budget} steps over the detector lifetime"
                )
            self._maybe_refresh_scale()
            self.metrics.solver_calls += 1
            res = self.mirror.apply_cycle()
            if isinstance(res, Certified):
                self._last_certificate = res
                return steps
            self._last_certificate = None
            self._absorb(res)
            steps += 1
            self.metrics.ipm_steps += 1
            self.metrics.step_units += int(math.ceil(res.scale))

    def _maybe_refresh_scale(self) -> None:
        gap = self.cost - self.F_star
        if gap <= 0:
            raise RuntimeError("cost gap vanished without termination")
        drift = 1 + self.params.r_drift
        if gap > self.r * drift or gap < self.r / drift:
            self.cost = math.fsum(le * fe for le, fe in zip(self.ell, self.f))
            self.r = self.cost - self.F_star
            self.c = 10 * self.g.m / self.r
            self.mirror.set_gradient_scale(self.c)
            self.metrics.rescale_refreshes += 1

    def _absorb(self, res: Applied) -> None:
        p = self.params
        old_gap = self.cost - self.F_star
        ldot = 0.0
        dphi = 0.0
        for e, flow in res.flows.items():
            ldot += self.ell[e] * (flow - self.f[e])
            dphi += self._barrier_term(e, flow) - self._barrier_term(e, self.f[e])
            self.f[e] = flow
        dphi += 10 * self.g.m * (math.log(old_gap + ldot) - math.log(old_gap))
        if not dphi < 0:
            raise PotentialIncreased(f"step changed potential by {dphi}")
        self.phi += dphi
        self.cost += ldot
        self.metrics.phi_drops.append(-dphi)

        for e in res.edge_ids:
            if not self.aug[e] and self.f[e] + self.slack[e] <= p.delta:
                # slack bump: widen the log barrier; this strictly lowers Phi
                old = self.f[e] + self.slack[e]
                self.slack[e] += p.delta
                self.phi += math.log(old) - math.log(self.f[e] + self.slack[e])
                self.metrics.slack_bumps += 1
                self._sync_edge(e)
            else:
                w_now = self._exact_weight(e)
                if w_now * abs(self.f_tilde[e] - self.f[e]) > p.stale_tol:
                    self._sync_edge(e)
            if self.aug[e]:
                w_now = self._exact_weight(e)
                for K in CROSSING_LEVELS:
                    if w_now >= K:
                        self.metrics.crossings[K].add(e)

    def _sync_edge(self, e: int) -> None:
        self.f_tilde[e] = self.f[e]
        w = self._tilde_weight(e)
        self.mirror.update_edge(e, w, self.c * self.ell[e] - w)
        self.metrics.gradient_updates += 1

    def _scan_emissions(self) -> list:
        out = []
        thr = self.params.danger_threshold
        for i, v in enumerate(self.aug_head):
            e = self.m_original + i
            if e in self.emitted:
                continue
            if self.mirror.edges[e].w >= thr:
                self.emitted.add(e)
                out.append(v)
        out.sort()
        self.metrics.recourse += len(out)
        return out

    # -- acceleration -------------------------------------------------------

    def _line_search(self, edge_ids, base_deltas) -> float:
        """Stretch the conformance step along the found cycle.

        Grid search (geometric, two refinement passes) for the potential
        minimizer, capped by strict feasibility of flows and the cost gap.
        Never shrinks below the base step, so every guarantee about the base
        step still holds.
        """
        gap = self.cost - self.F_star
        k = len(edge_ids)
        ids = list(edge_ids)
        d = np.fromiter(base_deltas, dtype=float, count=k)
        ell_c = np.fromiter((self.ell[e] for e in ids), float, k)
        f_c = np.fromiter((self.f[e] for e in ids), float, k)
        slack_c = np.fromiter((self.slack[e] for e in ids), float, k)
        aug_c = np.fromiter((self.aug[e] for e in ids), bool, k)
        ldot = float(ell_c @ d)
        smax = 1e12
        neg = d < 0
        if neg.any():
            room = np.where(aug_c, f_c, f_c + slack_c)
            smax = min(smax, float(np.min(0.999 * room[neg] / -d[neg])))
        if ldot < 0:
            smax = min(smax, 0.999 * gap / -ldot)
        if smax <= 1.0:
            return 1.0
        m = self.g.m
        p = self.params.p

        def terms(x):
            # barrier terms per edge; x has shape (..., k) and stays positive
            with np.errstate(over="ignore", divide="ignore"):
                logx = np.log(np.where(aug_c, x, x + slack_c))
                vlow = np.exp(np.minimum(-p * logx, _LOG_OVERFLOW)) / p
            augt = np.where(x <= 1.0, vlow, 1.0 / p - logx)
            return np.where(aug_c, augt, -logx)

        base = float(terms(f_c).sum())

        def dphi(s: float) -> float:
            out = 10 * m * (math.log(gap + s * ldot) - math.log(gap))
            return out + float(terms(f_c + s * d).sum()) - base

        lo, hi = 0.0, math.log(smax)
        for _ in range(2):
            grid = np.exp(np.linspace(lo, hi, 48))
            x = f_c[None, :] + grid[:, None] * d[None, :]
            vals = 10 * m * (np.log(gap + grid * ldot) - math.log(gap))
            vals = vals + terms(x).sum(axis=1) - base
            j = int(np.argmin(vals))
            lo = math.log(grid[max(j - 1, 0)])
            hi = math.log(grid[min(j + 1, 47)])
        s = math.exp((lo + hi) / 2)
        at_one = dphi(1.0)
        for cand in (s, smax, 1.0):
            if cand >= 1.0 and dphi(cand) < at_one:
                return cand
        return 1.0
