import math
import random

import pytest

from ipm_sssp.barrier import IpmParams
from ipm_sssp.detector import DangerDetector, DetectorTerminated
from ipm_sssp.graph import DynamicGraph
from ipm_sssp.oracle import dijkstra, total_distance


def band_star(n=6, L=8, seed=0):
    """Star s -> v with all distances inside [L, 2L]."""
    rng = random.Random(seed)
    g = DynamicGraph(n, source=0)
    for v in range(1, n):
        g.insert_edge(0, v, rng.randint(L, 2 * L))
    return g


def make_params(g, alpha=0.01, epsilon=0.04, **kw):
    return IpmParams.make(alpha=alpha, epsilon=epsilon, m_hint=g.m + g.n, **kw)


def make_detector(n=6, L=8, seed=0, alpha=0.01, epsilon=0.04, accelerate=True, **kw):
    g = band_star(n, L, seed)
    det = DangerDetector(g, make_params(g, alpha, epsilon, **kw), L=L, accelerate=accelerate)
    return det


def wide_band(n, L):
    """Every vertex at distance exactly 2L (all-equal band)."""
    g = DynamicGraph(n, source=0)
    for v in range(1, n):
        g.insert_edge(0, v, 2 * L)
    return g


def test_band_validation():
    g = band_star()
    g.insert_edge(0, 1, 1)  # pulls d(s,1) below L
    with pytest.raises(ValueError):
        DangerDetector(g, make_params(g), L=8)
    with pytest.raises(ValueError):
        DangerDetector(band_star(), make_params(band_star()), L=5)  # not a power of 2


def test_static_inserts_emit_nothing():
    # inserting edges that change no distance leaves S empty as long as the
    # threshold clears the parallel-path equilibrium weight (~1/x where
    # x = (1-x)^(p+1), under 10 for these p)
    det = make_detector(alpha=2e-4, epsilon=0.04)
    assert det.params.danger_threshold >= 20.0
    assert det.initial_dangerous == []
    rng = random.Random(1)
    for _ in range(12):
        u = rng.randrange(1, det.g.n - 1)
        rep = det.insert(u, u + 1, 2 * det.L)  # too long to shorten anything
        assert not rep.terminated
        assert rep.dangerous == []


def test_genuine_drop_emits_without_flooding():
    # the band is wide enough that one vertex's distance can fall below
    # (1 - eps) d0 while the total stays above the termination cutoff, and
    # the threshold still clears the no-drop equilibrium weight
    n, L, eps = 750, 64, 0.05
    g = wide_band(n, L)
    params = IpmParams.make(alpha=eps / 146.0, epsilon=eps, m_hint=g.m + g.n)
    det = DangerDetector(g, params, L=L)
    assert det.params.danger_threshold > 14.0
    rep = det.insert(0, 3, 120)  # d(3): 128 -> 120, a 6.25% drop
    assert not rep.terminated
    assert rep.dangerous == [3]


def test_flooding_regime_emits_everything_once():
    # with a low threshold every vertex emits at the first descent; a
    # repeat insertion emits nothing because emission is once per lifetime
    L = 8
    g = wide_band(5, L)
    det = DangerDetector(g, make_params(g, alpha=0.1, epsilon=0.2), L=L)
    assert det.params.danger_threshold < 1.0
    assert det.initial_dangerous == [1, 2, 3, 4]  # weights start at 1 >= threshold
    rep = det.insert(1, 2, 2 * L)
    assert not rep.terminated
    assert rep.dangerous == []


def test_termination_exactness():
    # terminate at exactly the first insertion with total < (1 - alpha/2) F,
    # cross-checked against the oracle on a parallel exact copy
    for seed in range(8):
        rng = random.Random(seed)
        L, n = 8, 7
        g = DynamicGraph(n, source=0)
        mirror = DynamicGraph(n, source=0)
        for v in range(1, n):
            w = rng.randint(L, 2 * L)
            g.insert_edge(0, v, w)
            mirror.insert_edge(0, v, w)
        params = make_params(g, alpha=0.2, epsilon=0.4)
        det = DangerDetector(g, params, L=L)
        F = total_distance(mirror)
        cutoff = (1 - params.alpha / 2) * F
        terminated = False
        for step in range(30):
            u = rng.randrange(n)
            v = rng.randrange(n)
            while v == u:
                v = rng.randrange(n)
            w = rng.randint(1, 2 * L)
            mirror.insert_edge(u, v, w)
            should = total_distance(mirror) < cutoff
            rep = det.insert(u, v, w)
            assert rep.terminated == should, (seed, step)
            if rep.terminated:
                terminated = True
                break
        if terminated:
            with pytest.raises(DetectorTerminated):
                det.insert(0, 1, 1)


def test_potential_strictly_decreases():
    det = make_detector(seed=3)
    rng = random.Random(3)
    for _ in range(10):
        u = rng.randrange(1, det.g.n)
        rep = det.insert(u, (u % (det.g.n - 1)) + 1, 2 * det.L)
        assert not rep.terminated  # no distance can drop this way
    drops = det.metrics.phi_drops
    assert drops, "descent never stepped"
    assert all(d > 0 for d in drops)


def test_conformance_median_drop():
    # unaccelerated steps must each decrease the potential by at least the
    # analytic floor q^2 / (1e4 p) on median
    det = make_detector(n=4, L=8, seed=2, accelerate=False)
    rep = det.insert(1, 2, 2 * det.L)
    assert not rep.terminated
    drops = sorted(det.metrics.phi_drops)
    assert drops
    median = drops[len(drops) // 2]
    p = det.params
    assert median >= p.q**2 / (1e4 * p.p)


def test_dual_snapshot_bounds():
    det = make_detector(n=6, L=8, seed=4)
    rng = random.Random(4)
    for _ in range(6):
        u = rng.randrange(1, det.g.n)
        rep = det.insert(u, (u % (det.g.n - 1)) + 1, 2 * det.L)
        assert not rep.terminated
        phi_hat, report = det.dual_snapshot()
        assert report["sandwich_ok"], report
        assert report["potential_ok"], report
        dist = dijkstra(det.g).dist
        for x in range(det.g.n):
            if math.isfinite(dist[x]):
                assert phi_hat[x] <= dist[x] + 1e-9 * det.L


def test_length_scaling_invariance():
    # the same band shape at L=1 and L=64 must emit the same vertices
    reports = []
    for L in (1, 64):
        g = wide_band(5, L)
        det = DangerDetector(g, make_params(g, alpha=0.1, epsilon=0.2), L=L)
        rep = det.insert(0, 2, L)
        reports.append((rep.terminated, sorted(rep.dangerous)))
    assert reports[0] == reports[1]


def test_insert_steps_counted_and_budgeted():
    det = make_detector(seed=5)
    rng = random.Random(5)
    for _ in range(8):
        u = rng.randrange(1, det.g.n)
        det.insert(u, (u % (det.g.n - 1)) + 1, 2 * det.L)
    ratios = det.bound_ratios()
    assert 0 <= ratios["max_step_ratio"] <= 1
    assert 0 <= ratios["max_recourse_ratio"] <= 1
    assert 0 <= ratios["max_crossing_ratio"] <= 1
    assert det.metrics.ipm_steps <= det.params.iteration_budget
