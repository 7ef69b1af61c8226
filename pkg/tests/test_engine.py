import math
import random

import pytest

from conftest import assert_valid_path, nx_distances, path_length, random_stream
from ipm_sssp.engine import (
    ContractionState,
    DegreeReducedSssp,
    EngineConfig,
    EstimateEdge,
    ExactSssp,
    RealEdge,
    ShortcutEdge,
    SsspEngine,
    degree_reduce,
    make_sssp,
)
from ipm_sssp.graph import DynamicGraph
from ipm_sssp.oracle import dijkstra


def run_stream(engine, mirror, stream, eps, check_paths=False):
    """Feed a stream, asserting the sandwich (and optionally paths) per step."""
    n = mirror.n
    for u, v, w in stream:
        engine.insert(u, v, w)
        mirror.insert_edge(u, v, w)
        ref = nx_distances(mirror)
        for x in range(n):
            est = engine.query_distance(x)
            exact = ref.get(x, math.inf)
            if math.isinf(exact):
                assert math.isinf(est), (x, est)
            else:
                assert exact <= est + 1e-9, (x, est, exact)
                assert est <= (1 + eps) * exact + 1e-9, (x, est, exact)
                if check_paths:
                    path = engine.query_path(x)
                    assert_valid_path(mirror, path, x)
                    assert path_length(mirror, path) <= (1 + eps) * exact + 1e-9


@pytest.mark.parametrize("levels", [1, 2])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sandwich_random_streams(levels, seed):
    n, eps = 9, 0.2
    g = DynamicGraph(n, source=0)
    mirror = DynamicGraph(n, source=0)
    eng = SsspEngine(g, EngineConfig(epsilon=eps, levels=levels))
    run_stream(eng, mirror, random_stream(seed, n, 30), eps, check_paths=True)


def test_exact_mode_levels_zero():
    n = 8
    g = DynamicGraph(n, source=0)
    mirror = DynamicGraph(n, source=0)
    eng = make_sssp(g, EngineConfig(epsilon=0.2, levels=0))
    assert isinstance(eng, ExactSssp)
    run_stream(eng, mirror, random_stream(7, n, 25), eps=0.0, check_paths=True)


def test_distance_collapse_forces_restart():
    # halving the total distance must trip at least one phase restart
    n = 8
    g = DynamicGraph(n, source=0)
    eng = SsspEngine(g, EngineConfig(epsilon=0.2, levels=1))
    for v in range(1, n):
        eng.insert(0, v, 16)
    phases_before = eng.metrics_snapshot()["phases"]
    for v in range(1, n):
        eng.insert(0, v, 1)
    assert eng.metrics_snapshot()["phases"] > phases_before
    for v in range(1, n):
        assert eng.query_distance(v) == 1.0


def test_noop_inserts_no_admissions():
    # with a loose epsilon, insertions that change no distance should leave
    # the set of admitted vertices (and every estimate) unchanged
    n = 6
    for seed in range(20):
        rng = random.Random(seed)
        g = DynamicGraph(n, source=0)
        eng = SsspEngine(g, EngineConfig(epsilon=0.5, levels=1))
        for v in range(1, n):
            eng.insert(0, v, 8)
        before = [eng.query_distance(v) for v in range(n)]
        admitted = set(eng.contraction.S)
        for _ in range(8):
            u = rng.randrange(1, n)
            v = rng.randrange(1, n)
            while v == u:
                v = rng.randrange(1, n)
            eng.insert(u, v, 16)  # 8 + 16 > 8: never shortens
        assert eng.contraction.S == admitted, seed
        assert [eng.query_distance(v) for v in range(n)] == before, seed


def test_estimates_vector_matches_queries():
    n = 6
    g = DynamicGraph(n, source=0)
    eng = SsspEngine(g, EngineConfig(epsilon=0.2, levels=1))
    for u, v, w in random_stream(11, n, 15):
        eng.insert(u, v, w)
    est = eng.estimates()
    assert [est[v] for v in range(n)] == [eng.query_distance(v) for v in range(n)]


def test_unreachable_vertices():
    g = DynamicGraph(4, source=0)
    eng = SsspEngine(g, EngineConfig(epsilon=0.2, levels=1))
    eng.insert(0, 1, 3)
    assert math.isinf(eng.query_distance(2))
    with pytest.raises(ValueError):
        eng.query_path(2)
    eng.insert(1, 2, 2)  # newly reachable
    assert eng.query_distance(2) <= (1.2) * 5 + 1e-9


def test_contraction_ops():
    # G: s -> a (1), a -> b (2); adding b with finite estimates produces the
    # estimate edge (s,b,3) and the shortcut (s,b,1+2); adding a then links
    # the real edge (a,b,2) and a's own estimate/shortcut edges
    g = DynamicGraph(3, source=0)
    g.insert_edge(0, 1, 1)
    g.insert_edge(1, 2, 2)
    d0 = dijkstra(g).dist
    c = ContractionState(g, d0)
    ops_b = c.add_vertex(2)
    assert [(u, v, l) for u, v, l, _ in ops_b] == [(0, 2, 3), (0, 2, 3)]
    assert isinstance(ops_b[0][3], EstimateEdge)
    assert isinstance(ops_b[1][3], ShortcutEdge)
    ops_a = c.add_vertex(1)
    kinds = [type(p) for _, _, _, p in ops_a]
    assert kinds == [EstimateEdge, ShortcutEdge, RealEdge, RealEdge]
    assert ops_a[2][:3] == (0, 1, 1)  # real in-edge from the source
    assert ops_a[3][:3] == (1, 2, 2)  # real out-edge to already-added b
    with pytest.raises(ValueError):
        c.add_vertex(1)


def test_contraction_on_parent_edge():
    g = DynamicGraph(3, source=0)
    g.insert_edge(0, 1, 1)
    d0 = dijkstra(g).dist
    c = ContractionState(g, d0)
    e = g.insert_edge(1, 2, 4)
    assert c.on_parent_edge(e) == []  # head not in S
    c.S.add(2)
    ops = c.on_parent_edge(e)
    assert [(u, v, l) for u, v, l, _ in ops] == [(0, 2, 5)]
    c.S.add(1)
    ops = c.on_parent_edge(e)
    assert [(u, v, l) for u, v, l, _ in ops] == [(0, 2, 5), (1, 2, 4)]


def test_add_vertex_grows_engine():
    g = DynamicGraph(3, source=0)
    eng = SsspEngine(g, EngineConfig(epsilon=0.2, levels=1))
    eng.insert(0, 1, 2)
    vid = eng.add_vertex()
    assert vid == 3
    eng.insert(1, 3, 1)
    assert eng.query_distance(3) <= 1.2 * 3 + 1e-9


def test_degree_reduce_static():
    # star with 8 out-edges: reduced graph respects the degree cap and
    # preserves every distance exactly
    g = DynamicGraph(9, source=0)
    for v in range(1, 9):
        g.insert_edge(0, v, v)
    red, edge_map = degree_reduce(g)
    for v in range(red.n):
        assert len(red.out_edges[v]) <= 3
        assert len(red.in_edges[v]) <= 3
    dist_red = dijkstra(red).dist
    dist_orig = dijkstra(g).dist
    for v in range(g.n):
        assert dist_red[v] == dist_orig[v]
    assert len(edge_map) == g.m
    for e, re in enumerate(edge_map):
        assert red.length[re] == g.length[e]


def test_degree_reduced_engine_end_to_end():
    n, eps = 7, 0.2
    wrapper = DegreeReducedSssp(n, source=0, config=EngineConfig(epsilon=eps, levels=1))
    mirror = DynamicGraph(n, source=0)
    for u, v, w in random_stream(21, n, 25, wmax=8):
        wrapper.insert(u, v, w)
        mirror.insert_edge(u, v, w)
        ref = nx_distances(mirror)
        for x in range(n):
            est = wrapper.query_distance(x)
            exact = ref.get(x, math.inf)
            if math.isinf(exact):
                assert math.isinf(est)
            else:
                assert exact <= est + 1e-9 <= (1 + eps) * exact + 2e-9
                path = wrapper.query_path(x)
                assert_valid_path(mirror, path, x)
                assert path_length(mirror, path) <= (1 + eps) * exact + 1e-9
    # the reduced image also keeps every degree at 3 or below
    for v in range(wrapper.rg.n):
        assert len(wrapper.rg.out_edges[v]) <= 3
        assert len(wrapper.rg.in_edges[v]) <= 3


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        EngineConfig(epsilon=0.2, levels=-1)
    with pytest.raises(ValueError):
        SsspEngine(DynamicGraph(2), EngineConfig(epsilon=0.2, levels=0))


def test_metrics_snapshot_keys():
    g = DynamicGraph(5, source=0)
    eng = SsspEngine(g, EngineConfig(epsilon=0.2, levels=2))
    for u, v, w in random_stream(4, 5, 12):
        eng.insert(u, v, w)
    snap = eng.metrics_snapshot()
    for key in ("phases", "ipm_steps", "solver_calls", "recourse",
                "max_step_ratio", "max_recourse_ratio", "max_crossing_ratio"):
        assert key in snap
    assert snap["phases"] >= 1
    assert snap["max_step_ratio"] <= 1.0
