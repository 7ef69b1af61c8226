import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipm_sssp.graph import DynamicGraph, EdgeKind


def star(n: int) -> DynamicGraph:
    g = DynamicGraph(n, source=0)
    for v in range(1, n):
        g.insert_edge(0, v, v)
    return g


def test_insert_assigns_dense_ids():
    g = DynamicGraph(3)
    assert g.insert_edge(0, 1, 5) == 0
    assert g.insert_edge(1, 2, 7) == 1
    assert g.insert_edge(0, 1, 5) == 2  # parallel edges stay distinct
    assert g.m == 3
    assert g.edge(2) == (0, 1)
    assert g.out_edges[0] == [0, 2]
    assert g.in_edges[1] == [0, 2]


def test_insert_validation():
    g = DynamicGraph(2)
    with pytest.raises(ValueError):
        g.insert_edge(0, 2, 1)
    with pytest.raises(ValueError):
        g.insert_edge(-1, 1, 1)
    with pytest.raises(ValueError):
        g.insert_edge(0, 1, -3)
    with pytest.raises(ValueError):
        DynamicGraph(0)
    with pytest.raises(ValueError):
        DynamicGraph(2, source=2)


def test_add_vertex():
    g = star(3)
    vid = g.add_vertex()
    assert vid == 3
    assert g.n == 4
    g.insert_edge(3, 0, 2)
    assert g.out_edges[3] == [2]


def test_divergence_star():
    g = star(4)
    div = g.divergence(np.ones(3))
    assert div.tolist() == [3.0, -1.0, -1.0, -1.0]


def test_divergence_shape_check():
    g = star(3)
    with pytest.raises(ValueError):
        g.divergence(np.ones(5))


def test_potential_drop_sign():
    g = DynamicGraph(2)
    e = g.insert_edge(0, 1, 4)
    assert g.potential_drop([10.0, 3.0], e) == 7.0


def test_is_circulation():
    g = DynamicGraph(3)
    g.insert_edge(0, 1, 1)
    g.insert_edge(1, 2, 1)
    g.insert_edge(2, 0, 1)
    assert g.is_circulation(np.array([2.0, 2.0, 2.0]), tol=0.0)
    assert not g.is_circulation(np.array([2.0, 2.0, 1.0]), tol=1e-9)


def test_copy_is_independent():
    g = star(3)
    h = g.copy()
    h.insert_edge(1, 2, 9)
    h.add_vertex()
    assert g.m == 2 and h.m == 3
    assert g.n == 3 and h.n == 4


def test_edge_kinds_recorded():
    g = DynamicGraph(2)
    g.insert_edge(0, 1, 1, kind=EdgeKind.AUGMENTED)
    g.insert_edge(0, 1, 0, kind=EdgeKind.SHORTCUT)
    assert g.kind == [EdgeKind.AUGMENTED, EdgeKind.SHORTCUT]


@st.composite
def graph_and_vectors(draw):
    n = draw(st.integers(2, 8))
    m = draw(st.integers(1, 16))
    g = DynamicGraph(n)
    for _ in range(m):
        u = draw(st.integers(0, n - 1))
        v = draw(st.integers(0, n - 1))
        g.insert_edge(u, v, draw(st.integers(0, 10)))
    f = [draw(st.floats(-4, 4, allow_nan=False)) for _ in range(m)]
    phi = [draw(st.floats(-4, 4, allow_nan=False)) for _ in range(n)]
    return g, np.array(f), np.array(phi)


@settings(max_examples=200, deadline=None)
@given(graph_and_vectors())
def test_incidence_adjointness(data):
    # sum_e f_e * (phi(u) - phi(v)) == sum_v divergence(f)(v) * phi(v)
    g, f, phi = data
    lhs = sum(f[e] * g.potential_drop(phi, e) for e in range(g.m))
    rhs = float(g.divergence(f) @ phi)
    assert lhs == pytest.approx(rhs, abs=1e-9)
