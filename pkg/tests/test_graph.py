import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from softqec import codes
from softqec.graph import (WeightedDecodingGraph, clusters, covered_measure, edge_coverage,
                           quotient_shortest_path, vertex_reach)
from softqec.soft_output import soft_output

W = math.log(19)


def path_graph(weights, boundary_ends=True):
    n = len(weights) + 1
    return WeightedDecodingGraph(n, (0, n - 1) if boundary_ends else (), list(range(n - 1)),
                                 list(range(1, n)), weights, list(range(n - 1)))


def test_validation():
    with pytest.raises(ValueError):
        WeightedDecodingGraph(2, (), [0], [1], [0.0], [0])
    with pytest.raises(ValueError):
        WeightedDecodingGraph(2, (), [0], [2], [1.0], [0])
    with pytest.raises(ValueError):
        WeightedDecodingGraph(3, (), [0], [1], [1.0], [0])  # disconnected


def test_json_roundtrip(tmp_path):
    _, g = codes.surface_code(3)
    g.save(tmp_path / "g.json")
    h = WeightedDecodingGraph.load(tmp_path / "g.json")
    assert h.to_json() == g.to_json()


def test_zero_radii_cover_nothing():
    _, g = codes.surface_code(3)
    assert np.all(edge_coverage(g, np.zeros(g.num_vertices)) == 0)


def test_two_half_balls_meet():
    g = path_graph([W])
    assert covered_measure(g, {0: W / 2, 1: W / 2}, 0) == pytest.approx(W)


def test_cycle_single_radius():
    _, g = codes.repetition_code(3)
    g = g.with_weights(W)
    cov = edge_coverage(g, {0: W / 2})
    assert cov.sum() == pytest.approx(W)
    assert sorted(cov.round(12)) == sorted([0.0, round(W / 2, 12), round(W / 2, 12)])


def test_unknown_edge():
    g = path_graph([1.0])
    with pytest.raises(IndexError):
        covered_measure(g, {}, 5)


def test_reach_passes_through_vertices():
    g = path_graph([1.0, 1.0, 1.0], boundary_ends=False)
    cov = edge_coverage(g, {0: 2.5})
    assert np.allclose(cov, [1.0, 1.0, 0.5])


def test_clusters_parity_and_boundary():
    g = path_graph([1.0, 1.0, 1.0])
    cs = clusters(g, {1: 0.5, 2: 0.5}, [1, 1])
    assert len(cs.components) == 1
    assert cs.components[0].parity == 0
    assert not cs.components[0].touches_boundary
    cs = clusters(g, {1: 1.0}, [1, 0])
    assert any(c.touches_boundary for c in cs.components)


def test_planar_cluster_touches_boundary():
    code, g = codes.surface_code(3, "planar")
    e = np.zeros(code.n, dtype=np.uint8)
    # the first boundary edge: a single defect one step from a boundary
    edge = next(i for i in range(g.num_edges) if g.is_boundary(int(g.edge_v[i])) or g.is_boundary(int(g.edge_u[i])))
    e[g.fault_ids[edge]] = 1
    synd = g.syndrome_of([edge])
    v = int(g.nontrivial_vertices(synd)[0])
    cs = clusters(g, {v: 1.0}, synd)
    comp = cs.components[cs.vertex_component[v]]
    assert comp.touches_boundary and comp.parity == 1


@pytest.mark.parametrize("d,variant", [(3, "rotated"), (5, "rotated"), (3, "planar"), (5, "planar")])
def test_empty_clusters_give_distance(d, variant):
    _, g = codes.surface_code(d, variant)
    g = g.with_weights(W)
    assert quotient_shortest_path(g, {}, g.boundary[0], g.boundary[1]) == pytest.approx(d * W)


def test_bridging_cluster_gives_zero():
    g = path_graph([1.0, 1.0])
    assert quotient_shortest_path(g, {1: 1.0}, 0, 2) == 0.0


def test_repetition_after_single_flip():
    _, g = codes.repetition_code(5)
    g = g.with_weights(W)
    radii = {0: W / 2, 1: W / 2}
    assert edge_coverage(g, radii).sum() == pytest.approx(2 * W)
    assert soft_output(g, radii) == pytest.approx(3 * W)


def random_radii(g, data):
    return np.array([data.draw(st.sampled_from([0.0, 0.5, 1.0, 1.5, 2.0])) for _ in range(g.num_vertices)])


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_monotone_in_radii(data):
    _, g = codes.surface_code(3)
    r = random_radii(g, data)
    bump = r.copy()
    bump[data.draw(st.integers(0, g.num_vertices - 1))] += 0.5
    assert np.all(edge_coverage(g, bump) >= edge_coverage(g, r) - 1e-12)
    assert soft_output(g, bump) <= soft_output(g, r) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_coverage_bounded_and_half_integer(data):
    _, g = codes.surface_code(5)
    r = random_radii(g, data)
    cov = edge_coverage(g, r)
    assert np.all(cov >= 0) and np.all(cov <= g.weights)
    phi = soft_output(g, r)
    assert phi >= 0
    assert abs(2 * phi - round(2 * phi)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_reach_matches_networkx(data):
    _, g = codes.surface_code(3, "planar")
    r = random_radii(g, data)
    nxg = nx.MultiGraph()
    for e in range(g.num_edges):
        nxg.add_edge(int(g.edge_u[e]), int(g.edge_v[e]), weight=float(g.weights[e]))
    dist = dict(nx.all_pairs_dijkstra_path_length(nxg))
    reach = vertex_reach(g, r)
    for x in range(g.num_vertices):
        centres = [v for v in range(g.num_vertices) if r[v] > 0]
        expect = max((r[v] - dist[v][x] for v in centres), default=-np.inf)
        assert reach[x] == pytest.approx(expect)
