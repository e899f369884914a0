import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from softqec import codes, gf2, noise
from softqec.graph import WeightedDecodingGraph, edge_coverage
from softqec.ufd import DecodingError, peel, ufd_decode

W = math.log(19)


def test_trivial_syndrome():
    _, g = codes.surface_code(3)
    res = ufd_decode(g, np.zeros(g.num_syndrome_vertices, dtype=np.uint8))
    assert res.correction.size == 0 and not res.radii.any()


def test_repetition_single_flip():
    _, g = codes.repetition_code(5)
    g = g.with_weights(W)
    synd = g.syndrome_of([2])
    res = ufd_decode(g, synd)
    assert res.correction.tolist() == [2]
    assert edge_coverage(g, res.radii).sum() == pytest.approx(2 * W)


@pytest.mark.parametrize("variant", ["rotated", "planar"])
def test_weight_one_errors_corrected(variant):
    code, g = codes.surface_code(3, variant)
    for e in range(g.num_edges):
        res = ufd_decode(g, g.syndrome_of([e]))
        residual = np.zeros(code.n, dtype=np.uint8)
        residual[g.fault_ids[e]] ^= 1
        for c in res.correction:
            residual[g.fault_ids[c]] ^= 1
        # the residual must be an X stabilizer
        assert gf2.in_rowspace(residual, code.H_X)


def test_peel_single_edge_and_path():
    g = WeightedDecodingGraph(3, (), [0, 1], [1, 2], [1.0, 1.0], [0, 1])
    assert peel(g, [0], [1, 1, 0]).tolist() == [0]
    assert peel(g, [0, 1], [1, 0, 1]).tolist() == [0, 1]


def test_peel_unsupported_syndrome():
    g = WeightedDecodingGraph(3, (), [0, 1], [1, 2], [1.0, 1.0], [0, 1])
    with pytest.raises(DecodingError):
        peel(g, [0], [0, 0, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_peel_random_tree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 20))
    parents = [int(rng.integers(0, i)) for i in range(1, n)]
    g = WeightedDecodingGraph(n, (), parents, list(range(1, n)), np.ones(n - 1), list(range(n - 1)))
    flips = rng.integers(0, 2, n - 1)
    synd = g.syndrome_of(np.flatnonzero(flips))
    corr = peel(g, np.ones(n - 1, dtype=bool), synd)
    assert np.array_equal(g.syndrome_of(corr), synd)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([(3, "rotated"), (5, "rotated"), (5, "planar")]))
def test_correction_matches_syndrome_inside_clusters(seed, case):
    code, g = codes.surface_code(*case)
    rng = np.random.default_rng(seed)
    e = noise.sample_error(code.n, 0.1, rng)
    synd = noise.syndrome(code.H_Z, e)
    res = ufd_decode(g, synd)
    assert np.array_equal(g.syndrome_of(res.correction), synd)
    assert np.all(res.erasure[res.correction])
    cov = edge_coverage(g, res.radii)
    assert np.allclose(cov[res.erasure], g.weights[res.erasure])


def test_nonuniform_weights_still_valid():
    _, layer = codes.surface_code(3)
    g = codes.spacetime_graph(layer, codes.SpacetimeGraphSpec(3, 0.01, 0.05))
    rng = np.random.default_rng(0)
    for _ in range(100):
        faults = np.flatnonzero(rng.random(g.num_edges) < 0.05)
        synd = g.syndrome_of(faults)
        res = ufd_decode(g, synd)
        assert np.array_equal(g.syndrome_of(res.correction), synd)


def test_repetition_low_weight_exhaustive():
    code, g = codes.repetition_code(7)
    for w in range(4):
        for support in itertools.combinations(range(7), w):
            synd = g.syndrome_of(list(support))
            res = ufd_decode(g, synd)
            assert sorted(res.correction.tolist()) == sorted(support)
