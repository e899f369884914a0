import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from softqec import gf2


def binary_matrices(max_rows=12, max_cols=80):
    shapes = st.tuples(st.integers(1, max_rows), st.integers(1, max_cols))
    return shapes.flatmap(lambda s: arrays(np.uint8, s, elements=st.integers(0, 1)))


def naive_rank(m):
    m = m.copy().astype(np.uint8)
    r = 0
    for c in range(m.shape[1]):
        rows = [i for i in range(r, m.shape[0]) if m[i, c]]
        if not rows:
            continue
        m[[r, rows[0]]] = m[[rows[0], r]]
        for i in range(m.shape[0]):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        r += 1
    return r


@given(binary_matrices())
def test_pack_roundtrip(m):
    assert np.array_equal(gf2.unpack(gf2.pack(m), m.shape[1]), m)


@given(binary_matrices())
def test_rank_matches_naive_elimination(m):
    assert gf2.rank(m) == naive_rank(m)


@given(binary_matrices())
def test_nullspace_is_kernel(m):
    k = gf2.nullspace(m)
    assert k.shape[0] == m.shape[1] - gf2.rank(m)
    if k.size:
        assert not np.any(gf2.matmul(m, k.T))
        assert gf2.rank(k) == k.shape[0]


@given(binary_matrices())
def test_rref_pivots(m):
    reduced, pivots = gf2.rref(m)
    assert pivots == sorted(pivots)
    for r, p in enumerate(pivots):
        col = reduced[:, p]
        assert col[r] == 1 and col.sum() == 1
    assert gf2.rank(reduced) == len(pivots)


@settings(max_examples=30)
@given(st.integers(1, 10), st.integers(0, 2**31 - 1))
def test_inverse(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 2, (n, n), dtype=np.uint8)
    if gf2.rank(m) < n:
        with pytest.raises(np.linalg.LinAlgError):
            gf2.inverse(m)
    else:
        assert np.array_equal(gf2.matmul(m, gf2.inverse(m)), np.eye(n, dtype=np.uint8))


def test_independent_rows_and_rowspace():
    m = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1], [0, 0, 1]], dtype=np.uint8)
    assert gf2.independent_rows(m) == [0, 1, 3]
    assert gf2.in_rowspace([1, 0, 1], m[:2])
    assert not gf2.in_rowspace([0, 0, 1], m[:2])
    assert gf2.in_rowspace([0, 0, 0], np.zeros((0, 3), dtype=np.uint8))


def test_span_enumerates_all_combinations():
    basis = np.array([[1, 0, 0], [0, 1, 1]], dtype=np.uint8)
    got = {tuple(r) for r in gf2.span(basis)}
    assert got == {(0, 0, 0), (1, 0, 0), (0, 1, 1), (1, 1, 1)}
    with pytest.raises(ValueError):
        gf2.span(np.eye(25, dtype=np.uint8))
