import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from softqec import codes
from softqec.soft_output import (SoftOutputValue, combine_windows, decode, exhaustive_llr,
                                 rep_phi_closed_form, rep_phi_from_error_weight, soft_output, syndrome_hash)

W = math.log(19)


def test_value_validation():
    with pytest.raises(ValueError):
        SoftOutputValue(-1.0, "ufd", "x")
    with pytest.raises(ValueError):
        SoftOutputValue(math.inf, "ufd", "x")


def test_unknown_decoder():
    _, g = codes.surface_code(3)
    with pytest.raises(ValueError):
        decode(g, np.zeros(g.num_syndrome_vertices, dtype=np.uint8), "bp")


@pytest.mark.parametrize("decoder", ["ufd", "mwpm"])
def test_trivial_syndrome_gives_distance(decoder):
    _, g = codes.surface_code(5)
    g = g.with_weights(W)
    _, value, _ = decode(g, np.zeros(g.num_syndrome_vertices, dtype=np.uint8), decoder)
    assert value.phi == pytest.approx(5 * W)
    assert value.decoder == decoder


def test_repetition_single_error():
    _, g = codes.repetition_code(12)
    g = g.with_weights(W)
    _, value, _ = decode(g, g.syndrome_of([4]), "ufd")
    assert value.phi == pytest.approx(10 * W)
    assert value.phi == pytest.approx(29.44, abs=0.01)


def test_bridging_clusters():
    _, g = codes.surface_code(3)
    radii = np.full(g.num_vertices, 3.0)
    assert soft_output(g, radii) == 0.0


@pytest.mark.parametrize("f,expect", [(0, 12), (5, 2), (6, 0)])
def test_closed_form(f, expect):
    assert rep_phi_closed_form(12, f, W) == pytest.approx(expect * W)


def test_closed_form_range():
    with pytest.raises(ValueError):
        rep_phi_closed_form(12, 7, W)
    assert rep_phi_from_error_weight(12, 9, W) == pytest.approx(6 * W)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
@pytest.mark.parametrize("decoder", ["ufd", "mwpm"])
def test_repetition_soft_output_matches_closed_form(n, decoder):
    _, g = codes.repetition_code(n)
    g = g.with_weights(W)
    for k in range(n + 1):
        for support in itertools.combinations(range(n), k):
            corr, value, _ = decode(g, g.syndrome_of(list(support)), decoder)
            assert len(corr) == min(k, n - k)
            assert value.phi == pytest.approx(rep_phi_from_error_weight(n, k, W))


def test_exhaustive_llr_small_cases():
    _, g = codes.repetition_code(3)
    p = 0.1
    g = g.with_weights(codes.llr_weight(p))
    assert exhaustive_llr(g, g.syndrome_of([0]), "ufd", p) == pytest.approx(math.log(9))
    zero = np.zeros(3, dtype=np.uint8)
    assert exhaustive_llr(g, zero, "ufd", p) == pytest.approx(3 * codes.llr_weight(p))


def test_exhaustive_llr_too_large():
    _, g = codes.surface_code(9)
    with pytest.raises(ValueError):
        exhaustive_llr(g, np.zeros(g.num_syndrome_vertices, dtype=np.uint8), "ufd", 0.1)


@pytest.mark.parametrize("n", [5, 9, 15])
@pytest.mark.parametrize("p", [0.03, 0.2])
def test_llr_equals_soft_output_on_cycles(n, p):
    _, g = codes.repetition_code(n)
    g = g.with_weights(codes.llr_weight(p))
    rng = np.random.default_rng(n)
    for _ in range(15):
        synd = g.syndrome_of(np.flatnonzero(rng.random(n) < 0.3))
        phi = decode(g, synd, "ufd")[1].phi
        assert phi == pytest.approx(exhaustive_llr(g, synd, "ufd", p), rel=1e-9, abs=1e-9)


def test_soft_output_lower_bounds_llr_on_surface_code():
    code, g = codes.surface_code(3)
    p = 0.08
    g = g.with_weights(codes.llr_weight(p))
    for w in range(3):
        for support in itertools.combinations(range(code.n), w):
            synd = g.syndrome_of(list(support))
            phi = decode(g, synd, "mwpm")[1].phi
            # the exact log-odds should at least be positive whenever phi is
            assert exhaustive_llr(g, synd, "mwpm", p) > -1e-9 or phi == 0


def test_syndrome_hash_stable():
    assert syndrome_hash([1, 0, 1]) == syndrome_hash(np.array([1, 0, 1], dtype=np.uint8))
    assert syndrome_hash([1, 0, 1]) != syndrome_hash([1, 1, 1])


def test_combine_windows():
    assert combine_windows([0.0]) == (0.0, False)
    value, saturated = combine_windows([math.log(19), math.log(19)])
    assert value == pytest.approx(math.log(9)) and not saturated
    assert combine_windows([0.0, 0.0, 0.0]) == (0.0, True)
    with pytest.raises(ValueError):
        combine_windows([])
    with pytest.raises(ValueError):
        combine_windows([-1.0])


@given(st.floats(0, 200))
def test_single_window_is_identity(phi):
    value, saturated = combine_windows([phi])
    assert not saturated
    assert value == pytest.approx(phi, rel=1e-9, abs=1e-9)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 50), min_size=1, max_size=6))
def test_combining_never_beats_weakest_window(phis):
    value, _ = combine_windows(phis)
    assert value <= min(phis) + 1e-9
