import numpy as np
import pytest

from softqec import codes, noise


def test_sample_error_extremes():
    rng = np.random.default_rng(0)
    assert not noise.sample_error(50, 0.0, rng).any()
    assert noise.sample_error(50, 1.0, rng).all()
    with pytest.raises(ValueError):
        noise.sample_error(5, 1.5, rng)


def test_sample_error_concentration():
    e = noise.sample_error(10**6, 0.08, np.random.default_rng(1))
    sigma = np.sqrt(10**6 * 0.08 * 0.92)
    assert abs(int(e.sum()) - 8 * 10**4) < 3 * sigma


def test_syndrome_basics():
    code, _ = codes.repetition_code(3)
    assert not noise.syndrome(code.H_Z, np.zeros(3, dtype=np.uint8)).any()
    s = noise.syndrome(code.H_Z, np.array([0, 1, 0], dtype=np.uint8))
    assert s.tolist() == [1, 1, 0]
    with pytest.raises(ValueError):
        noise.syndrome(code.H_Z, np.zeros(4, dtype=np.uint8))


def test_syndrome_matches_naive_parity():
    code, _ = codes.surface_code(5)
    rng = np.random.default_rng(2)
    for _ in range(20):
        e = rng.integers(0, 2, code.n).astype(np.uint8)
        naive = [sum(int(e[j]) for j in np.flatnonzero(row)) % 2 for row in code.H_Z]
        assert noise.syndrome(code.H_Z, e).tolist() == naive


@pytest.fixture
def d3_memory():
    code, layer = codes.surface_code(3)
    return code, layer


def test_zero_noise_memory(d3_memory):
    code, layer = d3_memory
    setup = noise.MemorySetup(code, layer, codes.SpacetimeGraphSpec(1, 0.1), "ufd", sample_p=0.0)
    failed, phi = setup.trial(np.random.default_rng(0))
    assert not failed
    assert phi == pytest.approx(3 * codes.llr_weight(0.1))


def test_above_threshold_saturates(d3_memory):
    code, layer = d3_memory
    setup = noise.MemorySetup(code, layer, codes.SpacetimeGraphSpec(1, 0.2), "ufd", sample_p=0.5)
    batch = noise.run_trials(setup, 20000, seed=4)
    assert abs(noise.failure_rate(batch) - 0.5) < 0.02


@pytest.mark.parametrize("decoder", ["ufd", "mwpm"])
def test_chunking_is_worker_independent(d3_memory, decoder):
    code, layer = d3_memory
    setup = noise.MemorySetup(code, layer, codes.SpacetimeGraphSpec(3, 0.03, 0.02), decoder)
    one = noise.run_trials(setup, 5000, seed=9, workers=1)
    two = noise.run_trials(setup, 5000, seed=9, workers=2)
    assert np.array_equal(one.phi, two.phi) and np.array_equal(one.failure, two.failure)
    assert len(one) == 5000


def test_measurement_errors_only_before_last_round(d3_memory):
    code, layer = d3_memory
    setup = noise.MemorySetup(code, layer, codes.SpacetimeGraphSpec(4, 0.1), "ufd", sample_p=1e-12, sample_q=0.4)
    synd, parity = setup.sample(np.random.default_rng(5), 2000)
    assert not parity.any()
    # with data errors off, each round-t flip appears in rounds t and t+1, so every
    # check's detection events pair up over time
    m = code.H_Z.shape[0]
    per_check = synd.reshape(2000, 4, m).sum(axis=1) % 2
    assert not per_check.any()


def test_memory_experiment_wrapper(d3_memory):
    code, layer = d3_memory
    failed, phi = noise.memory_experiment(code, layer, codes.SpacetimeGraphSpec(2, 0.05), "mwpm",
                                          np.random.default_rng(1))
    assert isinstance(failed, bool) and phi >= 0
