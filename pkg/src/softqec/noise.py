"""Bit-flip and phenomenological noise, and the memory experiment harness.

A memory experiment runs ``T`` rounds of syndrome extraction.  Round ``t``
applies data flips ``e_t`` and reports ``H E_t + m_t`` where ``E_t`` is the
accumulated error and ``m_t`` a measurement flip (none in the last round).
The decoder sees the differences of consecutive rounds,
``D_t = H e_t + m_t + m_{t-1}``.

Trials are generated in fixed-size chunks; chunk ``c`` draws from
``numpy.random.default_rng(SeedSequence([seed, c]))``, so results do not
depend on how chunks are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .codes import CssCode, SpacetimeGraphSpec, llr_weight, spacetime_graph
from .graph import WeightedDecodingGraph
from .soft_output import decode

CHUNK = 4096


def sample_error(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    return (rng.random(n) < p).astype(np.uint8)


def syndrome(H, e) -> np.ndarray:
    """``H e`` over GF(2); ``e`` may be a vector or a batch of row vectors."""
    H = np.asarray(H)
    e = np.asarray(e)
    if e.shape[-1] != H.shape[1]:
        raise ValueError(f"error length {e.shape[-1]} does not match {H.shape[1]} columns")
    return ((e.astype(np.int64) @ H.T.astype(np.int64)) & 1).astype(np.uint8)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chunk)]))


@dataclass
class TrialBatch:
    phi: np.ndarray
    failure: np.ndarray

    def __len__(self) -> int:
        return len(self.phi)


@dataclass
class MemorySetup:
    """A code, its Z-check graph and the noise model of a memory experiment.

    ``sample_p`` / ``sample_q`` override the rates used to draw errors, which
    otherwise match the decoder's weights (``spec.p`` and ``spec.q``).
    """

    code: CssCode
    layer: WeightedDecodingGraph
    spec: SpacetimeGraphSpec
    decoder: str = "ufd"
    sample_p: float | None = None
    sample_q: float | None = None
    graph: WeightedDecodingGraph = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if self.spec.rounds == 1:
            self.graph = self.layer.with_weights(llr_weight(self.spec.p))
        else:
            self.graph = spacetime_graph(self.layer, self.spec)
        self.H = self.code.H_Z
        self.logical = self.code.L_Z[0].astype(np.int64)
        if self.H.shape[0] != self.layer.num_syndrome_vertices:
            raise ValueError("graph vertices must correspond to the rows of H_Z")
        cut = np.zeros(self.graph.num_edges, dtype=np.uint8)
        cut[list(self.graph.logical_cut)] = 1
        self._cut = cut

    @property
    def p(self) -> float:
        return self.spec.p if self.sample_p is None else self.sample_p

    @property
    def q(self) -> float:
        return self.spec.measurement_p if self.sample_q is None else self.sample_q

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Difference syndromes (``size`` x ``T*m``) and the logical parity of each error."""
        T = self.spec.rounds
        m, n = self.H.shape
        data = rng.random((size, T, n)) < self.p
        meas = np.zeros((size, T, m), dtype=np.uint8)
        if T > 1:
            meas[:, : T - 1] = rng.random((size, T - 1, m)) < self.q
        d = syndrome(self.H, data.astype(np.uint8))
        d ^= meas
        d[:, 1:] ^= meas[:, :-1]
        parity = (data.sum(axis=1).astype(np.int64) @ self.logical) & 1
        return d.reshape(size, T * m), parity.astype(np.uint8)

    def decode_one(self, synd: np.ndarray) -> tuple[float, int]:
        """Soft output and logical parity of the decoder's correction."""
        key = np.packbits(synd).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            correction, value, _ = decode(self.graph, synd, self.decoder)
            hit = (value.phi, int(self._cut[correction].sum() & 1))
            if len(self._cache) < 2_000_000:
                self._cache[key] = hit
        return hit

    def run_chunk(self, seed: int, chunk: int, size: int = CHUNK) -> TrialBatch:
        synd, parity = self.sample(chunk_rng(seed, chunk), size)
        packed = np.packbits(synd, axis=1)
        uniq, first, inverse = np.unique(packed, axis=0, return_index=True, return_inverse=True)
        phis = np.empty(len(uniq))
        corr = np.empty(len(uniq), dtype=np.uint8)
        for i, row in enumerate(first):
            phis[i], corr[i] = self.decode_one(synd[row])
        inverse = inverse.reshape(-1)
        return TrialBatch(phis[inverse], parity ^ corr[inverse])

    def trial(self, rng: np.random.Generator) -> tuple[bool, float]:
        """One memory experiment: ``(failed, soft output)``."""
        synd, parity = self.sample(rng, 1)
        phi, corr = self.decode_one(synd[0])
        return bool(parity[0] ^ corr), phi


def memory_experiment(code: CssCode, layer: WeightedDecodingGraph, spec: SpacetimeGraphSpec,
                      decoder: str, rng: np.random.Generator) -> tuple[bool, float]:
    return MemorySetup(code, layer, spec, decoder).trial(rng)


def _chunk_worker(args):
    setup, seed, chunk, size = args
    return chunk, setup.run_chunk(seed, chunk, size)


def run_trials(setup: MemorySetup, trials: int, seed: int, workers: int = 1,
               progress=None) -> TrialBatch:
    """Run ``trials`` memory experiments; identical for any ``workers``."""
    sizes = [CHUNK] * (trials // CHUNK)
    if trials % CHUNK:
        sizes.append(trials % CHUNK)
    results: dict[int, TrialBatch] = {}
    if workers <= 1:
        for c, size in enumerate(sizes):
            results[c] = setup.run_chunk(seed, c, size)
            if progress:
                progress(sum(len(b) for b in results.values()), trials)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            jobs = [(setup, seed, c, size) for c, size in enumerate(sizes)]
            for c, batch in pool.map(_chunk_worker, jobs):
                results[c] = batch
                if progress:
                    progress(sum(len(b) for b in results.values()), trials)
    if not results:
        return TrialBatch(np.zeros(0), np.zeros(0, dtype=np.uint8))
    order = [results[c] for c in range(len(sizes))]
    return TrialBatch(np.concatenate([b.phi for b in order]),
                      np.concatenate([b.failure for b in order]))


def failure_rate(batch: TrialBatch) -> float:
    return float(batch.failure.mean()) if len(batch) else math.nan
