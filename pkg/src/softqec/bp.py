"""Sum-product belief propagation and the two-stage hierarchical-code simulation.

The outer code is decoded from its full syndrome history.  Stage one builds an
empirical joint distribution of (inner soft output, inner logical failure);
stage two draws every outer fault, data and measurement alike, from that
distribution and hands BP a per-variable prior derived from the drawn soft
output.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.stats import binomtest

from .codes import CssCode

LLR_CLAMP = 30.0
MAX_ITER = 64
_TINY = 1e-12


@dataclass
class TannerGraph:
    H: sparse.csr_matrix
    num_data: int = 0          # leading variables that are data faults
    rounds: int = 1
    edge_check: np.ndarray = field(init=False, repr=False)
    edge_var: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.H = sparse.csr_matrix(self.H, dtype=np.uint8)
        self.H.eliminate_zeros()
        coo = self.H.tocoo()
        order = np.lexsort((coo.col, coo.row))
        self.edge_check = coo.row[order].astype(np.int64)
        self.edge_var = coo.col[order].astype(np.int64)

    @property
    def num_checks(self) -> int:
        return self.H.shape[0]

    @property
    def num_vars(self) -> int:
        return self.H.shape[1]

    def syndrome_of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        return (np.asarray(self.H @ x) & 1).astype(np.uint8).reshape(-1)


def tanner_graph(H) -> TannerGraph:
    H = sparse.csr_matrix(H)
    return TannerGraph(H, num_data=H.shape[1], rounds=1)


def spacetime_tanner(H_Z, T: int) -> TannerGraph:
    """Tanner graph of the difference syndromes over ``T`` rounds.

    Data variable ``(t, q)`` is ``t*n + q``; measurement variable ``(t, c)``,
    present for ``t < T-1`` only, is ``T*n + t*m + c``.  Check ``(t, c)`` is
    row ``t*m + c`` and sees the round-``t`` data faults on its support plus
    the measurement faults of rounds ``t`` and ``t-1``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    H = sparse.csr_matrix(H_Z, dtype=np.uint8)
    m, n = H.shape
    data = sparse.kron(sparse.identity(T, dtype=np.uint8, format="csr"), H, format="csr")
    if T == 1:
        return TannerGraph(data, num_data=n, rounds=1)
    # meas[(t, c), (t', c)] = 1 for t' in {t, t-1}, t' < T-1
    steps = sparse.eye(T, T - 1, k=0, dtype=np.uint8) + sparse.eye(T, T - 1, k=-1, dtype=np.uint8)
    meas = sparse.kron(steps, sparse.identity(m, dtype=np.uint8), format="csr")
    return TannerGraph(sparse.hstack([data, meas], format="csr"), num_data=T * n, rounds=T)


def _phi(x: np.ndarray) -> np.ndarray:
    """``-log tanh(x/2)``, its own inverse on (0, inf)."""
    x = np.clip(x, _TINY, 2 * LLR_CLAMP)
    return -np.log(np.tanh(x / 2))


@dataclass
class BpResult:
    estimate: np.ndarray
    converged: bool
    iterations: int
    marginals: np.ndarray


def bp_decode(tanner: TannerGraph, syndrome, priors, max_iter: int = MAX_ITER) -> BpResult:
    """Flooding-schedule sum-product decoding.

    ``priors`` are log-likelihood ratios ``ln((1-p)/p)`` per variable (a
    scalar is broadcast).  The estimate flips every variable with a negative
    marginal.  Convergence means the estimate reproduces ``syndrome``; it is
    tested before the first iteration and after each one.
    """
    syndrome = np.asarray(syndrome, dtype=np.uint8).reshape(-1)
    if syndrome.shape[0] != tanner.num_checks:
        raise ValueError(f"syndrome has {syndrome.shape[0]} bits, expected {tanner.num_checks}")
    nv, nc = tanner.num_vars, tanner.num_checks
    priors = np.clip(np.broadcast_to(np.asarray(priors, dtype=float), (nv,)), -LLR_CLAMP, LLR_CLAMP)
    ec, ev = tanner.edge_check, tanner.edge_var
    check_sign = 1.0 - 2.0 * syndrome[ec]
    m_cv = np.zeros(len(ec))
    marg = priors.copy()

    def satisfied(est):
        counts = np.bincount(ec, weights=est[ev], minlength=nc)
        return np.array_equal(counts.astype(np.int64) & 1, syndrome)

    est = (marg < 0).astype(np.uint8)
    if satisfied(est):
        return BpResult(est, True, 0, marg)
    for it in range(1, max_iter + 1):
        m_vc = np.clip(marg[ev] - m_cv, -LLR_CLAMP, LLR_CLAMP)
        neg = (m_vc < 0).astype(np.int64)
        mag = _phi(np.abs(m_vc))
        total_mag = np.bincount(ec, weights=mag, minlength=nc)
        total_neg = np.bincount(ec, weights=neg, minlength=nc).astype(np.int64)
        parity = (total_neg[ec] - neg) & 1
        out = _phi(np.maximum(total_mag[ec] - mag, _TINY))
        m_cv = np.clip(check_sign * (1.0 - 2.0 * parity) * out, -LLR_CLAMP, LLR_CLAMP)
        marg = priors + np.bincount(ev, weights=m_cv, minlength=nv)
        est = (marg < 0).astype(np.uint8)
        if satisfied(est):
            return BpResult(est, True, it, marg)
    return BpResult(est, False, max_iter, marg)


def llr(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.log1p(-p) - np.log(p)


@dataclass
class JointDistribution:
    """Histogram of (soft output bin, inner failure) pairs.

    Bin ``i`` covers ``[i*width, (i+1)*width)``.  On uniform-weight graphs the
    soft output is a multiple of half the edge weight, which is the natural
    width.
    """

    width: float
    successes: np.ndarray
    failures: np.ndarray

    def __post_init__(self):
        self.successes = np.asarray(self.successes, dtype=np.int64)
        self.failures = np.asarray(self.failures, dtype=np.int64)
        if self.successes.shape != self.failures.shape:
            raise ValueError("count arrays differ in length")
        if np.any(self.successes < 0) or np.any(self.failures < 0):
            raise ValueError("counts must be non-negative")
        if self.total == 0:
            raise ValueError("empty distribution")

    @property
    def counts(self) -> np.ndarray:
        return self.successes + self.failures

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def marginal_rate(self) -> float:
        return float(self.failures.sum() / self.total)

    @property
    def bin_low(self) -> np.ndarray:
        return np.arange(len(self.counts)) * self.width

    def conditional(self) -> np.ndarray:
        """Smoothed failure probability per bin, ``(f + 1/2) / (c + 1)``."""
        return (self.failures + 0.5) / (self.counts + 1.0)

    def prior_llr(self) -> np.ndarray:
        return llr(self.conditional())

    def bin_of(self, phi) -> np.ndarray:
        idx = np.floor(np.asarray(phi, dtype=float) / self.width + 1e-6).astype(np.int64)
        return np.clip(idx, 0, len(self.counts) - 1)

    def llr_for_phi(self, phi) -> np.ndarray:
        """Prior for an arbitrary soft output, snapping to the nearest observed bin."""
        idx = self.bin_of(phi)
        observed = np.flatnonzero(self.counts)
        pos = np.searchsorted(observed, idx).clip(0, len(observed) - 1)
        left = observed[np.maximum(pos - 1, 0)]
        right = observed[pos]
        nearest = np.where(np.abs(idx - left) <= np.abs(right - idx), left, right)
        nearest = np.where(self.counts[idx] > 0, idx, nearest)
        return self.prior_llr()[nearest]

    def sample(self, rng: np.random.Generator, size) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``size`` i.i.d. (bin, flip) pairs from the empirical distribution."""
        probs = self.counts / self.total
        bins = rng.choice(len(probs), size=size, p=probs)
        rate = np.divide(self.failures, self.counts, out=np.zeros(len(probs)), where=self.counts > 0)
        flips = (rng.random(size) < rate[bins]).astype(np.uint8)
        return bins, flips

    def to_json(self) -> dict:
        return {"bin_width": self.width,
                "bin_edges": (np.arange(len(self.counts) + 1) * self.width).tolist(),
                "successes": self.successes.tolist(), "failures": self.failures.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "JointDistribution":
        return cls(float(data["bin_width"]), data["successes"], data["failures"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "JointDistribution":
        return cls.from_json(json.loads(Path(path).read_text()))

    def csv_rows(self):
        for lo, s, f in zip(self.bin_low, self.successes, self.failures):
            yield lo, lo + self.width, int(s), int(f)


def build_joint(phis, failures, width: float) -> JointDistribution:
    phis = np.asarray(phis, dtype=float)
    failures = np.asarray(failures).astype(bool)
    if phis.size == 0:
        raise ValueError("need at least one sample")
    if phis.shape != failures.shape:
        raise ValueError("phi and failure arrays differ in length")
    if width <= 0:
        raise ValueError("bin width must be positive")
    idx = np.floor(phis / width + 1e-6).astype(np.int64)
    nbins = int(idx.max()) + 1
    fail = np.bincount(idx[failures], minlength=nbins)
    succ = np.bincount(idx[~failures], minlength=nbins)
    return JointDistribution(width, succ, fail)


@dataclass
class HierarchicalSetup:
    outer: CssCode
    rounds: int
    joint: JointDistribution
    max_iter: int = MAX_ITER
    tanner: TannerGraph = field(init=False, repr=False)

    def __post_init__(self):
        self.tanner = spacetime_tanner(self.outer.H_Z, self.rounds)
        self._soft_table = self.joint.prior_llr()
        self._hard_prior = float(llr(min(max(self.joint.marginal_rate, _TINY), 1 - _TINY)))

    def draw(self, rng: np.random.Generator):
        return self.joint.sample(rng, self.tanner.num_vars)

    def failed(self, flips: np.ndarray, estimate: np.ndarray) -> bool:
        """Whether the residual data error anticommutes with some logical Z."""
        n, T = self.outer.n, self.rounds
        residual = (flips[: n * T] ^ estimate[: n * T]).reshape(T, n).sum(axis=0).astype(np.int64) & 1
        return bool(np.any((self.outer.L_Z.astype(np.int64) @ residual) & 1))

    def decode(self, bins, flips, mode: str) -> tuple[bool, bool]:
        if mode == "soft":
            priors = self._soft_table[bins]
        elif mode == "hard":
            priors = np.full(len(bins), self._hard_prior)
        else:
            raise ValueError(f"unknown prior mode {mode!r}")
        res = bp_decode(self.tanner, self.tanner.syndrome_of(flips), priors, self.max_iter)
        return self.failed(flips, res.estimate), res.converged

    def trial(self, rng: np.random.Generator, mode: str = "soft") -> bool:
        bins, flips = self.draw(rng)
        return self.decode(bins, flips, mode)[0]

    def paired_trial(self, seed: int, index: int) -> tuple[bool, bool]:
        """Soft and hard decodes of the same draw: ``(soft failed, hard failed)``."""
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))
        bins, flips = self.draw(rng)
        return self.decode(bins, flips, "soft")[0], self.decode(bins, flips, "hard")[0]


def hierarchical_trial(joint: JointDistribution, outer: CssCode, T: int, rng: np.random.Generator,
                       mode: str = "soft", max_iter: int = MAX_ITER) -> bool:
    return HierarchicalSetup(outer, T, joint, max_iter).trial(rng, mode)


def _paired_worker(args):
    setup, seed, indices = args
    return [setup.paired_trial(seed, i) for i in indices]


def run_paired(setup: HierarchicalSetup, trials: int, seed: int, workers: int = 1,
               progress=None) -> np.ndarray:
    """``(trials, 2)`` boolean array of soft/hard failures on shared draws."""
    if workers <= 1:
        out = []
        for i in range(trials):
            out.append(setup.paired_trial(seed, i))
            if progress and (i + 1) % 50 == 0:
                progress(i + 1, trials)
        return np.array(out, dtype=bool).reshape(trials, 2)
    blocks = [list(range(s, min(s + 64, trials))) for s in range(0, trials, 64)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        out = []
        for res in pool.map(_paired_worker, [(setup, seed, b) for b in blocks]):
            out.extend(res)
            if progress:
                progress(len(out), trials)
    return np.array(out, dtype=bool).reshape(trials, 2)


@dataclass
class PairedComparison:
    soft_failures: int
    hard_failures: int
    soft_only: int      # draws where only the soft-prior decode failed
    hard_only: int
    trials: int
    p_value: float      # one-sided exact McNemar test that soft fails less often


def paired_comparison(outcomes: np.ndarray) -> PairedComparison:
    outcomes = np.asarray(outcomes, dtype=bool)
    soft, hard = outcomes[:, 0], outcomes[:, 1]
    b = int(np.sum(soft & ~hard))
    c = int(np.sum(hard & ~soft))
    p = 1.0 if b + c == 0 else float(binomtest(c, b + c, 0.5, alternative="greater").pvalue)
    return PairedComparison(int(soft.sum()), int(hard.sum()), b, c, len(outcomes), p)
