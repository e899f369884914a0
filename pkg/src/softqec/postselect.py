"""Postselection on the soft output: exact repetition-code tables, tail bounds,
cutoff analysis of sampled data and memory-time extrapolation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .bp import JointDistribution


def kl_bernoulli(a: float, b: float) -> float:
    """``D(a || b)`` between Bernoulli distributions, in nats."""
    if not 0 <= a <= 1:
        raise ValueError("a must lie in [0, 1]")
    if not 0 < b < 1:
        raise ValueError("b must lie strictly between 0 and 1")
    out = 0.0
    if a > 0:
        out += a * math.log(a / b)
    if a < 1:
        out += (1 - a) * math.log((1 - a) / (1 - b))
    return out


def _check_delta(p: float, delta: float) -> None:
    if not 0 < p < 0.5:
        raise ValueError("p must lie in (0, 1/2)")
    if not 0 <= delta < 1 - 2 * p:
        raise ValueError(f"delta must lie in [0, {1 - 2 * p}), got {delta}")


@dataclass(frozen=True)
class PostselectParams:
    V: int              # gates in the circuit
    n: int | float      # repetition-code length
    p: float            # bit-flip rate per gate
    delta: float        # relative cutoff: discard when phi <= n w delta
    N: int = 1          # samples wanted after postselection

    def __post_init__(self):
        if self.V < 1:
            raise ValueError("V must be >= 1")
        _check_delta(self.p, self.delta)

    @property
    def w(self) -> float:
        return math.log((1 - self.p) / self.p)

    @property
    def cutoff(self) -> float:
        return self.n * self.w * self.delta


@dataclass(frozen=True)
class CutoffBounds:
    expected_executions: float   # upper bound on E[M]
    discard_probability: float   # V exp(-n D((1-delta)/2 || p))
    epsilon: float               # upper bound on the TVD of accepted samples


def cutoff_bounds(params: PostselectParams) -> CutoffBounds:
    """Tail bounds for postselecting a circuit of repetition-code gadgets."""
    n, p, d, V = params.n, params.p, params.delta, params.V
    log_reject = -n * kl_bernoulli((1 - d) / 2, p)
    log_fail = -n * kl_bernoulli((1 + d) / 2, p)
    discard = V * math.exp(log_reject)
    if discard >= 1:
        raise ValueError("parameters outside the bound's regime: V exp(-n D) >= 1")
    # exp(log_fail) / (1 - exp(log_reject)) evaluated without underflow
    eps = V * math.exp(log_fail - math.log1p(-math.exp(log_reject)))
    return CutoffBounds(params.N / (1 - discard), discard, eps)


def no_postselection_length(V: int, p: float, epsilon: float) -> float:
    """Block length that makes the union bound ``V exp(-n(1-2p)^2/2)`` at most epsilon."""
    return 2 * math.log(V / epsilon) / (1 - 2 * p) ** 2


def cutoff_delta(V: int, p: float, n: float) -> float:
    """Relative cutoff that keeps the discard probability at most one half."""
    return 1 - 2 * p - math.sqrt(2 * math.log(2 * V) / n)


def postselection_parameters(V: int, p: float, epsilon: float) -> tuple[float, float]:
    """Block length and cutoff that discard at most half the runs and keep TVD <= epsilon."""
    if V < 1:
        raise ValueError("V must be >= 1")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0 < p < 0.5:
        raise ValueError("p must lie in (0, 1/2)")
    gap = (1 - 2 * p) ** 2
    n = max(2 * math.log(2 * V) / gap,
            (math.sqrt(math.log(2 * V / epsilon)) + math.sqrt(math.log(2 * V))) ** 2 / (2 * gap))
    delta = max(cutoff_delta(V, p, n), 0.0)
    return n, delta


def hoeffding_bounds(n: int, p: float, delta: float) -> tuple[float, float]:
    """``(accept-and-fail bound, reject bound)`` for one repetition-code block.

    With ``c = (1 - delta)/2 - p`` these are ``exp(-n/2 (1 + delta - 2p)^2)``
    and ``exp(-2 n c^2)``.
    """
    _check_delta(p, delta)
    c = (1 - delta) / 2 - p
    return math.exp(-n / 2 * (1 + delta - 2 * p) ** 2), math.exp(-2 * n * c * c)


# -- exact repetition code -------------------------------------------

@dataclass(frozen=True)
class RepJointRow:
    units: int          # phi / w, i.e. n - 2 min(|E|, n - |E|)
    phi: float
    mass: Fraction      # Pr(phi = this value)
    fail_mass: Fraction  # Pr(phi = this value and logical failure)


def rep_exact_joint(n: int, p) -> list[RepJointRow]:
    """Exact joint law of the soft output and failure for the length-``n`` code.

    ``|E| > n/2`` fails; on even ``n`` the tie ``|E| = n/2`` has soft output 0
    and also counts as a failure.  Values of zero mass are dropped.  ``p`` is converted through its decimal
    string so that 0.05 means exactly 1/20.
    """
    if not 1 <= n <= 64:
        raise ValueError("n must lie in [1, 64]")
    pf = Fraction(str(p)) if not isinstance(p, Fraction) else p
    if not 0 <= pf < 1:
        raise ValueError("p must lie in [0, 1)")
    w = math.log((1 - pf) / pf) if 0 < pf < Fraction(1, 2) else math.inf
    rows: dict[int, list[Fraction]] = {}
    for k in range(n + 1):
        mass = math.comb(n, k) * pf ** k * (1 - pf) ** (n - k)
        units = n - 2 * min(k, n - k)
        entry = rows.setdefault(units, [Fraction(0), Fraction(0)])
        entry[0] += mass
        if 2 * k >= n:
            entry[1] += mass
    out = []
    for units in sorted(rows):
        mass, fail = rows[units]
        if mass == 0:
            continue
        phi = units * w if units else 0.0
        out.append(RepJointRow(units, phi, mass, fail))
    return out


@dataclass(frozen=True)
class ExactCutoff:
    discarded: Fraction
    failure_before: Fraction
    failure_after: Fraction


def exact_cutoff(rows: list[RepJointRow], cutoff: float) -> ExactCutoff:
    """Discard ``phi <= cutoff`` in an exact table."""
    total = sum(r.mass for r in rows)
    fail = sum(r.fail_mass for r in rows)
    kept = [r for r in rows if r.phi > cutoff]
    kept_mass = sum((r.mass for r in kept), Fraction(0))
    if kept_mass == 0:
        raise ValueError("cutoff discards everything")
    kept_fail = sum((r.fail_mass for r in kept), Fraction(0))
    return ExactCutoff(total - kept_mass, fail / total, kept_fail / kept_mass)


# -- sampled data --------------------------------------------------------

def clopper_pearson(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n <= 0 or not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n and n > 0")
    alpha = 1 - confidence
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class CutoffResult:
    cutoff: float
    discard_fraction: float
    kept: int
    kept_failures: int
    failure_rate: float
    interval: tuple[float, float]
    failure_rate_before: float
    interval_before: tuple[float, float]


def cutoff_analysis(data, cutoff: float, failures=None, confidence: float = 0.95) -> CutoffResult:
    """Discard every sample with ``phi <= cutoff`` and report what survives.

    ``data`` is either an array of soft outputs (with ``failures`` alongside)
    or a :class:`JointDistribution`, where a bin is discarded when its lower
    edge is at most the cutoff.
    """
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    if isinstance(data, JointDistribution):
        counts, fails = data.counts, data.failures
        drop = data.bin_low <= cutoff + 1e-9 * data.width
        total, total_fail = int(counts.sum()), int(fails.sum())
        kept, kept_fail = int(counts[~drop].sum()), int(fails[~drop].sum())
    else:
        phis = np.asarray(data, dtype=float)
        fl = np.asarray(failures).astype(bool)
        if fl.shape != phis.shape:
            raise ValueError("need one failure flag per soft output")
        keep = phis > cutoff
        total, total_fail = len(phis), int(fl.sum())
        kept, kept_fail = int(keep.sum()), int(fl[keep].sum())
    if kept == 0:
        raise ValueError("no samples survive the cutoff")
    return CutoffResult(cutoff, 1 - kept / total, kept, kept_fail, kept_fail / kept,
                        clopper_pearson(kept_fail, kept, confidence), total_fail / total,
                        clopper_pearson(total_fail, total, confidence))


def cutoff_for_fraction(phis, fraction: float) -> float:
    """Smallest observed soft output whose lower tail holds at least ``fraction`` of samples."""
    phis = np.sort(np.asarray(phis, dtype=float))
    idx = min(len(phis) - 1, max(0, math.ceil(fraction * len(phis)) - 1))
    return float(phis[idx])


def simulate_postselected_circuit(params: PostselectParams, executions: int,
                                  rng: np.random.Generator, batch: int = 1 << 18) -> tuple[float, float, int]:
    """Monte Carlo of the postselected repetition-code circuit.

    Returns ``(discard fraction, failure rate among accepted runs, accepted runs)``.
    A run is discarded if any gate's soft output is at most the cutoff, and
    fails if any gate's block has a majority (or tied) error.
    """
    n, V = int(params.n), params.V
    threshold = n * params.delta
    discarded = failed = 0
    done = 0
    while done < executions:
        size = min(batch, executions - done)
        k = rng.binomial(n, params.p, size=(size, V))
        units = n - 2 * np.minimum(k, n - k)
        drop = np.any(units <= threshold, axis=1)
        fail = np.any(2 * k >= n, axis=1)
        discarded += int(drop.sum())
        failed += int((fail & ~drop).sum())
        done += size
    accepted = executions - discarded
    return discarded / executions, (failed / accepted if accepted else math.nan), accepted


# -- extrapolation -------------------------------------------------------

def extrapolate(p_logical: float, T: float, T_mem: float, k: int = 1) -> float:
    """Failure of ``k`` blocks stored for ``T_mem`` rounds, given ``p_L`` over ``T`` rounds."""
    if not 0 <= p_logical <= 0.5:
        raise ValueError("logical error rate must lie in [0, 1/2]")
    if T < 1 or T_mem < T:
        raise ValueError("need 1 <= T <= T_mem")
    if k < 1:
        raise ValueError("k must be >= 1")
    per_block = (1 - (1 - 2 * p_logical) ** (T_mem / T)) / 2
    return 1 - (1 - per_block) ** k


@dataclass(frozen=True)
class ExtrapolationModel:
    p_logical: float
    T: float
    T_mem: float
    k: int = 1
    alpha: float | None = None   # exponent of a power-law fit, if one was made

    def __post_init__(self):
        if not 0 <= self.p_logical <= 0.5:
            raise ValueError("logical error rate must lie in [0, 1/2]")
        if self.T < 1 or self.T_mem < 1:
            raise ValueError("T and T_mem must be >= 1")

    def combined(self) -> float:
        return extrapolate(self.p_logical, self.T, self.T_mem, self.k)


def fit_power_law(x, y) -> tuple[float, float]:
    """Least-squares fit of ``y = A x^alpha`` in log-log space; returns ``(alpha, A)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        raise ValueError("need at least two positive points")
    alpha, log_a = np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)
    return float(alpha), float(math.exp(log_a))
