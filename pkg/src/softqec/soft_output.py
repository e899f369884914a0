"""Soft output from decoder clusters, plus exact likelihood oracles."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import gf2
from .graph import WeightedDecodingGraph, incidence_matrix, logical_cycle_length, quotient_shortest_path
from .mwpm import mwpm_decode
from .ufd import ufd_decode

DECODERS = {"ufd": ufd_decode, "mwpm": mwpm_decode}


@dataclass(frozen=True)
class SoftOutputValue:
    phi: float
    decoder: str
    syndrome_hash: str

    def __post_init__(self):
        if not (self.phi >= 0 and math.isfinite(self.phi)):
            raise ValueError(f"soft output must be finite and non-negative, got {self.phi}")


def syndrome_hash(syndrome) -> str:
    bits = np.packbits(np.asarray(syndrome, dtype=np.uint8))
    return hashlib.blake2b(bits.tobytes(), digest_size=8).hexdigest()


def soft_output(graph: WeightedDecodingGraph, radii, b1: int | None = None, b2: int | None = None) -> float:
    """Length of the cheapest logical path once every cluster is shrunk to a point.

    With two boundary vertices this is the ``b1``-``b2`` distance in the
    quotient; on a boundaryless cycle it is the cheapest loop through the
    logical cut.
    """
    if len(graph.boundary) >= 2:
        b1 = graph.boundary[0] if b1 is None else b1
        b2 = graph.boundary[1] if b2 is None else b2
        return quotient_shortest_path(graph, radii, b1, b2)
    return logical_cycle_length(graph, radii)


def decode(graph: WeightedDecodingGraph, syndrome, decoder: str = "ufd"):
    """Run ``decoder`` and attach the soft output of its clusters.

    Returns ``(correction edge ids, SoftOutputValue, raw decoder result)``.
    """
    try:
        fn = DECODERS[decoder]
    except KeyError:
        raise ValueError(f"unknown decoder {decoder!r}") from None
    result = fn(graph, syndrome)
    phi = soft_output(graph, result.radii)
    return result.correction, SoftOutputValue(max(phi, 0.0), decoder, syndrome_hash(syndrome)), result


def rep_phi_closed_form(n: int, correction_weight: int, w: float) -> float:
    """Soft output of the length-``n`` repetition code when ``|F|`` edges are flipped."""
    if correction_weight < 0 or 2 * correction_weight > n:
        raise ValueError("correction weight must lie in [0, n/2]")
    return (n - 2 * correction_weight) * w


def rep_phi_from_error_weight(n: int, error_weight: int, w: float) -> float:
    """Same, from the weight of the error; ties at ``n/2`` give 0."""
    return rep_phi_closed_form(n, min(error_weight, n - error_weight), w)


def exhaustive_llr(graph: WeightedDecodingGraph, syndrome, decoder: str = "ufd", p: float = 0.1,
                   max_dimension: int = 24) -> float:
    """Exact ``log Pr(decoder succeeds | syndrome) / Pr(decoder fails | syndrome)``.

    Every fault location flips independently with probability ``p``.  All
    errors consistent with the syndrome are enumerated as the coset of the
    decoder's correction by the graph's cycle space, and split by whether
    they differ from the correction by a logical.  On graphs without
    stabilizer cycles (the repetition code) this is exactly ``E = F`` versus
    ``E != F``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    kernel = gf2.nullspace(incidence_matrix(graph), graph.num_edges)
    if kernel.shape[0] > max_dimension:
        raise ValueError(f"instance too large: {kernel.shape[0]}-dimensional coset")
    correction, _, _ = decode(graph, syndrome, decoder)
    base = np.zeros(graph.num_edges, dtype=np.uint8)
    base[correction] = 1
    elements = gf2.span(kernel) ^ base
    cut = np.zeros(graph.num_edges, dtype=np.int64)
    cut[list(graph.logical_cut)] = 1
    fails = (elements.astype(np.int64) @ cut) % 2 == (base.astype(np.int64) @ cut + 1) % 2
    w = math.log((1 - p) / p)
    logp = -w * elements.sum(axis=1).astype(float)
    return float(logsumexp(logp[~fails]) - logsumexp(logp[fails]))


def combine_windows(phis) -> tuple[float, bool]:
    """Union-bound soft output of several independently decoded windows.

    ``q = sum_i 1/(1 + e^phi_i)``; returns ``(ln((1-q)/q), saturated)`` and
    ``(0.0, True)`` once ``q`` reaches 1.
    """
    phis = np.asarray(list(phis), dtype=float)
    if phis.size == 0:
        raise ValueError("need at least one window")
    if np.any(phis < 0):
        raise ValueError("soft outputs must be non-negative")
    # log(1/(1+e^phi)) = -softplus(phi)
    log_q = float(logsumexp(-np.logaddexp(0.0, phis)))
    if log_q >= 0.0:
        return 0.0, True
    return math.log1p(-math.exp(log_q)) - log_q, False
