"""CSS codes and their decoding graphs.

Conventions
-----------
* ``H_Z`` rows are Z-type checks; they detect X (bit-flip) errors.  Every
  decoding graph built here is the graph of ``H_Z`` and decodes X errors.
* A decoding graph's ``logical_cut`` is the set of edges whose fault lies in
  the support of the chosen ``L_Z`` row; an X error ``e`` followed by a
  correction ``F`` fails iff ``e xor F`` meets the cut an odd number of times.
* Rotated surface code: qubit ``(i, j)`` has index ``i*d + j``.  Z plaquettes
  sit on the top and bottom edges, so X-error strings run left to right and
  the Z-graph boundary vertices are ``b1`` = left, ``b2`` = right.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gf2
from .graph import WeightedDecodingGraph

MAX_QUBITS = 50_000


@dataclass
class CssCode:
    H_X: np.ndarray
    H_Z: np.ndarray
    L_X: np.ndarray = field(default=None)
    L_Z: np.ndarray = field(default=None)
    name: str = ""

    def __post_init__(self):
        self.H_Z = gf2.as_binary(self.H_Z)
        if np.size(self.H_X):
            self.H_X = gf2.as_binary(self.H_X)
        else:
            self.H_X = np.zeros((0, self.H_Z.shape[1]), dtype=np.uint8)
        if self.H_X.shape[1] != self.H_Z.shape[1]:
            raise ValueError("H_X and H_Z must have the same number of columns")
        if np.any(gf2.matmul(self.H_X, self.H_Z.T)):
            raise ValueError("H_X H_Z^T != 0: checks do not commute")
        if self.L_X is None or self.L_Z is None:
            self.L_X, self.L_Z = logical_basis(self)

    @property
    def n(self) -> int:
        return self.H_Z.shape[1]

    @property
    def k(self) -> int:
        return self.n - gf2.rank(self.H_X) - gf2.rank(self.H_Z)

    def to_json(self) -> dict:
        def sparse(m):
            return [np.flatnonzero(row).tolist() for row in m]
        return {"name": self.name, "n": self.n,
                "H_X": sparse(self.H_X), "H_Z": sparse(self.H_Z),
                "L_X": sparse(self.L_X), "L_Z": sparse(self.L_Z)}

    @classmethod
    def from_json(cls, data: dict) -> "CssCode":
        n = int(data["n"])

        def dense(rows):
            m = np.zeros((len(rows), n), dtype=np.uint8)
            for i, cols in enumerate(rows):
                m[i, cols] = 1
            return m
        lx = dense(data["L_X"]) if "L_X" in data else None
        lz = dense(data["L_Z"]) if "L_Z" in data else None
        return cls(dense(data["H_X"]), dense(data["H_Z"]), lx, lz, data.get("name", ""))


def logical_basis(code: CssCode) -> tuple[np.ndarray, np.ndarray]:
    """Paired logical bases with ``L_X L_Z^T = I``.

    ``L_Z`` spans ker(H_X) modulo rowspace(H_Z) and ``L_X`` spans ker(H_Z)
    modulo rowspace(H_X), each picked greedily in lowest-index order.
    """
    n = code.n
    lz = _quotient_basis(code.H_X, code.H_Z, n)
    lx = _quotient_basis(code.H_Z, code.H_X, n)
    if lz.shape[0] != lx.shape[0]:
        raise ArithmeticError("logical X and Z counts disagree")
    k = lz.shape[0]
    if k == 0:
        return lx, lz
    pairing = gf2.matmul(lx, lz.T)
    lx = gf2.matmul(gf2.inverse(pairing), lx)
    return lx, lz


def _quotient_basis(commute_with: np.ndarray, modulo: np.ndarray, n: int) -> np.ndarray:
    kernel = gf2.nullspace(commute_with, n) if commute_with.shape[0] else np.eye(n, dtype=np.uint8)
    stacked = np.vstack([modulo, kernel]) if modulo.shape[0] else kernel
    rows = gf2.independent_rows(stacked)
    picked = [r - modulo.shape[0] for r in rows if r >= modulo.shape[0]]
    return kernel[picked]


# -- graphs from check matrices ------------------------------------------

def graph_from_checks(H: np.ndarray, boundary_of, logical: np.ndarray, weight: float = 1.0,
                      num_boundaries: int = 2) -> WeightedDecodingGraph:
    """Decoding graph with one vertex per row of ``H`` and one edge per column.

    Columns of weight one are attached to boundary vertex ``boundary_of(col)``
    (an index in ``range(num_boundaries)``).
    """
    H = gf2.as_binary(H)
    m, n = H.shape
    us, vs = [], []
    for col in range(n):
        rows = np.flatnonzero(H[:, col])
        if len(rows) == 2:
            us.append(int(rows[0]))
            vs.append(int(rows[1]))
        elif len(rows) == 1:
            us.append(int(rows[0]))
            vs.append(m + boundary_of(col))
        else:
            raise ValueError(f"column {col} has weight {len(rows)}; need 1 or 2")
    cut = frozenset(int(c) for c in np.flatnonzero(logical))
    return WeightedDecodingGraph(m + num_boundaries, tuple(range(m, m + num_boundaries)),
                                 us, vs, np.full(n, float(weight)), np.arange(n),
                                 logical_cut=cut)


def repetition_code(n: int) -> tuple[CssCode, WeightedDecodingGraph]:
    """Length-``n`` bit-flip code with the redundant wrap-around check.

    The decoding graph is the ``n``-cycle: check ``i`` compares bits ``i`` and
    ``i+1``, bit ``j`` is the edge between checks ``j-1`` and ``j``.  There is
    no boundary vertex; the logical cut is the single edge of bit 0.
    """
    if n < 2:
        raise ValueError("repetition code needs n >= 2")
    H = np.zeros((n, n), dtype=np.uint8)
    for i in range(n):
        H[i, i] = 1
        H[i, (i + 1) % n] = 1
    code = CssCode(np.zeros((0, n), dtype=np.uint8), H, name=f"repetition-{n}")
    us = [(j - 1) % n for j in range(n)]
    vs = list(range(n))
    cut = frozenset(int(c) for c in np.flatnonzero(code.L_Z[0]))
    graph = WeightedDecodingGraph(n, (), us, vs, np.ones(n), np.arange(n), logical_cut=cut)
    return code, graph


def _rotated_checks(d: int):
    def q(i, j):
        return i * d + j

    z_checks, x_checks = [], []
    for i in range(-1, d):
        for j in range(-1, d):
            support = [q(a, b) for a in (i, i + 1) for b in (j, j + 1) if 0 <= a < d and 0 <= b < d]
            even = (i + j) % 2 == 0
            bulk = 0 <= i <= d - 2 and 0 <= j <= d - 2
            if bulk:
                (z_checks if even else x_checks).append(support)
            elif i in (-1, d - 1) and 0 <= j <= d - 2 and even:
                z_checks.append(support)
            elif j in (-1, d - 1) and 0 <= i <= d - 2 and not even:
                x_checks.append(support)
    return z_checks, x_checks


def _planar_checks(d: int):
    size = 2 * d - 1
    index = {}
    for r in range(size):
        for c in range(size):
            if (r + c) % 2 == 0:
                index[(r, c)] = len(index)
    z_checks, x_checks = [], []
    for r in range(size):
        for c in range(size):
            if (r + c) % 2 == 0:
                continue
            support = [index[(r + dr, c + dc)] for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
                       if (r + dr, c + dc) in index]
            (z_checks if r % 2 == 1 else x_checks).append(support)
    return z_checks, x_checks, index


def _to_matrix(rows, n):
    m = np.zeros((len(rows), n), dtype=np.uint8)
    for i, cols in enumerate(rows):
        m[i, cols] = 1
    return m


def surface_code(d: int, variant: str = "rotated") -> tuple[CssCode, WeightedDecodingGraph]:
    """Surface code and the decoding graph of its Z checks (unit weights).

    Boundary vertices are ``b1 = num_checks`` and ``b2 = num_checks + 1``.
    """
    if d < 3 or d % 2 == 0:
        raise ValueError("surface code distance must be odd and >= 3")
    if variant == "rotated":
        n = d * d
        z_rows, x_rows = _rotated_checks(d)

        def side(col):  # left column -> b1, right column -> b2
            j = col % d
            if j == 0:
                return 0
            if j == d - 1:
                return 1
            raise AssertionError("weight-1 column away from the sides")
    elif variant == "planar":
        z_rows, x_rows, index = _planar_checks(d)
        n = len(index)
        rows_of = {v: k for k, v in index.items()}

        def side(col):  # top row -> b1, bottom row -> b2
            r = rows_of[col][0]
            if r == 0:
                return 0
            if r == 2 * d - 2:
                return 1
            raise AssertionError("weight-1 column away from the boundary")
    else:
        raise ValueError(f"unknown surface code variant {variant!r}")
    code = CssCode(_to_matrix(x_rows, n), _to_matrix(z_rows, n), name=f"{variant}-surface-{d}")
    graph = graph_from_checks(code.H_Z, side, code.L_Z[0])
    return code, graph


@dataclass(frozen=True)
class SpacetimeGraphSpec:
    rounds: int
    p: float
    q: float | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        for name, val in (("p", self.p), ("q", self.measurement_p)):
            if not 0 < val < 0.5:
                raise ValueError(f"{name} must lie in (0, 1/2), got {val}")

    @property
    def measurement_p(self) -> float:
        return self.p if self.q is None else self.q


def llr_weight(p: float) -> float:
    return math.log((1 - p) / p)


def spacetime_graph(graph: WeightedDecodingGraph, spec: SpacetimeGraphSpec) -> WeightedDecodingGraph:
    """Stack ``spec.rounds`` copies of a 2D graph, linked by measurement edges.

    Vertex ``(c, t)`` is ``t * m + c`` for the ``m`` syndrome vertices of the
    layer; the boundary vertices follow, shared by every round.  Data fault
    ``(t, f)`` has id ``t * F + f`` with ``F`` the layer's fault count, and
    measurement fault ``(t, c)`` (rounds ``t < T-1`` only, the last round
    being perfect) has id ``T * F + t * m + c``.  Use :func:`fault_location`
    to invert the ids.
    """
    if not graph.boundary:
        raise ValueError("spacetime graphs need a boundary")
    T = spec.rounds
    synd = graph.syndrome_vertices
    if not np.array_equal(synd, np.arange(len(synd))):
        raise ValueError("syndrome vertices must precede boundary vertices")
    m = len(synd)
    nb = len(graph.boundary)
    bmap = {b: T * m + i for i, b in enumerate(graph.boundary)}
    nfaults = int(graph.fault_ids.max()) + 1
    wd, wm = llr_weight(spec.p), llr_weight(spec.measurement_p)

    def place(x, t):
        return bmap[x] if x in bmap else t * m + x

    us, vs, ws, fs, labels, cut = [], [], [], [], [], []
    for t in range(T):
        for e in range(graph.num_edges):
            eid = len(us)
            us.append(place(int(graph.edge_u[e]), t))
            vs.append(place(int(graph.edge_v[e]), t))
            ws.append(wd)
            fs.append(t * nfaults + int(graph.fault_ids[e]))
            labels.append("space")
            if e in graph.logical_cut:
                cut.append(eid)
    for t in range(T - 1):
        for c in range(m):
            us.append(t * m + c)
            vs.append((t + 1) * m + c)
            ws.append(wm)
            fs.append(T * nfaults + t * m + c)
            labels.append("time")
    return WeightedDecodingGraph(T * m + nb, tuple(range(T * m, T * m + nb)), us, vs, ws, fs,
                                 tuple(labels), frozenset(cut))


def fault_location(graph: WeightedDecodingGraph, layer_faults: int, layer_checks: int, rounds: int,
                   fault_id: int) -> tuple[str, int, int]:
    """Map a spacetime fault id to ``("data", round, qubit)`` or ``("meas", round, check)``."""
    if fault_id < rounds * layer_faults:
        t, f = divmod(fault_id, layer_faults)
        return "data", t, f
    t, c = divmod(fault_id - rounds * layer_faults, layer_checks)
    return "meas", t, c


# -- quasi-cyclic lifted product ---------------------------------------

QCLP_BASE = ((1, 2, 4, 8, 16), (5, 10, 20, 9, 18), (25, 19, 7, 14, 28))


@dataclass(frozen=True)
class QclpSpec:
    """Base matrix of ring elements and lift size.

    Each entry is a collection of exponents (a sum of monomials), or a bare int
    for a single monomial.  An empty collection is the zero element.
    """

    base: tuple
    lift: int

    def ring_matrix(self) -> np.ndarray:
        rows = len(self.base)
        cols = len(self.base[0]) if rows else 0
        out = np.zeros((rows, cols, self.lift), dtype=np.uint8)
        for i, row in enumerate(self.base):
            if len(row) != cols:
                raise ValueError("ragged base matrix")
            for j, entry in enumerate(row):
                exps = (entry,) if isinstance(entry, (int, np.integer)) else tuple(entry)
                for a in exps:
                    if not 0 <= a < self.lift:
                        raise ValueError(f"exponent {a} outside [0, {self.lift})")
                    out[i, j, a] ^= 1
        return out


def _ring_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ell = len(a)
    out = np.zeros(ell, dtype=np.uint8)
    for s in np.flatnonzero(a):
        out ^= np.roll(b, s)
    return out


def _ring_kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    ra, ca, ell = A.shape
    rb, cb, _ = B.shape
    out = np.zeros((ra * rb, ca * cb, ell), dtype=np.uint8)
    for i in range(ra):
        for j in range(ca):
            if not A[i, j].any():
                continue
            for k in range(rb):
                for l in range(cb):
                    if B[k, l].any():
                        out[i * rb + k, j * cb + l] = _ring_mul(A[i, j], B[k, l])
    return out


def _ring_identity(size: int, ell: int) -> np.ndarray:
    out = np.zeros((size, size, ell), dtype=np.uint8)
    out[np.arange(size), np.arange(size), 0] = 1
    return out


def antipode(A: np.ndarray) -> np.ndarray:
    """Conjugate transpose: transpose and map ``x^a`` to ``x^-a``."""
    ell = A.shape[2]
    conj = A[:, :, (-np.arange(ell)) % ell]
    return conj.transpose(1, 0, 2).copy()


def lift(M: np.ndarray) -> np.ndarray:
    """Replace each ring element by its ``ell x ell`` circulant.

    ``x^a`` maps to ``W^a`` where ``W[i, j] = 1`` iff ``j = i + 1 mod ell``.
    """
    r, c, ell = M.shape
    idx = np.arange(ell)
    out = np.zeros((r * ell, c * ell), dtype=np.uint8)
    for i in range(r):
        for j in range(c):
            for a in np.flatnonzero(M[i, j]):
                out[i * ell + idx, j * ell + (idx + a) % ell] ^= 1
    return out


def qclp_code(spec: QclpSpec) -> CssCode:
    """Lifted product of the base matrix with its antipode."""
    A = spec.ring_matrix()
    m, n_prime, ell = A.shape
    n = (m * m + n_prime * n_prime) * ell
    if n > MAX_QUBITS:
        raise ValueError(f"code would have {n} qubits (limit {MAX_QUBITS})")
    As = antipode(A)
    H_Z = np.hstack([lift(_ring_kron(A, _ring_identity(n_prime, ell))),
                     lift(_ring_kron(_ring_identity(m, ell), As))])
    H_X = np.hstack([lift(_ring_kron(_ring_identity(n_prime, ell), A)),
                     lift(_ring_kron(As, _ring_identity(m, ell)))])
    return CssCode(H_X, H_Z, name=f"qclp-{m}x{n_prime}-l{ell}")


def qclp_1054_140() -> CssCode:
    """The 3x5 monomial base matrix with lift 31: a [[1054, 140]] code."""
    return qclp_code(QclpSpec(QCLP_BASE, 31))


# -- matrix I/O ----------------------------------------------------------

def write_alist(H: np.ndarray, path) -> None:
    H = gf2.as_binary(H)
    m, n = H.shape
    cols = [np.flatnonzero(H[:, j]) + 1 for j in range(n)]
    rows = [np.flatnonzero(H[i]) + 1 for i in range(m)]
    lines = [f"{n} {m}",
             f"{max((len(c) for c in cols), default=0)} {max((len(r) for r in rows), default=0)}",
             " ".join(str(len(c)) for c in cols),
             " ".join(str(len(r)) for r in rows)]
    lines += [" ".join(map(str, c)) for c in cols]
    lines += [" ".join(map(str, r)) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> np.ndarray:
    tokens = Path(path).read_text().split("\n")
    n, m = map(int, tokens[0].split())
    H = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        for r in tokens[4 + j].split():
            if int(r) > 0:  # some writers pad with zeros
                H[int(r) - 1, j] = 1
    return H


def save_code(code: CssCode, path) -> None:
    Path(path).write_text(json.dumps(code.to_json()))


def load_code(path) -> CssCode:
    return CssCode.from_json(json.loads(Path(path).read_text()))
