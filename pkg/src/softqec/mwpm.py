"""Minimum-weight perfect matching with an explicit optimal dual.

The matching lives on the syndrome graph: one node per nontrivial vertex,
pair weights equal to shortest-path distances in the decoding graph that do
not pass through a boundary vertex, and a single shared boundary that any
node may be matched to at the cost of its distance to the nearest boundary
vertex.  The boundary has unlimited capacity and carries no dual variable, so
every dual lives on an odd set of real nodes and the radius of a vertex is
the sum of the duals of the sets containing it.

The solver is a primal-dual Edmonds blossom algorithm with all alternating
trees grown simultaneously.  Sizes here are at most a few hundred nodes, so
every iteration rescans slacks as a dense numpy matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as sp_dijkstra

from . import gf2
from .graph import TOL, WeightedDecodingGraph, edge_coverage, incidence_matrix

UNMATCHED = -1
BOUNDARY = -2
FREE, PLUS, MINUS = 0, 1, 2


@dataclass
class SyndromeGraph:
    nodes: np.ndarray              # decoding-graph vertex of each node
    weights: np.ndarray            # (k, k) pair weights, inf on the diagonal
    boundary_weights: np.ndarray   # (k,) distance to the nearest boundary, inf if none
    _pair_pred: np.ndarray = field(repr=False, default=None)
    _bnd_pred: np.ndarray = field(repr=False, default=None)
    _edge_of: dict = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def pair_path(self, i: int, j: int) -> list[int]:
        """Edge ids of the stored shortest path between nodes ``i`` and ``j``."""
        pred = self._pair_pred[i]
        return self._walk(pred, int(self.nodes[i]), int(self.nodes[j]))

    def boundary_path(self, i: int) -> list[int]:
        start = int(self.nodes[i])
        edges = []
        x = start
        while self._bnd_pred[x] >= 0:
            p = int(self._bnd_pred[x])
            edges.append(self._edge_of[(min(x, p), max(x, p))])
            x = p
        return edges

    def _walk(self, pred, source, target):
        edges = []
        x = target
        while x != source:
            p = int(pred[x])
            if p < 0:
                raise RuntimeError("no stored path")
            edges.append(self._edge_of[(min(x, p), max(x, p))])
            x = p
        return edges[::-1]


def _simple_edges(graph: WeightedDecodingGraph):
    """Cheapest edge between each adjacent pair (parallel edges collapse)."""
    best: dict[tuple[int, int], int] = {}
    w = graph.weights
    for e, (a, b) in enumerate(zip(graph.edge_u.tolist(), graph.edge_v.tolist())):
        key = (min(a, b), max(a, b))
        if key not in best or w[e] < w[best[key]]:
            best[key] = e
    return best


def build_syndrome_graph(graph: WeightedDecodingGraph, syndrome) -> SyndromeGraph:
    nodes = graph.nontrivial_vertices(syndrome).astype(np.int64)
    k = len(nodes)
    edge_of = _simple_edges(graph)
    n = graph.num_vertices
    if k == 0:
        return SyndromeGraph(nodes, np.zeros((0, 0)), np.zeros(0), np.zeros((0, n), int),
                             np.full(n, -9999), edge_of)
    keys = np.array(list(edge_of.keys()), dtype=np.int64).reshape(-1, 2)
    ew = graph.weights[np.array(list(edge_of.values()), dtype=np.int64)]
    boundary = np.zeros(n, dtype=bool)
    boundary[list(graph.boundary)] = True
    # Pair distances: boundary vertices are endpoints only, never interior.
    interior = ~(boundary[keys[:, 0]] | boundary[keys[:, 1]])
    ik = keys[interior]
    inner = csr_matrix((ew[interior], (ik[:, 0], ik[:, 1])), shape=(n, n))
    dist, pred = sp_dijkstra(inner, directed=False, indices=nodes, return_predecessors=True)
    W = dist[:, nodes]
    np.fill_diagonal(W, np.inf)
    if graph.boundary:
        full = csr_matrix((ew, (keys[:, 0], keys[:, 1])), shape=(n, n))
        bdist, bpred, _ = sp_dijkstra(full, directed=False, indices=list(graph.boundary),
                                   return_predecessors=True, min_only=True)
        bw = bdist[nodes]
    else:
        bpred = np.full(n, -9999)
        bw = np.full(k, np.inf)
    return SyndromeGraph(nodes, W, bw, pred, bpred, edge_of)


@dataclass
class MatchingResult:
    pairs: list[tuple[int, int]]      # decoding-graph vertices; second entry -1 for the boundary
    correction: np.ndarray            # sorted edge ids of the lifted edge set F
    duals: list[tuple[tuple[int, ...], float]]   # (vertex set S, y_S) with y_S > 0
    radii: np.ndarray                 # per decoding-graph vertex
    objective: float
    syndrome_graph: SyndromeGraph = field(repr=False, default=None)

    def dual_json(self) -> str:
        return json.dumps({"duals": [{"set": list(map(int, s)), "y": y} for s, y in self.duals],
                           "objective": self.objective})

    def slacks(self) -> tuple[np.ndarray, np.ndarray]:
        """Slack of every node pair and of every node's boundary pairing."""
        sg = self.syndrome_graph
        k = sg.size
        index = {int(v): i for i, v in enumerate(sg.nodes)}
        cross = np.zeros((k, k))
        r = np.zeros(k)
        for s, y in self.duals:
            mask = np.zeros(k, dtype=bool)
            mask[[index[v] for v in s]] = True
            r[mask] += y
            cross += y * (mask[:, None] ^ mask[None, :])
        pair = sg.weights - cross
        np.fill_diagonal(pair, np.inf)
        return pair, sg.boundary_weights - r


class _Blossom:
    __slots__ = ("childs", "edges", "base")

    def __init__(self, childs, edges, base):
        self.childs = childs
        self.edges = edges
        self.base = base


class _Solver:
    def __init__(self, W: np.ndarray, wb: np.ndarray, tol: float):
        k = len(wb)
        self.k = k
        self.W = W
        self.wb = wb
        self.tol = tol
        self.mate = [UNMATCHED] * k
        self.y: dict[int, float] = {v: 0.0 for v in range(k)}
        self.r = np.zeros(k)
        self.blossoms: dict[int, _Blossom] = {}
        self.top = list(range(k))
        self.next_id = k
        self.label: dict[int, int] = {}
        self.tree_edge: dict[int, tuple[int, int]] = {}
        self.verts_cache: dict[int, list[int]] = {}

    # -- structure helpers ----------------------------------------
    def vertices(self, node: int) -> list[int]:
        if node < self.k:
            return [node]
        cached = self.verts_cache.get(node)
        if cached is None:
            cached = [v for c in self.blossoms[node].childs for v in self.vertices(c)]
            self.verts_cache[node] = cached
        return cached

    def base(self, node: int) -> int:
        return node if node < self.k else self.blossoms[node].base

    def top_nodes(self) -> list[int]:
        return sorted(set(self.top))

    def child_containing(self, b: _Blossom, v: int) -> int:
        for i, c in enumerate(b.childs):
            if v in self.vertices(c):
                return i
        raise KeyError(v)

    def set_mate(self, a: int, b: int) -> None:
        self.mate[a] = b
        self.mate[b] = a

    def rebase(self, node: int, x: int) -> None:
        """Make vertex ``x`` the base of ``node``, re-pairing its interior."""
        if node < self.k:
            return
        b = self.blossoms[node]
        i = self.child_containing(b, x)
        self.rebase(b.childs[i], x)
        m = len(b.childs)
        if i % 2 == 1:
            path = range(i + 1, m, 2)
        else:
            path = range(i - 2, -1, -2)
        for j in path:
            a, c = b.edges[j]
            self.rebase(b.childs[j], a)
            self.rebase(b.childs[(j + 1) % m], c)
            self.set_mate(a, c)
        b.childs = b.childs[i:] + b.childs[:i]
        b.edges = b.edges[i:] + b.edges[:i]
        b.base = x

    # -- labelling ------------------------------------------------
    def reset_labels(self) -> None:
        self.label = {}
        self.tree_edge = {}
        for node in self.top_nodes():
            self.label[node] = PLUS if self.mate[self.base(node)] == UNMATCHED else FREE

    def parent_plus(self, node: int) -> int | None:
        """Plus node above plus ``node`` in its tree, or None at a root."""
        m = self.mate[self.base(node)]
        if m < 0:
            return None
        minus = self.top[m]
        return self.top[self.tree_edge[minus][0]]

    def tree_path(self, node: int) -> list[int]:
        path = [node]
        while True:
            p = self.parent_plus(path[-1])
            if p is None:
                return path
            path.append(p)

    # -- events ---------------------------------------------------
    def augment_side(self, x: int, partner: int) -> None:
        while True:
            node = self.top[x]
            old = self.mate[self.base(node)]
            self.rebase(node, x)
            # Only this side's half of each new pair is written here; the
            # other half belongs to a node whose old mate is still needed.
            self.mate[x] = partner
            if old == UNMATCHED:
                return
            minus = self.top[old]
            px, my = self.tree_edge[minus]
            self.rebase(minus, my)
            self.mate[my] = px
            x, partner = px, my

    def grow(self, u: int, v: int) -> None:
        node = self.top[v]
        if self.mate[self.base(node)] == BOUNDARY:
            self.augment_side(u, v)
            self.rebase(node, v)
            self.set_mate(u, v)
            self.reset_labels()
            return
        self.label[node] = MINUS
        self.tree_edge[node] = (u, v)
        other = self.top[self.mate[self.base(node)]]
        self.label[other] = PLUS

    def plus_plus(self, u: int, v: int) -> None:
        pu, pv = self.tree_path(self.top[u]), self.tree_path(self.top[v])
        if pu[-1] != pv[-1]:
            self.augment_side(u, v)
            self.augment_side(v, u)
            self.reset_labels()
            return
        on_v = set(pv)
        lca = next(p for p in pu if p in on_v)
        side_u = pu[: pu.index(lca)]
        side_v = pv[: pv.index(lca)]
        childs = [lca]
        edges = []
        # Down from the common ancestor to u's node.
        for p in reversed(side_u):
            minus = self.top[self.mate[self.base(p)]]
            edges.append(self.tree_edge[minus])
            childs.append(minus)
            edges.append((self.mate[self.base(p)], self.base(p)))
            childs.append(p)
        edges.append((u, v))
        # Up from v's node back to the common ancestor.
        for p in side_v:
            minus = self.top[self.mate[self.base(p)]]
            childs.append(p)
            edges.append((self.base(p), self.mate[self.base(p)]))
            childs.append(minus)
            px, my = self.tree_edge[minus]
            edges.append((my, px))
        new = self.next_id
        self.next_id += 1
        self.blossoms[new] = _Blossom(childs, edges, self.base(lca))
        self.y[new] = 0.0
        for c in childs:
            self.label.pop(c, None)
            self.tree_edge.pop(c, None)
        for x in self.vertices(new):
            self.top[x] = new
        self.label[new] = PLUS

    def expand(self, node: int) -> None:
        b = self.blossoms.pop(node)
        del self.y[node]
        self.verts_cache.pop(node, None)
        ex, ey = self.tree_edge.pop(node)
        del self.label[node]
        for c in b.childs:
            for x in self.vertices(c):
                self.top[x] = c
            self.label[c] = FREE
        m = len(b.childs)
        j = self.child_containing(b, ey)
        if j % 2 == 1:
            steps = [(t, (t + 1) % m) for t in range(j, m)]
        else:
            steps = [(t, t - 1) for t in range(j, 0, -1)]
        self.label[b.childs[j]] = MINUS
        self.tree_edge[b.childs[j]] = (ex, ey)
        for n_step, (t, s) in enumerate(steps):
            if n_step % 2 == 0:
                self.label[b.childs[s]] = PLUS
            else:
                a, c = b.edges[t] if s == (t + 1) % m else b.edges[s]
                if s == (t + 1) % m:
                    self.tree_edge[b.childs[s]] = (a, c)
                else:
                    self.tree_edge[b.childs[s]] = (c, a)
                self.label[b.childs[s]] = MINUS

    def adjust(self, delta: float) -> None:
        for node, lab in self.label.items():
            if lab == FREE:
                continue
            step = delta if lab == PLUS else -delta
            self.y[node] += step
            self.r[self.vertices(node)] += step

    # -- main loop --------------------------------------------------
    def solve(self) -> None:
        k = self.k
        if k == 0:
            return
        self.reset_labels()
        tol = self.tol
        while any(m == UNMATCHED for m in self.mate):
            lab = np.array([self.label[self.top[v]] for v in range(k)])
            top = np.array(self.top)
            plus = lab == PLUS
            slack = self.W - self.r[:, None] - self.r[None, :]
            best = (math.inf, None, None)
            if plus.any():
                free = lab == FREE
                s1 = np.where(plus[:, None] & free[None, :], slack, np.inf)
                i = int(np.argmin(s1))
                if s1.flat[i] < best[0]:
                    best = (s1.flat[i], "grow", divmod(i, k))
                s2 = np.where(plus[:, None] & plus[None, :] & (top[:, None] != top[None, :]),
                              slack / 2, np.inf)
                i = int(np.argmin(s2))
                if s2.flat[i] < best[0]:
                    best = (s2.flat[i], "pair", divmod(i, k))
                s5 = np.where(plus, self.wb - self.r, np.inf)
                i = int(np.argmin(s5))
                if s5[i] < best[0]:
                    best = (s5[i], "boundary", i)
            for node, l_ in self.label.items():
                if l_ == MINUS and node >= k and self.y[node] < best[0]:
                    best = (self.y[node], "expand", node)
            delta, kind, arg = best
            if kind is None or not math.isfinite(delta):
                raise RuntimeError("no perfect matching exists for this syndrome")
            self.adjust(max(delta, 0.0))
            # Singletons of minus trees stay non-negative up to rounding.
            for v in range(k):
                if -tol < self.y[v] < 0:
                    self.y[v] = 0.0
            if kind == "grow":
                self.grow(*arg)
            elif kind == "pair":
                self.plus_plus(*arg)
            elif kind == "boundary":
                self.augment_side(arg, BOUNDARY)
                self.reset_labels()
            else:
                self.expand(arg)


def _solve(sg: SyndromeGraph) -> tuple[_Solver, float]:
    finite = np.concatenate([sg.weights[np.isfinite(sg.weights)], sg.boundary_weights[np.isfinite(sg.boundary_weights)]])
    scale = float(finite.min()) if finite.size else 1.0
    # On uniform graphs every weight is an integer multiple of the edge weight;
    # dividing it out keeps every dual an exact dyadic rational.
    solver = _Solver(sg.weights / scale, sg.boundary_weights / scale, TOL * 10)
    solver.solve()
    return solver, scale


def mwpm_decode(graph: WeightedDecodingGraph, syndrome) -> MatchingResult:
    sg = build_syndrome_graph(graph, syndrome)
    radii = np.zeros(graph.num_vertices)
    if sg.size == 0:
        return MatchingResult([], np.zeros(0, dtype=np.int64), [], radii, 0.0, sg)
    uniform = graph.uniform_weight
    if uniform is not None:
        solver = _Solver(np.round(sg.weights / uniform), np.round(sg.boundary_weights / uniform), TOL * 10)
        solver.solve()
        scale = uniform
    else:
        solver, scale = _solve(sg)
    flips = np.zeros(graph.num_edges, dtype=np.uint8)
    pairs = []
    objective = 0.0
    for i in range(sg.size):
        m = solver.mate[i]
        if m == BOUNDARY:
            pairs.append((int(sg.nodes[i]), -1))
            path = sg.boundary_path(i)
            objective += sg.boundary_weights[i]
        elif m > i:
            pairs.append((int(sg.nodes[i]), int(sg.nodes[m])))
            path = sg.pair_path(i, m)
            objective += sg.weights[i, m]
        else:
            continue
        for e in path:
            flips[e] ^= 1
    duals = []
    for node, y in solver.y.items():
        if y * scale > 0:
            members = tuple(sorted(int(sg.nodes[v]) for v in solver.vertices(node)))
            duals.append((members, float(y * scale)))
    duals.sort(key=lambda item: (len(item[0]), item[0]))
    radii[sg.nodes] = solver.r * scale
    correction = np.flatnonzero(flips).astype(np.int64)
    return MatchingResult(pairs, correction, duals, radii, float(objective), sg)


# -- opposite-class oracle and the analytic checks ---------------------

class SearchBudgetExceeded(RuntimeError):
    pass


def min_weight_opposite_class(graph: WeightedDecodingGraph, syndrome, correction,
                              max_dimension: int = 20) -> tuple[np.ndarray, float]:
    """Cheapest valid edge set whose sum with ``correction`` is a nontrivial logical.

    The valid edge sets for a syndrome form the coset ``F + Z`` where ``Z`` is
    the cycle space of the graph relative to the boundary.  The coset is
    enumerated exactly, so the kernel dimension must be small.
    """
    kernel = gf2.nullspace(incidence_matrix(graph), graph.num_edges)
    if kernel.shape[0] > max_dimension:
        raise SearchBudgetExceeded(f"cycle space has dimension {kernel.shape[0]}")
    base = np.zeros(graph.num_edges, dtype=np.uint8)
    base[np.asarray(correction, dtype=np.int64)] = 1
    if np.any(graph.syndrome_of(np.flatnonzero(base)) != np.asarray(syndrome, dtype=np.uint8)):
        raise ValueError("correction does not match the syndrome")
    cut = np.zeros(graph.num_edges, dtype=np.int64)
    cut[list(graph.logical_cut)] = 1
    elements = gf2.span(kernel)
    flips = elements @ cut % 2 == 1
    candidates = elements[flips] ^ base
    weights = candidates.astype(float) @ graph.weights
    best = int(np.argmin(weights))
    return np.flatnonzero(candidates[best]).astype(np.int64), float(weights[best])


def edge_set_endpoints(graph: WeightedDecodingGraph, edges) -> list[tuple[int, int]]:
    """Endpoint pairs of a decomposition of ``edges`` into edge-disjoint paths.

    At a vertex of degree above two the incident edges are paired in edge-id
    order, which splits the vertex; an odd leftover edge ends a path there.
    Every incidence with a boundary vertex is its own path end, reported as
    -1.  Closed loops have no ends and are skipped.
    """
    edges = sorted(int(e) for e in edges)
    incident: dict[int, list[int]] = {}
    for e in edges:
        for x in (int(graph.edge_u[e]), int(graph.edge_v[e])):
            incident.setdefault(x, []).append(e)
    link: dict[tuple[int, int], int] = {}   # (vertex, edge) -> next edge through vertex
    terminals = []
    for x, lst in incident.items():
        if graph.is_boundary(x):
            terminals.extend((x, e) for e in lst)
            continue
        for a, b in zip(lst[0::2], lst[1::2]):
            link[(x, a)] = b
            link[(x, b)] = a
        if len(lst) % 2:
            terminals.append((x, lst[-1]))
    used: set[int] = set()
    pairs = []
    for x, e in sorted(terminals):
        if e in used:
            continue
        start = x
        while True:
            used.add(e)
            a, b = int(graph.edge_u[e]), int(graph.edge_v[e])
            x = b if a == x else a
            nxt = None if graph.is_boundary(x) else link.get((x, e))
            if nxt is None:
                break
            e = nxt
        pairs.append((-1 if graph.is_boundary(start) else start, -1 if graph.is_boundary(x) else x))
    return pairs


def dual_crossing(result: MatchingResult, pair: tuple[int, int]) -> float:
    """Sum of ``y_S`` over the sets separating the two ends of ``pair``."""
    a, b = pair
    total = 0.0
    for members, y in result.duals:
        inside = (a in members) + (b in members)
        if inside == 1:
            total += y
    return total


@dataclass
class GapReport:
    inside_clusters: float       # |M ∩ C|
    endpoint_duals: float        # dual mass separating the path ends of M
    correction_weight: float     # |F|
    gap: float                   # |M| - |F|
    phi: float


def gap_report(graph: WeightedDecodingGraph, result: MatchingResult, M, phi: float) -> GapReport:
    cov = edge_coverage(graph, result.radii)
    M = np.asarray(M, dtype=np.int64)
    inside = float(cov[M].sum())
    ends = sum(dual_crossing(result, p) for p in edge_set_endpoints(graph, M))
    m_weight = float(graph.weights[M].sum())
    return GapReport(inside, ends, result.objective, m_weight - result.objective, phi)
