"""Weighted decoding graphs viewed as metric spaces.

Every edge is an interval of length equal to its weight.  A radius
assignment places a closed ball around each vertex; the union of balls is the
cluster set.  All coverage questions reduce to a single multi-source Dijkstra
computing, for each vertex ``x``, the *reach* ``max_v (r_v - d(v, x))``: how far
past ``x`` the covered region extends.  Edge ``(a, b)`` of weight ``w`` is then
covered on ``[0, reach(a)]`` from one end and ``[w - reach(b), w]`` from the
other.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Relative tolerance for deciding that two balls touch or an edge is full.
TOL = 1e-9


@dataclass(frozen=True)
class WeightedDecodingGraph:
    """Decoding graph with syndrome vertices and a (possibly empty) boundary set.

    ``logical_cut`` lists edges crossing a logical operator's support.  It is
    only consulted on graphs without two boundary vertices (the repetition
    code cycle), where a logical failure is a closed loop crossing the cut an
    odd number of times.
    """

    num_vertices: int
    boundary: tuple[int, ...]
    edge_u: np.ndarray
    edge_v: np.ndarray
    weights: np.ndarray
    fault_ids: np.ndarray
    labels: tuple[str, ...] | None = None
    logical_cut: frozenset[int] = frozenset()
    _adj: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        u = np.asarray(self.edge_u, dtype=np.int64)
        v = np.asarray(self.edge_v, dtype=np.int64)
        w = np.asarray(self.weights, dtype=float)
        f = np.asarray(self.fault_ids, dtype=np.int64)
        object.__setattr__(self, "edge_u", u)
        object.__setattr__(self, "edge_v", v)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "fault_ids", f)
        object.__setattr__(self, "boundary", tuple(int(b) for b in self.boundary))
        if not (len(u) == len(v) == len(w) == len(f)):
            raise ValueError("edge arrays have mismatched lengths")
        if len(w) and not np.all(w > 0):
            raise ValueError("edge weights must be strictly positive")
        if len(u) and (u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= self.num_vertices):
            raise ValueError("edge endpoint out of range")
        if any(b < 0 or b >= self.num_vertices for b in self.boundary):
            raise ValueError("boundary vertex out of range")
        if self.labels is not None and len(self.labels) != len(w):
            raise ValueError("one label per edge required")
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for e, (a, b) in enumerate(zip(u.tolist(), v.tolist())):
            adj[a].append((b, e))
            if b != a:
                adj[b].append((a, e))
        object.__setattr__(self, "_adj", adj)
        if not self._connected():
            raise ValueError("decoding graph must be connected")

    def _connected(self) -> bool:
        if self.num_vertices == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y, _ in self._adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.num_vertices

    @property
    def num_edges(self) -> int:
        return len(self.weights)

    @property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """``adjacency[x]`` is a list of ``(neighbour, edge index)`` pairs."""
        return self._adj

    @property
    def syndrome_vertices(self) -> np.ndarray:
        mask = np.ones(self.num_vertices, dtype=bool)
        mask[list(self.boundary)] = False
        return np.flatnonzero(mask)

    @property
    def num_syndrome_vertices(self) -> int:
        return self.num_vertices - len(self.boundary)

    def is_boundary(self, x: int) -> bool:
        return x in self.boundary

    @property
    def uniform_weight(self) -> float | None:
        """The common edge weight if all weights agree, else ``None``."""
        if self.num_edges == 0:
            return None
        w0 = float(self.weights[0])
        if np.allclose(self.weights, w0, rtol=1e-12, atol=0.0):
            return w0
        return None

    def edge_of_fault(self) -> dict[int, int]:
        return {int(f): e for e, f in enumerate(self.fault_ids)}

    def syndrome_of(self, edges) -> np.ndarray:
        """Indicator over syndrome vertices of odd incidence with ``edges``."""
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        idx = np.asarray(list(edges), dtype=np.int64)
        np.add.at(deg, self.edge_u[idx], 1)
        np.add.at(deg, self.edge_v[idx], 1)
        return (deg[self.syndrome_vertices] & 1).astype(np.uint8)

    def nontrivial_vertices(self, syndrome) -> np.ndarray:
        syndrome = np.asarray(syndrome)
        if syndrome.shape != (self.num_syndrome_vertices,):
            raise ValueError(
                f"syndrome has length {syndrome.shape}, expected {self.num_syndrome_vertices}")
        return self.syndrome_vertices[np.flatnonzero(syndrome)]

    def with_weights(self, weights) -> "WeightedDecodingGraph":
        return WeightedDecodingGraph(
            self.num_vertices, self.boundary, self.edge_u, self.edge_v,
            np.broadcast_to(np.asarray(weights, dtype=float), self.weights.shape).copy(),
            self.fault_ids, self.labels, self.logical_cut)

    # -- serialisation -------------------------------------------------
    def to_json(self) -> dict:
        edges = []
        for e in range(self.num_edges):
            item = {"u": int(self.edge_u[e]), "v": int(self.edge_v[e]),
                    "w": float(self.weights[e]), "fault_id": int(self.fault_ids[e])}
            if self.labels is not None:
                item["label"] = self.labels[e]
            edges.append(item)
        out = {"num_vertices": self.num_vertices, "boundary": list(self.boundary), "edges": edges}
        if self.logical_cut:
            out["logical_cut"] = sorted(self.logical_cut)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "WeightedDecodingGraph":
        edges = data["edges"]
        labels = None
        if edges and all("label" in e for e in edges):
            labels = tuple(e["label"] for e in edges)
        return cls(
            num_vertices=int(data["num_vertices"]),
            boundary=tuple(data.get("boundary", ())),
            edge_u=[e["u"] for e in edges],
            edge_v=[e["v"] for e in edges],
            weights=[e["w"] for e in edges],
            fault_ids=[e.get("fault_id", i) for i, e in enumerate(edges)],
            labels=labels,
            logical_cut=frozenset(data.get("logical_cut", ())),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> "WeightedDecodingGraph":
        return cls.from_json(json.loads(Path(path).read_text()))


def incidence_matrix(graph: WeightedDecodingGraph) -> np.ndarray:
    """Syndrome-vertex by edge incidence matrix over GF(2)."""
    synd = graph.syndrome_vertices
    row = {int(v): i for i, v in enumerate(synd)}
    A = np.zeros((len(synd), graph.num_edges), dtype=np.uint8)
    for e, (a, b) in enumerate(zip(graph.edge_u.tolist(), graph.edge_v.tolist())):
        for x in (a, b):
            if x in row:
                A[row[x], e] ^= 1
    return A


def as_radii(graph: WeightedDecodingGraph, radii) -> np.ndarray:
    """Normalise a radius assignment (dict or array) to a dense array."""
    if isinstance(radii, dict):
        arr = np.zeros(graph.num_vertices)
        for v, r in radii.items():
            arr[int(v)] = r
    else:
        arr = np.asarray(radii, dtype=float)
        if arr.shape != (graph.num_vertices,):
            raise ValueError("radius array must have one entry per vertex")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("radii must be finite and non-negative")
    return arr


def vertex_reach(graph: WeightedDecodingGraph, radii, sources=None) -> np.ndarray:
    """``reach[x] = max_v (r_v - d(v, x))`` over ball centres ``v``.

    Ball centres are vertices with positive radius plus any extra ``sources``
    (zero-radius balls).  Unreached vertices get ``-inf``.
    """
    r = as_radii(graph, radii)
    centres = set(np.flatnonzero(r > 0).tolist())
    if sources is not None:
        centres.update(int(s) for s in sources)
    key = np.full(graph.num_vertices, np.inf)
    heap = []
    for c in centres:
        key[c] = -r[c]
        heap.append((-r[c], c))
    heapq.heapify(heap)
    adj = graph.adjacency
    w = graph.weights
    done = np.zeros(graph.num_vertices, dtype=bool)
    while heap:
        k, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y, e in adj[x]:
            nk = k + w[e]
            if nk < key[y]:
                key[y] = nk
                heapq.heappush(heap, (nk, y))
    return -key


def _edge_coverage_from_reach(graph: WeightedDecodingGraph, reach: np.ndarray) -> np.ndarray:
    w = graph.weights
    ra = np.maximum(reach[graph.edge_u], 0.0)
    rb = np.maximum(reach[graph.edge_v], 0.0)
    cov = np.minimum(w, ra + rb)
    full = ra + rb >= w * (1 - TOL)
    cov[full] = w[full]
    return cov


def edge_coverage(graph: WeightedDecodingGraph, radii) -> np.ndarray:
    """Covered measure of every edge, each in ``[0, w(e)]``."""
    return _edge_coverage_from_reach(graph, vertex_reach(graph, radii))


def covered_measure(graph: WeightedDecodingGraph, radii, edge: int) -> float:
    """Length of the part of ``edge`` lying inside the union of balls."""
    if not 0 <= edge < graph.num_edges:
        raise IndexError(f"unknown edge id {edge}")
    return float(edge_coverage(graph, radii)[edge])


@dataclass
class Cluster:
    vertices: list[int]
    parity: int
    touches_boundary: bool
    measure: float


@dataclass
class ClusterSet:
    """Connected components of the covered region.

    ``vertex_component[x]`` is the component index of covered vertex ``x`` or
    -1.  Edge coverage is kept so that quotient distances can be computed
    without repeating the reach computation.
    """

    edge_coverage: np.ndarray
    vertex_component: np.ndarray
    components: list[Cluster]

    @property
    def total_measure(self) -> float:
        return float(self.edge_coverage.sum())


class _DSU:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                ra, rb = rb, ra
            self.parent[ra] = rb


def clusters(graph: WeightedDecodingGraph, radii, syndrome) -> ClusterSet:
    """Connected components of the cluster set with parity and boundary flags.

    Nontrivial syndrome vertices always seed a (possibly zero-radius) ball;
    trivial vertices only do so when their radius is positive.
    """
    nontrivial = graph.nontrivial_vertices(syndrome)
    reach = vertex_reach(graph, radii, sources=nontrivial)
    cov = _edge_coverage_from_reach(graph, reach)
    covered = reach >= -TOL * max(1.0, float(graph.weights.max(initial=1.0)))
    dsu = _DSU(graph.num_vertices)
    full = cov >= graph.weights
    for e in np.flatnonzero(full):
        dsu.union(int(graph.edge_u[e]), int(graph.edge_v[e]))
    comp_of_root: dict[int, int] = {}
    vertex_component = np.full(graph.num_vertices, -1, dtype=np.int64)
    comps: list[Cluster] = []
    for x in np.flatnonzero(covered):
        root = dsu.find(int(x))
        if root not in comp_of_root:
            comp_of_root[root] = len(comps)
            comps.append(Cluster([], 0, False, 0.0))
        c = comp_of_root[root]
        vertex_component[x] = c
        comps[c].vertices.append(int(x))
        if graph.is_boundary(int(x)):
            comps[c].touches_boundary = True
    for v in nontrivial:
        comps[vertex_component[v]].parity ^= 1
    ra = np.maximum(reach[graph.edge_u], 0.0)
    for e in range(graph.num_edges):
        if cov[e] == 0.0:
            continue
        a, b = int(graph.edge_u[e]), int(graph.edge_v[e])
        if full[e]:
            comps[vertex_component[a]].measure += cov[e]
            continue
        part_a = min(ra[e], cov[e])
        if part_a > 0:
            comps[vertex_component[a]].measure += part_a
        if cov[e] - part_a > 0:
            comps[vertex_component[b]].measure += cov[e] - part_a
    return ClusterSet(cov, vertex_component, comps)


def _coverage_of(graph, cluster_set_or_radii) -> np.ndarray:
    if isinstance(cluster_set_or_radii, ClusterSet):
        return cluster_set_or_radii.edge_coverage
    return edge_coverage(graph, cluster_set_or_radii)


def residual_weights(graph: WeightedDecodingGraph, coverage: np.ndarray) -> np.ndarray:
    return np.maximum(graph.weights - coverage, 0.0)


def dijkstra(graph: WeightedDecodingGraph, weights: np.ndarray, sources, blocked=()) -> np.ndarray:
    """Single/multi-source shortest distances with per-edge ``weights``.

    Vertices in ``blocked`` are reached but never expanded.
    """
    dist = np.full(graph.num_vertices, np.inf)
    heap = []
    for s in sources:
        dist[s] = 0.0
        heap.append((0.0, int(s)))
    heapq.heapify(heap)
    adj = graph.adjacency
    blocked = set(blocked)
    done = np.zeros(graph.num_vertices, dtype=bool)
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        if x in blocked and d > 0:
            continue
        for y, e in adj[x]:
            nd = d + weights[e]
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def quotient_shortest_path(graph: WeightedDecodingGraph, cluster_set, source: int, target: int) -> float:
    """Shortest ``source``-``target`` distance after collapsing every cluster.

    Each edge contributes its uncovered length; fully covered edges are free.
    ``cluster_set`` may be a :class:`ClusterSet` or a radius assignment.
    """
    if source == target or not (graph.is_boundary(source) and graph.is_boundary(target)):
        raise ValueError("source and target must be distinct boundary vertices")
    res = residual_weights(graph, _coverage_of(graph, cluster_set))
    d = dijkstra(graph, res, [source])[target]
    if not np.isfinite(d):
        raise RuntimeError("boundaries are disconnected")
    return float(d)


def logical_cycle_length(graph: WeightedDecodingGraph, cluster_set) -> float:
    """Shortest closed walk crossing ``graph.logical_cut`` an odd number of times.

    Computed on the two-sheeted cover of the graph: crossing a cut edge swaps
    sheets, and the answer is the cheapest way back to the starting vertex on
    the opposite sheet.
    """
    if not graph.logical_cut:
        raise ValueError("graph has no logical cut")
    res = residual_weights(graph, _coverage_of(graph, cluster_set))
    n = graph.num_vertices
    cut = graph.logical_cut
    best = np.inf
    adj = graph.adjacency
    # A closed walk through the cut must pass through an endpoint of a cut edge.
    starts = sorted({int(graph.edge_u[e]) for e in cut})
    for s in starts:
        dist = np.full(2 * n, np.inf)
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, node = heapq.heappop(heap)
            if d > dist[node] or d >= best:
                continue
            x, sheet = node % n, node // n
            for y, e in adj[x]:
                ns = sheet ^ (1 if e in cut else 0)
                nd = d + res[e]
                tgt = ns * n + y
                if nd < dist[tgt]:
                    dist[tgt] = nd
                    heapq.heappush(heap, (nd, tgt))
        best = min(best, dist[n + s])
    return float(best)
