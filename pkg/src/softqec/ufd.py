"""Union-Find decoder on the metric-space decoding graph.

Clusters grow by increasing the radius of the nontrivial syndrome vertices
they contain.  The state keeps, for every vertex, its reach (how far past the
vertex the cluster extends, see :mod:`softqec.graph`), so growth is a bounded
Dijkstra relaxation from the cluster's members rather than a rescan of the
whole graph.  Once no odd cluster remains, the fully covered edges are an
erasure and the peeling decoder picks a correction inside it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .graph import TOL, WeightedDecodingGraph

NEG_INF = -math.inf


class DecodingError(RuntimeError):
    pass


@dataclass
class UfdResult:
    correction: np.ndarray  # sorted edge indices
    radii: np.ndarray       # one per vertex, nonzero only on nontrivial vertices
    erasure: np.ndarray     # boolean mask of fully covered edges
    weight: float           # total weight of the correction


class _UfdState:
    def __init__(self, graph: WeightedDecodingGraph, nontrivial):
        self.g = graph
        n = graph.num_vertices
        self.adj = graph.adjacency
        self.w = graph.weights.tolist()
        self.eu = graph.edge_u.tolist()
        self.ev = graph.edge_v.tolist()
        self.uniform = graph.uniform_weight
        self.scale_tol = TOL * max(1.0, max(self.w, default=1.0))
        self.reach = [NEG_INF] * n
        self.radius = [0.0] * n
        self.full = [False] * graph.num_edges
        self.parent = list(range(n))
        self.parity: dict[int, int] = {}
        self.touches: dict[int, bool] = {}
        self.members: dict[int, list[int]] = {}
        self.centres: dict[int, list[int]] = {}
        boundary = set(graph.boundary)
        self.is_boundary = [x in boundary for x in range(n)]
        for v in nontrivial:
            self.reach[v] = 0.0
            self.parity[v] = 1
            self.touches[v] = self.is_boundary[v]
            self.members[v] = [v]
            self.centres[v] = [v]

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if len(self.members[ra]) < len(self.members[rb]):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.parity[ra] ^= self.parity.pop(rb)
        self.touches[ra] = self.touches[ra] or self.touches.pop(rb)
        self.members[ra].extend(self.members.pop(rb))
        self.centres[ra].extend(self.centres.pop(rb))
        return ra

    def measure(self, root: int) -> float:
        total = 0.0
        reach, w, full = self.reach, self.w, self.full
        for x in self.members[root]:
            rx = reach[x]
            for _, e in self.adj[x]:
                if full[e]:
                    total += w[e] / 2
                elif rx > 0:
                    total += min(rx, w[e])
        return total

    def step(self, root: int) -> float:
        if self.uniform is not None:
            return self.uniform / 2
        best = math.inf
        for x in self.members[root]:
            for _, e in self.adj[x]:
                if not self.full[e] and self.w[e] < best:
                    best = self.w[e]
        return best / 2

    def grow(self, root: int) -> None:
        delta = self.step(root)
        reach, w, adj, tol = self.reach, self.w, self.adj, self.scale_tol
        for v in self.centres[root]:
            self.radius[v] += delta
        heap = []
        for x in self.members[root]:
            reach[x] += delta
            heap.append((-reach[x], x))
        heapq.heapify(heap)
        touched = set(self.members[root])
        newly = []
        while heap:
            k, x = heapq.heappop(heap)
            if -k < reach[x]:
                continue
            rx = reach[x]
            for y, e in adj[x]:
                cand = rx - w[e]
                if cand > reach[y] + tol and cand >= -tol:
                    if reach[y] < -tol:
                        newly.append(y)
                    reach[y] = cand
                    touched.add(y)
                    heapq.heappush(heap, (-cand, y))
        for y in newly:
            self.parity[y] = 0
            self.touches[y] = self.is_boundary[y]
            self.members[y] = [y]
            self.centres[y] = []
            self.union(root, y)
        full, eu, ev = self.full, self.eu, self.ev
        for x in touched:
            for _, e in adj[x]:
                if full[e]:
                    continue
                a, b = eu[e], ev[e]
                ra, rb = reach[a], reach[b]
                if max(ra, 0.0) + max(rb, 0.0) >= w[e] - tol and ra >= -tol and rb >= -tol:
                    full[e] = True
                    self.union(a, b)

    def odd_roots(self) -> list[int]:
        return [r for r, par in self.parity.items() if par and not self.touches[r]]

    def run(self) -> None:
        while True:
            roots = self.odd_roots()
            if not roots:
                return
            order = sorted(roots, key=lambda r: (self.measure(r), min(self.centres[r])))
            grown: set[int] = set()
            for r in order:
                root = self.find(r)
                if not self.parity[root] or self.touches[root]:
                    continue
                if any(v in grown for v in self.centres[root]):
                    continue
                grown.update(self.centres[root])
                self.grow(root)


def peel(graph: WeightedDecodingGraph, erasure, syndrome) -> np.ndarray:
    """Correction inside ``erasure`` (edge mask or edge ids) matching ``syndrome``.

    A depth-first spanning forest of the erased subgraph is rooted first at
    the boundary vertices (all in one tree, as if identified), then at the
    lowest unvisited vertex id.  Leaves are peeled toward the roots.
    """
    erasure = np.asarray(erasure)
    if erasure.dtype != bool:
        mask = np.zeros(graph.num_edges, dtype=bool)
        mask[erasure.astype(np.int64)] = True
        erasure = mask
    n = graph.num_vertices
    flag = [0] * n
    for v in graph.nontrivial_vertices(syndrome):
        flag[int(v)] = 1
    adj = graph.adjacency
    visited = [False] * n
    parent_edge = [-1] * n
    order = []
    roots = list(graph.boundary) + list(range(n))
    for root in roots:
        if visited[root]:
            continue
        stack = [root]
        if graph.is_boundary(root):
            stack = [b for b in graph.boundary if not visited[b]][::-1]
        while stack:
            x = stack.pop()
            if visited[x]:
                continue
            visited[x] = True
            order.append(x)
            for y, e in reversed(adj[x]):
                if erasure[e] and not visited[y]:
                    parent_edge[y] = e
                    stack.append(y)
    correction = []
    eu, ev = graph.edge_u, graph.edge_v
    for x in reversed(order):
        if not flag[x] or graph.is_boundary(x):
            continue
        e = parent_edge[x]
        if e < 0:
            raise DecodingError(f"syndrome at vertex {x} is not supported by the erasure")
        correction.append(e)
        flag[x] = 0
        other = int(eu[e]) if int(ev[e]) == x else int(ev[e])
        flag[other] ^= 1
    return np.array(sorted(correction), dtype=np.int64)


def ufd_decode(graph: WeightedDecodingGraph, syndrome) -> UfdResult:
    """Grow clusters until none is odd, then peel a correction inside them."""
    nontrivial = [int(v) for v in graph.nontrivial_vertices(syndrome)]
    state = _UfdState(graph, nontrivial)
    state.run()
    erasure = np.array(state.full, dtype=bool)
    correction = peel(graph, erasure, syndrome)
    weight = float(graph.weights[correction].sum())
    return UfdResult(correction, np.array(state.radius), erasure, weight)
