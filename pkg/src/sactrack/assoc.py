"""Tracklet-detection assignment: score-thresholded match graph solved as a
min-cost network flow.

The solver augments one unit at a time along shortest residual paths
(Dijkstra with potentials), which yields, at every intermediate flow value,
the cheapest flow of that value. Running it to maximum flow therefore
returns the maximum-cardinality matching and, among those, one of minimum
total cost, with all pair-arc costs kept at their raw 1 - score >= 0.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .core import Detection, Tracklet

DEFAULT_ZETA_M = 0.05


@dataclass(frozen=True)
class MatchEdge:
    """Admissible tracklet-detection pairing; cost is 1 - score."""

    tracklet_id: int
    detection_index: int
    score: float

    @property
    def cost(self) -> float:
        return 1.0 - self.score


@dataclass(frozen=True)
class AssociationResult:
    matches: tuple[tuple[int, int], ...]
    unmatched_tracklets: tuple[int, ...]
    unmatched_detections: tuple[int, ...]


def build_match_graph(
    targets: Sequence[Tracklet],
    detections: Sequence[Detection],
    scorer: Callable[[Tracklet, Detection], float],
    zeta_m: float = DEFAULT_ZETA_M,
) -> list[MatchEdge]:
    """Score every (target, detection) pair once; keep edges scoring above
    zeta_m."""
    edges = []
    for target in targets:
        for d_idx, det in enumerate(detections):
            y = scorer(target, det)
            if y > zeta_m:
                edges.append(MatchEdge(target.id, d_idx, y))
    return edges


def edges_from_scores(
    tracklet_ids: Sequence[int], scores, zeta_m: float = DEFAULT_ZETA_M
) -> list[MatchEdge]:
    """Batch variant of build_match_graph given a (tracklets x detections)
    score matrix."""
    edges = []
    for i, tid in enumerate(tracklet_ids):
        row = scores[i]
        for j in range(len(row)):
            y = float(row[j])
            if y > zeta_m:
                edges.append(MatchEdge(tid, j, y))
    return edges


class _FlowNet:
    def __init__(self, n: int):
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[float] = []

    def add(self, u: int, v: int, cap: int, cost: float) -> int:
        eid = len(self.to)
        self.adj[u].append(eid)
        self.to.append(v)
        self.cap.append(cap)
        self.cost.append(cost)
        self.adj[v].append(eid + 1)
        self.to.append(u)
        self.cap.append(0)
        self.cost.append(-cost)
        return eid


def solve_matching(
    edges: Sequence[MatchEdge],
    tracklet_ids: Iterable[int] = (),
    detection_indices: Iterable[int] = (),
) -> AssociationResult:
    """One-to-one partial matching of maximum cardinality and, among those,
    minimum total cost. The optional id collections extend the reported
    unmatched sets beyond the edge endpoints."""
    t_ids = sorted(set(tracklet_ids) | {e.tracklet_id for e in edges})
    d_ids = sorted(set(detection_indices) | {e.detection_index for e in edges})
    t_pos = {tid: i for i, tid in enumerate(t_ids)}
    d_pos = {did: i for i, did in enumerate(d_ids)}

    T, D = len(t_ids), len(d_ids)
    n = T + D + 2
    source, sink = 0, n - 1
    net = _FlowNet(n)
    for i in range(T):
        net.add(source, 1 + i, 1, 0.0)
    pair_arcs: dict[int, tuple[int, int]] = {}
    for e in sorted(edges, key=lambda e: (e.tracklet_id, e.detection_index, -e.score)):
        eid = net.add(1 + t_pos[e.tracklet_id], 1 + T + d_pos[e.detection_index], 1, e.cost)
        pair_arcs[eid] = (e.tracklet_id, e.detection_index)
    for j in range(D):
        net.add(1 + T + j, sink, 1, 0.0)

    potential = [0.0] * n
    INF = float("inf")
    while True:
        dist = [INF] * n
        parent_edge = [-1] * n
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u] + 1e-15:
                continue
            for eid in net.adj[u]:
                if net.cap[eid] <= 0:
                    continue
                v = net.to[eid]
                nd = d + net.cost[eid] + potential[u] - potential[v]
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    parent_edge[v] = eid
                    heapq.heappush(heap, (nd, v))
        if dist[sink] == INF:
            break
        for v in range(n):
            if dist[v] < INF:
                potential[v] += dist[v]
        v = sink
        while v != source:
            eid = parent_edge[v]
            net.cap[eid] -= 1
            net.cap[eid ^ 1] += 1
            v = net.to[eid ^ 1]

    matches = []
    for eid, (tid, did) in pair_arcs.items():
        if net.cap[eid] == 0:
            matches.append((tid, did))
    matches.sort()
    matched_t = {t for t, _ in matches}
    matched_d = {d for _, d in matches}
    return AssociationResult(
        matches=tuple(matches),
        unmatched_tracklets=tuple(t for t in t_ids if t not in matched_t),
        unmatched_detections=tuple(d for d in d_ids if d not in matched_d),
    )
