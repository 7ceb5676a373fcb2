"""Navigation metrics over graph-geodesic distances.

TL, NE, SR, SPL plus the path-fidelity family (CLS, nDTW, SDTW). All
distances are shortest-path distances on the weighted navigation graph;
the success radius doubles as the decay scale of the fidelity metrics.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from math import exp

from .errors import LengthMismatch, Unreachable


def shortest_distance(graph, a, b) -> float:
    """Dijkstra distance between two nodes."""
    if a == b:
        return 0.0
    dist = {a: 0.0}
    heap = [(0.0, a)]
    while heap:
        d, node = heapq.heappop(heap)
        if node == b:
            return d
        if d > dist.get(node, float("inf")):
            continue
        for nbr, w in graph.neighbors(node):
            nd = d + w
            if nd < dist.get(nbr, float("inf")):
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    raise Unreachable(f"no path from {a} to {b}")


def shortest_path(graph, a, b) -> list:
    """Dijkstra path; ties broken deterministically by node id."""
    dist = {a: 0.0}
    parent = {a: None}
    heap = [(0.0, a)]
    while heap:
        d, node = heapq.heappop(heap)
        if node == b:
            break
        if d > dist.get(node, float("inf")):
            continue
        for nbr, w in graph.neighbors(node):
            nd = d + w
            if nd < dist.get(nbr, float("inf")):
                dist[nbr] = nd
                parent[nbr] = node
                heapq.heappush(heap, (nd, nbr))
    if b not in parent:
        raise Unreachable(f"no path from {a} to {b}")
    path = [b]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def path_length(graph, nodes) -> float:
    """Sum of edge weights along a node sequence."""
    return sum(graph.edge_weight(u, v) for u, v in zip(nodes, nodes[1:]))


def dtw_cost(graph, predicted, reference) -> float:
    """Minimum cumulative node-distance over monotone alignments."""
    n, m = len(predicted), len(reference)
    inf = float("inf")
    acc = [[inf] * (m + 1) for _ in range(n + 1)]
    acc[0][0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d = shortest_distance(graph, predicted[i - 1], reference[j - 1])
            acc[i][j] = d + min(acc[i - 1][j], acc[i][j - 1], acc[i - 1][j - 1])
    return acc[n][m]


def ndtw(graph, predicted, reference, radius: float) -> float:
    """exp(-DTW / (radius * |reference|)), in [0, 1]."""
    cost = dtw_cost(graph, predicted, reference)
    return exp(-cost / (radius * len(reference)))


def coverage_weighted_length_score(graph, predicted, reference, radius: float) -> float:
    """Path coverage times the length score.

    Coverage averages exp(-d(r, P)/radius) over reference nodes; the
    length score compares the coverage-expected path length against the
    predicted one.
    """
    coverage = sum(
        exp(-min(shortest_distance(graph, r, p) for p in predicted) / radius)
        for r in reference
    ) / len(reference)
    expected = coverage * path_length(graph, reference)
    predicted_len = path_length(graph, predicted)
    if expected == 0.0 and predicted_len == 0.0:
        score = 1.0
    else:
        score = expected / (expected + abs(expected - predicted_len))
    return coverage * score


@dataclass
class MetricsReport:
    tl: float
    ne: float
    sr: float
    spl: float
    cls: float
    ndtw: float
    sdtw: float
    per_episode: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "TL": self.tl, "NE": self.ne, "SR": self.sr, "SPL": self.spl,
            "CLS": self.cls, "nDTW": self.ndtw, "SDTW": self.sdtw,
            "per_episode": self.per_episode,
        }


def evaluate_paths(graph, predicted, episode) -> dict:
    """All per-episode metrics for one predicted node sequence."""
    reference = episode.path
    goal = episode.goal
    radius = episode.success_radius
    stop_node = predicted[-1]
    ne = shortest_distance(graph, stop_node, goal)
    success = 1.0 if ne <= radius else 0.0
    pred_len = path_length(graph, predicted)
    shortest = shortest_distance(graph, predicted[0], goal)
    if shortest == 0.0:
        spl = success
    else:
        spl = success * shortest / max(pred_len, shortest)
    fidelity = ndtw(graph, predicted, reference, radius)
    return {
        "instruction_id": episode.instruction_id,
        "TL": pred_len,
        "NE": ne,
        "SR": success,
        "SPL": spl,
        "CLS": coverage_weighted_length_score(graph, predicted, reference, radius),
        "nDTW": fidelity,
        "SDTW": success * fidelity,
    }


def evaluate(traces, graph, episodes) -> MetricsReport:
    """Aggregate metrics over aligned (trace, episode) pairs."""
    if len(traces) != len(episodes):
        raise LengthMismatch(f"{len(traces)} traces vs {len(episodes)} episodes")
    rows = [evaluate_paths(graph, trace.nodes, episode)
            for trace, episode in zip(traces, episodes)]
    count = len(rows)

    def mean(key):
        return sum(r[key] for r in rows) / count if count else 0.0

    return MetricsReport(
        tl=mean("TL"), ne=mean("NE"), sr=mean("SR"), spl=mean("SPL"),
        cls=mean("CLS"), ndtw=mean("nDTW"), sdtw=mean("SDTW"),
        per_episode=rows,
    )
