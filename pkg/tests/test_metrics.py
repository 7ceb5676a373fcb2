import math
from itertools import product

import numpy as np
import pytest

from consolenav.errors import LengthMismatch, Unreachable
from consolenav.metrics import (
    MetricsReport,
    coverage_weighted_length_score,
    dtw_cost,
    evaluate,
    evaluate_paths,
    ndtw,
    path_length,
    shortest_distance,
    shortest_path,
)
from consolenav.simenv import Episode, NavGraph


def tree_graph():
    return NavGraph(range(6), [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5),
                               (2, 4, 2.5), (4, 5, 2.0)])


def all_simple_paths(graph, max_nodes=5):
    """Every directed simple path with 1..max_nodes nodes."""
    paths = []

    def extend(path):
        paths.append(list(path))
        if len(path) == max_nodes:
            return
        for nbr, _ in graph.neighbors(path[-1]):
            if nbr not in path:
                path.append(nbr)
                extend(path)
                path.pop()

    for node in graph.nodes:
        extend([node])
    return paths


def enumerate_alignments(n, m):
    """All monotone alignments from (0,0) to (n-1,m-1)."""
    complete = []

    def walk(i, j, acc):
        if i == n - 1 and j == m - 1:
            complete.append(list(acc))
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                acc.append((ni, nj))
                walk(ni, nj, acc)
                acc.pop()

    walk(0, 0, [(0, 0)])
    return complete


def ndtw_brute(graph, predicted, reference, radius):
    """Minimum alignment cost by explicit enumeration, then the decay."""
    best = min(
        sum(shortest_distance(graph, predicted[i], reference[j])
            for i, j in alignment)
        for alignment in enumerate_alignments(len(predicted), len(reference))
    )
    return math.exp(-best / (radius * len(reference)))


def cls_brute(graph, predicted, reference, radius):
    coverage = 0.0
    for r in reference:
        nearest = min(shortest_distance(graph, r, p) for p in predicted)
        coverage += math.exp(-nearest / radius)
    coverage /= len(reference)
    ref_len = sum(graph.edge_weight(u, v)
                  for u, v in zip(reference, reference[1:]))
    pred_len = sum(graph.edge_weight(u, v)
                   for u, v in zip(predicted, predicted[1:]))
    expected = coverage * ref_len
    if expected == 0.0 and pred_len == 0.0:
        return coverage
    return coverage * expected / (expected + abs(expected - pred_len))


class TestShortestDistance:
    def test_identity(self):
        assert shortest_distance(tree_graph(), 3, 3) == 0.0

    def test_single_edge(self):
        graph = NavGraph([0, 1], [(0, 1, 1.5)])
        assert shortest_distance(graph, 0, 1) == 1.5

    def test_against_floyd_warshall(self):
        rng = np.random.default_rng(17)
        nodes = list(range(8))
        edges = []
        for i in range(8):
            edges.append((i, (i + 1) % 8, float(rng.uniform(0.5, 3.0))))
        for _ in range(5):
            u, v = rng.choice(8, size=2, replace=False)
            edges.append((int(u), int(v), float(rng.uniform(0.5, 3.0))))
        graph = NavGraph(nodes, edges)

        inf = float("inf")
        dist = [[inf] * 8 for _ in range(8)]
        for i in range(8):
            dist[i][i] = 0.0
        for u in nodes:
            for v, w in graph.neighbors(u):
                dist[u][v] = min(dist[u][v], w)
        for k, i, j in product(range(8), repeat=3):
            if dist[i][k] + dist[k][j] < dist[i][j]:
                dist[i][j] = dist[i][k] + dist[k][j]

        for a in nodes:
            for b in nodes:
                assert abs(shortest_distance(graph, a, b) - dist[a][b]) <= 1e-12

    def test_symmetry_and_triangle(self):
        graph = tree_graph()
        for a in graph.nodes:
            for b in graph.nodes:
                assert shortest_distance(graph, a, b) == shortest_distance(graph, b, a)
                for c in graph.nodes:
                    assert (shortest_distance(graph, a, b)
                            <= shortest_distance(graph, a, c)
                            + shortest_distance(graph, c, b) + 1e-12)

    def test_unreachable(self):
        graph = NavGraph([0, 1, 2], [(0, 1, 1.0)])
        with pytest.raises(Unreachable):
            shortest_distance(graph, 0, 2)

    def test_shortest_path_endpoints(self):
        graph = tree_graph()
        path = shortest_path(graph, 0, 5)
        assert path == [0, 1, 2, 4, 5]


def make_episode(graph, path, radius=3.0):
    return Episode("ep", "walk.", path[0], path[-1], list(path),
                   [], success_radius=radius)


class TestEvaluate:
    def test_identity_path_perfect_scores(self):
        graph = tree_graph()
        episode = make_episode(graph, [0, 1, 2, 4])
        row = evaluate_paths(graph, [0, 1, 2, 4], episode)
        assert row["NE"] == 0.0
        assert row["SR"] == 1.0
        assert row["SPL"] == 1.0
        assert abs(row["nDTW"] - 1.0) <= 1e-12
        assert abs(row["CLS"] - 1.0) <= 1e-12
        assert abs(row["SDTW"] - 1.0) <= 1e-12

    def test_stop_at_start_two_edges_out(self):
        graph = NavGraph([0, 1, 2], [(0, 1, 2.0), (1, 2, 2.0)])
        episode = make_episode(graph, [0, 1, 2])
        row = evaluate_paths(graph, [0], episode)
        assert row["NE"] == 4.0
        assert row["SR"] == 0.0
        assert row["SPL"] == 0.0
        assert row["SDTW"] == 0.0
        assert row["TL"] == 0.0

    def test_hand_computed_three_node_fixture(self):
        graph = NavGraph([0, 1, 2], [(0, 1, 2.0), (1, 2, 2.0)])
        episode = make_episode(graph, [0, 1, 2])
        row = evaluate_paths(graph, [0], episode)
        # alignment of the single predicted node to all three reference nodes
        want_ndtw = math.exp(-(0.0 + 2.0 + 4.0) / (3.0 * 3))
        assert abs(row["nDTW"] - want_ndtw) <= 1e-12
        pc = (1.0 + math.exp(-2.0 / 3.0) + math.exp(-4.0 / 3.0)) / 3.0
        epl = pc * 4.0
        want_cls = pc * epl / (epl + abs(epl - 0.0))
        assert abs(row["CLS"] - want_cls) <= 1e-12

    def test_all_tree_path_pairs_match_brute_force(self):
        graph = tree_graph()
        paths = all_simple_paths(graph, max_nodes=5)
        assert len(paths) == 36
        radius = 3.0
        for reference in paths:
            episode = make_episode(graph, reference, radius)
            for predicted in paths:
                got = ndtw(graph, predicted, reference, radius)
                want = ndtw_brute(graph, predicted, reference, radius)
                assert abs(got - want) <= 1e-9
                got_cls = coverage_weighted_length_score(
                    graph, predicted, reference, radius)
                want_cls = cls_brute(graph, predicted, reference, radius)
                assert abs(got_cls - want_cls) <= 1e-9
                row = evaluate_paths(graph, predicted, episode)
                assert abs(row["SDTW"] - row["SR"] * want) <= 1e-9
                assert 0.0 <= row["nDTW"] <= 1.0
                assert 0.0 <= row["CLS"] <= 1.0

    def test_spl_bounded_by_sr_on_random_reports(self):
        rng = np.random.default_rng(23)
        graph = tree_graph()
        paths = all_simple_paths(graph, max_nodes=5)
        class Trace:
            def __init__(self, nodes):
                self.nodes = nodes
        for _ in range(200):
            refs = [paths[int(rng.integers(len(paths)))] for _ in range(5)]
            episodes = [make_episode(graph, p, radius=float(rng.uniform(0.5, 4.0)))
                        for p in refs]
            traces = [Trace(paths[int(rng.integers(len(paths)))])
                      for _ in range(5)]
            report = evaluate(traces, graph, episodes)
            for row in report.per_episode:
                assert row["SPL"] <= row["SR"] + 1e-12
                assert row["SDTW"] <= min(row["SR"], row["nDTW"]) + 1e-12
            assert report.spl <= report.sr + 1e-12

    def test_length_mismatch(self):
        graph = tree_graph()
        with pytest.raises(LengthMismatch):
            evaluate([], graph, [make_episode(graph, [0, 1])])
