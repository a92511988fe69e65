import random

import pytest

from echotrace.graph import (
    build_mention_graph,
    ccdf_points,
    compute_stats,
    edge_sentiment_weights,
    largest_scc,
    mutual_reduce,
    strongly_connected_components,
    undirected_projection,
)

from _helpers import brute_force_sccs, graph_from_pairs, make_tweet


class TestBuild:
    def test_edges_from_mentions(self):
        records = [
            make_tweet("t1", "A", mentions=["B"]),
            make_tweet("t2", "B", mentions=["A"]),
            make_tweet("t3", "A", mentions=["C"]),
        ]
        g = build_mention_graph(records)
        assert set(g.edges) == {("A", "B"), ("B", "A"), ("A", "C")}
        assert g.nodes == {"A", "B", "C"}

    def test_self_mentions_dropped(self):
        g = build_mention_graph([make_tweet("t1", "A", mentions=["A"])])
        assert g.edges == {}
        assert g.nodes == set()

    def test_parallel_mentions_merged(self):
        records = [
            make_tweet("t1", "A", mentions=["B"]),
            make_tweet("t2", "A", mentions=["B"]),
        ]
        g = build_mention_graph(records)
        assert g.edges[("A", "B")].mention_count == 2
        assert g.edges[("A", "B")].tweet_ids == ("t1", "t2")

    def test_empty_corpus(self):
        g = build_mention_graph([])
        assert g.n_nodes == 0 and g.n_edges == 0


class TestMutualReduce:
    def test_keeps_reciprocal_pairs_only(self):
        g = graph_from_pairs([("A", "B"), ("B", "A"), ("A", "C")])
        m = mutual_reduce(g)
        assert set(m.edges) == {("A", "B"), ("B", "A")}
        assert m.nodes == {"A", "B"}

    def test_no_reciprocal_pairs_empty(self):
        g = graph_from_pairs([("A", "B"), ("B", "C"), ("C", "A")])
        m = mutual_reduce(g)
        assert m.nodes == set() and m.edges == {}

    def test_idempotent(self):
        g = graph_from_pairs([("A", "B"), ("B", "A"), ("A", "C"), ("C", "B")])
        once = mutual_reduce(g)
        twice = mutual_reduce(once)
        assert once.edges == twice.edges and once.nodes == twice.nodes


class TestLargestScc:
    def test_triangle_with_pendant(self):
        g = graph_from_pairs([("a", "b"), ("b", "c"), ("c", "a"), ("a", "d")])
        scc = largest_scc(g)
        assert scc.nodes == {"a", "b", "c"}
        assert set(scc.edges) == {("a", "b"), ("b", "c"), ("c", "a")}

    def test_two_disjoint_cycles(self):
        g = graph_from_pairs([
            ("a", "b"), ("b", "a"),
            ("x", "y"), ("y", "z"), ("z", "x"),
        ])
        assert largest_scc(g).nodes == {"x", "y", "z"}

    def test_dag_gives_smallest_single_node(self):
        # 5-node DAG: all SCCs singletons, tie broken by smallest id.
        pairs = [("a", "b"), ("b", "c"), ("a", "d"), ("d", "e"), ("c", "e")]
        g = graph_from_pairs(pairs)
        components = brute_force_sccs(g.nodes, {n: g.out_neighbors(n) for n in g.nodes})
        assert all(len(c) == 1 for c in components)
        assert largest_scc(g).nodes == {"a"}

    def test_idempotent(self):
        g = graph_from_pairs([("a", "b"), ("b", "a"), ("b", "c")])
        once = largest_scc(g)
        twice = largest_scc(once)
        assert once.nodes == twice.nodes and once.edges == twice.edges

    def test_matches_brute_force_on_random_graphs(self):
        rng = random.Random(31)
        for _ in range(200):
            n = rng.randint(1, 12)
            nodes = [f"n{i:02d}" for i in range(n)]
            pairs = []
            for a in nodes:
                for b in nodes:
                    if a != b and rng.random() < 0.18:
                        pairs.append((a, b))
            g = graph_from_pairs(pairs) if pairs else None
            if g is None:
                continue
            expected = brute_force_sccs(g.nodes, {x: g.out_neighbors(x) for x in g.nodes})
            got = {frozenset(c) for c in strongly_connected_components(g)}
            assert got == expected
            best = min(expected, key=lambda c: (-len(c), min(c)))
            assert largest_scc(g).nodes == set(best)

    def test_mutual_scc_degrees_positive(self):
        rng = random.Random(5)
        for _ in range(30):
            nodes = [f"n{i}" for i in range(rng.randint(2, 15))]
            pairs = {(a, b) for a in nodes for b in nodes
                     if a != b and rng.random() < 0.3}
            g = graph_from_pairs(sorted(pairs))
            final = largest_scc(mutual_reduce(g))
            for node in final.nodes:
                assert len(final.out_neighbors(node)) >= 1
                assert len(final.in_neighbors(node)) >= 1


class TestStats:
    def test_triangle(self):
        g = graph_from_pairs([
            ("a", "b"), ("b", "a"), ("b", "c"), ("c", "b"), ("a", "c"), ("c", "a"),
        ])
        stats = compute_stats(g)
        assert all(v == 1.0 for v in stats.clustering.values())
        assert stats.transitivity == 1.0
        assert all(v == 1.0 for v in stats.mean_geodesic.values())
        assert stats.reciprocal_edges == 6

    def test_star_clustering_zero(self):
        # Center has 3 neighbors and no links among them; leaves have degree 1.
        g = graph_from_pairs([("hub", x) for x in ("a", "b", "c")])
        stats = compute_stats(g)
        assert stats.clustering == {"hub": 0.0, "a": 0.0, "b": 0.0, "c": 0.0}
        # Brute-force triple count for the projection: 3 open triples, 0 triangles.
        adj = undirected_projection(g)
        triples = sum(
            1
            for node in adj
            for i, u in enumerate(sorted(adj[node]))
            for v in sorted(adj[node])[i + 1:]
        )
        assert triples == 3
        assert stats.transitivity == 0.0

    def test_path_no_triangles(self):
        g = graph_from_pairs([("a", "b"), ("b", "c")])
        assert compute_stats(g).transitivity == 0.0

    def test_geodesics_on_path(self):
        g = graph_from_pairs([("a", "b"), ("b", "c")])
        stats = compute_stats(g)
        assert stats.mean_geodesic["a"] == pytest.approx(1.5)
        assert stats.mean_geodesic["b"] == pytest.approx(1.0)


class TestCcdf:
    def test_starts_at_one_and_decrements_sum_to_one(self):
        rng = random.Random(11)
        for _ in range(50):
            values = [rng.randint(0, 9) for _ in range(rng.randint(1, 40))]
            points = ccdf_points(values)
            fracs = [f for _, f in points]
            assert fracs[0] == 1.0
            assert all(a >= b for a, b in zip(fracs, fracs[1:]))
            # Include the implicit final drop to zero.
            decrements = [a - b for a, b in zip(fracs, fracs[1:])] + [fracs[-1]]
            assert sum(decrements) == pytest.approx(1.0)

    def test_degree_ccdf_values(self):
        g = graph_from_pairs([("a", "b"), ("a", "c"), ("b", "c")])
        stats = compute_stats(g)
        # Out-degrees: a=2, b=1, c=0.
        assert stats.out_degree_ccdf == [(0, 1.0), (1, pytest.approx(2 / 3)), (2, pytest.approx(1 / 3))]


def test_edge_sentiment_weights_mean_absolute():
    records = [
        make_tweet("t1", "A", mentions=["B"]),
        make_tweet("t2", "A", mentions=["B"]),
        make_tweet("t3", "B", mentions=["A"]),
    ]
    g = build_mention_graph(records)
    weights = edge_sentiment_weights(g, {"t1": -3.0, "t2": 1.0, "t3": 0.5})
    assert weights[("A", "B")] == pytest.approx(1.0)  # |(-3 + 1) / 2|
    assert weights[("B", "A")] == pytest.approx(0.5)
