import random

import numpy as np
import pytest

from echotrace.community import (
    activity_series,
    classify_sides,
    community_summaries,
    detect,
    filter_significant,
    kmeans_merge,
    link_fractions_by_community,
    louvain,
    modularity,
    symmetrized_weights,
    validate,
    CommunityPartition,
    SideLabeling,
)
from echotrace.sentiment import UserSentiment, polarity_of

from _helpers import (
    best_two_partition_sse,
    graph_from_pairs,
    make_tweet,
    modularity_oracle,
    planted_two_block_graph,
)


def unit_weights(graph):
    return {key: 1.0 for key in graph.edges}


def mutual_pairs(pairs):
    out = []
    for a, b in pairs:
        out.append((a, b))
        out.append((b, a))
    return out


def user_sent(user, out=None, inn=None):
    return UserSentiment(
        user_id=user, sent_out=out, sent_in=inn,
        n_out=0 if out is None else 1, n_in=0 if inn is None else 1,
        polarity_class=polarity_of(out),
    )


class TestLouvain:
    def test_two_triangles(self):
        pairs = mutual_pairs([("a", "b"), ("b", "c"), ("a", "c"),
                              ("x", "y"), ("y", "z"), ("x", "z")])
        g = graph_from_pairs(pairs)
        part = louvain(g, unit_weights(g), seed=1)
        comms = {frozenset(m) for m in part.communities().values()}
        assert comms == {frozenset("abc"), frozenset("xyz")}
        assert part.q == pytest.approx(0.5, abs=1e-12)
        # Cross-check against the direct modularity formula.
        und = symmetrized_weights(g, unit_weights(g))
        assert modularity_oracle(und, part.assignment) == pytest.approx(part.q, abs=1e-12)

    def test_single_edge_merges_with_zero_q(self):
        g = graph_from_pairs([("a", "b"), ("b", "a")])
        part = louvain(g, unit_weights(g), seed=0)
        assert len(part.sizes()) == 1
        assert part.q == pytest.approx(0.0, abs=1e-12)

    def test_planted_two_block_recovery(self):
        rng = random.Random(17)
        g, sides = planted_two_block_graph(rng, 50, 0.2, 0.01)
        part = louvain(g, unit_weights(g), seed=4)
        top = filter_significant(part, min_size=20, top_k=2)
        assert len(top.sizes()) == 2
        # Majority alignment: each detected community maps to its dominant side.
        agree = 0
        for cid, members in top.communities().items():
            yes = sum(1 for u in members if sides[u] == "yes")
            agree += max(yes, len(members) - yes)
        assert agree / len(top.assignment) >= 0.95

    def test_deterministic_for_fixed_seed(self):
        rng = random.Random(23)
        g, _ = planted_two_block_graph(rng, 30, 0.25, 0.03)
        part1 = louvain(g, unit_weights(g), seed=11)
        part2 = louvain(g, unit_weights(g), seed=11)
        assert part1.assignment == part2.assignment
        assert part1.q == part2.q

    def test_weight_scale_invariance(self):
        rng = random.Random(29)
        g, _ = planted_two_block_graph(rng, 25, 0.25, 0.03)
        base = {key: 0.4 + rng.random() for key in g.edges}
        scaled = {key: 3.7 * w for key, w in base.items()}
        assert louvain(g, base, seed=2).assignment == louvain(g, scaled, seed=2).assignment

    def test_all_zero_weights_fall_back_to_unit(self):
        g = graph_from_pairs(mutual_pairs([("a", "b"), ("b", "c"), ("a", "c")]))
        part = louvain(g, {key: 0.0 for key in g.edges}, seed=0)
        assert part.warnings
        assert len(part.assignment) == 3

    def test_negative_weights_rejected(self):
        g = graph_from_pairs([("a", "b"), ("b", "a")])
        with pytest.raises(ValueError):
            louvain(g, {key: -1.0 for key in g.edges}, seed=0)

    def test_modularity_bounds_and_improvement(self):
        rng = random.Random(41)
        for trial in range(10):
            nodes = [f"n{i}" for i in range(rng.randint(4, 20))]
            pairs = {(a, b) for a in nodes for b in nodes if a != b and rng.random() < 0.3}
            pairs |= {(b, a) for a, b in pairs}
            g = graph_from_pairs(sorted(pairs))
            if not g.edges:
                continue
            part = louvain(g, unit_weights(g), seed=trial)
            assert -0.5 <= part.q <= 1.0
            und = symmetrized_weights(g, unit_weights(g))
            singleton = {n: i for i, n in enumerate(sorted(g.nodes))}
            assert part.q >= modularity(singleton, und) - 1e-12

    def test_detect_registry(self):
        g = graph_from_pairs([("a", "b"), ("b", "a")])
        part = detect(g, unit_weights(g), method="louvain", seed=0)
        assert part.method == "louvain"
        with pytest.raises(ValueError, match="unknown detection method"):
            detect(g, unit_weights(g), method="leiden")


class TestFilterSignificant:
    def _partition(self, sizes):
        assignment = {}
        for cid, size in enumerate(sizes):
            for i in range(size):
                assignment[f"c{cid}u{i:04d}"] = cid
        return CommunityPartition(assignment=assignment, q=0.3)

    def test_keeps_top_two_large(self):
        part = self._partition([60, 25, 12])
        top = filter_significant(part, min_size=20, top_k=2)
        assert top.sizes() == {0: 60, 1: 25}
        assert not top.warnings

    def test_all_small_gives_empty_with_warning(self):
        part = self._partition([5, 4])
        top = filter_significant(part, min_size=20, top_k=2)
        assert top.assignment == {}
        assert top.warnings

    def test_three_significant_keeps_largest_two(self):
        part = self._partition([40, 30, 21])
        top = filter_significant(part, min_size=20, top_k=2)
        assert set(top.sizes()) == {0, 1}


class TestClassifySides:
    def _fixture(self, mean_a, mean_b, size_a=3, size_b=3):
        assignment = {}
        sentiments = {}
        for i in range(size_a):
            u = f"a{i}"
            assignment[u] = 0
            sentiments[u] = user_sent(u, out=mean_a)
        for i in range(size_b):
            u = f"b{i}"
            assignment[u] = 1
            sentiments[u] = user_sent(u, out=mean_b)
        return CommunityPartition(assignment=assignment, q=0.0), sentiments

    def test_higher_mean_is_yes(self):
        part, sentiments = self._fixture(0.12, -0.05)
        labeling = classify_sides(part, sentiments)
        assert labeling.side_of == {0: "yes", 1: "no"}

    def test_tie_goes_to_larger_community(self):
        part, sentiments = self._fixture(0.1, 0.1, size_a=2, size_b=5)
        labeling = classify_sides(part, sentiments)
        assert labeling.side_of == {1: "yes", 0: "no"}
        assert labeling.warnings

    def test_one_community_is_an_error(self):
        part = CommunityPartition(assignment={"a": 0, "b": 0}, q=0.0)
        with pytest.raises(ValueError):
            classify_sides(part, {})

    def test_community_without_sentiment_unlabeled(self):
        part, sentiments = self._fixture(0.5, 0.0)
        for i in range(3):
            sentiments[f"b{i}"] = user_sent(f"b{i}", out=None)
        labeling = classify_sides(part, sentiments)
        assert labeling.side_of[1] == "unlabeled"
        assert labeling.side_of[0] == "yes"


class TestValidate:
    def _setup(self, tp, fn, tn, fp):
        assignment = {}
        annotations = {}
        labeling = SideLabeling(side_of={0: "yes", 1: "no"})
        i = 0
        for count, cid, truth in ((tp, 0, "yes"), (fp, 0, "no"), (tn, 1, "no"), (fn, 1, "yes")):
            for _ in range(count):
                u = f"u{i:04d}"
                i += 1
                assignment[u] = cid
                annotations[u] = truth
        return labeling, CommunityPartition(assignment=assignment, q=0.0), annotations

    def test_formula(self):
        labeling, part, ann = self._setup(tp=90, fn=10, tn=80, fp=20)
        v = validate(labeling, part, ann)
        assert (v.tp, v.fn, v.tn, v.fp) == (90, 10, 80, 20)
        assert v.balanced_accuracy == pytest.approx(0.85)

    def test_perfect_agreement(self):
        labeling, part, ann = self._setup(tp=7, fn=0, tn=5, fp=0)
        assert validate(labeling, part, ann).balanced_accuracy == 1.0

    def test_swap_invariance(self):
        labeling, part, ann = self._setup(tp=30, fn=5, tn=20, fp=10)
        base = validate(labeling, part, ann).balanced_accuracy
        flipped_labeling = SideLabeling(side_of={0: "no", 1: "yes"})
        flipped_ann = {u: ("no" if s == "yes" else "yes") for u, s in ann.items()}
        assert validate(flipped_labeling, part, flipped_ann).balanced_accuracy == pytest.approx(base)

    def test_zero_overlap_is_error(self):
        labeling, part, _ = self._setup(tp=3, fn=0, tn=3, fp=0)
        with pytest.raises(ValueError):
            validate(labeling, part, {"stranger": "yes"})


class TestKmeansMerge:
    def test_matches_exhaustive_two_partition(self):
        features = {0: (0.3, 0.3), 1: (0.31, 0.28), 2: (-0.2, -0.25)}
        merge = kmeans_merge(features, k=2, seed=0)
        groups = {}
        for cid, cluster in merge.cluster_of.items():
            groups.setdefault(cluster, set()).add(cid)
        got = frozenset(frozenset(g) for g in groups.values())
        points = [features[cid] for cid in sorted(features)]
        best_sse, best_groups = best_two_partition_sse(points)
        assert got == best_groups
        assert merge.sse == pytest.approx(best_sse, abs=1e-9)

    def test_k1_sse_is_total_scatter(self):
        features = {0: (0.0, 0.0), 1: (1.0, 0.0), 2: (0.0, 1.0)}
        merge = kmeans_merge(features, k=1, seed=0)
        pts = np.array(list(features.values()))
        expected = float(((pts - pts.mean(axis=0)) ** 2).sum())
        assert merge.sse == pytest.approx(expected)
        assert set(merge.cluster_of.values()) == {0}

    def test_duplicate_points_reduce_k(self):
        features = {0: (0.1, 0.1), 1: (0.1, 0.1), 2: (0.1, 0.1)}
        merge = kmeans_merge(features, k=2, seed=0)
        assert merge.k == 1
        assert merge.warnings

    def test_auto_k_picks_two_for_separated_clouds(self):
        rng = np.random.default_rng(0)
        features = {}
        for i in range(4):
            features[i] = tuple(rng.normal((0.3, 0.3), 0.01))
        for i in range(4, 8):
            features[i] = tuple(rng.normal((-0.3, -0.3), 0.01))
        merge = kmeans_merge(features, k=None, seed=0)
        assert merge.k == 2
        assert merge.silhouette is not None and merge.silhouette > 0.8


class TestLinkFractions:
    def test_per_user_fractions(self):
        g = graph_from_pairs([("u", "y1"), ("u", "y2"), ("u", "n1")])
        sides = {"u": "yes", "y1": "yes", "y2": "yes", "n1": "no"}
        lf = link_fractions_by_community(g, sides)
        row = next(r for r in lf.rows if r.user_id == "u")
        assert row.frac_yes == pytest.approx(2 / 3)
        assert row.frac_no == pytest.approx(1 / 3)

    def test_users_without_labeled_out_links_excluded(self):
        g = graph_from_pairs([("u", "x"), ("y1", "u")])
        sides = {"u": "yes", "y1": "yes"}  # x unlabeled
        lf = link_fractions_by_community(g, sides)
        assert [r.user_id for r in lf.rows] == ["y1"]

    def test_echo_chamber_mean_same_side(self):
        rng = random.Random(13)
        g, sides = planted_two_block_graph(rng, 30, 0.3, 0.01)
        lf = link_fractions_by_community(g, sides)
        assert lf.mean_same_side > 0.9


def test_community_summaries_and_activity():
    part = CommunityPartition(assignment={"a": 0, "b": 0, "c": 1}, q=0.1)
    sentiments = {
        "a": user_sent("a", out=1.0, inn=0.5),
        "b": user_sent("b", out=0.0, inn=None),
        "c": user_sent("c", out=-1.0, inn=-1.0),
    }
    summaries = community_summaries(part, sentiments)
    by_cid = {s.community: s for s in summaries}
    assert by_cid[0].mean_sent_out == pytest.approx(0.5)
    assert by_cid[0].mean_sent_in == pytest.approx(0.5)
    assert by_cid[1].size == 1

    records = [
        make_tweet("t1", "a", seconds=0),
        make_tweet("t2", "b", seconds=10),
        make_tweet("t3", "c", seconds=86_400),
        make_tweet("t4", "ghost", seconds=0),
    ]
    series = activity_series(records, part)
    assert series[0] == ("2030-05-01", 0, pytest.approx(1.0))  # 2 tweets / 2 members
    assert series[1] == ("2030-05-02", 1, pytest.approx(1.0))
