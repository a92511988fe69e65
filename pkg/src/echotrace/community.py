"""Community detection on the sentiment-weighted graph, side labeling, and validation.

Louvain runs on the undirected symmetrization of the directed graph (the two
directed weights of a pair are summed). Node visit order is seeded, moves are
accepted only on strictly positive modularity gain with sorted tie-breaking,
so a fixed seed gives an identical partition on every run.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import timezone
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .graph import MentionGraph
from .ingest import TweetRecord
from .sentiment import UserSentiment


@dataclass
class CommunityPartition:
    assignment: dict[str, int]
    q: float
    method: str = "louvain"
    seed: int = 0
    warnings: list[str] = field(default_factory=list)

    def communities(self) -> dict[int, list[str]]:
        groups: dict[int, list[str]] = {}
        for node in sorted(self.assignment):
            groups.setdefault(self.assignment[node], []).append(node)
        return dict(sorted(groups.items()))

    def sizes(self) -> dict[int, int]:
        return {cid: len(members) for cid, members in self.communities().items()}


def symmetrized_weights(
    graph: MentionGraph, weights: Mapping[tuple[str, str], float]
) -> dict[tuple[str, str], float]:
    """Undirected weights: sum of the two directed weights of each pair."""
    und: dict[tuple[str, str], float] = {}
    for (a, b), w in weights.items():
        key = (a, b) if a < b else (b, a)
        und[key] = und.get(key, 0.0) + w
    return und


def modularity(assignment: Mapping[str, int], und_weights: Mapping[tuple[str, str], float]) -> float:
    """Newman modularity of a partition on an undirected weighted graph."""
    strength: dict[str, float] = {}
    m2 = 0.0
    internal: dict[int, float] = {}
    for (a, b), w in und_weights.items():
        strength[a] = strength.get(a, 0.0) + w
        strength[b] = strength.get(b, 0.0) + w
        m2 += 2 * w
        if assignment.get(a) == assignment.get(b):
            internal[assignment[a]] = internal.get(assignment[a], 0.0) + 2 * w
    if m2 == 0:
        return 0.0
    tot: dict[int, float] = {}
    for node, k in strength.items():
        cid = assignment[node]
        tot[cid] = tot.get(cid, 0.0) + k
    return sum(
        internal.get(cid, 0.0) / m2 - (tot[cid] / m2) ** 2 for cid in tot
    )


def _one_level(
    adj: list[dict[int, float]],
    strengths: list[float],
    m2: float,
    order: Sequence[int],
) -> tuple[list[int], bool]:
    """One Louvain level of local moves; returns (community of node, any move)."""
    n = len(adj)
    com = list(range(n))
    tot = strengths[:]
    improved = False
    moved = True
    while moved:
        moved = False
        for i in order:
            ci = com[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                links[com[j]] = links.get(com[j], 0.0) + w
            tot[ci] -= strengths[i]
            best_c = ci
            best_gain = links.get(ci, 0.0) - tot[ci] * strengths[i] / m2
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] - tot[c] * strengths[i] / m2
                if gain > best_gain:
                    best_gain = gain
                    best_c = c
            tot[best_c] += strengths[i]
            if best_c != ci:
                com[i] = best_c
                moved = True
                improved = True
    return com, improved


def _aggregate(
    adj: list[dict[int, float]],
    loops: list[float],
    com: list[int],
) -> tuple[list[dict[int, float]], list[float], dict[int, int]]:
    remap = {}
    for c in sorted(set(com), key=lambda c: min(i for i in range(len(com)) if com[i] == c)):
        remap[c] = len(remap)
    new_n = len(remap)
    new_adj: list[dict[int, float]] = [dict() for _ in range(new_n)]
    new_loops = [0.0] * new_n
    for i in range(len(adj)):
        ci = remap[com[i]]
        new_loops[ci] += loops[i]
        for j, w in adj[i].items():
            if j <= i:
                continue
            cj = remap[com[j]]
            if ci == cj:
                new_loops[ci] += w
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
                new_adj[cj][ci] = new_adj[cj].get(ci, 0.0) + w
    return new_adj, new_loops, remap


def louvain(
    graph: MentionGraph,
    weights: Mapping[tuple[str, str], float],
    seed: int = 0,
) -> CommunityPartition:
    """Weighted Louvain on the symmetrized graph; deterministic for a seed.

    Weights must be non-negative. If every weight is zero the graph falls
    back to unit weights with a warning. Final community ids are assigned by
    decreasing size (ties: smallest member id).
    """
    partition_warnings: list[str] = []
    nodes = sorted(graph.nodes)
    if not nodes:
        raise ValueError("cannot detect communities on an empty graph")
    if any(w < 0 for w in weights.values()):
        raise ValueError("negative edge weights")

    und = symmetrized_weights(graph, weights)
    if und and all(w == 0 for w in und.values()):
        partition_warnings.append("all edge weights zero; falling back to unit weights")
        und = {key: 1.0 for key in und}

    node_index = {node: i for i, node in enumerate(nodes)}
    adj: list[dict[int, float]] = [dict() for _ in nodes]
    for (a, b), w in und.items():
        ia, ib = node_index[a], node_index[b]
        adj[ia][ib] = adj[ia].get(ib, 0.0) + w
        adj[ib][ia] = adj[ib].get(ia, 0.0) + w
    loops = [0.0] * len(nodes)

    m2 = sum(sum(d.values()) for d in adj)
    if m2 == 0:
        # No edges at all: every node is its own community.
        assignment = {node: i for i, node in enumerate(nodes)}
        return CommunityPartition(assignment=assignment, q=0.0, seed=seed,
                                  warnings=partition_warnings + ["graph has no edges"])

    rng = random.Random(seed)
    membership = list(range(len(nodes)))  # original node -> current level node
    while True:
        strengths = [sum(adj[i].values()) + 2 * loops[i] for i in range(len(adj))]
        order = list(range(len(adj)))
        rng.shuffle(order)
        com, improved = _one_level(adj, strengths, m2, order)
        if not improved:
            break
        adj, loops, remap = _aggregate(adj, loops, com)
        membership = [remap[com[i]] for i in membership]
        if len(adj) == 1:
            break

    # Relabel communities by decreasing size, ties by smallest member id.
    groups: dict[int, list[str]] = {}
    for orig_idx, level_node in enumerate(membership):
        groups.setdefault(level_node, []).append(nodes[orig_idx])
    ordered = sorted(groups.values(), key=lambda members: (-len(members), min(members)))
    assignment = {}
    for cid, members in enumerate(ordered):
        for node in members:
            assignment[node] = cid

    q = modularity(assignment, und)
    return CommunityPartition(assignment=assignment, q=q, seed=seed, warnings=partition_warnings)


DETECTORS = {"louvain": louvain}


def detect(
    graph: MentionGraph,
    weights: Mapping[tuple[str, str], float],
    method: str = "louvain",
    seed: int = 0,
) -> CommunityPartition:
    """Pluggable detection entry point; only 'louvain' ships natively."""
    try:
        detector = DETECTORS[method]
    except KeyError:
        raise ValueError(
            f"unknown detection method {method!r}; available: {sorted(DETECTORS)}"
        ) from None
    return detector(graph, weights, seed=seed)


def filter_significant(
    partition: CommunityPartition,
    min_size: int = 20,
    top_k: Optional[int] = 2,
) -> CommunityPartition:
    """Restrict to communities of at least min_size nodes, then to the top_k
    largest. Community ids are preserved; a warning is attached when fewer
    than top_k significant communities exist."""
    sizes = partition.sizes()
    significant = [cid for cid, size in sizes.items() if size >= min_size]
    significant.sort(key=lambda cid: (-sizes[cid], cid))
    warnings = list(partition.warnings)
    if top_k is not None:
        if len(significant) < top_k:
            warnings.append(
                f"only {len(significant)} communities of size >= {min_size} (wanted {top_k})"
            )
        significant = significant[:top_k]
    keep = set(significant)
    assignment = {node: cid for node, cid in partition.assignment.items() if cid in keep}
    return CommunityPartition(
        assignment=assignment, q=partition.q, method=partition.method,
        seed=partition.seed, warnings=warnings,
    )


@dataclass
class CommunitySummary:
    community: int
    size: int
    mean_sent_out: Optional[float]
    mean_sent_in: Optional[float]


def community_summaries(
    partition: CommunityPartition,
    user_sentiments: Mapping[str, UserSentiment],
) -> list[CommunitySummary]:
    summaries = []
    for cid, members in partition.communities().items():
        outs = [user_sentiments[u].sent_out for u in members
                if u in user_sentiments and user_sentiments[u].sent_out is not None]
        ins = [user_sentiments[u].sent_in for u in members
               if u in user_sentiments and user_sentiments[u].sent_in is not None]
        summaries.append(CommunitySummary(
            community=cid,
            size=len(members),
            mean_sent_out=sum(outs) / len(outs) if outs else None,
            mean_sent_in=sum(ins) / len(ins) if ins else None,
        ))
    return summaries


@dataclass
class SideLabeling:
    side_of: dict[int, str]  # community id -> yes | no | unlabeled
    warnings: list[str] = field(default_factory=list)

    def user_sides(self, partition: CommunityPartition) -> dict[str, str]:
        return {
            node: self.side_of.get(cid, "unlabeled")
            for node, cid in partition.assignment.items()
        }


def classify_sides(
    partition: CommunityPartition,
    user_sentiments: Mapping[str, UserSentiment],
) -> SideLabeling:
    """Label the community with higher mean sentiment-out as yes, the other no.

    Requires exactly two communities in the partition. Equal means break
    toward the larger community being yes, with a warning. A community whose
    members all lack sentiment stays unlabeled.
    """
    summaries = community_summaries(partition, user_sentiments)
    if len(summaries) != 2:
        raise ValueError(f"side classification needs exactly 2 communities, got {len(summaries)}")
    warnings: list[str] = []
    a, b = summaries
    side_of: dict[int, str] = {}
    if a.mean_sent_out is None or b.mean_sent_out is None:
        if a.mean_sent_out is None:
            side_of[a.community] = "unlabeled"
            warnings.append(f"community {a.community} has no sentiment data")
        if b.mean_sent_out is None:
            side_of[b.community] = "unlabeled"
            warnings.append(f"community {b.community} has no sentiment data")
        for s in (a, b):
            if s.mean_sent_out is not None:
                side_of[s.community] = "yes" if s.mean_sent_out > 0 else "no"
        return SideLabeling(side_of=side_of, warnings=warnings)

    if a.mean_sent_out == b.mean_sent_out:
        warnings.append("equal mean sentiment-out; larger community labeled yes")
        larger, smaller = sorted((a, b), key=lambda s: (-s.size, s.community))
        side_of[larger.community] = "yes"
        side_of[smaller.community] = "no"
    else:
        hi, lo = sorted((a, b), key=lambda s: -s.mean_sent_out)
        side_of[hi.community] = "yes"
        side_of[lo.community] = "no"
    return SideLabeling(side_of=side_of, warnings=warnings)


@dataclass
class Validation:
    tp: int
    fp: int
    tn: int
    fn: int
    recall_yes: float
    recall_no: float
    balanced_accuracy: float


def validate(
    labeling: SideLabeling,
    partition: CommunityPartition,
    annotations: Mapping[str, str],
) -> Validation:
    """Confusion matrix and balanced accuracy over annotated, labeled users."""
    sides = labeling.user_sides(partition)
    tp = fp = tn = fn = 0
    for user, truth in annotations.items():
        predicted = sides.get(user)
        if predicted not in ("yes", "no"):
            continue
        if truth == "yes":
            if predicted == "yes":
                tp += 1
            else:
                fn += 1
        else:
            if predicted == "no":
                tn += 1
            else:
                fp += 1
    if tp + fp + tn + fn == 0:
        raise ValueError("no overlap between annotations and labeled communities")
    if tp + fn == 0 or tn + fp == 0:
        raise ValueError("annotations overlap only one side; balanced accuracy undefined")
    recall_yes = tp / (tp + fn)
    recall_no = tn / (tn + fp)
    return Validation(
        tp=tp, fp=fp, tn=tn, fn=fn,
        recall_yes=recall_yes, recall_no=recall_no,
        balanced_accuracy=(recall_yes + recall_no) / 2,
    )


@dataclass
class KmeansMerge:
    cluster_of: dict[int, int]
    k: int
    sse: float
    silhouette: Optional[float]
    warnings: list[str] = field(default_factory=list)


def kmeans_merge(
    features: Mapping[int, tuple[float, float]],
    k: Optional[int] = None,
    seed: int = 0,
) -> KmeansMerge:
    """Cluster communities by (mean sent_in, mean sent_out) with k-means.

    k-means++ seeding, 100 restarts, fixed seed. When k is None, k in
    [2, min(8, n_communities)] is chosen by the best mean silhouette. k is
    reduced with a warning when there are fewer distinct points than k.
    """
    from sklearn.cluster import KMeans
    from sklearn.metrics import silhouette_score

    cids = sorted(features)
    if not cids:
        raise ValueError("no community features to cluster")
    x = np.array([features[cid] for cid in cids], dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("community features must be finite")
    n = len(cids)
    distinct = len({tuple(row) for row in x})
    warnings: list[str] = []

    def fit(k_fit: int) -> KMeans:
        return KMeans(n_clusters=k_fit, init="k-means++", n_init=100,
                      random_state=seed).fit(x)

    if k is None:
        best = None
        for cand in range(2, min(8, n) + 1):
            if cand > distinct or cand > n - 1:
                break
            model = fit(cand)
            if len(set(model.labels_)) < 2:
                continue
            score = float(silhouette_score(x, model.labels_))
            if best is None or score > best[0]:
                best = (score, cand, model)
        if best is None:
            warnings.append("silhouette selection infeasible; using k=1")
            model = fit(1)
            return KmeansMerge(
                cluster_of={cid: int(label) for cid, label in zip(cids, model.labels_)},
                k=1, sse=float(model.inertia_), silhouette=None, warnings=warnings,
            )
        score, k_used, model = best
        return KmeansMerge(
            cluster_of={cid: int(label) for cid, label in zip(cids, model.labels_)},
            k=k_used, sse=float(model.inertia_), silhouette=score, warnings=warnings,
        )

    if k < 1:
        raise ValueError("k must be >= 1")
    k_used = min(k, distinct)
    if k_used < k:
        warnings.append(f"only {distinct} distinct points; reduced k from {k} to {k_used}")
    model = fit(k_used)
    silhouette = None
    if 2 <= len(set(model.labels_)) <= n - 1:
        silhouette = float(silhouette_score(x, model.labels_))
    return KmeansMerge(
        cluster_of={cid: int(label) for cid, label in zip(cids, model.labels_)},
        k=k_used, sse=float(model.inertia_), silhouette=silhouette, warnings=warnings,
    )


@dataclass
class LinkFractionRow:
    user_id: str
    side: str
    n_labeled_out: int
    frac_yes: float
    frac_no: float


@dataclass
class LinkFractions:
    rows: list[LinkFractionRow]
    mean_same_side: Optional[float]
    mean_frac_yes_by_side: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "mean_same_side": self.mean_same_side,
            "mean_frac_yes_by_side": dict(sorted(self.mean_frac_yes_by_side.items())),
            "n_users": len(self.rows),
        }


def link_fractions_by_community(
    graph: MentionGraph,
    user_sides: Mapping[str, str],
) -> LinkFractions:
    """Per-user distribution of out-link destinations across the two sides.

    Only links to yes/no-labeled users enter the denominators; users with no
    such out-links are excluded. mean_same_side averages, over labeled users,
    the fraction of their labeled out-links landing on their own side.
    """
    rows = []
    same_fracs = []
    frac_yes_by_side: dict[str, list[float]] = {}
    for user in sorted(graph.nodes):
        labeled = [d for d in graph.out_neighbors(user) if user_sides.get(d) in ("yes", "no")]
        if not labeled:
            continue
        n_yes = sum(1 for d in labeled if user_sides[d] == "yes")
        frac_yes = n_yes / len(labeled)
        side = user_sides.get(user, "unlabeled")
        rows.append(LinkFractionRow(
            user_id=user, side=side, n_labeled_out=len(labeled),
            frac_yes=frac_yes, frac_no=1 - frac_yes,
        ))
        if side in ("yes", "no"):
            same_fracs.append(frac_yes if side == "yes" else 1 - frac_yes)
            frac_yes_by_side.setdefault(side, []).append(frac_yes)
    return LinkFractions(
        rows=rows,
        mean_same_side=sum(same_fracs) / len(same_fracs) if same_fracs else None,
        mean_frac_yes_by_side={
            side: sum(vals) / len(vals) for side, vals in sorted(frac_yes_by_side.items())
        },
    )


def activity_series(
    records: Iterable[TweetRecord],
    partition: CommunityPartition,
) -> list[tuple[str, int, float]]:
    """Daily mean tweets per member for each community: (date, cid, rate)."""
    sizes = partition.sizes()
    counts: dict[tuple[str, int], int] = {}
    for record in records:
        cid = partition.assignment.get(record.user_id)
        if cid is None:
            continue
        day = record.created_at.astimezone(timezone.utc).date().isoformat()
        counts[(day, cid)] = counts.get((day, cid), 0) + 1
    return [
        (day, cid, counts[(day, cid)] / sizes[cid])
        for day, cid in sorted(counts)
    ]
