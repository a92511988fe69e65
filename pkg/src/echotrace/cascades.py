"""Retweet-cascade reconstruction, scoring, and cross-community diffusion analysis.

Reconstruction follows the four steps: bucket tweets by normalized text,
order each bucket by time, attribute each (re)tweet to the most recent prior
tweeter of the same text whom the author mentions (or follows), and cut the
bucket into rooted cascades wherever no parent exists.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from typing import AbstractSet, Iterable, Mapping, Optional

from .ingest import TweetRecord

_RT_CHAIN_RE = re.compile(r"^(?:\s*rt\s+@\w+\s*:?\s*)+", re.IGNORECASE)
_TRAILING_URL_RE = re.compile(r"(?:\s+(?:https?://|www\.)\S+)+\s*$", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Canonical bucket key: strip leading 'RT @user:' chains and trailing
    URLs, collapse whitespace, casefold."""
    text = _RT_CHAIN_RE.sub("", text)
    text = _TRAILING_URL_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip().casefold()


@dataclass
class RetweetBucket:
    bucket_id: str
    normalized_text: str
    members: list[tuple[str, str, datetime]]  # (tweet_id, user_id, created_at), time-ordered


def bucket_retweets(records: Iterable[TweetRecord]) -> list[RetweetBucket]:
    """Group originals and retweets by normalized text, time-ordered.

    Singleton buckets are retained (they are the never-retweeted originals).
    Tweets whose text normalizes to the empty string cannot be matched by
    content and each form their own singleton bucket.
    """
    groups: dict[tuple, list[tuple[str, str, datetime]]] = {}
    for record in records:
        if record.kind not in ("original", "retweet"):
            continue
        text = normalize_text(record.text)
        key = (text,) if text else ("", record.tweet_id)
        groups.setdefault(key, []).append((record.tweet_id, record.user_id, record.created_at))

    buckets = []
    for key, members in groups.items():
        members.sort(key=lambda m: (m[2], m[0]))
        buckets.append(RetweetBucket(
            bucket_id=f"b-{members[0][0]}",
            normalized_text=key[0],
            members=members,
        ))
    buckets.sort(key=lambda b: b.bucket_id)
    return buckets


@dataclass
class CascadeTree:
    cascade_id: str
    bucket_id: str
    root_user: str
    strategy: str
    members: list[tuple[str, str, datetime]] = field(default_factory=list)
    parent_of: dict[str, str] = field(default_factory=dict)  # child user -> parent user
    seed_side: Optional[str] = None
    side_tags: dict[str, str] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.members)

    def users(self) -> list[str]:
        return [u for _, u, _ in self.members]

    def depths(self) -> dict[str, int]:
        depth = {self.root_user: 0}
        for _, user, _ in self.members:
            if user == self.root_user:
                continue
            depth[user] = depth[self.parent_of[user]] + 1
        return depth


def attribute_parents(
    bucket: RetweetBucket,
    oracle: Mapping[str, AbstractSet[str]],
    strategy: str = "mention",
) -> list[CascadeTree]:
    """Split one bucket into cascades by the most-recent-prior-tweeter rule.

    `oracle[user]` is the set of users this user mentions (or follows)
    anywhere in the network. A user appearing several times in a bucket keeps
    only the earliest occurrence. Members without any qualifying prior
    tweeter root new cascades.
    """
    trees: list[CascadeTree] = []
    tree_of: dict[str, CascadeTree] = {}
    placed: list[tuple[str, str, datetime]] = []
    seen: set[str] = set()

    for tweet_id, user, created_at in bucket.members:
        if user in seen:
            continue
        seen.add(user)
        known = oracle.get(user, frozenset())
        parent = None
        for _, prior_user, _ in reversed(placed):
            if prior_user in known:
                parent = prior_user
                break
        if parent is None:
            tree = CascadeTree(
                cascade_id=f"{bucket.bucket_id}-c{len(trees)}",
                bucket_id=bucket.bucket_id,
                root_user=user,
                strategy=strategy,
            )
            trees.append(tree)
        else:
            tree = tree_of[parent]
            tree.parent_of[user] = parent
        tree.members.append((tweet_id, user, created_at))
        tree_of[user] = tree
        placed.append((tweet_id, user, created_at))
    return trees


def reconstruct_cascades(
    buckets: Iterable[RetweetBucket],
    oracle: Mapping[str, AbstractSet[str]],
    strategy: str = "mention",
) -> list[CascadeTree]:
    trees = []
    for bucket in buckets:
        trees.extend(attribute_parents(bucket, oracle, strategy))
    return trees


def mention_oracle(records: Iterable[TweetRecord]) -> dict[str, set[str]]:
    """Who mentions whom anywhere in the corpus (full graph, self-mentions out)."""
    adjacency: dict[str, set[str]] = {}
    for record in records:
        for target in record.mentions:
            if target != record.user_id:
                adjacency.setdefault(record.user_id, set()).add(target)
    return adjacency


@dataclass(frozen=True)
class CascadeScores:
    max_depth: int
    avg_depth: float
    virality: Optional[float]


def score_cascade(tree: CascadeTree) -> CascadeScores:
    """Max depth, mean depth to the seed (seed included), and structural
    virality (mean pairwise tree distance over ordered node pairs).

    Virality is undefined for single-node cascades. The pairwise distance sum
    is accumulated per edge as subtree_size * (n - subtree_size), which
    equals the brute-force all-pairs sum on a tree.
    """
    n = tree.n
    depth = tree.depths()
    max_depth = max(depth.values())
    avg_depth = sum(depth.values()) / n
    if n < 2:
        return CascadeScores(max_depth=max_depth, avg_depth=avg_depth, virality=None)

    subtree = {u: 1 for _, u, _ in tree.members}
    for _, user, _ in reversed(tree.members):
        parent = tree.parent_of.get(user)
        if parent is not None:
            subtree[parent] += subtree[user]
    pair_sum = sum(
        subtree[user] * (n - subtree[user])
        for _, user, _ in tree.members
        if user != tree.root_user
    )
    virality = 2 * pair_sum / (n * (n - 1))
    return CascadeScores(max_depth=max_depth, avg_depth=avg_depth, virality=virality)


CHANGE_BINS = ("changed", "50_60", "60_100", "unchanged")


def _change_bin(seed_side_frac: float) -> str:
    if seed_side_frac == 1.0:
        return "unchanged"
    if seed_side_frac >= 0.6:
        return "60_100"
    if seed_side_frac >= 0.5:
        return "50_60"
    return "changed"


@dataclass
class CascadeDiffusion:
    cascade_id: str
    seed_side: str
    n: int
    n_classified: int
    n_yes: int
    n_no: int
    prop_yes: Optional[float]
    seed_side_frac: Optional[float]
    change_bin: Optional[str]


@dataclass
class DiffusionReport:
    per_cascade: list[CascadeDiffusion]
    seed_counts: dict[str, int]
    largest_by_side: dict[str, int]
    change_bins: dict[str, dict[str, int]]
    min_classified: int
    n_histogram_trees: int
    n_middle: int

    @property
    def fraction_middle(self) -> Optional[float]:
        if self.n_histogram_trees == 0:
            return None
        return self.n_middle / self.n_histogram_trees

    def as_dict(self) -> dict:
        return {
            "n_cascades": len(self.per_cascade),
            "seed_counts": dict(sorted(self.seed_counts.items())),
            "largest_by_side": dict(sorted(self.largest_by_side.items())),
            "change_bins": {side: dict(bins) for side, bins in sorted(self.change_bins.items())},
            "min_classified": self.min_classified,
            "n_histogram_trees": self.n_histogram_trees,
            "n_middle_prop_yes": self.n_middle,
            "fraction_middle_prop_yes": self.fraction_middle,
        }


def diffusion_analysis(
    trees: Iterable[CascadeTree],
    sides: Mapping[str, str],
    min_classified: int = 10,
) -> DiffusionReport:
    """Tag each cascade with its members' sides and summarise diffusion.

    `sides` maps user to yes/no; everyone else is unknown. The proportion
    histogram only counts trees with at least `min_classified` classified
    users; the change-bin table covers every cascade whose seed is
    classified.
    """
    per_cascade = []
    seed_counts = Counter({"yes": 0, "no": 0, "unknown": 0})
    largest: dict[str, int] = {"yes": 0, "no": 0, "unknown": 0}
    change_bins = {
        "yes": {b: 0 for b in CHANGE_BINS},
        "no": {b: 0 for b in CHANGE_BINS},
    }
    n_hist = 0
    n_middle = 0

    for tree in trees:
        tags = {}
        for u in tree.users():
            side = sides.get(u)
            tags[u] = side if side in ("yes", "no") else "unknown"
        tree.side_tags = tags
        seed_side = tags[tree.root_user]
        tree.seed_side = seed_side

        n_yes = sum(1 for s in tags.values() if s == "yes")
        n_no = sum(1 for s in tags.values() if s == "no")
        n_classified = n_yes + n_no
        prop_yes = n_yes / n_classified if n_classified else None

        seed_counts[seed_side] += 1
        largest[seed_side] = max(largest[seed_side], tree.n)

        seed_side_frac = None
        change_bin = None
        if seed_side in ("yes", "no") and n_classified:
            seed_side_frac = (n_yes if seed_side == "yes" else n_no) / n_classified
            change_bin = _change_bin(seed_side_frac)
            change_bins[seed_side][change_bin] += 1

        if n_classified >= min_classified and prop_yes is not None:
            n_hist += 1
            if 0.25 < prop_yes < 0.75:
                n_middle += 1

        per_cascade.append(CascadeDiffusion(
            cascade_id=tree.cascade_id,
            seed_side=seed_side,
            n=tree.n,
            n_classified=n_classified,
            n_yes=n_yes,
            n_no=n_no,
            prop_yes=prop_yes,
            seed_side_frac=seed_side_frac,
            change_bin=change_bin,
        ))

    return DiffusionReport(
        per_cascade=per_cascade,
        seed_counts=dict(seed_counts),
        largest_by_side=largest,
        change_bins=change_bins,
        min_classified=min_classified,
        n_histogram_trees=n_hist,
        n_middle=n_middle,
    )


@dataclass
class ScoreSummary:
    n_trees: int
    stats: dict[str, dict[str, float]]  # metric -> {mode, median, mean}
    correlations: dict[str, Optional[float]]
    ccdf: dict[str, list[tuple[float, float]]]

    def as_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "stats": {m: dict(sorted(v.items())) for m, v in sorted(self.stats.items())},
            "correlations": dict(sorted(self.correlations.items())),
        }


def _mode(values: list[float]) -> float:
    counts = Counter(values)
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0]


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    m = len(ordered)
    half = m // 2
    if m % 2:
        return ordered[half]
    return (ordered[half - 1] + ordered[half]) / 2


def _ccdf(values: list[float]) -> list[tuple[float, float]]:
    n = len(values)
    ordered = sorted(values)
    points = []
    for v in sorted(set(ordered)):
        at_least = sum(1 for x in ordered if x >= v)
        points.append((v, at_least / n))
    return points


def score_distributions(scores: Iterable[CascadeScores]) -> ScoreSummary:
    """Distribution summary of the three metrics over cascades with n >= 2."""
    import numpy as np

    usable = [s for s in scores if s.virality is not None]
    metrics = {
        "max_depth": [float(s.max_depth) for s in usable],
        "avg_depth": [s.avg_depth for s in usable],
        "virality": [s.virality for s in usable],
    }
    stats = {}
    ccdf = {}
    for name, values in metrics.items():
        if values:
            stats[name] = {
                "mode": _mode(values),
                "median": _median(values),
                "mean": sum(values) / len(values),
            }
            ccdf[name] = _ccdf(values)
        else:
            stats[name] = {}
            ccdf[name] = []

    correlations: dict[str, Optional[float]] = {}
    names = list(metrics)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            key = f"{a}~{b}"
            if not usable:
                correlations[key] = None
                continue
            x = np.array(metrics[a])
            y = np.array(metrics[b])
            xc, yc = x - x.mean(), y - y.mean()
            denom = float(np.sqrt((xc * xc).sum() * (yc * yc).sum()))
            correlations[key] = float((xc * yc).sum() / denom) if denom else None

    return ScoreSummary(
        n_trees=len(usable), stats=stats, correlations=correlations, ccdf=ccdf,
    )
