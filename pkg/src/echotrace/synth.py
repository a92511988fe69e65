"""Synthetic polarized corpora with planted ground truth.

Two user blocks (yes/no) exchange mutual mentions with side-dependent
probabilities, tweet words drawn from side-leaning distributions over a tiny
lexicon, plus planted retweet cascades whose texts bucket cleanly and whose
parent links are recoverable by the most-recent-prior-tweeter rule: every
planted child mentions its parent, and children are only accepted when no
co-member placed after their parent is already in their mention set.

All randomness flows from one seeded generator, so a config produces
byte-identical archives on every run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .ingest import TweetRecord, write_tweets

POSITIVE_WORDS = (("hopeful", 3), ("bright", 2))
NEGATIVE_WORDS = (("dismal", -3), ("grim", -2))

_BASE_TIME = datetime(2030, 5, 1, 8, 0, 0, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SynthConfig:
    n_users_per_side: int = 50
    p_intra: float = 0.2
    p_inter: float = 0.01
    sentiment_lean: float = 0.3    # expected word-sign mean per side, in [0, 1]
    sentiment_spread: float = 0.05
    n_cascades: int = 40
    branching: float = 0.45        # geometric continuation prob for offspring
    max_cascade_size: int = 30
    cross_side_retweet_prob: float = 0.02
    hashtag: str = "ref2030"
    seed: int = 0

    def validate(self) -> None:
        if self.n_users_per_side < 1:
            raise ValueError("both sides need at least one user")
        for name in ("p_intra", "p_inter", "cross_side_retweet_prob", "branching"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not 0 <= self.sentiment_lean <= 1:
            raise ValueError("sentiment_lean must be in [0, 1]")
        n = self.n_users_per_side
        expected_pairs = self.p_intra * (n - 1) + self.p_inter * n
        if expected_pairs < 1:
            raise ValueError(
                f"infeasible config: expected {expected_pairs:.2f} mention pairs per user (< 1)"
            )


@dataclass
class TruthCascade:
    key: str
    members: list[str]            # bucket order
    parent_of: dict[str, str]     # child -> parent (roots absent)
    seed_tweet_id: str


@dataclass
class SynthResult:
    config: SynthConfig
    sides: dict[str, str]
    cascades: list[TruthCascade]
    records: list[TweetRecord]
    paths: dict[str, Path] = field(default_factory=dict)


def _pick_word(rng: np.random.Generator, positivity: float) -> str:
    pool = POSITIVE_WORDS if rng.random() < positivity else NEGATIVE_WORDS
    return pool[int(rng.integers(len(pool)))][0]


def generate(config: SynthConfig, out_dir: str | Path | None = None) -> SynthResult:
    """Build the corpus; when out_dir is given, write all artifact files.

    Files: tweets.jsonl, lexicon.tsv, annotations.csv, followers.csv,
    truth_sides.csv, truth_cascades.csv.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.n_users_per_side
    users = [f"u{i:05d}" for i in range(2 * n)]
    labels = np.array(["yes"] * n + ["no"] * n)
    rng.shuffle(labels)
    sides = {u: str(s) for u, s in zip(users, labels)}
    side_users = {
        "yes": [u for u in users if sides[u] == "yes"],
        "no": [u for u in users if sides[u] == "no"],
    }

    positivity = {}
    for u in users:
        center = (1 + config.sentiment_lean) / 2 if sides[u] == "yes" else (1 - config.sentiment_lean) / 2
        positivity[u] = float(np.clip(rng.normal(center, config.sentiment_spread), 0.02, 0.98))

    records: list[TweetRecord] = []
    mention_set: dict[str, set[str]] = {u: set() for u in users}
    tweet_counter = 0

    def emit(user, text, kind, mentions, when, retweet_of=None) -> str:
        nonlocal tweet_counter
        tweet_counter += 1
        tid = f"t{tweet_counter:07d}"
        records.append(TweetRecord(
            tweet_id=tid, user_id=user, created_at=when, text=text, kind=kind,
            hashtags=(config.hashtag,), mentions=tuple(mentions),
            retweet_of=retweet_of,
        ))
        return tid

    # Block-model mutual mention pairs.
    pair_counter = 0
    for i in range(2 * n):
        for j in range(i + 1, 2 * n):
            a, b = users[i], users[j]
            p = config.p_intra if sides[a] == sides[b] else config.p_inter
            if rng.random() >= p:
                continue
            for src, dst in ((a, b), (b, a)):
                pair_counter += 1
                word = _pick_word(rng, positivity[src])
                emit(
                    src,
                    f"talking about the vote m{pair_counter:06d} {word} @{dst} #{config.hashtag}",
                    "original",
                    [dst],
                    _BASE_TIME + timedelta(seconds=pair_counter),
                )
                mention_set[src].add(dst)

    # Planted cascades. Children are appended to the bucket's timeline; a
    # candidate is rejected if it already mentions a member placed after the
    # intended parent, which keeps the parent recoverable by the rule.
    cascade_base = _BASE_TIME + timedelta(days=1)
    cascades: list[TruthCascade] = []
    for c in range(config.n_cascades):
        seed_user = users[int(rng.integers(2 * n))]
        word = _pick_word(rng, positivity[seed_user])
        core_text = f"take on the referendum t{c:04d} {word}"
        when = cascade_base + timedelta(seconds=120 * c)
        seed_tid = emit(seed_user, f"{core_text} #{config.hashtag}", "original", [], when)

        members = [seed_user]
        member_pos = {seed_user: 0}
        qi = 0
        while qi < len(members) and len(members) < config.max_cascade_size:
            parent = members[qi]
            qi += 1
            offspring = int(rng.geometric(1 - config.branching)) - 1
            for _ in range(offspring):
                if len(members) >= config.max_cascade_size:
                    break
                if rng.random() < config.cross_side_retweet_prob:
                    target_side = "no" if sides[parent] == "yes" else "yes"
                else:
                    target_side = sides[parent]
                pool = [u for u in side_users[target_side] if u not in member_pos]
                child = None
                for _ in range(30):
                    if not pool:
                        break
                    cand = pool[int(rng.integers(len(pool)))]
                    conflict = any(
                        member_pos[m] > member_pos[parent]
                        for m in mention_set[cand]
                        if m in member_pos
                    )
                    if not conflict:
                        child = cand
                        break
                if child is None:
                    continue
                pos = len(members)
                members.append(child)
                member_pos[child] = pos
                mention_set[child].add(parent)
                emit(
                    child,
                    f"RT @{parent}: {core_text} #{config.hashtag}",
                    "retweet",
                    [parent],
                    when + timedelta(seconds=pos),
                    retweet_of=seed_tid,
                )

        cascades.append(TruthCascade(
            key=f"t{c:04d}", members=members, parent_of={}, seed_tweet_id=seed_tid,
        ))

    # Derive the planted parents by replaying the attribution rule against
    # the final mention sets (later cascades can add mentions that change an
    # earlier member's latest mentioned predecessor).
    for cascade in cascades:
        parent_of = {}
        for idx, user in enumerate(cascade.members):
            for prior in reversed(cascade.members[:idx]):
                if prior in mention_set[user]:
                    parent_of[user] = prior
                    break
        cascade.parent_of = parent_of

    result = SynthResult(config=config, sides=sides, cascades=cascades, records=records)
    if out_dir is not None:
        result.paths = _write_files(result, Path(out_dir))
    return result


def _write_files(result: SynthResult, out_dir: Path) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "tweets": out_dir / "tweets.jsonl",
        "lexicon": out_dir / "lexicon.tsv",
        "annotations": out_dir / "annotations.csv",
        "followers": out_dir / "followers.csv",
        "truth_sides": out_dir / "truth_sides.csv",
        "truth_cascades": out_dir / "truth_cascades.csv",
    }

    write_tweets(result.records, paths["tweets"])

    with open(paths["lexicon"], "w", encoding="utf-8") as fh:
        for word, score in sorted(POSITIVE_WORDS + NEGATIVE_WORDS):
            fh.write(f"{word}\t{score}\n")

    with open(paths["truth_sides"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "side"])
        for user in sorted(result.sides):
            writer.writerow([user, result.sides[user]])

    with open(paths["annotations"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "label"])
        for user in sorted(result.sides):
            writer.writerow([user, result.sides[user]])

    # Followers mirror the final mention adjacency (u follows whom u mentions),
    # giving the follower parenting strategy a consistent exercise surface.
    mention_set: dict[str, set[str]] = {}
    for record in result.records:
        for m in record.mentions:
            mention_set.setdefault(record.user_id, set()).add(m)
    with open(paths["followers"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["follower", "followed"])
        for user in sorted(mention_set):
            for followed in sorted(mention_set[user]):
                writer.writerow([user, followed])

    with open(paths["truth_cascades"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cascade", "position", "child", "parent"])
        for cascade in result.cascades:
            for pos, user in enumerate(cascade.members):
                writer.writerow([cascade.key, pos, user, cascade.parent_of.get(user, "")])

    return paths
