"""Unigram lexicon scoring, corpus-wide rescaling, and per-user aggregation.

Each tweet gets a raw positive sum and a raw negative sum of lexicon hits.
Raw sums are rescaled network-wide so the most positive tweet scores +5 and
the most negative scores -5; a tweet's sentiment score is the sum of its two
rescaled parts. Per-user aggregates average the scores of tweets sent
(mentioning others in the network) and received (being mentioned).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .ingest import TweetRecord

_RT_PREFIX_RE = re.compile(r"^(?:\s*rt\s+@\w+\s*:?\s*)+", re.IGNORECASE)
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased unigrams with retweet prefixes, URLs, and @mentions removed.

    '#' is a split character, so hashtag bodies survive as plain tokens.
    """
    text = _RT_PREFIX_RE.sub(" ", text)
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    return _TOKEN_RE.findall(text.casefold())


def score_tweet(tokens: Iterable[str], lexicon: Mapping[str, int]) -> tuple[int, int]:
    """Sum positive and negative lexicon scores over the tokens.

    Returns (raw_pos >= 0, raw_neg <= 0). Tokens missing from the lexicon are
    ignored.
    """
    raw_pos = 0
    raw_neg = 0
    for token in tokens:
        score = lexicon.get(token)
        if score is None:
            continue
        if score > 0:
            raw_pos += score
        elif score < 0:
            raw_neg += score
    return raw_pos, raw_neg


@dataclass(frozen=True)
class TweetSentiment:
    tweet_id: str
    raw_pos: int
    raw_neg: int
    scaled_pos: float
    scaled_neg: float
    score: float


@dataclass
class RescaledCorpus:
    """Scaled per-tweet sentiments plus the corpus-wide scaling constants."""

    sentiments: dict[str, TweetSentiment]
    max_raw_pos: int
    min_raw_neg: int

    @property
    def divisor_pos(self) -> float:
        """Raw positive units per scaled point (max_raw_pos / 5)."""
        return self.max_raw_pos / 5

    @property
    def divisor_neg(self) -> float:
        return abs(self.min_raw_neg) / 5

    def scores(self) -> dict[str, float]:
        return {tid: ts.score for tid, ts in self.sentiments.items()}


def rescale_corpus(raw_scores: Mapping[str, tuple[int, int]]) -> RescaledCorpus:
    """Rescale raw sums so positives fall in [0, 5] and negatives in [-5, 0].

    The scaling constants are the maxima over the given tweet set, so this
    must be called on the final network's tweets. scaled = raw * 5 / extreme;
    a side with no hits anywhere keeps 0 for every tweet.
    """
    max_pos = max((p for p, _ in raw_scores.values()), default=0)
    min_neg = min((n for _, n in raw_scores.values()), default=0)
    sentiments = {}
    for tweet_id, (raw_pos, raw_neg) in raw_scores.items():
        scaled_pos = raw_pos * 5 / max_pos if max_pos > 0 else 0.0
        scaled_neg = raw_neg * 5 / abs(min_neg) if min_neg < 0 else 0.0
        sentiments[tweet_id] = TweetSentiment(
            tweet_id=tweet_id,
            raw_pos=raw_pos,
            raw_neg=raw_neg,
            scaled_pos=scaled_pos,
            scaled_neg=scaled_neg,
            score=scaled_pos + scaled_neg,
        )
    return RescaledCorpus(sentiments=sentiments, max_raw_pos=max_pos, min_raw_neg=min_neg)


def score_records(records: Iterable[TweetRecord], lexicon: Mapping[str, int]) -> dict[str, tuple[int, int]]:
    """Raw (pos, neg) sums per tweet_id."""
    return {r.tweet_id: score_tweet(tokenize(r.text), lexicon) for r in records}


@dataclass(frozen=True)
class UserSentiment:
    user_id: str
    sent_out: Optional[float]
    sent_in: Optional[float]
    n_out: int
    n_in: int
    polarity_class: str  # positive | negative | unknown


def polarity_of(sent_out: Optional[float]) -> str:
    if sent_out is None or sent_out == 0:
        return "unknown"
    return "positive" if sent_out > 0 else "negative"


def aggregate_users(
    records: Iterable[TweetRecord],
    scores: Mapping[str, float],
    network_nodes: set[str],
) -> dict[str, UserSentiment]:
    """Average sentiment sent and received per user over the network's tweets.

    Only tweets present in `scores` count (callers pass the scored tweet set
    of the final network). A tweet contributes once to its sender's sent_out
    when it mentions at least one in-network user, and once to the sent_in of
    each in-network user it mentions. Users with no qualifying tweets on a
    side have that mean undefined (None).
    """
    out_sum: dict[str, float] = {}
    out_n: dict[str, int] = {}
    in_sum: dict[str, float] = {}
    in_n: dict[str, int] = {}

    for record in records:
        score = scores.get(record.tweet_id)
        if score is None:
            continue
        receivers = [m for m in record.mentions if m in network_nodes]
        if not receivers or record.user_id not in network_nodes:
            continue
        out_sum[record.user_id] = out_sum.get(record.user_id, 0.0) + score
        out_n[record.user_id] = out_n.get(record.user_id, 0) + 1
        for receiver in receivers:
            in_sum[receiver] = in_sum.get(receiver, 0.0) + score
            in_n[receiver] = in_n.get(receiver, 0) + 1

    users = sorted(set(out_n) | set(in_n))
    result = {}
    for user in users:
        sent_out = out_sum[user] / out_n[user] if out_n.get(user) else None
        sent_in = in_sum[user] / in_n[user] if in_n.get(user) else None
        result[user] = UserSentiment(
            user_id=user,
            sent_out=sent_out,
            sent_in=sent_in,
            n_out=out_n.get(user, 0),
            n_in=in_n.get(user, 0),
            polarity_class=polarity_of(sent_out),
        )
    return result
