"""Load and validate tweet archives, sentiment lexicons, annotations, and follower lists.

Input formats
-------------
tweets       JSON lines, UTF-8, one object per line:
             tweet_id (str), user_id (str), created_at (ISO-8601, UTC assumed
             when naive), text (str), kind ("original"|"retweet"|"reply"),
             hashtags (list[str], optional: derived from text when absent),
             mentions (list[str], optional), retweet_of / reply_to /
             conversation_id (optional str).
lexicon      TSV `word<TAB>score`, score an integer in [-5, 5].
annotations  CSV with header `user_id,label`, label in {yes, no}.
followers    CSV with header `follower,followed`.

All loaders are pure functions of the file bytes: same input, same output.
In lenient mode (default) damaged rows are skipped and counted per reason;
in strict mode the first damaged row raises DataError.
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from .errors import DataError

TWEET_KINDS = ("original", "retweet", "reply")

_HASHTAG_RE = re.compile(r"#(\w+)")


@dataclass(frozen=True)
class TweetRecord:
    """One ingested tweet, retweet, or reply."""

    tweet_id: str
    user_id: str
    created_at: datetime
    text: str
    kind: str
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    retweet_of: Optional[str] = None
    reply_to: Optional[str] = None
    conversation_id: Optional[str] = None


@dataclass(frozen=True)
class HashtagTimeFilter:
    """Keep records carrying any tracked hashtag inside [start, end].

    An empty hashtag set disables hashtag filtering; a missing bound disables
    that side of the time window. Hashtags are matched case-insensitively
    after stripping a leading '#'.
    """

    hashtags: frozenset[str] = frozenset()
    start: Optional[datetime] = None
    end: Optional[datetime] = None

    @classmethod
    def tracking(cls, tags: Iterable[str], start=None, end=None) -> "HashtagTimeFilter":
        return cls(
            hashtags=frozenset(t.lstrip("#").lower() for t in tags if t.lstrip("#")),
            start=parse_timestamp(start) if isinstance(start, str) else start,
            end=parse_timestamp(end) if isinstance(end, str) else end,
        )

    def matches(self, record: TweetRecord) -> bool:
        if self.hashtags and not (set(record.hashtags) & self.hashtags):
            return False
        if self.start is not None and record.created_at < self.start:
            return False
        if self.end is not None and record.created_at > self.end:
            return False
        return True


@dataclass
class IngestReport:
    total_lines: int = 0
    kept: int = 0
    filtered: int = 0
    skipped: int = 0
    skip_reasons: Counter = field(default_factory=Counter)
    kind_counts: Counter = field(default_factory=Counter)

    def as_dict(self) -> dict:
        return {
            "total_lines": self.total_lines,
            "kept": self.kept,
            "filtered": self.filtered,
            "skipped": self.skipped,
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
            "kind_counts": {k: self.kind_counts.get(k, 0) for k in TWEET_KINDS},
        }


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)





def _parse_record(obj: dict) -> TweetRecord:
    tweet_id = str(obj["tweet_id"])
    user_id = str(obj["user_id"])
    created_at = parse_timestamp(str(obj["created_at"]))
    text = str(obj.get("text", ""))
    kind = str(obj["kind"])
    if kind not in TWEET_KINDS:
        raise ValueError(f"unknown kind {kind!r}")

    raw_tags = obj.get("hashtags")
    if raw_tags is None:
        raw_tags = _HASHTAG_RE.findall(text)
    hashtags = tuple(str(t).lstrip("#").lower() for t in raw_tags if str(t).lstrip("#"))

    mentions = []
    for m in obj.get("mentions", []):
        m = str(m).lstrip("@")
        if m and m != user_id and m not in mentions:
            mentions.append(m)

    retweet_of = obj.get("retweet_of")
    record = TweetRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        created_at=created_at,
        text=text,
        kind=kind,
        hashtags=hashtags,
        mentions=tuple(mentions),
        retweet_of=str(retweet_of) if retweet_of else None,
        reply_to=str(obj["reply_to"]) if obj.get("reply_to") else None,
        conversation_id=str(obj["conversation_id"]) if obj.get("conversation_id") else None,
    )
    if record.kind == "retweet" and not record.mentions and record.retweet_of is None:
        raise ValueError("retweet names no source (no mentions, no retweet_of)")
    return record


def load_tweets(
    path: str | Path,
    tweet_filter: Optional[HashtagTimeFilter] = None,
    strict: bool = False,
) -> tuple[list[TweetRecord], IngestReport]:
    """Parse a JSON-lines tweet archive and apply the hashtag/time filter.

    Returns the kept records in file order plus an IngestReport satisfying
    kept + filtered + skipped == total_lines. Malformed lines are skipped and
    counted by reason (DataError in strict mode). Duplicate tweet_ids keep the
    first occurrence.
    """
    tweet_filter = tweet_filter or HashtagTimeFilter()
    report = IngestReport()
    records: list[TweetRecord] = []
    seen_ids: set[str] = set()

    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read tweet archive {path}: {exc}") from exc

    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        report.total_lines += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            record = _parse_record(obj)
        except (KeyError, ValueError, TypeError) as exc:
            reason = _skip_reason(exc)
            if strict:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            report.skipped += 1
            report.skip_reasons[reason] += 1
            continue

        if record.tweet_id in seen_ids:
            if strict:
                raise DataError(f"{path}:{lineno}: duplicate tweet_id {record.tweet_id}")
            report.skipped += 1
            report.skip_reasons["duplicate_tweet_id"] += 1
            continue
        seen_ids.add(record.tweet_id)

        if not tweet_filter.matches(record):
            report.filtered += 1
            continue

        records.append(record)
        report.kept += 1
        report.kind_counts[record.kind] += 1

    return records, report


def _skip_reason(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return "missing_field"
    msg = str(exc)
    if "fromisoformat" in msg or "Invalid isoformat" in msg:
        return "bad_timestamp"
    if "kind" in msg:
        return "bad_kind"
    if "retweet names no source" in msg:
        return "retweet_without_source"
    if isinstance(exc, ValueError) and "JSON" in type(exc).__name__ + msg:
        return "bad_json"
    return "malformed"


def write_tweets(records: Iterable[TweetRecord], path: str | Path) -> None:
    """Write records back out in the ingest JSONL format (round-trip safe)."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "tweet_id": r.tweet_id,
                "user_id": r.user_id,
                "created_at": r.created_at.isoformat().replace("+00:00", "Z"),
                "text": r.text,
                "kind": r.kind,
                "hashtags": list(r.hashtags),
                "mentions": list(r.mentions),
            }
            if r.retweet_of:
                obj["retweet_of"] = r.retweet_of
            if r.reply_to:
                obj["reply_to"] = r.reply_to
            if r.conversation_id:
                obj["conversation_id"] = r.conversation_id
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


@dataclass
class LexiconReport:
    words: int = 0
    duplicates: int = 0
    clamped: int = 0
    skipped: int = 0


def load_lexicon(path: str | Path, strict: bool = False) -> tuple[dict[str, int], LexiconReport]:
    """Load a `word<TAB>score` lexicon; duplicates are last-wins.

    Scores outside [-5, 5] are fatal in strict mode, clamped (with a count)
    otherwise.
    """
    lexicon: dict[str, int] = {}
    report = LexiconReport()
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read lexicon {path}: {exc}") from exc

    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        try:
            if len(parts) != 2:
                raise ValueError("expected word<TAB>score")
            word = parts[0].strip().lower()
            score = int(parts[1].strip())
            if not word:
                raise ValueError("empty word")
        except ValueError as exc:
            if strict:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            report.skipped += 1
            continue
        if not -5 <= score <= 5:
            if strict:
                raise DataError(f"{path}:{lineno}: score {score} outside [-5, 5]")
            score = max(-5, min(5, score))
            report.clamped += 1
        if word in lexicon:
            report.duplicates += 1
        lexicon[word] = score
        report.words = len(lexicon)
    return lexicon, report


@dataclass
class CsvReport:
    rows: int = 0
    duplicates: int = 0
    self_edges: int = 0


def load_annotations(path: str | Path) -> tuple[dict[str, str], CsvReport]:
    """Load `user_id,label` annotations; labels must be yes or no.

    Duplicate user_ids are last-wins with a count. An unknown label is always
    fatal (schema violation, not noise).
    """
    labels: dict[str, str] = {}
    report = CsvReport()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "user_id" not in reader.fieldnames or "label" not in reader.fieldnames:
            raise DataError(f"{path}: expected header with user_id,label")
        for row in reader:
            user = (row["user_id"] or "").strip()
            label = (row["label"] or "").strip().lower()
            if label not in ("yes", "no"):
                raise DataError(f"{path}: unknown label {row['label']!r} for user {user!r}")
            if user in labels:
                report.duplicates += 1
            labels[user] = label
            report.rows += 1
    return labels, report


def load_followers(path: str | Path) -> tuple[dict[str, set[str]], CsvReport]:
    """Load `follower,followed` edges into an adjacency map follower -> set."""
    adjacency: dict[str, set[str]] = {}
    report = CsvReport()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "follower" not in reader.fieldnames or "followed" not in reader.fieldnames:
            raise DataError(f"{path}: expected header with follower,followed")
        for row in reader:
            a = (row["follower"] or "").strip()
            b = (row["followed"] or "").strip()
            if not a or not b:
                continue
            if a == b:
                report.self_edges += 1
                continue
            bucket = adjacency.setdefault(a, set())
            if b in bucket:
                report.duplicates += 1
            else:
                bucket.add(b)
                report.rows += 1
    return adjacency, report
