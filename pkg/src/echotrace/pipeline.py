"""Stage orchestration: run the analysis end-to-end over flat file artifacts.

Every stage reads only files written by earlier stages (or the original
inputs) and writes its own artifacts into the output directory, so any stage
can be re-run in isolation and intermediate state stays inspectable. The
report stage folds the stage summaries into one summary.json; two runs with
the same inputs and seeds produce byte-identical summaries.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

from . import cascades as casc
from . import community as comm
from . import graph as gr
from . import nullmodels as nm
from . import sentiment as sent
from .errors import ConfigError
from .ingest import (
    HashtagTimeFilter,
    load_annotations,
    load_followers,
    load_lexicon,
    load_tweets,
    write_tweets,
)

SCHEMA_VERSION = 1

RECORDS = "records.jsonl"
INGEST_REPORT = "ingest_report.json"
RAW_SCORES = "raw_scores.csv"
EDGES = "edges.csv"
GRAPH_SUMMARY = "graph_summary.json"
DEGREE_CCDF = "degree_ccdf.csv"
CLUSTERING = "clustering.csv"
GEODESICS = "geodesics.csv"
TWEET_SCORES = "tweet_scores.csv"
USER_SENTIMENT = "user_sentiment.csv"
PARTITION = "partition.csv"
COMMUNITY_SUMMARY = "community_summary.json"
ACTIVITY = "activity.csv"
LINK_FRACTIONS = "link_fractions.csv"
NULL_RESULTS = {
    "correlation": "null_correlation.json",
    "linkclass": "null_linkclass.json",
    "assortativity": "null_assortativity.json",
}
CASCADES_CSV = "cascades.csv"
CASCADE_EDGES = "cascade_edges.csv"
DIFFUSION_REPORT = "diffusion_report.json"
CASCADE_SCORE_SUMMARY = "cascade_score_summary.json"
CASCADE_SCORE_CCDF = "cascade_score_ccdf.csv"
SUMMARY = "summary.json"


@dataclass
class RunConfig:
    out_dir: Path
    tweets_path: Optional[Path] = None
    lexicon_path: Optional[Path] = None
    annotations_path: Optional[Path] = None
    followers_path: Optional[Path] = None
    hashtags: tuple[str, ...] = ()
    start: Optional[datetime] = None
    end: Optional[datetime] = None
    seed: int = 0
    replicates: int = nm.DEFAULT_REPLICATES
    strict: bool = False
    min_community_size: int = 20
    top_k: int = 2
    kmeans_k: Optional[int] = None
    run_kmeans: bool = False
    cascade_strategy: str = "mention"
    min_classified: int = 10
    threads: int = 1
    dump_replicates: bool = False

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise ConfigError(f"missing artifact {path.name}: run the '{produced_by}' stage first")
    return path


def _load_records(out_dir: Path):
    records, _ = load_tweets(_require(out_dir / RECORDS, "ingest"), strict=True)
    return records


def stage_ingest(cfg: RunConfig) -> None:
    if cfg.tweets_path is None:
        raise ConfigError("ingest needs --tweets")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    tweet_filter = HashtagTimeFilter.tracking(cfg.hashtags, start=cfg.start, end=cfg.end)
    records, report = load_tweets(cfg.tweets_path, tweet_filter, strict=cfg.strict)
    write_tweets(records, cfg.out_dir / RECORDS)
    _write_json(cfg.out_dir / INGEST_REPORT, report.as_dict())


def stage_score(cfg: RunConfig) -> None:
    if cfg.lexicon_path is None:
        raise ConfigError("score needs --lexicon")
    records = _load_records(cfg.out_dir)
    lexicon, _ = load_lexicon(cfg.lexicon_path, strict=cfg.strict)
    raw = sent.score_records(records, lexicon)
    with open(cfg.out_dir / RAW_SCORES, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tweet_id", "raw_pos", "raw_neg"])
        for tid in sorted(raw):
            writer.writerow([tid, raw[tid][0], raw[tid][1]])


def _load_raw_scores(out_dir: Path) -> dict[str, tuple[int, int]]:
    raw = {}
    with open(_require(out_dir / RAW_SCORES, "score"), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            raw[row["tweet_id"]] = (int(row["raw_pos"]), int(row["raw_neg"]))
    return raw


def stage_graph(cfg: RunConfig) -> None:
    records = _load_records(cfg.out_dir)
    raw = _load_raw_scores(cfg.out_dir)

    full = gr.build_mention_graph(records)
    mutual = gr.mutual_reduce(full)
    scc = gr.largest_scc(mutual)

    # Scaling constants come from the final network's tweet set.
    scc_tweets = gr.tweet_ids_on_edges(scc)
    rescaled = sent.rescale_corpus({t: raw[t] for t in sorted(scc_tweets) if t in raw})
    scores = rescaled.scores()
    weights = gr.edge_sentiment_weights(scc, scores)
    users = sent.aggregate_users(records, scores, scc.nodes)
    stats = gr.compute_stats(scc) if scc.nodes else None

    with open(cfg.out_dir / EDGES, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "mention_count", "sentiment_weight"])
        for (a, b) in sorted(scc.edges):
            writer.writerow([a, b, scc.edges[(a, b)].mention_count, weights[(a, b)]])

    with open(cfg.out_dir / TWEET_SCORES, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tweet_id", "raw_pos", "raw_neg", "score"])
        for tid in sorted(rescaled.sentiments):
            ts = rescaled.sentiments[tid]
            writer.writerow([tid, ts.raw_pos, ts.raw_neg, ts.score])

    with open(cfg.out_dir / USER_SENTIMENT, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "sent_out", "sent_in", "n_out", "n_in", "polarity"])
        for uid in sorted(users):
            u = users[uid]
            writer.writerow([
                uid,
                "" if u.sent_out is None else u.sent_out,
                "" if u.sent_in is None else u.sent_in,
                u.n_out, u.n_in, u.polarity_class,
            ])

    if stats is not None:
        with open(cfg.out_dir / DEGREE_CCDF, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["basis", "direction", "degree", "ccdf"])
            for basis, direction, points in (
                ("merged", "in", stats.in_degree_ccdf),
                ("merged", "out", stats.out_degree_ccdf),
                ("mentions", "in", stats.in_mention_ccdf),
                ("mentions", "out", stats.out_mention_ccdf),
            ):
                for degree, frac in points:
                    writer.writerow([basis, direction, degree, frac])
        with open(cfg.out_dir / CLUSTERING, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", "clustering"])
            for uid in sorted(stats.clustering):
                writer.writerow([uid, stats.clustering[uid]])
        with open(cfg.out_dir / GEODESICS, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", "mean_distance"])
            for uid in sorted(stats.mean_geodesic):
                writer.writerow([uid, stats.mean_geodesic[uid]])

    summary = {
        "full": {"nodes": full.n_nodes, "edges": full.n_edges,
                 "mentions": full.n_mentions, "reciprocal_edges": full.reciprocal_edge_count()},
        "mutual": {"nodes": mutual.n_nodes, "edges": mutual.n_edges,
                   "mentions": mutual.n_mentions},
        "mutual_scc": {"nodes": scc.n_nodes, "edges": scc.n_edges,
                       "mentions": scc.n_mentions},
        "stats": stats.summary() if stats is not None else None,
        "rescale": {
            "max_raw_pos": rescaled.max_raw_pos,
            "min_raw_neg": rescaled.min_raw_neg,
            "divisor_pos": rescaled.divisor_pos,
            "divisor_neg": rescaled.divisor_neg,
            "n_tweets": len(rescaled.sentiments),
        },
    }
    _write_json(cfg.out_dir / GRAPH_SUMMARY, summary)


def _load_edges(out_dir: Path) -> tuple[gr.MentionGraph, dict[tuple[str, str], float]]:
    edges = {}
    weights = {}
    with open(_require(out_dir / EDGES, "graph"), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["src"], row["dst"])
            edges[key] = gr.Edge(mention_count=int(row["mention_count"]), tweet_ids=())
            weights[key] = float(row["sentiment_weight"])
    nodes = {a for a, _ in edges} | {b for _, b in edges}
    return gr.MentionGraph(nodes=nodes, edges=edges), weights


def _load_user_sentiment(out_dir: Path) -> dict[str, sent.UserSentiment]:
    users = {}
    with open(_require(out_dir / USER_SENTIMENT, "graph"), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            sent_out = float(row["sent_out"]) if row["sent_out"] != "" else None
            sent_in = float(row["sent_in"]) if row["sent_in"] != "" else None
            users[row["user_id"]] = sent.UserSentiment(
                user_id=row["user_id"], sent_out=sent_out, sent_in=sent_in,
                n_out=int(row["n_out"]), n_in=int(row["n_in"]),
                polarity_class=row["polarity"],
            )
    return users


def _load_scores(out_dir: Path) -> dict[str, float]:
    scores = {}
    with open(_require(out_dir / TWEET_SCORES, "graph"), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            scores[row["tweet_id"]] = float(row["score"])
    return scores


def _load_partition(out_dir: Path) -> tuple[dict[str, int], dict[str, str]]:
    assignment = {}
    sides = {}
    with open(_require(out_dir / PARTITION, "communities"), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            assignment[row["user_id"]] = int(row["community"])
            sides[row["user_id"]] = row["side"]
    return assignment, sides


def stage_communities(cfg: RunConfig) -> None:
    graph, weights = _load_edges(cfg.out_dir)
    users = _load_user_sentiment(cfg.out_dir)
    records = _load_records(cfg.out_dir)

    partition = comm.detect(graph, weights, method="louvain", seed=cfg.seed)
    significant = comm.filter_significant(partition, cfg.min_community_size, top_k=None)
    top = comm.filter_significant(partition, cfg.min_community_size, top_k=cfg.top_k)

    warnings = list(top.warnings)
    labeling = None
    if len(top.sizes()) == 2:
        labeling = comm.classify_sides(top, users)
        warnings.extend(labeling.warnings)
    else:
        warnings.append("side classification skipped: need exactly 2 retained communities")

    user_sides = labeling.user_sides(top) if labeling else {}
    with open(cfg.out_dir / PARTITION, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "community", "side"])
        for uid in sorted(partition.assignment):
            writer.writerow([
                uid, partition.assignment[uid], user_sides.get(uid, "unlabeled"),
            ])

    validation = None
    if cfg.annotations_path is not None and labeling is not None:
        annotations, _ = load_annotations(cfg.annotations_path)
        validation = comm.validate(labeling, top, annotations)

    kmeans = None
    if cfg.run_kmeans or cfg.kmeans_k is not None:
        features = {
            s.community: (
                s.mean_sent_in if s.mean_sent_in is not None else 0.0,
                s.mean_sent_out if s.mean_sent_out is not None else 0.0,
            )
            for s in comm.community_summaries(significant, users)
        }
        if features:
            merge = comm.kmeans_merge(features, k=cfg.kmeans_k, seed=cfg.seed)
            kmeans = {
                "k": merge.k,
                "sse": merge.sse,
                "silhouette": merge.silhouette,
                "cluster_of": {str(cid): cl for cid, cl in sorted(merge.cluster_of.items())},
                "warnings": merge.warnings,
            }

    fractions = None
    if labeling is not None:
        lf = comm.link_fractions_by_community(graph, labeling.user_sides(top))
        fractions = lf.as_dict()
        with open(cfg.out_dir / LINK_FRACTIONS, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", "side", "n_labeled_out", "frac_yes", "frac_no"])
            for row in lf.rows:
                writer.writerow([row.user_id, row.side, row.n_labeled_out,
                                 row.frac_yes, row.frac_no])

    with open(cfg.out_dir / ACTIVITY, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "community", "tweets_per_user"])
        for day, cid, rate in comm.activity_series(records, top):
            writer.writerow([day, cid, rate])

    summaries = comm.community_summaries(top, users)
    summary = {
        "method": partition.method,
        "seed": partition.seed,
        "q": partition.q,
        "n_communities": len(partition.sizes()),
        "n_significant": len(significant.sizes()),
        "sizes": {str(cid): size for cid, size in partition.sizes().items()},
        "retained": {
            str(s.community): {
                "size": s.size,
                "mean_sent_out": s.mean_sent_out,
                "mean_sent_in": s.mean_sent_in,
                "side": labeling.side_of.get(s.community, "unlabeled") if labeling else "unlabeled",
            }
            for s in summaries
        },
        "validation": None if validation is None else {
            "tp": validation.tp, "fp": validation.fp,
            "tn": validation.tn, "fn": validation.fn,
            "recall_yes": validation.recall_yes,
            "recall_no": validation.recall_no,
            "balanced_accuracy": validation.balanced_accuracy,
        },
        "kmeans": kmeans,
        "link_fractions": fractions,
        "warnings": warnings,
    }
    _write_json(cfg.out_dir / COMMUNITY_SUMMARY, summary)


def stage_nulltest(cfg: RunConfig, which: str) -> None:
    if which == "correlation":
        records = _load_records(cfg.out_dir)
        scores = _load_scores(cfg.out_dir)
        scc = gr.largest_scc(gr.mutual_reduce(gr.build_mention_graph(records)))
        result = nm.sentiment_correlation_test(
            scc, scores, r=cfg.replicates, seed=cfg.seed, threads=cfg.threads)
        payload = result.as_dict(include_replicates=cfg.dump_replicates)
    elif which == "linkclass":
        graph, _ = _load_edges(cfg.out_dir)
        users = _load_user_sentiment(cfg.out_dir)
        classes = {uid: u.polarity_class for uid, u in users.items()}
        results = nm.link_class_fraction_test(
            graph, classes, r=cfg.replicates, seed=cfg.seed, threads=cfg.threads)
        payload = {name: res.as_dict(include_replicates=cfg.dump_replicates)
                   for name, res in sorted(results.items())}
    elif which == "assortativity":
        graph, _ = _load_edges(cfg.out_dir)
        assignment, sides = _load_partition(cfg.out_dir)
        labeled = {u: c for u, c in assignment.items() if sides.get(u) in ("yes", "no")}
        if len(set(labeled.values())) < 2:
            labeled = assignment
        result = nm.assortativity_test(
            graph, labeled, r=cfg.replicates, seed=cfg.seed, threads=cfg.threads)
        payload = result.as_dict(include_replicates=cfg.dump_replicates)
    else:
        raise ConfigError(f"unknown null test {which!r}")
    _write_json(cfg.out_dir / NULL_RESULTS[which], payload)


def stage_cascades(cfg: RunConfig) -> None:
    records = _load_records(cfg.out_dir)
    _, sides = _load_partition(cfg.out_dir)

    if cfg.cascade_strategy == "mention":
        oracle = casc.mention_oracle(records)
    elif cfg.cascade_strategy == "follower":
        if cfg.followers_path is None:
            raise ConfigError("cascade strategy 'follower' needs --followers")
        oracle, _ = load_followers(cfg.followers_path)
    else:
        raise ConfigError(f"unknown cascade strategy {cfg.cascade_strategy!r}")

    buckets = casc.bucket_retweets(records)
    multi = [b for b in buckets if len(b.members) >= 2]
    trees = casc.reconstruct_cascades(multi, oracle, cfg.cascade_strategy)
    report = casc.diffusion_analysis(trees, sides, min_classified=cfg.min_classified)
    scores = [casc.score_cascade(t) for t in trees]
    summary = casc.score_distributions(scores)

    with open(cfg.out_dir / CASCADES_CSV, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cascade_id", "bucket_id", "root_user", "n", "max_depth",
                         "avg_depth", "virality", "seed_side", "prop_yes", "n_classified"])
        for tree, score, diff in zip(trees, scores, report.per_cascade):
            writer.writerow([
                tree.cascade_id, tree.bucket_id, tree.root_user, tree.n,
                score.max_depth, score.avg_depth,
                "" if score.virality is None else score.virality,
                diff.seed_side,
                "" if diff.prop_yes is None else diff.prop_yes,
                diff.n_classified,
            ])

    with open(cfg.out_dir / CASCADE_EDGES, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cascade_id", "child_user", "parent_user", "child_time"])
        for tree in trees:
            times = {u: t for _, u, t in tree.members}
            for child in sorted(tree.parent_of):
                writer.writerow([
                    tree.cascade_id, child, tree.parent_of[child],
                    times[child].isoformat().replace("+00:00", "Z"),
                ])

    never_retweeted = {"total": 0, "yes": 0, "no": 0, "unknown": 0}
    for bucket in buckets:
        if len(bucket.members) != 1:
            continue
        never_retweeted["total"] += 1
        side = sides.get(bucket.members[0][1])
        never_retweeted[side if side in ("yes", "no") else "unknown"] += 1

    payload = report.as_dict()
    payload.update({
        "strategy": cfg.cascade_strategy,
        "n_buckets": len(buckets),
        "n_multi_tweet_buckets": len(multi),
        "never_retweeted": never_retweeted,
    })
    _write_json(cfg.out_dir / DIFFUSION_REPORT, payload)
    _write_json(cfg.out_dir / CASCADE_SCORE_SUMMARY, summary.as_dict())

    with open(cfg.out_dir / CASCADE_SCORE_CCDF, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value", "ccdf"])
        for metric in sorted(summary.ccdf):
            for value, frac in summary.ccdf[metric]:
                writer.writerow([metric, value, frac])


def stage_report(cfg: RunConfig) -> Path:
    def maybe(path: Path):
        return _read_json(path) if path.exists() else None

    ingest_report = maybe(cfg.out_dir / INGEST_REPORT)
    if ingest_report is None:
        raise ConfigError("missing artifact ingest_report.json: run the 'ingest' stage first")

    def null_payload(which: str):
        payload = maybe(cfg.out_dir / NULL_RESULTS[which])
        if payload is None:
            return None
        def strip(entry):
            return {k: v for k, v in entry.items() if k != "replicate_values"}
        if which == "linkclass":
            return {name: strip(entry) for name, entry in payload.items()}
        return strip(payload)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "replicates": cfg.replicates,
        "corpus": ingest_report,
        "graph": maybe(cfg.out_dir / GRAPH_SUMMARY),
        "communities": maybe(cfg.out_dir / COMMUNITY_SUMMARY),
        "null_tests": {
            "correlation": null_payload("correlation"),
            "linkclass": null_payload("linkclass"),
            "assortativity": null_payload("assortativity"),
        },
        "cascades": {
            "diffusion": maybe(cfg.out_dir / DIFFUSION_REPORT),
            "scores": maybe(cfg.out_dir / CASCADE_SCORE_SUMMARY),
        },
    }
    path = cfg.out_dir / SUMMARY
    _write_json(path, summary)
    return path


STAGES = ("ingest", "score", "graph", "communities", "nulltest", "cascades", "report")


def run_stage(cfg: RunConfig, stage: str) -> None:
    if stage == "ingest":
        stage_ingest(cfg)
    elif stage == "score":
        stage_score(cfg)
    elif stage == "graph":
        stage_graph(cfg)
    elif stage == "communities":
        stage_communities(cfg)
    elif stage == "nulltest":
        for which in ("correlation", "linkclass", "assortativity"):
            stage_nulltest(cfg, which)
    elif stage == "cascades":
        stage_cascades(cfg)
    elif stage == "report":
        stage_report(cfg)
    else:
        raise ConfigError(f"unknown stage {stage!r}; stages: {', '.join(STAGES)}")


def run_pipeline(cfg: RunConfig, stage: Optional[str] = None) -> Path:
    """Execute all stages in order (or a single one) and return summary path."""
    if stage is not None:
        run_stage(cfg, stage)
        return cfg.out_dir / SUMMARY
    for s in STAGES:
        run_stage(cfg, s)
    return cfg.out_dir / SUMMARY
