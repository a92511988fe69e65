"""Command-line interface.

Global flags live on the group and apply to every subcommand:

    echotrace --out runs/demo --seed 7 --replicates 500 run \\
        --tweets tweets.jsonl --lexicon afinn.tsv

Exit codes: 0 success, 2 configuration/validation error, 3 fatal data error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import ConfigError, DataError
from .ingest import parse_timestamp
from .pipeline import STAGES, RunConfig, run_pipeline, run_stage, stage_nulltest
from .synth import SynthConfig, generate


def _config_from_ctx(ctx: click.Context, **overrides) -> RunConfig:
    base = dict(ctx.obj)
    base.update({k: v for k, v in overrides.items() if v is not None})
    hashtags = base.pop("hashtags", ()) or ()
    if isinstance(hashtags, str):
        hashtags = tuple(t.strip() for t in hashtags.split(",") if t.strip())
    start = base.pop("start", None)
    end = base.pop("end", None)
    return RunConfig(
        hashtags=tuple(hashtags),
        start=parse_timestamp(start) if isinstance(start, str) else start,
        end=parse_timestamp(end) if isinstance(end, str) else end,
        **base,
    )


@click.group()
@click.option("--seed", default=0, show_default=True, help="Master seed for every seeded step.")
@click.option("--replicates", "-R", default=1000, show_default=True,
              help="Monte Carlo replicates per null test.")
@click.option("--strict", is_flag=True, help="Treat damaged input rows as fatal.")
@click.option("--out", type=click.Path(path_type=Path), default=Path("echotrace-out"),
              show_default=True, help="Artifact directory.")
@click.option("--threads", default=1, show_default=True,
              help="Worker cap for replicate evaluation; never changes results.")
@click.pass_context
def main(ctx, seed, replicates, strict, out, threads):
    """Polarised-discussion analysis: mention networks, sentiment-weighted
    communities, randomization nulls, and retweet cascades."""
    ctx.obj = {
        "seed": seed,
        "replicates": replicates,
        "strict": strict,
        "out_dir": out,
        "threads": threads,
    }


def _run(fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(3)


@main.command()
@click.option("--tweets", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--hashtags", default="", help="Comma-separated tracked hashtags (empty: keep all).")
@click.option("--start", default=None, help="Window start, ISO-8601.")
@click.option("--end", default=None, help="Window end, ISO-8601.")
@click.pass_context
def ingest(ctx, tweets, hashtags, start, end):
    """Parse and filter the tweet archive into records.jsonl."""
    cfg = _config_from_ctx(ctx, tweets_path=tweets, hashtags=hashtags, start=start, end=end)
    _run(run_stage, cfg, "ingest")


@main.command()
@click.option("--lexicon", type=click.Path(exists=True, path_type=Path), required=True)
@click.pass_context
def score(ctx, lexicon):
    """Score each tweet with the lexicon into raw_scores.csv."""
    cfg = _config_from_ctx(ctx, lexicon_path=lexicon)
    _run(run_stage, cfg, "score")


@main.command()
@click.pass_context
def graph(ctx):
    """Build the mutual-SCC mention graph, rescale scores, compute stats."""
    cfg = _config_from_ctx(ctx)
    _run(run_stage, cfg, "graph")


@main.command()
@click.option("--min-size", default=20, show_default=True, help="Significant community floor.")
@click.option("--top-k", default=2, show_default=True, help="Communities kept for side labels.")
@click.option("--annotations", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--kmeans", "run_kmeans", is_flag=True, help="Cluster communities by k-means (auto k).")
@click.option("--kmeans-k", type=int, default=None, help="Fixed k for the k-means merge.")
@click.pass_context
def communities(ctx, min_size, top_k, annotations, run_kmeans, kmeans_k):
    """Detect, label, and validate sentiment-weighted communities."""
    cfg = _config_from_ctx(
        ctx, min_community_size=min_size, top_k=top_k,
        annotations_path=annotations, run_kmeans=run_kmeans, kmeans_k=kmeans_k,
    )
    _run(run_stage, cfg, "communities")


@main.command()
@click.argument("which", type=click.Choice(["correlation", "linkclass", "assortativity"]))
@click.option("--dump-replicates", is_flag=True, help="Include replicate values in the JSON.")
@click.pass_context
def nulltest(ctx, which, dump_replicates):
    """Run one Monte Carlo null test."""
    cfg = _config_from_ctx(ctx, dump_replicates=dump_replicates)
    _run(stage_nulltest, cfg, which)


@main.command()
@click.option("--strategy", type=click.Choice(["mention", "follower"]), default="mention",
              show_default=True)
@click.option("--followers", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--min-classified", default=10, show_default=True,
              help="Classified-user floor for the proportion histogram.")
@click.pass_context
def cascades(ctx, strategy, followers, min_classified):
    """Reconstruct retweet cascades, score them, analyse diffusion."""
    cfg = _config_from_ctx(
        ctx, cascade_strategy=strategy, followers_path=followers,
        min_classified=min_classified,
    )
    _run(run_stage, cfg, "cascades")


@main.command()
@click.pass_context
def report(ctx):
    """Fold stage summaries into summary.json."""
    cfg = _config_from_ctx(ctx)
    _run(run_stage, cfg, "report")


@main.command()
@click.option("--users-per-side", default=50, show_default=True)
@click.option("--p-in", default=0.2, show_default=True, help="Within-side mutual mention prob.")
@click.option("--p-out", default=0.01, show_default=True, help="Cross-side mutual mention prob.")
@click.option("--lean", default=0.3, show_default=True, help="Side word-sign lean in [0, 1].")
@click.option("--cascades", "n_cascades", default=40, show_default=True)
@click.option("--branching", default=0.45, show_default=True)
@click.option("--cross-prob", default=0.02, show_default=True,
              help="Probability a planted retweet crosses sides.")
@click.pass_context
def synth(ctx, users_per_side, p_in, p_out, lean, n_cascades, branching, cross_prob):
    """Generate a synthetic polarized corpus with ground truth files."""
    cfg = _config_from_ctx(ctx)
    config = SynthConfig(
        n_users_per_side=users_per_side, p_intra=p_in, p_inter=p_out,
        sentiment_lean=lean, n_cascades=n_cascades, branching=branching,
        cross_side_retweet_prob=cross_prob, seed=cfg.seed,
    )
    def _go():
        try:
            result = generate(config, cfg.out_dir)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for name in sorted(result.paths):
            click.echo(f"{name}: {result.paths[name]}")
    _run(_go)


@main.command()
@click.option("--tweets", type=click.Path(path_type=Path), default=None)
@click.option("--lexicon", type=click.Path(path_type=Path), default=None)
@click.option("--annotations", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--followers", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--hashtags", default="", help="Comma-separated tracked hashtags.")
@click.option("--start", default=None)
@click.option("--end", default=None)
@click.option("--min-size", default=20, show_default=True)
@click.option("--top-k", default=2, show_default=True)
@click.option("--strategy", type=click.Choice(["mention", "follower"]), default="mention",
              show_default=True)
@click.option("--min-classified", default=10, show_default=True)
@click.option("--stage", type=click.Choice(STAGES), default=None,
              help="Run a single stage instead of the whole pipeline.")
@click.pass_context
def run(ctx, tweets, lexicon, annotations, followers, hashtags, start, end,
        min_size, top_k, strategy, min_classified, stage):
    """Run the full pipeline: ingest through report."""
    if stage in (None, "ingest"):
        if tweets is None:
            raise click.UsageError("--tweets is required")
        if not tweets.exists():
            raise click.UsageError(f"--tweets path does not exist: {tweets}")
    if stage in (None, "score"):
        if lexicon is None:
            raise click.UsageError("--lexicon is required")
        if not lexicon.exists():
            raise click.UsageError(f"--lexicon path does not exist: {lexicon}")
    cfg = _config_from_ctx(
        ctx, tweets_path=tweets, lexicon_path=lexicon,
        annotations_path=annotations, followers_path=followers,
        hashtags=hashtags, start=start, end=end,
        min_community_size=min_size, top_k=top_k,
        cascade_strategy=strategy, min_classified=min_classified,
    )
    def _go():
        path = run_pipeline(cfg, stage=stage)
        if stage is None or stage == "report":
            click.echo(f"summary: {path}")
    _run(_go)


if __name__ == "__main__":
    main()
