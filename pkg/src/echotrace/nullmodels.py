"""Monte Carlo randomization tests: attribute shuffles on a fixed topology.

Three tests: the in/out sentiment correlation null (connection scores
resampled with replacement from the global pool), the link-class fraction
null (user polarity labels resampled from their observed distribution), and
the assortativity null (community memberships resampled likewise).

Every replicate draws from its own RNG stream derived from (seed, replicate
index), so results are bit-identical whether replicates run serially or on a
thread pool.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .graph import MentionGraph

DEFAULT_REPLICATES = 1000


@dataclass
class NullTestResult:
    name: str
    observed: float
    replicates: list[float]
    q025: float
    q50: float
    q975: float
    verdict: str  # outside | inside
    seed: int
    degenerate_replicates: int = 0

    @property
    def r(self) -> int:
        return len(self.replicates)

    def as_dict(self, include_replicates: bool = False) -> dict:
        out = {
            "test": self.name,
            "observed": self.observed,
            "q2.5": self.q025,
            "q50": self.q50,
            "q97.5": self.q975,
            "verdict": self.verdict,
            "replicates": self.r,
            "seed": self.seed,
            "degenerate_replicates": self.degenerate_replicates,
        }
        if include_replicates:
            out["replicate_values"] = self.replicates
        return out


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one replicate, stable under any schedule."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _run_replicates(
    fn: Callable[[np.random.Generator], float | np.ndarray],
    r: int,
    seed: int,
    threads: int = 1,
) -> list:
    def task(i: int):
        return fn(replicate_rng(seed, i))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(task, range(r)))
    return [task(i) for i in range(r)]


def _finish(name: str, observed: float, reps: np.ndarray, seed: int, degenerate: int = 0) -> NullTestResult:
    q025, q50, q975 = np.quantile(reps, [0.025, 0.5, 0.975], method="linear")
    verdict = "outside" if (observed < q025 or observed > q975) else "inside"
    return NullTestResult(
        name=name,
        observed=float(observed),
        replicates=[float(v) for v in reps],
        q025=float(q025),
        q50=float(q50),
        q975=float(q975),
        verdict=verdict,
        seed=seed,
        degenerate_replicates=degenerate,
    )


def _pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0:
        return None
    return float((xc * yc).sum() / denom)


def sentiment_correlation_test(
    graph: MentionGraph,
    scores: Mapping[str, float],
    r: int = DEFAULT_REPLICATES,
    seed: int = 0,
    threads: int = 1,
) -> NullTestResult:
    """Null for the Pearson correlation between a user's mean sentiment
    received and sent.

    The observed statistic averages each user's sent tweets once per tweet
    and received mentions once per mention. Replicates resample a score for
    every connection (edge tweet instance) from the global score pool with
    replacement, keeping the topology fixed, then re-average per user.
    """
    nodes = sorted(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    n_users = len(nodes)

    conn_out = []
    conn_in = []
    conn_score = []
    tweet_sender: dict[str, int] = {}
    tweet_score: dict[str, float] = {}
    for (a, b) in sorted(graph.edges):
        edge = graph.edges[(a, b)]
        for t in edge.tweet_ids:
            s = scores.get(t)
            if s is None:
                continue
            conn_out.append(index[a])
            conn_in.append(index[b])
            conn_score.append(s)
            tweet_sender[t] = index[a]
            tweet_score[t] = s
    if not conn_score:
        raise ValueError("no scored connections on the graph")

    conn_out = np.array(conn_out, dtype=np.intp)
    conn_in = np.array(conn_in, dtype=np.intp)
    pool = np.array(conn_score, dtype=float)
    n_conn = len(pool)

    out_conn_counts = np.bincount(conn_out, minlength=n_users)
    in_conn_counts = np.bincount(conn_in, minlength=n_users)
    mask = (out_conn_counts > 0) & (in_conn_counts > 0)
    if int(mask.sum()) < 3:
        raise ValueError("fewer than 3 users with both sentiment means defined")

    out_tweet_sum = np.zeros(n_users)
    out_tweet_n = np.zeros(n_users)
    for t, sender in tweet_sender.items():
        out_tweet_sum[sender] += tweet_score[t]
        out_tweet_n[sender] += 1
    obs_out = out_tweet_sum[mask] / out_tweet_n[mask]
    obs_in = (np.bincount(conn_in, weights=pool, minlength=n_users)[mask]
              / in_conn_counts[mask])
    observed = _pearson(obs_out, obs_in)
    if observed is None:
        raise ValueError("observed correlation undefined (zero variance)")

    def one(rng: np.random.Generator) -> float | None:
        sampled = pool[rng.integers(0, n_conn, size=n_conn)]
        rand_out = np.bincount(conn_out, weights=sampled, minlength=n_users)[mask] / out_conn_counts[mask]
        rand_in = np.bincount(conn_in, weights=sampled, minlength=n_users)[mask] / in_conn_counts[mask]
        return _pearson(rand_out, rand_in)

    raw = _run_replicates(one, r, seed, threads)
    degenerate = sum(1 for v in raw if v is None)
    reps = np.array([0.0 if v is None else v for v in raw])
    return _finish("sentiment_correlation", observed, reps, seed, degenerate)


_CLASS_CODES = {"positive": 0, "negative": 1, "unknown": 2}
_CODE_LETTERS = "pnu"

LINK_CLASS_NAMES = [f"f{a}{b}" for a in _CODE_LETTERS for b in _CODE_LETTERS]


def link_class_fraction_test(
    graph: MentionGraph,
    classes: Mapping[str, str],
    r: int = DEFAULT_REPLICATES,
    seed: int = 0,
    threads: int = 1,
) -> dict[str, NullTestResult]:
    """Nulls for the nine directed link fractions between polarity classes.

    Users missing from `classes` count as unknown. Each replicate resamples
    every user's class from the observed class multiset with replacement and
    recomputes all nine fractions jointly.
    """
    nodes = sorted(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    labels = np.array(
        [_CLASS_CODES.get(classes.get(n, "unknown"), 2) for n in nodes], dtype=np.intp
    )
    n_users = len(nodes)
    if not graph.edges:
        raise ValueError("graph has no edges")
    src = np.array([index[a] for a, _ in sorted(graph.edges)], dtype=np.intp)
    dst = np.array([index[b] for _, b in sorted(graph.edges)], dtype=np.intp)
    n_edges = len(src)

    def fractions(lab: np.ndarray) -> np.ndarray:
        return np.bincount(3 * lab[src] + lab[dst], minlength=9) / n_edges

    observed = fractions(labels)

    def one(rng: np.random.Generator) -> np.ndarray:
        resampled = labels[rng.integers(0, n_users, size=n_users)]
        return fractions(resampled)

    reps = np.array(_run_replicates(one, r, seed, threads))  # shape (r, 9)
    return {
        name: _finish(name, float(observed[i]), reps[:, i], seed)
        for i, name in enumerate(LINK_CLASS_NAMES)
    }


def mixing_counts(
    src_groups: np.ndarray, dst_groups: np.ndarray, n_groups: int
) -> np.ndarray:
    """counts[i, j]: directed edges running from group i to group j."""
    counts = np.bincount(n_groups * src_groups + dst_groups, minlength=n_groups * n_groups)
    return counts.reshape(n_groups, n_groups)


def assortativity_r(mixing: np.ndarray) -> Optional[float]:
    """r = (sum_i e_ii - sum_i a_i b_i) / (1 - sum_i a_i b_i).

    e is the mixing matrix normalized to total 1, a its row sums (edge
    origins), b its column sums (destinations). Accepts raw counts or
    proportions (r is scale-invariant); integer counts are reduced in exact
    integer arithmetic, so rational results round only once. Returns None
    when the denominator vanishes (all mass in one group).
    """
    m = np.asarray(mixing)
    total = m.sum()
    rc = (m.sum(axis=1) * m.sum(axis=0)).sum()
    num = total * np.trace(m) - rc
    den = total * total - rc
    if den == 0:
        return None
    return float(num / den)


def assortativity_test(
    graph: MentionGraph,
    assignment: Mapping[str, int],
    r: int = DEFAULT_REPLICATES,
    seed: int = 0,
    threads: int = 1,
) -> NullTestResult:
    """Null for the assortative mixing index of a community assignment.

    Only edges with both endpoints assigned enter the mixing matrix. Each
    replicate resamples every user's membership from the observed membership
    multiset with replacement, topology fixed.
    """
    nodes = sorted(n for n in graph.nodes if n in assignment)
    if not nodes:
        raise ValueError("no graph nodes carry a community assignment")
    index = {n: i for i, n in enumerate(nodes)}
    groups = sorted({assignment[n] for n in nodes})
    group_index = {g: i for i, g in enumerate(groups)}
    n_groups = len(groups)
    membership = np.array([group_index[assignment[n]] for n in nodes], dtype=np.intp)
    n_users = len(nodes)

    pairs = [(a, b) for (a, b) in sorted(graph.edges) if a in index and b in index]
    if not pairs:
        raise ValueError("no edges between assigned nodes")
    src = np.array([index[a] for a, _ in pairs], dtype=np.intp)
    dst = np.array([index[b] for _, b in pairs], dtype=np.intp)

    observed = assortativity_r(mixing_counts(membership[src], membership[dst], n_groups))
    if observed is None:
        raise ValueError("assortativity undefined: all edges in a single community")

    def one(rng: np.random.Generator) -> float | None:
        resampled = membership[rng.integers(0, n_users, size=n_users)]
        return assortativity_r(mixing_counts(resampled[src], resampled[dst], n_groups))

    raw = _run_replicates(one, r, seed, threads)
    degenerate = sum(1 for v in raw if v is None)
    reps = np.array([0.0 if v is None else v for v in raw])
    return _finish("assortativity", observed, reps, seed, degenerate)
