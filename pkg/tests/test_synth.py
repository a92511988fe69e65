import pytest

from echotrace.cascades import attribute_parents, bucket_retweets, mention_oracle
from echotrace.ingest import HashtagTimeFilter, load_lexicon, load_tweets
from echotrace.synth import SynthConfig, generate


def small_config(**overrides):
    params = dict(n_users_per_side=20, p_intra=0.3, p_inter=0.02,
                  n_cascades=15, seed=5)
    params.update(overrides)
    return SynthConfig(**params)


def test_same_seed_is_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate(small_config(), a)
    generate(small_config(), b)
    for name in ("tweets.jsonl", "lexicon.tsv", "annotations.csv",
                 "followers.csv", "truth_sides.csv", "truth_cascades.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_different_seed_differs(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate(small_config(seed=1), a)
    generate(small_config(seed=2), b)
    assert (a / "tweets.jsonl").read_bytes() != (b / "tweets.jsonl").read_bytes()


def test_infeasible_config_rejected():
    with pytest.raises(ValueError, match="infeasible"):
        SynthConfig(n_users_per_side=10, p_intra=0.01, p_inter=0.0).validate()
    with pytest.raises(ValueError):
        SynthConfig(p_intra=1.5).validate()
    with pytest.raises(ValueError):
        SynthConfig(n_users_per_side=0).validate()


def test_cross_side_zero_gives_single_sided_cascades():
    result = generate(small_config(cross_side_retweet_prob=0.0, n_cascades=25))
    assert result.cascades
    for cascade in result.cascades:
        member_sides = {result.sides[u] for u in cascade.members}
        assert len(member_sides) == 1


def test_homophily_in_expectation_over_seeds():
    total_same = 0
    total = 0
    for seed in range(20):
        result = generate(SynthConfig(n_users_per_side=50, p_intra=0.2,
                                      p_inter=0.01, n_cascades=0, seed=seed))
        for record in result.records:
            for target in record.mentions:
                total += 1
                total_same += result.sides[record.user_id] == result.sides[target]
    assert total_same / total > 0.85


def test_archive_is_ingest_compatible(tmp_path):
    result = generate(small_config(), tmp_path)
    fil = HashtagTimeFilter.tracking(["ref2030"])
    records, report = load_tweets(result.paths["tweets"], fil, strict=True)
    assert report.kept == len(result.records)
    assert report.filtered == report.skipped == 0
    lexicon, _ = load_lexicon(result.paths["lexicon"], strict=True)
    assert set(lexicon) == {"hopeful", "bright", "dismal", "grim"}


def test_planted_cascades_recovered_exactly(tmp_path):
    result = generate(small_config(n_cascades=30, branching=0.6), tmp_path)
    records, _ = load_tweets(result.paths["tweets"], strict=True)
    oracle = mention_oracle(records)
    buckets = bucket_retweets(records)

    by_seed_tweet = {c.seed_tweet_id: c for c in result.cascades}
    matched = 0
    for bucket in buckets:
        truth = by_seed_tweet.get(bucket.members[0][0])
        if truth is None:
            continue  # a mention tweet's singleton bucket
        matched += 1
        trees = attribute_parents(bucket, oracle)
        assert len(trees) == 1, "planted buckets reconstruct as a single cascade"
        tree = trees[0]
        assert tree.users() == truth.members
        assert tree.parent_of == truth.parent_of
        assert tree.root_user == truth.members[0]
    assert matched == len(result.cascades)


def test_every_planted_child_mentions_its_parent():
    result = generate(small_config(n_cascades=30, branching=0.6))
    oracle = mention_oracle(result.records)
    for cascade in result.cascades:
        for child, parent in cascade.parent_of.items():
            assert parent in oracle[child]


def test_truth_files_written(tmp_path):
    result = generate(small_config(), tmp_path)
    sides_lines = (tmp_path / "truth_sides.csv").read_text().strip().splitlines()
    assert sides_lines[0] == "user_id,side"
    assert len(sides_lines) == 1 + 2 * small_config().n_users_per_side
    cascade_lines = (tmp_path / "truth_cascades.csv").read_text().strip().splitlines()
    assert cascade_lines[0] == "cascade,position,child,parent"
    n_members = sum(len(c.members) for c in result.cascades)
    assert len(cascade_lines) == 1 + n_members
