"""echotrace: polarised-discussion analysis over mention networks and retweet cascades."""

from .cascades import (
    CascadeScores,
    CascadeTree,
    RetweetBucket,
    attribute_parents,
    bucket_retweets,
    diffusion_analysis,
    score_cascade,
    score_distributions,
)
from .community import (
    CommunityPartition,
    SideLabeling,
    classify_sides,
    detect,
    filter_significant,
    kmeans_merge,
    link_fractions_by_community,
    louvain,
    modularity,
    validate,
)
from .graph import (
    GraphStats,
    MentionGraph,
    build_mention_graph,
    compute_stats,
    largest_scc,
    mutual_reduce,
)
from .ingest import (
    HashtagTimeFilter,
    TweetRecord,
    load_annotations,
    load_followers,
    load_lexicon,
    load_tweets,
)
from .nullmodels import (
    NullTestResult,
    assortativity_test,
    link_class_fraction_test,
    sentiment_correlation_test,
)
from .sentiment import (
    TweetSentiment,
    UserSentiment,
    aggregate_users,
    rescale_corpus,
    score_tweet,
    tokenize,
)
from .synth import SynthConfig, generate

__version__ = "0.1.0"
