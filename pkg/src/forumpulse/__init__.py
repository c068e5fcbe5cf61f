"""forumpulse: topic, lexicon and interaction analytics for discussion dumps."""

__version__ = "0.1.0"

from .errors import DataError, ForumPulseError, StageError, UsageError
from .ingest import (AuthorCategory, AuthorRecord, Comment, Dataset, Post,
                     author_activity_table, parse_dump, response_time,
                     score_relations)
from .corpus import Corpus, Vocabulary, build_corpus, merge_phrases, tokenize
from .lda import LdaConfig, TopicModel, fit, log_likelihood, top_words
from .topics import (CooccurrenceMatrix, DominantTopicAssignment,
                     SkewnessReport, cooccurrence, count_nonpositive,
                     dominant_topics, monthly_distribution, select_k, skewness)
from .lexicon import (CategoryMatrix, Lexicon, PcaResult, categorize,
                      demo_lexicon, load_lexicon, pca, topicwise_profile)
from .interaction import (InteractionGraph, UserMetrics, build_graph,
                          contribution_and_influence, compute_user_metrics,
                          reach, top_influencers_subgraph, topic_spread,
                          user_classes)
from .fixture import generate_fixture
from .pipeline import run_pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
