"""Skewness-driven model selection and dominant-topic analytics.

The selection heuristic scores a k-topic model by W_k, the number of
documents whose topic distribution has non-positive or undefined skewness
(Pearson second coefficient, population standard deviation). A positively
skewed distribution means at least one topic clearly dominates the
document; scanning k upward and keeping the k with minimal W_k picks the
coarsest model that leaves the fewest documents topicless.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from .corpus import Corpus
from .ingest import Dataset
from .lda import LdaConfig, TopicModel, fit

_SUM_TOLERANCE = 1e-6


def skewness(dist: Sequence[float]) -> Optional[float]:
    """Pearson second-coefficient skewness, 3*(mean - median)/sigma.

    ``sigma`` is the population standard deviation. Returns None (undefined)
    for constant distributions, where sigma is zero; callers treat that as
    "no topic stands out".
    """
    values = np.asarray(dist, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("skewness needs a vector of at least 2 entries")
    if abs(float(values.sum()) - 1.0) > _SUM_TOLERANCE:
        raise ValueError("entries must sum to 1")
    # sigma is zero exactly when the vector is constant; testing that
    # directly avoids rounding noise in the mean turning an exactly uniform
    # distribution into a huge spurious skew.
    if bool(np.all(values == values[0])):
        return None
    mean = float(values.mean())
    sigma = float(np.sqrt(np.mean((values - mean) ** 2)))
    if sigma == 0.0:
        return None
    median = float(np.median(values))
    return 3.0 * (mean - median) / sigma


@dataclass(frozen=True)
class SkewnessReport:
    k: int
    per_doc_skewness: tuple[Optional[float], ...]
    w_k: int


def count_nonpositive(model: TopicModel) -> SkewnessReport:
    """W_k: documents whose skewness is <= 0 or undefined."""
    per_doc = tuple(skewness(row) for row in model.theta)
    w_k = sum(1 for s in per_doc if s is None or s <= 0)
    return SkewnessReport(k=model.k, per_doc_skewness=per_doc, w_k=w_k)


@dataclass(frozen=True)
class SelectKResult:
    k: int
    model: TopicModel
    reports: tuple[SkewnessReport, ...]


def _fit_and_report(corpus: Corpus, base: LdaConfig, k: int
                    ) -> tuple[TopicModel, SkewnessReport]:
    model = fit(corpus, replace(base, k=k))
    return model, count_nonpositive(model)


def select_k(corpus: Corpus, k_min: int, k_max: int, base: LdaConfig,
             patience: Optional[int] = None, workers: int = 1,
             progress=None) -> SelectKResult:
    """Scan k in [k_min, k_max], fit a model per k, keep the minimal-W_k one.

    Every fit reuses the seed policy of ``base`` so only k varies. Ties go
    to the smallest k. With ``patience`` set, the scan stops early after
    that many consecutive k values without improvement; ``workers`` > 1
    fits the models in parallel (only when patience is off, since early
    stopping is inherently sequential).
    """
    if k_min < 2:
        raise ValueError("k_min must be >= 2")
    if k_max < k_min:
        raise ValueError("k_max must be >= k_min")
    if patience is not None and patience < 1:
        raise ValueError("patience must be >= 1 when set")

    ks = list(range(k_min, k_max + 1))
    reports: list[SkewnessReport] = []
    best: tuple[int, TopicModel] | None = None
    best_w = None

    if workers > 1 and patience is None and len(ks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(ks))) as pool:
            fitted = list(pool.map(_fit_and_report, [corpus] * len(ks),
                                   [base] * len(ks), ks))
        for k, (model, report) in zip(ks, fitted):
            reports.append(report)
            if progress is not None:
                progress(k, report.w_k)
            if best_w is None or report.w_k < best_w:
                best_w, best = report.w_k, (k, model)
    else:
        stale = 0
        for k in ks:
            model, report = _fit_and_report(corpus, base, k)
            reports.append(report)
            if progress is not None:
                progress(k, report.w_k)
            if best_w is None or report.w_k < best_w:
                best_w, best = report.w_k, (k, model)
                stale = 0
            else:
                stale += 1
                if patience is not None and stale >= patience:
                    break

    assert best is not None
    return SelectKResult(k=best[0], model=best[1], reports=tuple(reports))


@dataclass(frozen=True)
class DominantTopicAssignment:
    """Per-post dominant topic sets under the mu + sigma threshold rule.

    Topic i is dominant for a post when its probability strictly exceeds
    mu_i + sigma_i, computed over that topic's probabilities across all
    posts (population sigma). A post may have any number of dominant
    topics, including none.
    """

    doc_ids: tuple[str, ...]
    thresholds: tuple[tuple[float, float], ...]   # per topic (mu, sigma)
    dominant: tuple[frozenset[int], ...]
    topic_presence: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.thresholds)

    def by_doc(self) -> dict[str, frozenset[int]]:
        return dict(zip(self.doc_ids, self.dominant))


def dominant_topics(model: TopicModel) -> DominantTopicAssignment:
    theta = model.theta
    mu = theta.mean(axis=0)
    sigma = np.sqrt(np.mean((theta - mu) ** 2, axis=0))
    cutoff = mu + sigma
    dominant = tuple(
        frozenset(int(t) for t in np.flatnonzero(row > cutoff))
        for row in theta
    )
    n_docs = len(dominant)
    presence = tuple(
        sum(1 for s in dominant if t in s) / n_docs for t in range(model.k))
    return DominantTopicAssignment(
        doc_ids=model.doc_ids,
        thresholds=tuple((float(m), float(s)) for m, s in zip(mu, sigma)),
        dominant=dominant,
        topic_presence=presence,
    )


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Symmetric pair counts; the diagonal holds sole-dominant post counts."""

    counts: np.ndarray

    @property
    def k(self) -> int:
        return self.counts.shape[0]


def cooccurrence(assignment: DominantTopicAssignment) -> CooccurrenceMatrix:
    k = assignment.k
    counts = np.zeros((k, k), dtype=np.int64)
    for topics in assignment.dominant:
        if len(topics) == 1:
            (t,) = topics
            counts[t, t] += 1
            continue
        ordered = sorted(topics)
        for a in range(len(ordered)):
            for b in range(a + 1, len(ordered)):
                counts[ordered[a], ordered[b]] += 1
                counts[ordered[b], ordered[a]] += 1
    counts.setflags(write=False)
    return CooccurrenceMatrix(counts=counts)


def monthly_distribution(assignment: DominantTopicAssignment,
                         dataset: Dataset) -> dict[tuple[int, str], int]:
    """Posts per (topic, calendar month), UTC; multi-dominant posts count once
    per dominant topic."""
    counts: dict[tuple[int, str], int] = {}
    for doc_id, topics in zip(assignment.doc_ids, assignment.dominant):
        post = dataset.post_by_id.get(doc_id)
        if post is None:
            raise ValueError(f"post {doc_id!r} not present in dataset")
        month = datetime.fromtimestamp(post.created_at, tz=timezone.utc).strftime("%Y-%m")
        for t in topics:
            key = (t, month)
            counts[key] = counts.get(key, 0) + 1
    return counts
