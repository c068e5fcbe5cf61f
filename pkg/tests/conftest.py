from __future__ import annotations

import json
from collections import Counter

import pytest

from forumpulse.corpus import Corpus, Vocabulary
from forumpulse.ingest import parse_dump


def corpus_from_counts(docs: list[dict[str, int]], doc_ids=None) -> Corpus:
    """Corpus built straight from token->count maps, bypassing tokenization."""
    terms: list[str] = []
    for doc in docs:
        for term in doc:
            if term not in terms:
                terms.append(term)
    index = {t: i for i, t in enumerate(terms)}
    df = Counter()
    for doc in docs:
        df.update(doc.keys())
    if doc_ids is None:
        doc_ids = [f"d{i:03d}" for i in range(len(docs))]
    documents = tuple(
        tuple(sorted((index[t], n) for t, n in doc.items())) for doc in docs)
    return Corpus(
        documents=documents,
        doc_ids=tuple(doc_ids),
        vocabulary=Vocabulary(terms=tuple(terms),
                              document_frequency=tuple(df[t] for t in terms)),
        total_tokens=sum(n for doc in docs for n in doc.values()),
        excluded_doc_ids=(),
    )


def post_record(pid: str, author: str = "alice", created: int = 1000,
                score: int = 1, title: str = "", selftext: str = "") -> dict:
    return {"id": pid, "author": author, "created_utc": created, "score": score,
            "title": title, "selftext": selftext}


def comment_record(cid: str, parent: str, root: str, author: str = "bob",
                   created: int = 2000, score: int = 1, body: str = "") -> dict:
    """parent is a prefixed reference ("t3_p1" / "t1_c1"), root a bare post id."""
    return {"id": cid, "author": author, "created_utc": created, "score": score,
            "body": body, "parent_id": parent, "link_id": "t3_" + root}


def jsonl(records) -> list[str]:
    return [json.dumps(r) for r in records]


def make_dataset(posts, comments, window=None):
    return parse_dump(jsonl(posts), jsonl(comments), window)


@pytest.fixture
def two_posts_three_comments():
    """2 posts + 3 comments, one comment replying to another comment."""
    posts = [
        post_record("p1", author="alice", created=100),
        post_record("p2", author="bob", created=200),
    ]
    comments = [
        comment_record("c1", "t3_p1", "p1", author="bob", created=150),
        comment_record("c2", "t1_c1", "p1", author="carol", created=180),
        comment_record("c3", "t3_p2", "p2", author="alice", created=260),
    ]
    return make_dataset(posts, comments)
