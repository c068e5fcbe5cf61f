"""End-to-end batch pipeline with a reproducible run manifest.

A run is described by one flat JSON config (keys scoped by stage prefix,
e.g. ``corpus.min_df``); command-line overrides win over the file. Stages
execute in a fixed order, each reading only files written by earlier
stages and appending its input/output digests to ``manifest.json``. A
stage whose parameters, input digests and recorded outputs all match the
manifest is skipped, which makes interrupted or repeated runs cheap and
every artifact reproducible from the manifest plus the original dumps.

All randomness flows from the top-level ``seed``: the topic-model stage
derives its sampler seed as SHA-256(seed, "lda"), and nothing else draws
random numbers.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .corpus import build_corpus, load_corpus, save_corpus
from .errors import DataError, StageError, UsageError
from .fileio import read_json, sha256_file, write_csv, write_json
from .ingest import (author_activity_table, load_dataset, parse_dump,
                     response_time_table, save_dataset, score_relations)
from .interaction import (build_graph, compute_user_metrics,
                          contribution_and_influence, dot_text, graphml_text,
                          spread_influence_rows, top_influencers_subgraph,
                          user_classes)
from .lda import LdaConfig, fit, load_model, save_model, top_words
from .lexicon import categorize, demo_lexicon, load_lexicon, pca, topicwise_profile
from .topics import (cooccurrence, count_nonpositive, dominant_topics,
                     monthly_distribution, select_k)

_MANIFEST_FORMAT = "forumpulse-manifest-v1"

CONFIG_DEFAULTS: dict[str, Any] = {
    "posts": None,
    "comments": None,
    "from": None,
    "to": None,
    "out_dir": "artifacts",
    "seed": 0,
    "threads": None,
    "corpus.min_df": 5,
    "corpus.max_df_fraction": 0.5,
    "corpus.phrase_min_count": 20,
    "lda.k": None,
    "lda.k_min": 2,
    "lda.k_max": 10,
    "lda.alpha": None,
    "lda.beta": 0.01,
    "lda.iterations": 1000,
    "lda.burn_in": 500,
    "lda.patience": None,
    "lexicon.path": None,
    "lexicon.components": 15,
    "graph.top_k": 10,
}


def resolve_threads(flag: Optional[int] = None,
                    config_value: Optional[int] = None) -> int:
    """Worker cap: CLI flag beats the config file beats FORUM_PULSE_THREADS."""
    for value in (flag, config_value, os.environ.get("FORUM_PULSE_THREADS")):
        if value is not None:
            n = int(value)
            if n < 1:
                raise UsageError("thread count must be >= 1")
            return n
    return 1


def stage_seed(seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{seed}\x1f{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def load_config(path: Path, overrides: Optional[Mapping[str, str]] = None
                ) -> dict[str, Any]:
    """Read a flat config file, apply overrides, resolve relative paths."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise UsageError(f"{path}: config must be a flat JSON object")

    config = dict(CONFIG_DEFAULTS)
    for key, value in raw.items():
        if key not in CONFIG_DEFAULTS:
            raise UsageError(f"{path}: unknown config key {key!r}")
        config[key] = value
    for key, text in (overrides or {}).items():
        if key not in CONFIG_DEFAULTS:
            raise UsageError(f"unknown config key {key!r}")
        try:
            config[key] = json.loads(text)
        except json.JSONDecodeError:
            config[key] = text

    if not config["posts"] or not config["comments"]:
        raise UsageError("config must name 'posts' and 'comments' dump files")

    base = path.parent
    for key in ("posts", "comments", "out_dir", "lexicon.path"):
        if config[key] is not None:
            config[key] = str((base / str(config[key])).resolve())
    return config


def _params_digest(params: Mapping[str, Any]) -> str:
    return hashlib.sha256(
        json.dumps(params, sort_keys=True).encode("utf-8")).hexdigest()


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunResult:
    out_dir: Path
    stage_status: dict[str, str]   # stage -> "ran" | "skipped"

    @property
    def all_skipped(self) -> bool:
        return all(s == "skipped" for s in self.stage_status.values())


class _Runner:
    def __init__(self, out_dir: Path, config: Mapping[str, Any], echo):
        self.out_dir = out_dir
        self.echo = echo
        self.manifest_path = out_dir / "manifest.json"
        if self.manifest_path.exists():
            self.manifest = read_json(self.manifest_path)
            if self.manifest.get("format") != _MANIFEST_FORMAT:
                raise DataError(f"{self.manifest_path}: unrecognized manifest format")
        else:
            self.manifest = {"format": _MANIFEST_FORMAT, "stages": {}}
        self.manifest["tool_version"] = __version__
        self.manifest["seed"] = config["seed"]
        self.manifest["config"] = dict(config)
        self.manifest["config_sha256"] = _params_digest(config)
        self.status: dict[str, str] = {}

    def _rel(self, path: Path) -> str:
        path = Path(path)
        try:
            return str(path.relative_to(self.out_dir))
        except ValueError:
            return str(path)

    def run(self, name: str, params: Mapping[str, Any],
            inputs: Sequence[Path], outputs: Sequence[Path],
            action: Callable[[], None]) -> None:
        for p in inputs:
            if not Path(p).exists():
                raise StageError(name, DataError(f"missing input file: {p}"))
        digest = _params_digest(params)
        input_digests = {self._rel(p): sha256_file(p) for p in inputs}

        prior = self.manifest["stages"].get(name)
        if (prior and prior.get("params_sha256") == digest
                and prior.get("inputs") == input_digests
                and all(Path(self.out_dir / rel).exists()
                        and sha256_file(self.out_dir / rel) == want
                        for rel, want in prior.get("outputs", {}).items())
                and set(prior.get("outputs", {})) == {self._rel(p) for p in outputs}):
            self.status[name] = "skipped"
            self.echo(f"[{name}] up to date, skipped")
            return

        started = _utcnow()
        try:
            action()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc

        record = {
            "params": dict(params),
            "params_sha256": digest,
            "inputs": input_digests,
            "outputs": {self._rel(p): sha256_file(p) for p in outputs},
            "started_at": started,
            "finished_at": _utcnow(),
        }
        self.manifest["stages"][name] = record
        write_json(self.manifest_path, self.manifest)
        self.status[name] = "ran"
        self.echo(f"[{name}] done: {', '.join(sorted(record['outputs']))}")


def _dominance_rows(assignment):
    for doc_id, topics in zip(assignment.doc_ids, assignment.dominant):
        yield doc_id, "|".join(str(t) for t in sorted(topics))


def run_pipeline(config_path: Path,
                 overrides: Optional[Mapping[str, str]] = None,
                 out_dir: Optional[Path] = None,
                 threads: Optional[int] = None,
                 echo=print) -> RunResult:
    """Execute every stage; returns the artifacts directory and statuses.

    Raises StageError (wrapping the cause) when a stage fails; artifacts
    written by earlier stages stay intact.
    """
    config = load_config(config_path, overrides)
    target = Path(out_dir) if out_dir is not None else Path(config["out_dir"])
    target.mkdir(parents=True, exist_ok=True)
    workers = resolve_threads(threads, config["threads"])

    runner = _Runner(target, config, echo)
    posts_path = Path(config["posts"])
    comments_path = Path(config["comments"])

    dataset_file = target / "dataset.json"
    corpus_dir = target / "corpus"
    corpus_files = [corpus_dir / n for n in
                    ("vocabulary.tsv", "documents.csv", "docs.csv", "meta.json")]
    model_file = target / "model.json"
    scan_file = target / "skewness_scan.csv"

    # ingest
    def do_ingest():
        with posts_path.open("r", encoding="utf-8") as ps, \
                comments_path.open("r", encoding="utf-8") as cs:
            dataset = parse_dump(ps, cs, (config["from"], config["to"]))
        save_dataset(dataset, dataset_file)

    runner.run("ingest", {"from": config["from"], "to": config["to"]},
               [posts_path, comments_path], [dataset_file], do_ingest)

    # stats
    stats_files = [target / n for n in
                   ("activity_table.csv", "score_relations.csv",
                    "response_times.csv", "stats_summary.json")]

    def do_stats():
        dataset = load_dataset(dataset_file)
        rows = author_activity_table(dataset)
        write_csv(stats_files[0],
                  ("category", "authors", "authors_pct", "posts", "posts_pct",
                   "comments", "comments_pct"),
                  ((r.category.value, r.authors, r.authors_pct, r.posts,
                    r.posts_pct, r.comments, r.comments_pct) for r in rows))
        relations = score_relations(dataset)
        write_csv(stats_files[1], ("post_id", "post_score", "max_comment_score"),
                  relations.pairs)
        lapse_rows, anomalies = response_time_table(dataset)
        write_csv(stats_files[2], ("comment_id", "response_time_s", "comment_score"),
                  lapse_rows)
        write_json(stats_files[3], {
            "posts": len(dataset.posts),
            "comments": len(dataset.comments),
            "authors": len(dataset.authors),
            "dangling_refs": dataset.dangling_refs,
            "parse_errors": dataset.parse_errors,
            "duplicate_ids": dataset.duplicate_ids,
            "posts_without_comments": relations.no_comment_posts,
            "post_score_one_fraction": relations.post_score_one_fraction,
            "comment_score_one_fraction": relations.comment_score_one_fraction,
            "response_time_anomalies": anomalies,
        })

    runner.run("stats", {}, [dataset_file], stats_files, do_stats)

    # corpus
    corpus_params = {k: config[k] for k in
                     ("corpus.min_df", "corpus.max_df_fraction",
                      "corpus.phrase_min_count")}

    def do_corpus():
        dataset = load_dataset(dataset_file)
        corpus = build_corpus(dataset,
                              min_df=config["corpus.min_df"],
                              max_df_fraction=config["corpus.max_df_fraction"],
                              phrase_min_count=config["corpus.phrase_min_count"])
        save_corpus(corpus, corpus_dir)

    runner.run("corpus", corpus_params, [dataset_file], corpus_files, do_corpus)

    # topics: fixed k fits one model, otherwise scan [k_min, k_max]
    lda_params = {k: config[k] for k in
                  ("lda.k", "lda.k_min", "lda.k_max", "lda.alpha", "lda.beta",
                   "lda.iterations", "lda.burn_in", "lda.patience", "seed")}

    def do_topics():
        corpus = load_corpus(corpus_dir)
        fixed_k = config["lda.k"]
        base = LdaConfig(
            k=fixed_k if fixed_k is not None else max(config["lda.k_min"], 2),
            alpha=config["lda.alpha"],
            beta=config["lda.beta"],
            iterations=config["lda.iterations"],
            burn_in=config["lda.burn_in"],
            seed=stage_seed(config["seed"], "lda"),
        )
        if fixed_k is not None:
            model = fit(corpus, base)
            report = count_nonpositive(model)
            scan_rows = [(base.k, report.w_k, 1)]
        else:
            result = select_k(corpus, config["lda.k_min"], config["lda.k_max"],
                              base, patience=config["lda.patience"],
                              workers=workers,
                              progress=lambda k, w: echo(f"[topics] k={k} W_k={w}"))
            model = result.model
            scan_rows = [(r.k, r.w_k, 1 if r.k == result.k else 0)
                         for r in result.reports]
        save_model(model, model_file)
        write_csv(scan_file, ("k", "w_k", "selected"), scan_rows)

    runner.run("topics", lda_params, corpus_files, [model_file, scan_file],
               do_topics)

    # dominance
    dominance_files = [target / n for n in
                       ("dominance.csv", "dominance_thresholds.csv",
                        "topic_presence.csv")]

    def do_dominance():
        model = load_model(model_file)
        assignment = dominant_topics(model)
        write_csv(dominance_files[0], ("post_id", "dominant_topics"),
                  _dominance_rows(assignment))
        write_csv(dominance_files[1], ("topic", "mu", "sigma"),
                  ((t, mu, sigma) for t, (mu, sigma)
                   in enumerate(assignment.thresholds)))
        write_csv(dominance_files[2], ("topic", "presence_fraction"),
                  enumerate(assignment.topic_presence))

    runner.run("dominance", {}, [model_file], dominance_files, do_dominance)

    # cooccur
    cooccur_file = target / "cooccurrence.csv"

    def do_cooccur():
        model = load_model(model_file)
        matrix = cooccurrence(dominant_topics(model))
        write_csv(cooccur_file, ("topic_i", "topic_j", "count"),
                  ((i, j, int(matrix.counts[i, j]))
                   for i in range(matrix.k) for j in range(i, matrix.k)))

    runner.run("cooccur", {}, [model_file], [cooccur_file], do_cooccur)

    # timeline
    timeline_file = target / "monthly_topics.csv"

    def do_timeline():
        model = load_model(model_file)
        dataset = load_dataset(dataset_file)
        counts = monthly_distribution(dominant_topics(model), dataset)
        write_csv(timeline_file, ("topic", "month", "count"),
                  ((t, month, n) for (t, month), n in sorted(counts.items())))

    runner.run("timeline", {}, [model_file, dataset_file], [timeline_file],
               do_timeline)

    # lexicon
    lexicon_files = [target / n for n in
                     ("category_matrix.csv", "pca_components.csv",
                      "pca_variance.csv", "topic_profiles.csv")]
    lexicon_inputs = list(corpus_files) + [model_file]
    if config["lexicon.path"] is not None:
        lexicon_inputs.append(Path(config["lexicon.path"]))

    def do_lexicon():
        corpus = load_corpus(corpus_dir)
        model = load_model(model_file)
        lex = (load_lexicon(Path(config["lexicon.path"]))
               if config["lexicon.path"] is not None else demo_lexicon())
        docs = [corpus.document_tokens(i) for i in range(len(corpus))]
        matrix = categorize(docs, lex, doc_ids=corpus.doc_ids)
        write_csv(lexicon_files[0], ("post_id",) + matrix.categories,
                  ((doc_id,) + tuple(float(x) for x in row)
                   for doc_id, row in zip(matrix.doc_ids, matrix.rows)))
        n_comp = min(config["lexicon.components"],
                     len(matrix.doc_ids), len(matrix.categories))
        result = pca(matrix, n_comp)
        write_csv(lexicon_files[1], ("component",) + matrix.categories,
                  ((i,) + tuple(float(x) for x in row)
                   for i, row in enumerate(result.components)))
        write_csv(lexicon_files[2], ("component", "explained_variance", "negligible"),
                  ((i, float(v), 1 if i in result.negligible else 0)
                   for i, v in enumerate(result.explained_variance)))
        profiles = topicwise_profile(result, dominant_topics(model))
        write_csv(lexicon_files[3],
                  ("topic",) + tuple(f"component_{i}" for i in range(n_comp)),
                  ((t,) + tuple("" if np.isnan(x) else float(x) for x in row)
                   for t, row in enumerate(profiles.profiles)))

    runner.run("lexicon",
               {"lexicon.path": config["lexicon.path"],
                "lexicon.components": config["lexicon.components"]},
               lexicon_inputs, lexicon_files, do_lexicon)

    # graph
    graph_files = [target / n for n in
                   ("edges.csv", "graph.graphml", "graph.dot", "user_classes.json")]

    def do_graph():
        dataset = load_dataset(dataset_file)
        graph = build_graph(dataset)
        write_csv(graph_files[0], ("from", "to", "weight"), graph.edges)
        graph_files[1].write_text(graphml_text(graph.nodes, graph.edges),
                                  encoding="utf-8")
        graph_files[2].write_text(dot_text(graph.nodes, graph.edges),
                                  encoding="utf-8")
        classes = user_classes(graph)
        write_json(graph_files[3], {
            "nodes": classes.nodes,
            "passive": classes.passive,
            "passive_pct": classes.passive_pct,
            "unanswered": classes.unanswered,
            "unanswered_pct": classes.unanswered_pct,
        })

    runner.run("graph", {}, [dataset_file], graph_files, do_graph)

    # metrics
    metrics_files = [target / n for n in
                     ("user_metrics.csv", "spread_influence.csv",
                      "top_influencers.csv", "influencer_subgraph.graphml")]

    def do_metrics():
        dataset = load_dataset(dataset_file)
        model = load_model(model_file)
        graph = build_graph(dataset)
        assignment = dominant_topics(model)
        metrics = contribution_and_influence(
            compute_user_metrics(dataset, graph, assignment))
        write_csv(metrics_files[0],
                  ("user", "C", "out_degree", "in_degree", "tau", "R",
                   "alpha", "I", "agg_score"),
                  ((m.user, m.comment_count, m.out_degree, m.in_degree, m.tau,
                    m.reach, m.alpha, m.influence, m.aggregate_comment_score)
                   for m in metrics))
        write_csv(metrics_files[1],
                  ("user", "tau", "influence", "log10_comments", "log10_agg_score"),
                  spread_influence_rows(metrics))
        subgraph = top_influencers_subgraph(graph, metrics, config["graph.top_k"])
        by_user = {m.user: m for m in metrics}
        write_csv(metrics_files[2], ("rank", "user", "influence", "C"),
                  ((i + 1, u, by_user[u].influence, by_user[u].comment_count)
                   for i, u in enumerate(subgraph.selected)))
        metrics_files[3].write_text(graphml_text(subgraph.nodes, subgraph.edges),
                                    encoding="utf-8")

    runner.run("metrics", {"graph.top_k": config["graph.top_k"]},
               [dataset_file, model_file], metrics_files, do_metrics)

    # report: consumes every artifact written so far
    report_file = target / "report.json"
    produced = ([dataset_file] + stats_files + corpus_files
                + [model_file, scan_file] + dominance_files + [cooccur_file]
                + [timeline_file] + lexicon_files + graph_files + metrics_files)

    def do_report():
        dataset = load_dataset(dataset_file)
        model = load_model(model_file)
        assignment = dominant_topics(model)
        report = count_nonpositive(model)
        classes = read_json(target / "user_classes.json")
        write_json(report_file, {
            "dataset": {
                "posts": len(dataset.posts),
                "comments": len(dataset.comments),
                "authors": len(dataset.authors),
            },
            "model": {
                "k": model.k,
                "w_k": report.w_k,
                "documents": model.n_documents,
                "top_words": {str(t): top_words(model, t, 10)
                              for t in range(model.k)},
            },
            "topic_presence": list(assignment.topic_presence),
            "user_classes": classes,
            "artifacts": {runner._rel(p): sha256_file(p) for p in produced},
        })

    runner.run("report", {}, produced, [report_file], do_report)

    return RunResult(out_dir=target, stage_status=runner.status)
