"""Command-line entry point.

Exit codes are a stable contract: 0 success, 1 usage error, 2 data error,
3 internal error. Outputs are UTF-8 CSV/JSON files with headers; column
layouts are described in each subcommand's --help text.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import build_corpus, load_corpus, save_corpus
from .errors import DataError, ForumPulseError, StageError, UsageError
from .fileio import write_csv
from .fixture import generate_fixture
from .ingest import (author_activity_table, load_dataset, parse_dump,
                     response_time_table, save_dataset, score_relations)
from .interaction import (build_graph, compute_user_metrics,
                          contribution_and_influence, dot_text, graphml_text,
                          spread_influence_rows, top_influencers_subgraph,
                          user_classes)
from .lda import LdaConfig, fit, load_model, save_model
from .lexicon import (DEFAULT_COMPONENTS, categorize, demo_lexicon,
                      load_lexicon, pca, topicwise_profile)
from .pipeline import resolve_threads, run_pipeline
from .topics import (cooccurrence, count_nonpositive, dominant_topics,
                     monthly_distribution, select_k)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forumpulse",
        description="Batch analytics over Reddit-style discussion dumps.")
    parser.add_argument("--version", action="version",
                        version=f"forumpulse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="Parse post/comment dumps into a dataset file")
    p.add_argument("--posts", required=True, type=Path, help="posts JSONL dump")
    p.add_argument("--comments", required=True, type=Path, help="comments JSONL dump")
    p.add_argument("--from", dest="from_epoch", type=int, default=None,
                   help="drop records created before this epoch second")
    p.add_argument("--to", dest="to_epoch", type=int, default=None,
                   help="drop records created after this epoch second")
    p.add_argument("--out", required=True, type=Path, help="output dataset.json")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="Activity table, score relations, response times")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=_cmd_stats)

    corpus_cmd = sub.add_parser("corpus", help="Corpus construction commands")
    csub = corpus_cmd.add_subparsers(dest="subcommand", required=True)

    p = csub.add_parser("build", help="Tokenize posts into a corpus directory")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--min-df", type=int, default=5)
    p.add_argument("--max-df-fraction", type=float, default=0.5)
    p.add_argument("--phrase-min-count", type=int, default=20)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=_cmd_corpus_build)

    topics = sub.add_parser("topics", help="Topic modeling commands")
    tsub = topics.add_subparsers(dest="subcommand", required=True)

    p = tsub.add_parser("fit", help="Fit one topic model and write it as JSON")
    p.add_argument("--corpus", required=True, type=Path, help="corpus directory")
    p.add_argument("--k", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--alpha", type=float, default=None, help="default 50/k")
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--out", required=True, type=Path, help="output model.json")
    p.set_defaults(func=_cmd_topics_fit)

    p = tsub.add_parser("select-k",
                        help="Scan k and keep the model minimizing W_k "
                             "(scan CSV columns: k, w_k, selected)")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--kmin", type=int, default=2)
    p.add_argument("--kmax", required=True, type=int)
    p.add_argument("--patience", type=int, default=None,
                   help="stop after this many non-improving k values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--threads", type=int, default=None,
                   help="parallel fits; FORUM_PULSE_THREADS honored")
    p.add_argument("--out", required=True, type=Path, help="output model.json")
    p.add_argument("--scan-csv", required=True, type=Path)
    p.set_defaults(func=_cmd_topics_select)

    p = tsub.add_parser("dominance",
                        help="Dominant topics per post (columns: post_id, "
                             "dominant_topics pipe-joined)")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=_cmd_topics_dominance)

    p = tsub.add_parser("cooccur",
                        help="Dominant-topic co-occurrence counts "
                             "(columns: topic_i, topic_j, count; "
                             "diagonal = sole-dominant posts)")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="output CSV")
    p.set_defaults(func=_cmd_topics_cooccur)

    p = tsub.add_parser("timeline",
                        help="Dominant posts per topic per month "
                             "(columns: topic, month, count)")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="output CSV")
    p.set_defaults(func=_cmd_topics_timeline)

    lexicon = sub.add_parser("lexicon", help="Lexical category profiling")
    lsub = lexicon.add_subparsers(dest="subcommand", required=True)

    p = lsub.add_parser("profile",
                        help="Category matrix, PCA components and topicwise profile")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--lexicon", type=Path, default=None,
                   help="JSON category->words file; bundled demo lexicon by default")
    p.add_argument("--components", type=int, default=DEFAULT_COMPONENTS)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=_cmd_lexicon_profile)

    users = sub.add_parser("users", help="Per-user interaction metrics")
    usub = users.add_subparsers(dest="subcommand", required=True)

    p = usub.add_parser("metrics",
                        help="Metrics CSV (user, C, out_degree, in_degree, tau, "
                             "R, alpha, I, agg_score) plus spread/influence export")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--model", type=Path, default=None,
                   help="model.json; tau columns are blank without it")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=_cmd_users_metrics)

    p = usub.add_parser("top", help="Top influencers and their egonet subgraph")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=_cmd_users_top)

    graph = sub.add_parser("graph", help="Interaction graph commands")
    gsub = graph.add_subparsers(dest="subcommand", required=True)

    p = gsub.add_parser("build", help="Edge list CSV (from, to, weight)")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="output CSV")
    p.set_defaults(func=_cmd_graph_build)

    p = gsub.add_parser("export", help="Export the graph as csv, graphml or dot")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--format", required=True, choices=("csv", "graphml", "dot"))
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=_cmd_graph_export)

    p = sub.add_parser("report", help="Summarize a pipeline artifacts directory")
    p.add_argument("--artifacts", required=True, type=Path)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("fixture", help="Generate a deterministic synthetic dump pair")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--posts", type=int, required=True)
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--k-true", type=int, required=True)
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.set_defaults(func=_cmd_fixture)

    p = sub.add_parser("run", help="Run the full pipeline from a config file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    return parser


def _load_model_rich(path: Path):
    model = load_model(path)
    return model, dominant_topics(model)


def _cmd_ingest(args) -> int:
    for path in (args.posts, args.comments):
        if not path.exists():
            raise DataError(f"missing dump file: {path}")
    with args.posts.open("r", encoding="utf-8") as ps, \
            args.comments.open("r", encoding="utf-8") as cs:
        dataset = parse_dump(ps, cs, (args.from_epoch, args.to_epoch))
    save_dataset(dataset, args.out)
    print(f"dataset: {len(dataset.posts)} posts, {len(dataset.comments)} comments, "
          f"{len(dataset.authors)} authors "
          f"(parse errors {dataset.parse_errors}, duplicates {dataset.duplicate_ids}, "
          f"dangling refs {dataset.dangling_refs}) -> {args.out}")
    return 0


def _cmd_stats(args) -> int:
    dataset = load_dataset(args.dataset)
    out = args.out
    rows = author_activity_table(dataset)
    write_csv(out / "activity_table.csv",
              ("category", "authors", "authors_pct", "posts", "posts_pct",
               "comments", "comments_pct"),
              ((r.category.value, r.authors, r.authors_pct, r.posts, r.posts_pct,
                r.comments, r.comments_pct) for r in rows))
    relations = score_relations(dataset)
    write_csv(out / "score_relations.csv",
              ("post_id", "post_score", "max_comment_score"), relations.pairs)
    lapse_rows, anomalies = response_time_table(dataset)
    write_csv(out / "response_times.csv",
              ("comment_id", "response_time_s", "comment_score"), lapse_rows)
    print(f"stats written to {out} (response-time anomalies: {anomalies})")
    return 0


def _cmd_corpus_build(args) -> int:
    dataset = load_dataset(args.dataset)
    corpus = build_corpus(dataset, min_df=args.min_df,
                          max_df_fraction=args.max_df_fraction,
                          phrase_min_count=args.phrase_min_count)
    save_corpus(corpus, args.out)
    print(f"corpus: {len(corpus)} documents, {len(corpus.vocabulary)} terms, "
          f"{corpus.total_tokens} tokens -> {args.out}")
    return 0


def _lda_config(args, k: int) -> LdaConfig:
    return LdaConfig(k=k, alpha=args.alpha, beta=args.beta,
                     iterations=args.iters, burn_in=args.burn_in, seed=args.seed)


def _cmd_topics_fit(args) -> int:
    corpus = load_corpus(args.corpus)
    model = fit(corpus, _lda_config(args, args.k))
    save_model(model, args.out)
    report = count_nonpositive(model)
    print(f"fitted k={args.k}: W_k={report.w_k} over {len(corpus)} documents "
          f"-> {args.out}")
    return 0


def _cmd_topics_select(args) -> int:
    corpus = load_corpus(args.corpus)
    workers = resolve_threads(args.threads)
    result = select_k(corpus, args.kmin, args.kmax, _lda_config(args, max(args.kmin, 2)),
                      patience=args.patience, workers=workers,
                      progress=lambda k, w: print(f"k={k} W_k={w}"))
    save_model(result.model, args.out)
    write_csv(args.scan_csv, ("k", "w_k", "selected"),
              ((r.k, r.w_k, 1 if r.k == result.k else 0) for r in result.reports))
    print(f"selected k={result.k} -> {args.out}")
    return 0


def _cmd_topics_dominance(args) -> int:
    model, assignment = _load_model_rich(args.model)
    out = args.out
    write_csv(out / "dominance.csv", ("post_id", "dominant_topics"),
              ((doc_id, "|".join(str(t) for t in sorted(topics)))
               for doc_id, topics in zip(assignment.doc_ids, assignment.dominant)))
    write_csv(out / "dominance_thresholds.csv", ("topic", "mu", "sigma"),
              ((t, mu, sigma) for t, (mu, sigma) in enumerate(assignment.thresholds)))
    write_csv(out / "topic_presence.csv", ("topic", "presence_fraction"),
              enumerate(assignment.topic_presence))
    unassigned = sum(1 for topics in assignment.dominant if not topics)
    print(f"dominance written to {out} "
          f"({unassigned} posts with no dominant topic)")
    return 0


def _cmd_topics_cooccur(args) -> int:
    _, assignment = _load_model_rich(args.model)
    matrix = cooccurrence(assignment)
    write_csv(args.out, ("topic_i", "topic_j", "count"),
              ((i, j, int(matrix.counts[i, j]))
               for i in range(matrix.k) for j in range(i, matrix.k)))
    print(f"co-occurrence counts -> {args.out}")
    return 0


def _cmd_topics_timeline(args) -> int:
    _, assignment = _load_model_rich(args.model)
    dataset = load_dataset(args.dataset)
    counts = monthly_distribution(assignment, dataset)
    write_csv(args.out, ("topic", "month", "count"),
              ((t, month, n) for (t, month), n in sorted(counts.items())))
    print(f"monthly topic counts -> {args.out}")
    return 0


def _cmd_lexicon_profile(args) -> int:
    corpus = load_corpus(args.corpus)
    model, assignment = _load_model_rich(args.model)
    lex = load_lexicon(args.lexicon) if args.lexicon else demo_lexicon()
    docs = [corpus.document_tokens(i) for i in range(len(corpus))]
    matrix = categorize(docs, lex, doc_ids=corpus.doc_ids)
    out = args.out
    write_csv(out / "category_matrix.csv", ("post_id",) + matrix.categories,
              ((doc_id,) + tuple(float(x) for x in row)
               for doc_id, row in zip(matrix.doc_ids, matrix.rows)))
    n_comp = min(args.components, len(matrix.doc_ids), len(matrix.categories))
    result = pca(matrix, n_comp)
    write_csv(out / "pca_components.csv", ("component",) + matrix.categories,
              ((i,) + tuple(float(x) for x in row)
               for i, row in enumerate(result.components)))
    write_csv(out / "pca_variance.csv",
              ("component", "explained_variance", "negligible"),
              ((i, float(v), 1 if i in result.negligible else 0)
               for i, v in enumerate(result.explained_variance)))
    profiles = topicwise_profile(result, assignment)
    write_csv(out / "topic_profiles.csv",
              ("topic",) + tuple(f"component_{i}" for i in range(n_comp)),
              ((t,) + tuple("" if np.isnan(x) else float(x) for x in row)
               for t, row in enumerate(profiles.profiles)))
    print(f"lexicon profile ({len(lex)} categories, {n_comp} components) -> {out}")
    return 0


def _user_metrics_for(args):
    dataset = load_dataset(args.dataset)
    graph = build_graph(dataset)
    assignment = None
    if args.model is not None:
        _, assignment = _load_model_rich(args.model)
    metrics = compute_user_metrics(dataset, graph, assignment)
    return graph, contribution_and_influence(metrics)


def _cmd_users_metrics(args) -> int:
    _, metrics = _user_metrics_for(args)
    out = args.out
    write_csv(out / "user_metrics.csv",
              ("user", "C", "out_degree", "in_degree", "tau", "R", "alpha", "I",
               "agg_score"),
              ((m.user, m.comment_count, m.out_degree, m.in_degree, m.tau,
                m.reach, m.alpha, m.influence, m.aggregate_comment_score)
               for m in metrics))
    write_csv(out / "spread_influence.csv",
              ("user", "tau", "influence", "log10_comments", "log10_agg_score"),
              spread_influence_rows(metrics))
    print(f"metrics for {len(metrics)} commenters -> {out}")
    return 0


def _cmd_users_top(args) -> int:
    graph, metrics = _user_metrics_for(args)
    subgraph = top_influencers_subgraph(graph, metrics, args.k)
    by_user = {m.user: m for m in metrics}
    out = args.out
    write_csv(out / "top_influencers.csv", ("rank", "user", "influence", "C"),
              ((i + 1, u, by_user[u].influence, by_user[u].comment_count)
               for i, u in enumerate(subgraph.selected)))
    (out / "influencer_subgraph.graphml").parent.mkdir(parents=True, exist_ok=True)
    (out / "influencer_subgraph.graphml").write_text(
        graphml_text(subgraph.nodes, subgraph.edges), encoding="utf-8")
    print(f"top {len(subgraph.selected)} influencers with "
          f"{len(subgraph.nodes)} egonet users -> {out}")
    return 0


def _cmd_graph_build(args) -> int:
    dataset = load_dataset(args.dataset)
    graph = build_graph(dataset)
    write_csv(args.out, ("from", "to", "weight"), graph.edges)
    classes = user_classes(graph)
    print(f"graph: {classes.nodes} nodes, {len(graph.edges)} edges, "
          f"{classes.passive} passive ({classes.passive_pct:.2f}%), "
          f"{classes.unanswered} with in-degree 0 ({classes.unanswered_pct:.2f}%)")
    return 0


def _cmd_graph_export(args) -> int:
    dataset = load_dataset(args.dataset)
    graph = build_graph(dataset)
    if args.format == "csv":
        write_csv(args.out, ("from", "to", "weight"), graph.edges)
    else:
        text = (graphml_text if args.format == "graphml" else dot_text)(
            graph.nodes, graph.edges)
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    print(f"graph ({args.format}) -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    report_path = args.artifacts / "report.json"
    if not report_path.exists():
        raise DataError(f"no report.json under {args.artifacts}; run the pipeline first")
    print(report_path.read_text(encoding="utf-8"), end="")
    return 0


def _cmd_fixture(args) -> int:
    posts_path, comments_path = generate_fixture(
        seed=args.seed, n_posts=args.posts, n_users=args.users,
        k_true=args.k_true, out_dir=args.out)
    print(f"fixture written: {posts_path}, {comments_path}")
    return 0


def _cmd_run(args) -> int:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    result = run_pipeline(args.config, overrides=overrides,
                          out_dir=args.out_dir, threads=args.threads)
    if result.all_skipped:
        print(f"all stages up to date in {result.out_dir}")
    else:
        print(f"pipeline complete: {result.out_dir}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        code = 2 if isinstance(exc.cause, (DataError, FileNotFoundError)) else 3
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ForumPulseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps everything
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
