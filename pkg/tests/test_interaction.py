from __future__ import annotations

import random
from collections import defaultdict

import pytest

from forumpulse.interaction import (build_graph, compute_user_metrics,
                                    contribution_and_influence, dot_text,
                                    graphml_text, reach, spread_influence_rows,
                                    top_influencers_subgraph, topic_spread,
                                    user_classes)
from forumpulse.topics import DominantTopicAssignment

from conftest import comment_record, make_dataset, post_record


def _assignment(pairs: dict[str, set[int]], k: int) -> DominantTopicAssignment:
    ids = tuple(sorted(pairs))
    return DominantTopicAssignment(
        doc_ids=ids,
        thresholds=tuple((0.0, 0.0) for _ in range(k)),
        dominant=tuple(frozenset(pairs[i]) for i in ids),
        topic_presence=tuple(0.0 for _ in range(k)),
    )


def hand_fixture():
    """4 users, 7 comments; the seventh is a self-reply and makes no edge.

    Hand-drawn edges: u2->u1 w2, u3->u1 w1, u3->u2 w1, u1->u3 w1, u4->u1 w1.
    """
    posts = [post_record("p1", author="u1", created=100),
             post_record("p2", author="u2", created=110)]
    comments = [
        comment_record("c1", "t3_p1", "p1", author="u2", created=200),
        comment_record("c2", "t3_p1", "p1", author="u3", created=210),
        comment_record("c3", "t1_c1", "p1", author="u3", created=220),
        comment_record("c4", "t1_c3", "p1", author="u1", created=230),
        comment_record("c5", "t3_p1", "p1", author="u2", created=240),
        comment_record("c6", "t1_c4", "p1", author="u4", created=250),
        comment_record("c7", "t3_p1", "p1", author="u1", created=260),  # self
    ]
    return make_dataset(posts, comments)


def test_hand_fixture_graph_exact():
    graph = build_graph(hand_fixture())
    assert graph.nodes == ("u1", "u2", "u3", "u4")
    assert graph.edges == (
        ("u1", "u3", 1), ("u2", "u1", 2), ("u3", "u1", 1),
        ("u3", "u2", 1), ("u4", "u1", 1),
    )
    assert graph.out_degree == {"u1": 1, "u2": 1, "u3": 2, "u4": 1}
    assert graph.in_degree == {"u1": 3, "u2": 1, "u3": 1, "u4": 0}
    # 7 comments, 1 self-reply: total edge weight equals the other 6.
    assert graph.total_weight() == 6


def test_weight_vs_degree_distinction():
    d = make_dataset(
        [post_record("p1", author="bb")],
        [comment_record("c1", "t3_p1", "p1", author="aa"),
         comment_record("c2", "t3_p1", "p1", author="aa")],
    )
    graph = build_graph(d)
    assert graph.edges == (("aa", "bb", 2),)
    assert graph.out_degree["aa"] == 1


def test_self_reply_makes_no_edge():
    d = make_dataset([post_record("p1", author="aa")],
                     [comment_record("c1", "t3_p1", "p1", author="aa")])
    graph = build_graph(d)
    assert graph.nodes == () and graph.edges == ()


def test_dangling_and_sentinel_parents_skipped():
    d = make_dataset(
        [post_record("p1", author="[deleted]"), post_record("p2", author="bb")],
        [comment_record("c1", "t3_p1", "p1", author="aa"),      # sentinel target
         comment_record("c2", "t1_gone", "p2", author="aa"),    # dangling
         comment_record("c3", "t3_p2", "p2", author="[removed]"),  # sentinel source
         comment_record("c4", "t3_p2", "p2", author="aa")],
    )
    graph = build_graph(d)
    assert graph.edges == (("aa", "bb", 1),)


def test_user_classes_star():
    d = make_dataset(
        [post_record("p1", author="hub")],
        [comment_record(f"c{i}", "t3_p1", "p1", author=f"s{i}", created=200 + i)
         for i in range(3)],
    )
    classes = user_classes(build_graph(d))
    assert classes.nodes == 4
    assert classes.passive == 1                 # the hub never replies
    assert classes.passive_pct == pytest.approx(25.0)
    assert classes.unanswered == 3              # spokes get no replies
    assert classes.unanswered_pct == pytest.approx(75.0)


def test_user_classes_everyone_active():
    d = make_dataset(
        [post_record("p1", author="aa"), post_record("p2", author="bb")],
        [comment_record("c1", "t3_p1", "p1", author="bb"),
         comment_record("c2", "t3_p2", "p2", author="aa")],
    )
    classes = user_classes(build_graph(d))
    assert classes.passive == 0


def _comments_on(posts_by_user: list[str]) -> list:
    return [comment_record(f"c{i}", f"t3_{p}", p, author="me", created=100 + i)
            for i, p in enumerate(posts_by_user)]


def test_topic_spread_single_topic_is_one():
    assignment = _assignment({"p1": {0}, "p2": {0}}, k=2)
    d = make_dataset([post_record("p1"), post_record("p2")],
                     _comments_on(["p1", "p2", "p1"]))
    tau, fractions = topic_spread(d.comments, assignment)
    assert tau == 1.0
    assert fractions == {0: 1.0}


def test_topic_spread_even_two_way_split_is_eight():
    assignment = _assignment({"p1": {0}, "p2": {1}}, k=2)
    d = make_dataset([post_record("p1"), post_record("p2")],
                     _comments_on(["p1", "p2", "p1", "p2"]))
    tau, fractions = topic_spread(d.comments, assignment)
    assert tau == 8.0
    assert fractions == {0: 0.5, 1: 0.5}


def test_topic_spread_three_way_split_is_twenty_seven():
    assignment = _assignment({"p1": {0}, "p2": {1}, "p3": {2}}, k=3)
    d = make_dataset([post_record(p) for p in ("p1", "p2", "p3")],
                     _comments_on(["p1", "p2", "p3"]))
    tau, _ = topic_spread(d.comments, assignment)
    assert tau == pytest.approx(27.0, rel=1e-12)


def test_topic_spread_multi_dominant_fractional_credit():
    # One comment on a post with two dominant topics: each gets credit 1/2.
    assignment = _assignment({"p1": {0, 1}}, k=2)
    d = make_dataset([post_record("p1")], _comments_on(["p1"]))
    tau, fractions = topic_spread(d.comments, assignment)
    assert fractions == {0: 0.5, 1: 0.5}
    assert sum(fractions.values()) == 1.0
    assert tau == 8.0


def test_topic_spread_undefined_when_no_dominant_roots():
    assignment = _assignment({"p1": set()}, k=2)
    d = make_dataset([post_record("p1")], _comments_on(["p1"]))
    assert topic_spread(d.comments, assignment) is None


def test_reach_values():
    assert reach(5, 5) == 1.0
    assert reach(1, 4) == 0.25
    assert reach(0, 0) is None


def test_contribution_and_influence_fills():
    d = hand_fixture()
    graph = build_graph(d)
    metrics = contribution_and_influence(compute_user_metrics(d, graph))
    by_user = {m.user: m for m in metrics}
    # C: u1=2 (c4 + self-reply c7), u2=2, u3=2, u4=1; max C = 2.
    assert by_user["u1"].comment_count == 2
    assert by_user["u1"].reach == 0.5
    assert by_user["u1"].alpha == 1.0
    assert by_user["u1"].influence == 0.5
    assert by_user["u3"].reach == 1.0
    assert by_user["u3"].influence == 1.0
    assert by_user["u4"].alpha == 0.5
    assert by_user["u4"].influence == 0.5


def test_half_max_commenter_influence():
    d = make_dataset(
        [post_record(f"p{i}", author=f"op{i}", created=50 + i) for i in range(5)],
        # "big" makes 4 comments to 4 distinct users; "small" 2 comments,
        # but only to 1 distinct user plus a dangling one: R = 0.5.
        [comment_record("c0", "t3_p0", "p0", author="big"),
         comment_record("c1", "t3_p1", "p1", author="big"),
         comment_record("c2", "t3_p2", "p2", author="big"),
         comment_record("c3", "t3_p3", "p3", author="big"),
         comment_record("c4", "t3_p4", "p4", author="small"),
         comment_record("c5", "t1_gone", "p4", author="small")],
    )
    metrics = contribution_and_influence(
        compute_user_metrics(d, build_graph(d)))
    by_user = {m.user: m for m in metrics}
    assert by_user["big"].influence == 1.0
    assert by_user["small"].alpha == 0.5
    assert by_user["small"].reach == 0.5
    assert by_user["small"].influence == 0.25


def test_all_identical_users_all_influence_one():
    d = make_dataset(
        [post_record("p1", author="x1"), post_record("p2", author="x2")],
        [comment_record("c1", "t3_p2", "p2", author="x1"),
         comment_record("c2", "t3_p1", "p1", author="x2")],
    )
    metrics = contribution_and_influence(compute_user_metrics(d, build_graph(d)))
    assert all(m.influence == 1.0 for m in metrics)


def test_spread_influence_rows_contract():
    d = hand_fixture()
    metrics = contribution_and_influence(compute_user_metrics(d, build_graph(d)))
    rows = spread_influence_rows(metrics)
    assert [r[0] for r in rows] == ["u1", "u2", "u3", "u4"]
    for _, tau, influence, log_c, log_score in rows:
        assert influence is not None and log_c is not None


def _dataset_with_comment_counts(counts: dict[str, int], factor: int = 1):
    posts = [post_record("p1", author="op")]
    comments = []
    for user, n in counts.items():
        for j in range(n * factor):
            comments.append(comment_record(
                f"c_{user}_{j}", "t3_p1", "p1", author=user, created=200 + j))
    return make_dataset(posts, comments)


def test_alpha_ranking_invariant_under_comment_scaling():
    counts = {"ann": 3, "bob": 7, "cat": 1, "dee": 7, "eve": 2}
    base = contribution_and_influence(compute_user_metrics(
        d := _dataset_with_comment_counts(counts), build_graph(d)))
    tripled = contribution_and_influence(compute_user_metrics(
        d3 := _dataset_with_comment_counts(counts, factor=3), build_graph(d3)))
    rank = lambda ms: [m.user for m in
                       sorted(ms, key=lambda m: (-m.alpha, m.user))]
    assert rank(base) == rank(tripled)


def test_top_influencers_star_egonet():
    d = make_dataset(
        [post_record("p1", author="hub")] +
        [post_record(f"q{i}", author=f"s{i}", created=60 + i) for i in range(3)],
        # Hub replies once to every spoke: hub has the top influence.
        [comment_record(f"h{i}", f"t3_q{i}", f"q{i}", author="hub", created=100 + i)
         for i in range(3)] +
        [comment_record("cx", "t3_p1", "p1", author="s0", created=300)],
    )
    graph = build_graph(d)
    metrics = contribution_and_influence(compute_user_metrics(d, graph))
    sub = top_influencers_subgraph(graph, metrics, 1)
    assert sub.selected == ("hub",)
    assert set(sub.nodes) == {"hub", "s0", "s1", "s2"}
    assert set(sub.edges) == set(graph.edges)


def test_top_influencers_k_larger_than_population():
    d = hand_fixture()
    graph = build_graph(d)
    metrics = contribution_and_influence(compute_user_metrics(d, graph))
    sub = top_influencers_subgraph(graph, metrics, 99)
    assert set(sub.selected) == {"u1", "u2", "u3", "u4"}
    assert sub.edges == graph.edges


def test_top_influencers_ranking_ties():
    d = hand_fixture()
    graph = build_graph(d)
    metrics = contribution_and_influence(compute_user_metrics(d, graph))
    sub = top_influencers_subgraph(graph, metrics, 2)
    # I: u3=1.0; u1=u4=0.5 tie broken by C (u1 has 2 > 1), then id.
    assert sub.selected == ("u3", "u1")


def test_metric_bounds_and_weight_invariant():
    d = hand_fixture()
    graph = build_graph(d)
    metrics = contribution_and_influence(compute_user_metrics(d, graph))
    resolved_non_self = sum(
        1 for c in d.comments
        if not c.parent_dangling and d.resolve_parent(c).author != c.author)
    assert graph.total_weight() == resolved_non_self
    for m in metrics:
        assert 0.0 <= m.reach <= 1.0
        assert 0.0 < m.alpha <= 1.0
        assert 0.0 <= m.influence <= min(m.alpha, m.reach)
        assert m.out_degree <= sum(w for s, _, w in graph.edges if s == m.user)


def brute_force_metrics(dataset, dominant_by_post):
    """Naive reference: direct loops, no shared code with the library."""
    comments = [c for c in dataset.comments
                if c.author not in ("[deleted]", "[removed]")]
    users = sorted({c.author for c in comments})
    result = {}
    for user in users:
        mine = [c for c in comments if c.author == user]
        c_total = len(mine)
        targets = set()
        for c in mine:
            if c.parent_dangling:
                continue
            parent = dataset.resolve_parent(c)
            if parent.author in ("[deleted]", "[removed]") or parent.author == user:
                continue
            targets.add(parent.author)
        counted = [c for c in mine if dominant_by_post.get(c.root_post_id)]
        tau = None
        if counted:
            share = defaultdict(float)
            for c in counted:
                topics = dominant_by_post[c.root_post_id]
                for t in topics:
                    share[t] += 1.0 / len(topics)
            # tau sums fractions in ascending topic order by definition.
            fractions = {t: v / len(counted) for t, v in sorted(share.items())}
            tau = sum(1.0 / (s * s) for s in fractions.values() if s > 0)
        result[user] = {"C": c_total, "out": len(targets), "tau": tau}
    max_c = max(v["C"] for v in result.values())
    for v in result.values():
        v["alpha"] = v["C"] / max_c
        v["R"] = v["out"] / v["C"]
        v["I"] = v["alpha"] * v["R"]
    return result


def test_fifty_user_fixture_matches_bruteforce():
    rng = random.Random(2024)
    users = [f"w{i:02d}" for i in range(50)]
    posts = [post_record(f"p{i:02d}", author=rng.choice(users), created=100 + i)
             for i in range(30)]
    comments = []
    for j in range(400):
        target_post = rng.choice(posts)
        if comments and rng.random() < 0.35:
            parent = rng.choice(comments)
            parent_ref, root = "t1_" + parent["id"], parent["link_id"][3:]
        else:
            parent_ref, root = "t3_" + target_post["id"], target_post["id"]
        if rng.random() < 0.03:
            parent_ref = "t1_nope"   # some dangling refs
        comments.append(comment_record(
            f"c{j:03d}", parent_ref, root, author=rng.choice(users),
            created=200 + j, score=rng.randrange(-2, 9)))
    d = make_dataset(posts, comments)

    k = 3
    dominant_by_post = {p.id: frozenset(
        t for t in range(k) if rng.random() < 0.4) for p in d.posts}
    assignment = DominantTopicAssignment(
        doc_ids=tuple(sorted(dominant_by_post)),
        thresholds=tuple((0.0, 0.0) for _ in range(k)),
        dominant=tuple(dominant_by_post[i] for i in sorted(dominant_by_post)),
        topic_presence=(0.0,) * k,
    )

    graph = build_graph(d)
    metrics = contribution_and_influence(
        compute_user_metrics(d, graph, assignment))
    oracle = brute_force_metrics(d, dominant_by_post)

    assert {m.user for m in metrics} == set(oracle)
    for m in metrics:
        want = oracle[m.user]
        assert m.comment_count == want["C"]
        assert m.out_degree == want["out"]
        assert m.alpha == want["alpha"]
        assert m.reach == want["R"]
        assert m.influence == want["I"]
        if want["tau"] is None:
            assert m.tau is None
            assert m.topic_fractions == {}
        else:
            assert m.tau == want["tau"]
            assert abs(sum(m.topic_fractions.values()) - 1.0) <= 1e-9


def test_graphml_and_dot_exports():
    graph = build_graph(hand_fixture())
    gml = graphml_text(graph.nodes, graph.edges)
    assert gml.startswith('<?xml version="1.0"')
    assert '<node id="u1"/>' in gml
    assert '<edge source="u2" target="u1"><data key="weight">2</data></edge>' in gml
    dot = dot_text(graph.nodes, graph.edges)
    assert dot.splitlines()[0] == "digraph interactions {"
    assert '  "u2" -> "u1" [weight=2];' in dot
    assert dot.rstrip().endswith("}")


def test_dot_escapes_quotes():
    text = dot_text(('we"ird',), (('we"ird', 'we"ird', 1),))
    assert '\\"' in text
