import random

import pytest

from keyprompt.comments import extract_comment
from keyprompt.errors import EmptyCandidates, EmptyGraph
from keyprompt.ranking import (ALGORITHMS, RankParams, build_word_graph,
                               cluster_candidates, pagerank, rank_phrases)
from keyprompt.tagging import select_candidates, tag, tokenize

from .oracles import dense_pagerank
from .test_tagging import make_doc

PARAMS = RankParams()


def graph_of(words_with_tags, window=2, weighted=False):
    doc = make_doc(words_with_tags)
    return doc, build_word_graph(doc, select_candidates(doc), window, weighted)


# --- build_word_graph ---------------------------------------------------------

def test_adjacent_words_window2():
    _, graph = graph_of([("a", "NOUN"), ("b", "NOUN"), ("c", "NOUN")])
    assert graph.adjacency["a"] == {"b": 1.0}
    assert graph.adjacency["b"] == {"a": 1.0, "c": 1.0}
    assert graph.adjacency["c"] == {"b": 1.0}


def test_distance_strictly_less_than_window():
    doc = make_doc([("a", "NOUN"), ("x", "DET"), ("b", "NOUN")])
    cands = select_candidates(doc)
    narrow = build_word_graph(doc, cands, window=2, weighted=False)
    assert narrow.adjacency["a"] == {}
    wide = build_word_graph(doc, cands, window=3, weighted=False)
    assert wide.adjacency["a"] == {"b": 1.0}


def test_weighted_counts_occurrence_pairs():
    # pairs within distance<2: a0-b1, a2-b1, a2-b3 -> weight 3
    doc = make_doc([("a", "NOUN"), ("b", "NOUN"), ("a", "NOUN"), ("b", "NOUN")])
    cands = select_candidates(doc)
    graph = build_word_graph(doc, cands, window=2, weighted=True)
    assert graph.adjacency["a"]["b"] == 3.0
    unweighted = build_word_graph(doc, cands, window=2, weighted=False)
    assert unweighted.adjacency["a"]["b"] == 1.0


def test_graph_has_no_self_loops_and_is_symmetric():
    doc = make_doc([("a", "NOUN"), ("a", "NOUN"), ("b", "NOUN")])
    graph = build_word_graph(doc, select_candidates(doc), 2, True)
    assert "a" not in graph.adjacency["a"]
    for u, nbrs in graph.adjacency.items():
        for v, w in nbrs.items():
            assert graph.adjacency[v][u] == w


def test_non_candidate_words_excluded():
    doc = make_doc([("the", "DET"), ("list", "NOUN")])
    graph = build_word_graph(doc, select_candidates(doc), 2, False)
    assert graph.nodes == ["list"]


def test_empty_doc_empty_graph():
    doc = make_doc([])
    graph = build_word_graph(doc, [], 2, False)
    assert graph.nodes == []


# --- pagerank -------------------------------------------------------------------

def test_three_cycle_uniform():
    adjacency = {u: {} for u in "abc"}
    for u, v in (("a", "b"), ("b", "c"), ("c", "a")):
        adjacency[u][v] = 1.0
        adjacency[v][u] = 1.0
    scores = pagerank(adjacency, tol=1e-12, max_iter=500)
    for value in scores.values():
        assert value == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_single_node_scores_one():
    assert pagerank({"a": {}}) == {"a": 1.0}


def test_star_center_dominates_and_matches_oracle():
    adjacency = {"c": {}, "l1": {}, "l2": {}, "l3": {}}
    for leaf in ("l1", "l2", "l3"):
        adjacency["c"][leaf] = 1.0
        adjacency[leaf]["c"] = 1.0
    scores = pagerank(adjacency, damping=0.85, tol=1e-13, max_iter=2000)
    oracle = dense_pagerank(list(adjacency), adjacency, damping=0.85)
    for node in adjacency:
        assert scores[node] == pytest.approx(oracle[node], abs=1e-10)
    assert all(scores["c"] > scores[leaf] for leaf in ("l1", "l2", "l3"))


def test_scores_sum_to_one():
    adjacency = {"a": {"b": 2.0}, "b": {"a": 2.0, "c": 1.0}, "c": {"b": 1.0},
                 "d": {}}
    scores = pagerank(adjacency)
    assert sum(scores.values()) == pytest.approx(1.0, abs=1e-9)


def test_empty_graph_raises():
    with pytest.raises(EmptyGraph):
        pagerank({})


def test_personalization_must_sum_to_one():
    with pytest.raises(ValueError):
        pagerank({"a": {"b": 1.0}, "b": {"a": 1.0}},
                 personalization={"a": 0.9, "b": 0.3})


def test_personalization_must_be_nonnegative():
    with pytest.raises(ValueError):
        pagerank({"a": {"b": 1.0}, "b": {"a": 1.0}},
                 personalization={"a": 1.5, "b": -0.5})


def test_weight_doubling_is_invariant():
    rng = random.Random(7)
    adjacency = {i: {} for i in range(6)}
    for i in range(6):
        for j in range(i + 1, 6):
            if rng.random() < 0.6:
                w = rng.uniform(0.5, 4.0)
                adjacency[i][j] = w
                adjacency[j][i] = w
    doubled = {u: {v: 2.0 * w for v, w in nbrs.items()}
               for u, nbrs in adjacency.items()}
    left = pagerank(adjacency, tol=1e-12, max_iter=1000)
    right = pagerank(doubled, tol=1e-12, max_iter=1000)
    assert left == right  # bit-identical: scaling is exact in binary floats


# --- clustering ------------------------------------------------------------------

def _candidates_from(words_sets):
    """Fake candidates with controlled stems at spaced offsets."""
    doc_words = []
    for i, stems in enumerate(words_sets):
        if i:
            doc_words.append((",", "PUNCT"))
        doc_words.append((f"p{i}", "NOUN"))
    doc = make_doc(doc_words)
    cands = select_candidates(doc)
    assert len(cands) == len(words_sets)
    out = []
    for cand, stems in zip(cands, words_sets):
        out.append(cand.__class__(span=cand.span, surface=cand.surface,
                                  kind=cand.kind,
                                  first_occurrence=cand.first_occurrence,
                                  stems=frozenset(stems)))
    return out


def test_equal_stems_merge():
    doc = make_doc([("given", "ADJ"), ("list", "NOUN"), (",", "PUNCT"),
                    ("given", "ADJ"), ("lists", "NOUN")])
    cands = select_candidates(doc)
    assert len(cands) == 2
    clusters = cluster_candidates(cands, 0.25)
    assert len(clusters) == 1


def test_disjoint_stems_stay_apart():
    cands = _candidates_from([{"uppercase", "vowel"}, {"even", "index"}])
    assert len(cluster_candidates(cands, 0.25)) == 2


def test_threshold_boundary_merges():
    # Jaccard({a,b},{b,c}) = 1/3 >= 0.25
    cands = _candidates_from([{"a", "b"}, {"b", "c"}])
    assert len(cluster_candidates(cands, 0.25)) == 1


def test_clustering_deterministic():
    sets = [{"a", "b"}, {"b", "c"}, {"c", "d"}, {"x"}]
    first = cluster_candidates(_candidates_from(sets), 0.25)
    second = cluster_candidates(_candidates_from(sets), 0.25)
    assert [[c.surface for c in cl] for cl in first] == \
        [[c.surface for c in cl] for cl in second]


# --- rank_phrases -----------------------------------------------------------------

APPENDIX_C = "Given a string s, count the number of uppercase vowels in even indices."


def _table3_doc(table3_task, en_tagger):
    comment = extract_comment(table3_task.prompt)
    doc = tag(tokenize(comment.text, "en"), "en", en_tagger)
    return doc, select_candidates(doc)


def test_single_candidate_ranks_first_any_algorithm():
    doc = make_doc([("given", "ADJ"), ("list", "NOUN")])
    cands = select_candidates(doc)
    for algorithm in ALGORITHMS:
        ranked = rank_phrases(doc, cands, algorithm, PARAMS)
        assert [c.surface for c, _ in ranked.items] == ["given list"]


def test_table3_textrank_contains_given_phrases(table3_task, en_tagger):
    doc, cands = _table3_doc(table3_task, en_tagger)
    ranked = rank_phrases(doc, cands, "textrank", PARAMS)
    surfaces = [c.surface for c, _ in ranked.items]
    assert "given list" in surfaces
    assert "given threshold" in surfaces


def test_appendix_c_noun_candidates(en_tagger):
    doc = tag(tokenize(APPENDIX_C, "en"), "en", en_tagger)
    cands = select_candidates(doc)
    nps = [c.surface for c in cands if c.kind == "NP"]
    assert "uppercase vowels" in nps
    assert "even indices" in nps


def test_empty_candidates_raise():
    doc = make_doc([("the", "DET")])
    with pytest.raises(EmptyCandidates):
        rank_phrases(doc, [], "textrank", PARAMS)


def _random_doc(rng):
    tags = ["NOUN", "PROPN", "ADJ", "VERB", "DET", "ADP", "PUNCT"]
    words = [f"w{rng.randint(0, 8)}" for _ in range(rng.randint(4, 25))]
    return make_doc([(w, rng.choice(tags)) for w in words])


def test_all_algorithms_permute_candidates_and_sort():
    rng = random.Random(42)
    checked = 0
    while checked < 30:
        doc = _random_doc(rng)
        cands = select_candidates(doc)
        if not cands:
            continue
        checked += 1
        for algorithm in ALGORITHMS:
            ranked = rank_phrases(doc, cands, algorithm, PARAMS)
            assert sorted(c.span for c, _ in ranked.items) == \
                sorted(c.span for c in cands)
            scores = [s for _, s in ranked.items]
            assert all(a >= b for a, b in zip(scores, scores[1:]))


def test_ranking_bit_stable():
    rng = random.Random(5)
    doc = _random_doc(rng)
    cands = select_candidates(doc)
    assert cands
    for algorithm in ALGORITHMS:
        first = rank_phrases(doc, cands, algorithm, PARAMS)
        second = rank_phrases(doc, cands, algorithm, PARAMS)
        assert [(c.surface, s) for c, s in first.items] == \
            [(c.surface, s) for c, s in second.items]


def test_ties_break_by_first_occurrence(table3_task, en_tagger):
    doc, cands = _table3_doc(table3_task, en_tagger)
    ranked = rank_phrases(doc, cands, "textrank", PARAMS)
    items = ranked.items
    assert items[0][0].surface == "given list"
    assert items[1][0].surface == "given threshold"
    assert items[0][1] == items[1][1]  # symmetric star: a genuine tie


def test_positionrank_prefers_early_words():
    # identical local structure; a-b early, c-d late
    words = [("a", "NOUN"), ("b", "NOUN"), (".", "PUNCT"),
             ("filler", "DET"), ("filler", "DET"), ("filler", "DET"),
             ("c", "NOUN"), ("d", "NOUN"), (".", "PUNCT")]
    doc = make_doc(words)
    doc = doc.__class__(lang="en", tokens=doc.tokens,
                        sentence_bounds=((0, 3), (3, 9)))
    cands = select_candidates(doc)
    ranked = rank_phrases(doc, cands, "positionrank", PARAMS)
    by_surface = {c.surface: s for c, s in ranked.items}
    assert by_surface["a b"] > by_surface["c d"]


def test_topicrank_representative_first():
    doc = make_doc([("given", "ADJ"), ("list", "NOUN"), ("of", "ADP"),
                    ("numbers", "NOUN"), ("and", "CCONJ"),
                    ("given", "ADJ"), ("lists", "NOUN")])
    cands = select_candidates(doc)
    ranked = rank_phrases(doc, cands, "topicrank", PARAMS)
    surfaces = [c.surface for c, _ in ranked.items]
    # "given list" and "given lists" share a topic; the earlier one leads
    assert surfaces.index("given list") < surfaces.index("given lists")


def test_multipartite_boost_promotes_first_variant():
    doc = make_doc([("given", "ADJ"), ("list", "NOUN"), ("of", "ADP"),
                    ("numbers", "NOUN"), ("and", "CCONJ"),
                    ("given", "ADJ"), ("lists", "NOUN"), ("of", "ADP"),
                    ("words", "NOUN")])
    cands = select_candidates(doc)
    ranked = rank_phrases(doc, cands, "multipartiterank", PARAMS)
    by_surface = {c.surface: s for c, s in ranked.items}
    assert by_surface["given list"] > by_surface["given lists"]
