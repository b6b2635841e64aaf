"""Graph-based phrase ranking: TextRank, SingleRank, PositionRank,
TopicRank and MultipartiteRank over a shared power-iteration core.

Everything here is pure and deterministic: node order follows first
occurrence, all tie-breaks are rule-based, and no randomness exists
anywhere. Scores are normalized PageRank values (they sum to one), so
phrase scores are comparable across runs and algorithms.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

from .errors import EmptyCandidates, EmptyGraph
from .tagging import CandidatePhrase, TaggedDoc

TEXTRANK = "textrank"
SINGLERANK = "singlerank"
POSITIONRANK = "positionrank"
TOPICRANK = "topicrank"
MULTIPARTITERANK = "multipartiterank"
ALGORITHMS = (TEXTRANK, SINGLERANK, POSITIONRANK, TOPICRANK, MULTIPARTITERANK)

_CANDIDATE_POS = frozenset({"NOUN", "PROPN", "ADJ", "VERB"})


@dataclass(frozen=True)
class RankParams:
    """Knobs for every ranking algorithm, all with conventional defaults."""

    damping: float = 0.85
    tol: float = 1e-6
    max_iter: int = 100
    textrank_window: int = 2
    singlerank_window: int = 10
    positionrank_window: int = 10
    clustering_threshold: float = 0.25
    multipartite_alpha: float = 1.1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "RankParams":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class WordGraph:
    nodes: list[str]
    adjacency: dict[str, dict[str, float]]
    occurrence_index: dict[str, list[int]]


@dataclass
class TopicGraph:
    clusters: list[list[CandidatePhrase]]
    adjacency: dict[int, dict[int, float]]
    representatives: list[CandidatePhrase]


@dataclass
class RankedPhrases:
    items: list[tuple[CandidatePhrase, float]]
    algorithm: str


def build_word_graph(doc: TaggedDoc, candidates: list[CandidatePhrase],
                     window: int, weighted: bool) -> WordGraph:
    """Co-occurrence graph over the distinct words of the candidates.

    Two words share an edge iff some pair of their occurrences sits at
    token distance < window in the full token sequence; the weight counts
    such pairs when `weighted`, else it is 1.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    member_norms = set()
    for cand in candidates:
        for i in range(cand.span[0], cand.span[1] + 1):
            member_norms.add(doc.tokens[i].norm)
    occurrence_index: dict[str, list[int]] = {}
    for token in doc.tokens:
        if token.norm in member_norms and token.pos in _CANDIDATE_POS:
            occurrence_index.setdefault(token.norm, []).append(token.index)
    nodes = sorted(occurrence_index, key=lambda n: occurrence_index[n][0])
    adjacency: dict[str, dict[str, float]] = {n: {} for n in nodes}
    for ai, u in enumerate(nodes):
        for v in nodes[ai + 1:]:
            count = sum(1
                        for pu in occurrence_index[u]
                        for pv in occurrence_index[v]
                        if abs(pu - pv) < window)
            if count:
                weight = float(count) if weighted else 1.0
                adjacency[u][v] = weight
                adjacency[v][u] = weight
    return WordGraph(nodes=nodes, adjacency=adjacency,
                     occurrence_index=occurrence_index)


def pagerank(graph, damping: float = 0.85,
             personalization: Mapping | None = None,
             tol: float = 1e-6, max_iter: int = 100) -> dict:
    """Normalized PageRank over a (possibly directed) weighted adjacency.

    `graph` is a WordGraph/TopicGraph or a raw {node: {neighbor: weight}}
    mapping. Nodes without out-edges hand their mass to the teleport
    vector, so the scores always sum to one.
    """
    adjacency = getattr(graph, "adjacency", graph)
    nodes = list(adjacency)
    if not nodes:
        raise EmptyGraph("pagerank over zero nodes")
    n = len(nodes)
    if personalization is None:
        v = {u: 1.0 / n for u in nodes}
    else:
        total = sum(personalization.get(u, 0.0) for u in nodes)
        if any(personalization.get(u, 0.0) < 0 for u in nodes):
            raise ValueError("personalization must be nonnegative")
        if abs(total - 1.0) > 1e-6:
            raise ValueError("personalization must sum to 1")
        v = {u: personalization.get(u, 0.0) for u in nodes}
    out_weight = {u: sum(adjacency[u].values()) for u in nodes}
    p = dict(v)
    for _ in range(max_iter):
        dangle = sum(p[u] for u in nodes if out_weight[u] == 0.0)
        nxt = {u: (1.0 - damping) * v[u] + damping * dangle * v[u] for u in nodes}
        for u in nodes:
            if out_weight[u] == 0.0:
                continue
            share = damping * p[u] / out_weight[u]
            for w, weight in adjacency[u].items():
                nxt[w] += share * weight
        delta = sum(abs(nxt[u] - p[u]) for u in nodes)
        p = nxt
        if delta < tol:
            break
    return p


def _jaccard(a: frozenset, b: frozenset) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def cluster_candidates(candidates: list[CandidatePhrase],
                       threshold: float = 0.25) -> list[list[CandidatePhrase]]:
    """Average-linkage agglomeration on stem-set Jaccard similarity.

    Merging continues while the best pair reaches the threshold; equal
    similarities merge the earliest-occurring pair first, which makes the
    clustering deterministic for a fixed candidate order.
    """
    clusters = [[c] for c in sorted(candidates, key=lambda c: c.first_occurrence)]
    while len(clusters) > 1:
        best = None
        best_sim = -1.0
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                pair_sims = [_jaccard(a.stems, b.stems)
                             for a in clusters[i] for b in clusters[j]]
                sim = sum(pair_sims) / len(pair_sims)
                if sim > best_sim:
                    best_sim = sim
                    best = (i, j)
        if best is None or best_sim < threshold:
            break
        i, j = best
        clusters[i].extend(clusters[j])
        del clusters[j]
    return clusters


def _topic_graph(candidates: list[CandidatePhrase],
                 threshold: float) -> TopicGraph:
    clusters = cluster_candidates(candidates, threshold)
    adjacency: dict[int, dict[int, float]] = {i: {} for i in range(len(clusters))}
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            weight = sum(1.0 / abs(a.first_occurrence - b.first_occurrence)
                         for a in clusters[i] for b in clusters[j])
            if weight > 0.0:
                adjacency[i][j] = weight
                adjacency[j][i] = weight
    representatives = [min(cluster, key=lambda c: c.first_occurrence)
                       for cluster in clusters]
    return TopicGraph(clusters=clusters, adjacency=adjacency,
                      representatives=representatives)


def _multipartite_scores(candidates: list[CandidatePhrase],
                         params: RankParams) -> list[float]:
    clusters = cluster_candidates(candidates, params.clustering_threshold)
    topic_of = {}
    for t, cluster in enumerate(clusters):
        for cand in cluster:
            topic_of[id(cand)] = t
    index_of = {id(c): i for i, c in enumerate(candidates)}
    adjacency: dict[int, dict[int, float]] = {i: {} for i in range(len(candidates))}
    for i, a in enumerate(candidates):
        for j, b in enumerate(candidates):
            if i == j or topic_of[id(a)] == topic_of[id(b)]:
                continue
            adjacency[i][j] = 1.0 / abs(a.first_occurrence - b.first_occurrence)
    # promote each topic's first occurring candidate: every incoming edge
    # gains alpha * e^(1/(1+offset)) * (weight from the topic's other members)
    alpha = params.multipartite_alpha
    boosts: dict[tuple[int, int], float] = {}
    for cluster in clusters:
        if len(cluster) < 2:
            continue
        first = min(cluster, key=lambda c: c.first_occurrence)
        fi = index_of[id(first)]
        factor = alpha * math.exp(1.0 / (1.0 + first.first_occurrence))
        for end in adjacency[fi]:
            booster = sum(adjacency[index_of[id(v)]].get(end, 0.0)
                          for v in cluster if v is not first)
            if booster:
                boosts[(end, fi)] = factor * booster
    for (src, dst), extra in boosts.items():
        adjacency[src][dst] = adjacency[src].get(dst, 0.0) + extra
    scores = pagerank(adjacency, damping=params.damping,
                      tol=params.tol, max_iter=params.max_iter)
    return [scores[i] for i in range(len(candidates))]


def _word_graph_scores(doc: TaggedDoc, candidates: list[CandidatePhrase],
                       algorithm: str, params: RankParams) -> dict[str, float]:
    """Per-word scores for the word-graph family (topic algorithms reuse
    the TextRank graph, which only matters for word-granularity output)."""
    if algorithm == SINGLERANK:
        graph = build_word_graph(doc, candidates, params.singlerank_window, True)
        personalization = None
    elif algorithm == POSITIONRANK:
        graph = build_word_graph(doc, candidates, params.positionrank_window, True)
        raw = {node: sum(1.0 / (pos + 1.0) for pos in positions)
               for node, positions in graph.occurrence_index.items()}
        total = sum(raw.values())
        personalization = {node: value / total for node, value in raw.items()}
    else:
        graph = build_word_graph(doc, candidates, params.textrank_window, False)
        personalization = None
    return pagerank(graph, damping=params.damping,
                    personalization=personalization,
                    tol=params.tol, max_iter=params.max_iter)


def _ordered(items: list[tuple[CandidatePhrase, float]]) -> list[tuple[CandidatePhrase, float]]:
    return sorted(items, key=lambda it: (-it[1], it[0].first_occurrence, it[0].surface))


def rank_phrases(doc: TaggedDoc, candidates: list[CandidatePhrase],
                 algorithm: str, params: RankParams = RankParams()) -> RankedPhrases:
    """Score and order every candidate phrase; no phrase is dropped.

    Word-graph algorithms score a phrase as the sum of its member words'
    scores; topic algorithms give each phrase its topic's (or its own
    node's) score.
    """
    if not candidates:
        raise EmptyCandidates("rank_phrases needs at least one candidate")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    if algorithm in (TEXTRANK, SINGLERANK, POSITIONRANK):
        word_scores = _word_graph_scores(doc, candidates, algorithm, params)
        items = []
        for cand in candidates:
            score = sum(word_scores.get(doc.tokens[i].norm, 0.0)
                        for i in range(cand.span[0], cand.span[1] + 1))
            items.append((cand, score))
    elif algorithm == TOPICRANK:
        topic_graph = _topic_graph(candidates, params.clustering_threshold)
        scores = pagerank(topic_graph, damping=params.damping,
                          tol=params.tol, max_iter=params.max_iter)
        items = []
        for t, cluster in enumerate(topic_graph.clusters):
            for cand in cluster:
                items.append((cand, scores[t]))
    else:
        per_candidate = _multipartite_scores(candidates, params)
        order = {id(c): i for i, c in enumerate(candidates)}
        items = [(cand, per_candidate[order[id(cand)]]) for cand in candidates]

    return RankedPhrases(items=_ordered(items), algorithm=algorithm)
