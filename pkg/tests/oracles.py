"""Independent oracles the implementation is checked against.

These deliberately use different machinery from the package: the grammar
oracle runs a regex over a tag string instead of a token scanner, and the
PageRank oracle builds the dense Google matrix with numpy instead of
looping over sparse adjacency dicts.
"""

from __future__ import annotations

import re

import numpy as np

_TAG_CHAR = {"NOUN": "N", "PROPN": "P", "ADJ": "A", "VERB": "V"}

_NP_RE = re.compile(r"[NPA]*[NP]")
_VP_RE = re.compile(r"V[NPA]*[NP]")


def grammar_oracle(pos_tags: list[str],
                   sentence_bounds: list[tuple[int, int]]) -> list[tuple[int, int, str]]:
    """(start, end, kind) spans via regex matching over the tag string."""
    spans = []
    for s, e in sentence_bounds:
        text = "".join(_TAG_CHAR.get(t, "x") for t in pos_tags[s:e])
        for match in _NP_RE.finditer(text):
            spans.append((s + match.start(), s + match.end() - 1, "NP"))
        for match in _VP_RE.finditer(text):
            spans.append((s + match.start(), s + match.end() - 1, "VP"))
    spans.sort(key=lambda sp: (sp[0], sp[2]))
    return spans


def dense_pagerank(nodes: list, adjacency: dict, damping: float = 0.85,
                   personalization: dict | None = None,
                   iterations: int = 200, tol: float = 1e-13) -> dict:
    """Power iteration on the dense Google matrix."""
    n = len(nodes)
    index = {u: i for i, u in enumerate(nodes)}
    W = np.zeros((n, n))
    for u, neighbors in adjacency.items():
        for v, w in neighbors.items():
            W[index[u], index[v]] = w
    if personalization is None:
        v = np.full(n, 1.0 / n)
    else:
        v = np.array([personalization.get(u, 0.0) for u in nodes], dtype=float)
    row_sums = W.sum(axis=1)
    P = np.zeros((n, n))
    for i in range(n):
        if row_sums[i] > 0:
            P[i] = W[i] / row_sums[i]
        else:
            P[i] = v  # dangling rows teleport
    G = damping * P + (1.0 - damping) * np.outer(np.ones(n), v)
    p = v.copy()
    for _ in range(iterations):
        nxt = G.T @ p
        if np.abs(nxt - p).sum() < tol:
            p = nxt
            break
        p = nxt
    return {u: float(p[index[u]]) for u in nodes}
