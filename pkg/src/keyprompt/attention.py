"""The extraction pipeline: comment -> tagged doc -> candidates -> ranked
phrases -> final attention set, with the granularity / algorithm / top-k /
phrase-kind knobs, plus the human-override and LLM-extraction variants."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .comments import extract_comment, strip_example_lines
from .corpus import TaskInstance
from .errors import EmptyAttention, FormatError, ParseEmpty
from .ranking import (ALGORITHMS, TEXTRANK, TOPICRANK, MULTIPARTITERANK,
                      RankParams, _word_graph_scores, rank_phrases)
from .tagging import TaggerModel, select_candidates, tag, tokenize

GRANULARITIES = ("word", "phrase", "sentence")
KIND_FILTERS = ("noun_only", "verb_only", "mixed")
SOURCES = ("auto", "human", "llm")

ALL = None  # top_k sentinel: keep every item


@dataclass(frozen=True)
class AttentionItem:
    surface: str
    kind: str  # NP | VP | WORD | SENTENCE
    score: float


@dataclass(frozen=True)
class AttentionSet:
    task_id: str
    granularity: str
    source: str
    items: tuple[AttentionItem, ...]

    def surfaces(self) -> list[str]:
        return [item.surface for item in self.items]

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "granularity": self.granularity,
            "source": self.source,
            "items": [{"surface": i.surface, "kind": i.kind, "score": i.score}
                      for i in self.items],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)


@dataclass(frozen=True)
class ExtractionConfig:
    granularity: str = "phrase"
    algorithm: str = TEXTRANK
    kind_filter: str = "mixed"
    top_k: int | None = ALL
    rank_params: RankParams = field(default_factory=RankParams)
    strip_examples: bool = False

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.kind_filter not in KIND_FILTERS:
            raise ValueError(f"unknown kind filter {self.kind_filter!r}")
        if self.top_k is not ALL and self.top_k < 0:
            raise ValueError("top_k must be ALL or >= 0")

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "algorithm": self.algorithm,
            "kind_filter": self.kind_filter,
            "top_k": "all" if self.top_k is ALL else self.top_k,
            "rank_params": self.rank_params.to_dict(),
            "strip_examples": self.strip_examples,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractionConfig":
        top_k = data.get("top_k", "all")
        if isinstance(top_k, str):
            top_k = ALL if top_k.lower() == "all" else int(top_k)
        return cls(
            granularity=data.get("granularity", "phrase"),
            algorithm=data.get("algorithm", TEXTRANK),
            kind_filter=data.get("kind_filter", "mixed"),
            top_k=top_k,
            rank_params=RankParams.from_dict(data.get("rank_params", {})),
            strip_examples=bool(data.get("strip_examples", False)),
        )


_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?。！？…])\s+")


def split_sentences(text: str) -> list[str]:
    """Sentence substrings with internal whitespace flattened to spaces."""
    sentences = []
    for part in _SENTENCE_SPLIT_RE.split(text):
        flat = " ".join(part.split())
        if flat:
            sentences.append(flat)
    return sentences


def _dedup(items: list[AttentionItem]) -> tuple[AttentionItem, ...]:
    seen = set()
    kept = []
    for item in items:
        key = item.surface.casefold()
        if key in seen:
            continue
        seen.add(key)
        kept.append(item)
    return tuple(kept)


def extract_attention(task: TaskInstance, cfg: ExtractionConfig,
                      model: TaggerModel) -> AttentionSet:
    """Run the automatic pipeline for one task.

    top_k == 0 short-circuits to the empty set (the no-attention
    baseline), comment or not. Raises NoCommentFound from the comment
    stage and EmptyAttention when a nonzero top_k yields nothing.
    """
    if cfg.top_k == 0:
        return AttentionSet(task_id=task.task_id, granularity=cfg.granularity,
                            source="auto", items=())
    comment = extract_comment(task.prompt)
    text = strip_example_lines(comment.text) if cfg.strip_examples else comment.text

    if cfg.granularity == "sentence":
        items = [AttentionItem(surface=s, kind="SENTENCE", score=1.0)
                 for s in split_sentences(text)]
    else:
        tokens = tokenize(text, task.nl_lang)
        doc = tag(tokens, task.nl_lang, model)
        candidates = select_candidates(doc)
        if cfg.granularity == "word":
            items = _word_items(doc, candidates, cfg)
        else:
            items = _phrase_items(doc, candidates, cfg)

    items = _dedup(items)
    if cfg.top_k is not ALL:
        items = items[:cfg.top_k]
    if not items:
        raise EmptyAttention(f"{task.task_id}: pipeline produced no items")
    return AttentionSet(task_id=task.task_id, granularity=cfg.granularity,
                        source="auto", items=items)


def _phrase_items(doc, candidates, cfg) -> list[AttentionItem]:
    if not candidates:
        return []
    ranked = rank_phrases(doc, candidates, cfg.algorithm, cfg.rank_params)
    keep = {"noun_only": ("NP",), "verb_only": ("VP",),
            "mixed": ("NP", "VP")}[cfg.kind_filter]
    return [AttentionItem(surface=c.surface, kind=c.kind, score=s)
            for c, s in ranked.items if c.kind in keep]


def _word_items(doc, candidates, cfg) -> list[AttentionItem]:
    if not candidates:
        return []
    # topic algorithms have no word graph of their own; fall back to the
    # default word graph so the granularity knob stays orthogonal
    algorithm = cfg.algorithm
    if algorithm in (TOPICRANK, MULTIPARTITERANK):
        algorithm = TEXTRANK
    scores = _word_graph_scores(doc, candidates, algorithm, cfg.rank_params)
    first_at = {}
    for token in doc.tokens:
        if token.norm in scores and token.norm not in first_at:
            first_at[token.norm] = token.index
    ordered = sorted(scores,
                     key=lambda w: (-scores[w], first_at.get(w, 0), w))
    return [AttentionItem(surface=w, kind="WORD", score=scores[w])
            for w in ordered]


def select_top_k(attention: AttentionSet, k: int | None) -> AttentionSet:
    """First min(k, n) items; ALL (None) is the identity."""
    if k is ALL:
        return attention
    if k < 0:
        raise ValueError("k must be >= 0")
    return replace(attention, items=attention.items[:k])


def filter_by_kind(attention: AttentionSet, kind_filter: str) -> AttentionSet:
    """Keep NP / VP / both, preserving order. Phrase granularity only."""
    if attention.granularity != "phrase":
        raise ValueError("kind filter applies to phrase granularity only")
    if kind_filter not in KIND_FILTERS:
        raise ValueError(f"unknown kind filter {kind_filter!r}")
    keep = {"noun_only": ("NP",), "verb_only": ("VP",),
            "mixed": ("NP", "VP")}[kind_filter]
    return replace(attention,
                   items=tuple(i for i in attention.items if i.kind in keep))


def load_attention_overrides(path: str | Path) -> dict[str, list[str]]:
    """JSON map task_id -> ordered list of phrases (the human setting)."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(exc.lineno, "<json>", str(exc)) from exc
    if not isinstance(data, dict):
        raise FormatError(0, "<root>", "overrides must be a JSON object")
    for task_id, phrases in data.items():
        if not isinstance(phrases, list) or any(not isinstance(p, str) for p in phrases):
            raise FormatError(0, task_id, f"{task_id}: value must be a list of strings")
    return data


def human_attention(task_id: str, surfaces: list[str]) -> AttentionSet:
    """Human-picked phrases in listed order, uniform score."""
    items = _dedup([AttentionItem(surface=s, kind="NP", score=1.0)
                    for s in surfaces if s])
    return AttentionSet(task_id=task_id, granularity="phrase",
                        source="human", items=items)


def empty_attention(task_id: str) -> AttentionSet:
    return AttentionSet(task_id=task_id, granularity="phrase",
                        source="auto", items=())


_ENUMERATION_RE = re.compile(r"^\s*(?:\d+\s*[.):]\s*|[-*•·]\s*)")
_QUOTES = "\"'“”‘’«»「」"

EXTRACTION_PROMPT = (
    "Extract the {n} most important key phrases from the code description "
    "below and rank them by importance.\n"
    "Reply with one phrase per line, most important first, and nothing else.\n"
    "\n"
    "### Code Description\n"
    "{comment}"
)


def parse_llm_phrases(reply: str) -> list[str]:
    """Newline/comma-split phrases, enumeration prefixes and quotes removed."""
    phrases = []
    seen = set()
    for chunk in re.split(r"[\n,]", reply):
        phrase = _ENUMERATION_RE.sub("", chunk).strip().strip(_QUOTES).strip()
        if not phrase:
            continue
        key = phrase.casefold()
        if key in seen:
            continue
        seen.add(key)
        phrases.append(phrase)
    return phrases


def llm_extract(task: TaskInstance, client, n: int = 10) -> AttentionSet:
    """Ask a chat model for the key phrases instead of the graph ranker.

    `client` is a coder.ChatClient (or anything with the same complete()
    signature). Raises ClientError subclasses from the transport and
    ParseEmpty when no phrase survives parsing.
    """
    from .coder import GenParams, PromptBundle  # local import to avoid a cycle

    comment = extract_comment(task.prompt)
    prompt = EXTRACTION_PROMPT.format(n=n, comment=comment.text)
    bundle = PromptBundle(messages=(("user", prompt),), style="one_chat",
                          task_id=task.task_id)
    result = client.complete(bundle, GenParams())
    phrases = parse_llm_phrases(result.raw)
    if not phrases:
        raise ParseEmpty(f"{task.task_id}: no phrase in LLM reply")
    items = tuple(AttentionItem(surface=p, kind="NP", score=1.0)
                  for p in phrases)
    return AttentionSet(task_id=task.task_id, granularity="phrase",
                        source="llm", items=items)
