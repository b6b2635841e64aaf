"""Tokenization, Universal-POS tagging, and POS-pattern candidate selection.

Candidate phrases are token spans matching the two grammar productions

    NP: <NOUN|PROPN|ADJ>*<NOUN|PROPN>
    VP: <VERB><NP>

matched longest-first and non-overlapping within each kind. Tagging goes
through a pluggable TaggerModel; the shipped lexicon tagger covers the
benchmark vocabulary, and an averaged-perceptron tagger can be trained
from CoNLL-U data for anything bigger.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Protocol

from .errors import ModelMissing, UnsupportedLanguage

UPOS_TAGS = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
}

SPACE_DELIMITED = {"en", "fr", "es"}
LEXICON_SEGMENTED = {"zh", "ja"}

_SENTENCE_FINAL = {".", "!", "?", "。", "！", "？", "…"}


@dataclass(frozen=True)
class Token:
    surface: str
    norm: str
    index: int
    stem: str
    pos: str | None = None


@dataclass(frozen=True)
class TaggedDoc:
    lang: str
    tokens: tuple[Token, ...]
    sentence_bounds: tuple[tuple[int, int], ...]  # half-open token ranges


@dataclass(frozen=True)
class CandidatePhrase:
    span: tuple[int, int]  # inclusive token indices
    surface: str
    kind: str  # "NP" | "VP"
    first_occurrence: int
    stems: frozenset[str]


@dataclass(frozen=True)
class PosGrammar:
    np_inner: frozenset[str] = frozenset({"NOUN", "PROPN", "ADJ"})
    np_final: frozenset[str] = frozenset({"NOUN", "PROPN"})
    vp_head: frozenset[str] = frozenset({"VERB"})


DEFAULT_GRAMMAR = PosGrammar()


# --- stemming ------------------------------------------------------------

def stem(word: str, lang: str) -> str:
    """Light suffix-stripping stem; identity for zh/ja.

    Only feeds topic clustering, so approximate equality is enough.
    """
    if lang in LEXICON_SEGMENTED or len(word) <= 3:
        return word
    if lang == "en":
        if word.endswith("sses"):
            return word[:-2]
        if word.endswith("ies") and len(word) > 4:
            return word[:-3] + "y"
        if word.endswith("ing") and len(word) > 5:
            return word[:-3]
        if word.endswith("ed") and len(word) > 4:
            return word[:-2]
        if word.endswith("s") and not word.endswith(("ss", "us", "is")):
            return word[:-1]
        return word
    if lang in ("fr", "es"):
        if word.endswith("es") and len(word) > 4:
            return word[:-2]
        if word.endswith(("s", "x")):
            return word[:-1]
        return word
    return word


# --- tokenization --------------------------------------------------------

_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?|\w+(?:['’-]\w+)*|[^\w\s]")
_PUNCT_RE = re.compile(r"^[^\w\s]+$")
_NUM_RE = re.compile(r"^\d+(?:\.\d+)?$")
_IDENTIFIER_RE = re.compile(r"^\w*(?:_\w*|[a-z][A-Z]\w*)\w*$")


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return (
        0x4E00 <= code <= 0x9FFF      # CJK unified
        or 0x3400 <= code <= 0x4DBF   # extension A
        or 0x3040 <= code <= 0x30FF   # hiragana + katakana
        or 0xF900 <= code <= 0xFAFF
    )


def _segment_cjk(text: str, lexicon: frozenset[str], max_len: int) -> list[str]:
    pieces = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if not _is_cjk(ch):
            match = _TOKEN_RE.match(text, i)
            if match:
                pieces.append(match.group())
                i = match.end()
            else:
                i += 1
            continue
        matched = None
        for length in range(min(max_len, len(text) - i), 1, -1):
            cand = text[i:i + length]
            if cand in lexicon:
                matched = cand
                break
        if matched is None:
            matched = ch
        pieces.append(matched)
        i += len(matched)
    return pieces


_SEGMENTATION_LEXICONS: dict[str, frozenset[str]] = {}


def _segmentation_lexicon(lang: str) -> frozenset[str]:
    if lang not in _SEGMENTATION_LEXICONS:
        _SEGMENTATION_LEXICONS[lang] = frozenset(shipped_lexicon(lang))
    return _SEGMENTATION_LEXICONS[lang]


def tokenize(text: str, lang: str,
             lexicon: Iterable[str] | None = None,
             fallback: str | None = None) -> list[Token]:
    """Deterministic segmentation into Tokens with POS unset.

    Space-delimited languages split on whitespace and punctuation; zh/ja
    use longest-match lexicon segmentation with a single-character
    fallback. Unknown language tags raise UnsupportedLanguage unless
    fallback="space" forces whitespace segmentation.
    """
    text = unicodedata.normalize("NFC", text)
    if lang in SPACE_DELIMITED or fallback == "space":
        pieces = _TOKEN_RE.findall(text)
    elif lang in LEXICON_SEGMENTED:
        words = frozenset(lexicon) if lexicon is not None else _segmentation_lexicon(lang)
        max_len = max((len(w) for w in words), default=1)
        pieces = _segment_cjk(text, words, max_len)
    else:
        raise UnsupportedLanguage(f"no segmenter for language {lang!r}")
    tokens = []
    for i, piece in enumerate(pieces):
        norm = piece.lower()
        tokens.append(Token(surface=piece, norm=norm, index=i,
                            stem=stem(norm, lang)))
    return tokens


# --- tagger models --------------------------------------------------------

class TaggerModel(Protocol):
    lang: str

    def tag_sequence(self, norms: list[str]) -> list[str | None]:
        """One tag (or None for unknown) per input word."""
        ...


def load_lexicon(path: str | Path) -> dict[str, str]:
    """word<TAB>POS lines; later entries win on duplicates."""
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            word, _, pos = line.partition("\t")
            table[unicodedata.normalize("NFC", word).lower()] = pos.strip()
    return table


def shipped_lexicon(lang: str) -> dict[str, str]:
    ref = resources.files("keyprompt.data").joinpath(f"lexicon_{lang}.tsv")
    if not ref.is_file():
        raise ModelMissing(lang)
    with resources.as_file(ref) as path:
        return load_lexicon(path)


_EN_SUFFIX_RULES = (
    ("tion", "NOUN"), ("sion", "NOUN"), ("ment", "NOUN"), ("ness", "NOUN"),
    ("ance", "NOUN"), ("ence", "NOUN"), ("ity", "NOUN"),
    ("ing", "VERB"), ("ize", "VERB"), ("ise", "VERB"),
    ("ous", "ADJ"), ("ive", "ADJ"), ("ful", "ADJ"), ("less", "ADJ"),
    ("able", "ADJ"), ("ible", "ADJ"), ("al", "ADJ"),
    ("ly", "ADV"),
)

_ROMANCE_SUFFIX_RULES = (
    ("tion", "NOUN"), ("ción", "NOUN"), ("cion", "NOUN"), ("té", "NOUN"),
    ("dad", "NOUN"), ("eur", "NOUN"), ("mente", "ADV"), ("ment", "ADV"),
    ("oso", "ADJ"), ("osa", "ADJ"), ("eux", "ADJ"), ("ado", "ADJ"),
    ("ido", "ADJ"), ("ante", "ADJ"), ("ar", "VERB"), ("er", "VERB"),
    ("ir", "VERB"),
)


class LexiconTagger:
    """Lookup tagger with per-language suffix rules for unknown words."""

    def __init__(self, lang: str, lexicon: dict[str, str] | None = None):
        self.lang = lang
        self.lexicon = lexicon if lexicon is not None else shipped_lexicon(lang)
        if lang == "en":
            self.suffix_rules = _EN_SUFFIX_RULES
        elif lang in ("fr", "es"):
            self.suffix_rules = _ROMANCE_SUFFIX_RULES
        else:
            self.suffix_rules = ()

    def tag_sequence(self, norms: list[str]) -> list[str | None]:
        out = []
        for norm in norms:
            tag = self.lexicon.get(norm)
            if tag is None:
                stemmed = stem(norm, self.lang)
                if stemmed != norm:
                    tag = self.lexicon.get(stemmed)
            if tag is None:
                for suffix, rule_tag in self.suffix_rules:
                    if norm.endswith(suffix) and len(norm) > len(suffix) + 1:
                        tag = rule_tag
                        break
            out.append(tag)
        return out


class PerceptronTagger:
    """Averaged perceptron tagger trainable from CoNLL-U word/UPOS columns.

    Greedy left-to-right decoding with the usual word-shape, affix and
    previous-tag features. Training iterates the corpus in file order so
    repeated runs produce identical weights.
    """

    def __init__(self, lang: str):
        self.lang = lang
        self.weights: dict[str, dict[str, float]] = {}
        self.classes: set[str] = set()

    @staticmethod
    def _features(norms: list[str], i: int, prev: str, prev2: str) -> list[str]:
        word = norms[i]
        feats = [
            "bias",
            f"w={word}",
            f"suf3={word[-3:]}",
            f"suf2={word[-2:]}",
            f"pre1={word[:1]}",
            f"prev={prev}",
            f"prev2={prev2}",
            f"prev+w={prev}+{word}",
            f"next={norms[i + 1] if i + 1 < len(norms) else '<END>'}",
        ]
        return feats

    def _score(self, feats: list[str]) -> dict[str, float]:
        scores: dict[str, float] = {}
        for feat in feats:
            for tag, weight in self.weights.get(feat, {}).items():
                scores[tag] = scores.get(tag, 0.0) + weight
        return scores

    def _predict_one(self, feats: list[str]) -> str:
        scores = self._score(feats)
        if not scores:
            return "NOUN"
        # deterministic tie-break on tag name
        return max(sorted(scores), key=lambda t: scores[t])

    def train(self, sentences: list[list[tuple[str, str]]], epochs: int = 5) -> None:
        totals: dict[tuple[str, str], float] = {}
        stamps: dict[tuple[str, str], int] = {}
        step = 0
        for sent in sentences:
            for _, tag in sent:
                self.classes.add(tag)
        for _ in range(epochs):
            for sent in sentences:
                norms = [w.lower() for w, _ in sent]
                prev, prev2 = "<S>", "<S2>"
                for i, (_, gold) in enumerate(sent):
                    feats = self._features(norms, i, prev, prev2)
                    guess = self._predict_one(feats)
                    if guess != gold:
                        for feat in feats:
                            row = self.weights.setdefault(feat, {})
                            for tag, delta in ((gold, 1.0), (guess, -1.0)):
                                key = (feat, tag)
                                totals[key] = totals.get(key, 0.0) + \
                                    (step - stamps.get(key, 0)) * row.get(tag, 0.0)
                                stamps[key] = step
                                row[tag] = row.get(tag, 0.0) + delta
                    prev2, prev = prev, guess
                    step += 1
        # average
        for feat, row in self.weights.items():
            for tag in row:
                key = (feat, tag)
                total = totals.get(key, 0.0) + (step - stamps.get(key, 0)) * row[tag]
                row[tag] = total / step if step else row[tag]

    def tag_sequence(self, norms: list[str]) -> list[str | None]:
        out: list[str | None] = []
        prev, prev2 = "<S>", "<S2>"
        for i in range(len(norms)):
            tag = self._predict_one(self._features(norms, i, prev, prev2))
            out.append(tag)
            prev2, prev = prev, tag
        return out


def load_conllu(path: str | Path) -> list[list[tuple[str, str]]]:
    """Sentences of (form, upos) pairs from a CoNLL-U style file."""
    sentences = []
    current: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                if current:
                    sentences.append(current)
                    current = []
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 4 or "-" in cols[0] or "." in cols[0]:
                continue
            current.append((cols[1], cols[3]))
    if current:
        sentences.append(current)
    return sentences


# --- tagging --------------------------------------------------------------

def _shape_tag(token: Token) -> str | None:
    if _PUNCT_RE.match(token.surface):
        return "PUNCT"
    if _NUM_RE.match(token.surface):
        return "NUM"
    if _IDENTIFIER_RE.match(token.surface):
        # code identifiers (snake_case / camelCase) are not natural language
        return "X"
    return None


def tag(tokens: list[Token], lang: str, model: TaggerModel) -> TaggedDoc:
    """Assign exactly one Universal POS tag to every token.

    Shape rules claim punctuation, numbers and code identifiers; the model
    tags the rest; anything still unknown lands on NOUN.
    """
    if getattr(model, "lang", None) != lang:
        raise ModelMissing(lang)
    norms = [t.norm for t in tokens]
    model_tags = model.tag_sequence(norms)
    tagged = []
    for token, predicted in zip(tokens, model_tags):
        pos = _shape_tag(token) or predicted or "NOUN"
        tagged.append(replace(token, pos=pos))

    bounds = []
    start = 0
    for i, token in enumerate(tagged):
        if token.surface in _SENTENCE_FINAL:
            bounds.append((start, i + 1))
            start = i + 1
    if start < len(tagged):
        bounds.append((start, len(tagged)))
    return TaggedDoc(lang=lang, tokens=tuple(tagged),
                     sentence_bounds=tuple(bounds))


# --- candidate selection ---------------------------------------------------

def _phrase_surface(tokens: Iterable[Token], lang: str) -> str:
    joiner = "" if lang in LEXICON_SEGMENTED else " "
    return joiner.join(t.surface for t in tokens)


def _longest_np(pos: list[str | None], start: int, end: int,
                grammar: PosGrammar) -> tuple[int, int] | None:
    """Longest NP starting exactly at `start`, or None."""
    if start >= end:
        return None
    allowed = grammar.np_inner | grammar.np_final
    j = start
    while j < end and pos[j] in allowed:
        j += 1
    k = j - 1
    while k >= start and pos[k] not in grammar.np_final:
        k -= 1
    if k < start:
        return None
    return (start, k)


def select_candidates(doc: TaggedDoc,
                      grammar: PosGrammar = DEFAULT_GRAMMAR) -> list[CandidatePhrase]:
    """Grammar matches over each sentence, ordered by first occurrence.

    NP and VP are matched independently (longest match, non-overlapping
    within a kind), so a VP's interior NP is emitted as well.
    """
    pos = [t.pos for t in doc.tokens]
    found: list[tuple[int, int, str]] = []
    for s, e in doc.sentence_bounds:
        i = s
        while i < e:  # NP pass
            np = _longest_np(pos, i, e, grammar)
            if np:
                found.append((np[0], np[1], "NP"))
                i = np[1] + 1
            else:
                i += 1
        i = s
        while i < e:  # VP pass
            if pos[i] in grammar.vp_head:
                np = _longest_np(pos, i + 1, e, grammar)
                if np:
                    found.append((i, np[1], "VP"))
                    i = np[1] + 1
                    continue
            i += 1
    found.sort(key=lambda item: (item[0], item[2]))
    candidates = []
    for first, last, kind in found:
        members = doc.tokens[first:last + 1]
        candidates.append(CandidatePhrase(
            span=(first, last),
            surface=_phrase_surface(members, doc.lang),
            kind=kind,
            first_occurrence=first,
            stems=frozenset(t.stem for t in members),
        ))
    return candidates
