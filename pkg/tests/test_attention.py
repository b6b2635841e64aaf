import json

import pytest
from hypothesis import given, strategies as st

from keyprompt.attention import (ALL, AttentionItem, AttentionSet,
                                 ExtractionConfig, empty_attention,
                                 extract_attention, filter_by_kind,
                                 human_attention, llm_extract,
                                 load_attention_overrides, parse_llm_phrases,
                                 select_top_k)
from keyprompt.coder import CompletionResult
from keyprompt.corpus import TaskInstance
from keyprompt.errors import (EmptyAttention, FormatError, NoCommentFound,
                              ParseEmpty)

DEFAULT = ExtractionConfig()


def _set(surfaces, granularity="phrase", kinds=None, scores=None):
    kinds = kinds or ["NP"] * len(surfaces)
    scores = scores or list(range(len(surfaces), 0, -1))
    items = tuple(AttentionItem(surface=s, kind=k, score=float(v))
                  for s, k, v in zip(surfaces, kinds, scores))
    return AttentionSet(task_id="T/0", granularity=granularity,
                        source="auto", items=items)


# --- extract_attention --------------------------------------------------------

def test_table3_default_pipeline(table3_task, en_tagger):
    attention = extract_attention(table3_task, DEFAULT, en_tagger)
    surfaces = attention.surfaces()
    assert "given list" in surfaces
    assert "given threshold" in surfaces
    assert any("numbers" in s for s in surfaces)
    assert attention.source == "auto"


def test_top_k_zero_is_empty_baseline(table3_task, en_tagger):
    cfg = ExtractionConfig(top_k=0)
    attention = extract_attention(table3_task, cfg, en_tagger)
    assert attention.items == ()


def test_top_k_zero_works_without_comment(en_tagger):
    task = TaskInstance(task_id="T/nc", nl_lang="en",
                        prompt="def f(x):\n    return x\n", entry_point="f",
                        canonical_solution="", test="x")
    cfg = ExtractionConfig(top_k=0)
    assert extract_attention(task, cfg, en_tagger).items == ()


def test_no_comment_propagates(en_tagger):
    task = TaskInstance(task_id="T/nc", nl_lang="en",
                        prompt="def f(x):\n    return x\n", entry_point="f",
                        canonical_solution="", test="x")
    with pytest.raises(NoCommentFound):
        extract_attention(task, DEFAULT, en_tagger)


def test_empty_attention_raised(en_tagger):
    task = TaskInstance(task_id="T/e", nl_lang="en",
                        prompt='def f(x):\n    """ of the and. """\n    return x\n',
                        entry_point="f", canonical_solution="", test="x")
    with pytest.raises(EmptyAttention):
        extract_attention(task, DEFAULT, en_tagger)


def test_appendix_c_noun_only_filter(en_tagger):
    prompt = ('def count_upper(s):\n'
              '    """ Given a string s, count the number of uppercase vowels '
              'in even indices.\n    """\n')
    task = TaskInstance(task_id="T/c", nl_lang="en", prompt=prompt,
                        entry_point="count_upper", canonical_solution="",
                        test="x")
    mixed = extract_attention(task, ExtractionConfig(kind_filter="mixed"), en_tagger)
    noun_only = extract_attention(task, ExtractionConfig(kind_filter="noun_only"),
                                  en_tagger)
    assert {"uppercase vowels", "even indices"} <= set(noun_only.surfaces())
    assert all(i.kind == "NP" for i in noun_only.items)
    assert set(noun_only.surfaces()) <= set(mixed.surfaces())


def test_word_granularity(table3_task, en_tagger):
    attention = extract_attention(table3_task,
                                  ExtractionConfig(granularity="word"), en_tagger)
    assert all(i.kind == "WORD" for i in attention.items)
    assert "given" in attention.surfaces()
    scores = [i.score for i in attention.items]
    assert scores == sorted(scores, reverse=True)


def test_sentence_granularity(table3_task, en_tagger):
    attention = extract_attention(table3_task,
                                  ExtractionConfig(granularity="sentence"),
                                  en_tagger)
    assert all(i.kind == "SENTENCE" and i.score == 1.0 for i in attention.items)
    assert attention.items[0].surface.startswith("Check if in given list")


def test_deterministic(table3_task, en_tagger):
    first = extract_attention(table3_task, DEFAULT, en_tagger)
    second = extract_attention(table3_task, DEFAULT, en_tagger)
    assert first == second
    assert first.to_json() == second.to_json()


def test_dedup_case_insensitive(en_tagger):
    prompt = ('def f(x):\n    """ Count the Words. Count the words.\n    """\n')
    task = TaskInstance(task_id="T/d", nl_lang="en", prompt=prompt,
                        entry_point="f", canonical_solution="", test="x")
    attention = extract_attention(task, DEFAULT, en_tagger)
    lowered = [s.casefold() for s in attention.surfaces()]
    assert len(lowered) == len(set(lowered))


def test_zh_pipeline(benchmark_zh, zh_tagger):
    attention = extract_attention(benchmark_zh.tasks[0], DEFAULT, zh_tagger)
    assert "给定数字列表" in attention.surfaces()
    assert "给定阈值" in attention.surfaces()


# --- select_top_k / filter_by_kind ---------------------------------------------

def test_top_k_prefix():
    attention = _set(["a", "b", "c", "d", "e"])
    cut = select_top_k(attention, 2)
    assert cut.items == attention.items[:2]


def test_top_k_all_identity():
    attention = _set(["a", "b"])
    assert select_top_k(attention, ALL) == attention


def test_top_k_zero_empty():
    assert select_top_k(_set(["a"]), 0).items == ()


@given(st.integers(0, 10), st.integers(0, 10))
def test_top_k_monotone_containment(k_small, extra):
    attention = _set([f"s{i}" for i in range(8)])
    small = set(select_top_k(attention, k_small).surfaces())
    big = set(select_top_k(attention, k_small + extra).surfaces())
    assert small <= big


def test_filter_noun_only_keeps_order():
    attention = _set(["a", "b", "c"], kinds=["NP", "VP", "NP"])
    kept = filter_by_kind(attention, "noun_only")
    assert kept.surfaces() == ["a", "c"]


def test_filter_mixed_identity():
    attention = _set(["a", "b"], kinds=["NP", "VP"])
    assert filter_by_kind(attention, "mixed") == attention


def test_filter_can_empty():
    attention = _set(["a"], kinds=["VP"])
    assert filter_by_kind(attention, "noun_only").items == ()


def test_filter_then_top_k_never_reorders():
    attention = _set(["a", "b", "c", "d"], kinds=["NP", "VP", "NP", "VP"])
    filtered = filter_by_kind(attention, "noun_only")
    cut = select_top_k(filtered, 1)
    assert cut.surfaces() == ["a"]
    order = {s: i for i, s in enumerate(attention.surfaces())}
    survivors = filtered.surfaces()
    assert survivors == sorted(survivors, key=order.__getitem__)


# --- overrides ------------------------------------------------------------------

def test_load_overrides(tmp_path):
    path = tmp_path / "overrides.json"
    path.write_text(json.dumps({"HumanEval/0": ["given list", "given threshold"]}),
                    encoding="utf-8")
    overrides = load_attention_overrides(path)
    assert overrides == {"HumanEval/0": ["given list", "given threshold"]}


def test_load_overrides_empty_object(tmp_path):
    path = tmp_path / "overrides.json"
    path.write_text("{}", encoding="utf-8")
    assert load_attention_overrides(path) == {}


def test_load_overrides_rejects_non_list(tmp_path):
    path = tmp_path / "overrides.json"
    path.write_text(json.dumps({"T/0": "oops"}), encoding="utf-8")
    with pytest.raises(FormatError):
        load_attention_overrides(path)


def test_human_attention_preserves_order_and_allows_empty():
    attention = human_attention("T/0", ["b phrase", "a phrase"])
    assert attention.surfaces() == ["b phrase", "a phrase"]
    assert attention.source == "human"
    assert all(i.score == 1.0 for i in attention.items)
    assert human_attention("T/1", []).items == ()


# --- llm extraction ---------------------------------------------------------------

class FakeClient:
    def __init__(self, reply):
        self.reply = reply
        self.bundles = []

    def complete(self, bundle, params):
        self.bundles.append(bundle)
        return CompletionResult(raw=self.reply)


def test_llm_extract_comma_reply(table3_task):
    client = FakeClient("given list, given threshold")
    attention = llm_extract(table3_task, client, n=5)
    assert attention.surfaces() == ["given list", "given threshold"]
    assert attention.source == "llm"
    assert "Check if in given list" in client.bundles[0].messages[0][1]


def test_llm_extract_enumerated_reply(table3_task):
    client = FakeClient("1. uppercase vowels\n2. even indices")
    attention = llm_extract(table3_task, client, n=2)
    assert attention.surfaces() == ["uppercase vowels", "even indices"]


def test_llm_extract_empty_reply(table3_task):
    with pytest.raises(ParseEmpty):
        llm_extract(table3_task, FakeClient(""), n=3)


def test_parse_llm_phrases_strips_quotes_and_bullets():
    reply = '- "given list"\n• \'given threshold\'\n3) numbers'
    assert parse_llm_phrases(reply) == ["given list", "given threshold", "numbers"]


def test_empty_attention_helper():
    attention = empty_attention("T/9")
    assert attention.items == () and attention.task_id == "T/9"
