"""Key-phrase extraction, prompt augmentation, and pass@1 evaluation."""

from .attention import (ALL, AttentionItem, AttentionSet, ExtractionConfig,
                        extract_attention, filter_by_kind, human_attention,
                        llm_extract, load_attention_overrides, select_top_k)
from .coder import (ChatClient, CompletionResult, EndpointConfig, GenParams,
                    LabelTable, PromptBundle, assemble_program, extract_code,
                    render_one_chat, render_round1, render_two_chat)
from .comments import ExtractedComment, extract_comment, strip_examples
from .corpus import (Benchmark, TaskInstance, load_benchmark, save_benchmark,
                     validate_instance)
from .evaluator import (CompletionCache, EvalConfig, EvalRecord, EvalReport,
                        RunnerClient, emit_report, evaluate, pass_at_1)
from .ranking import (ALGORITHMS, RankParams, RankedPhrases, WordGraph,
                      build_word_graph, cluster_candidates, pagerank,
                      rank_phrases)
from .tagging import (CandidatePhrase, LexiconTagger, PerceptronTagger,
                      PosGrammar, TaggedDoc, Token, select_candidates, tag,
                      tokenize)

__version__ = "0.1.0"
