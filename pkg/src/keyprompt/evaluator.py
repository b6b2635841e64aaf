"""End-to-end evaluation: task -> attention -> prompt -> completion ->
execution -> pass@1 report.

Raw model replies are cached on disk keyed by (task_id, setting, model,
rendered messages), so warm-cache runs never touch the network and are
byte-for-byte reproducible. Candidate programs execute through the
sandbox runner's stdin/stdout JSON protocol.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .attention import (AttentionSet, ExtractionConfig, empty_attention,
                        extract_attention, human_attention, llm_extract)
from .coder import (ChatClient, GenParams, LabelTable, assemble_program,
                    extract_code, render_one_chat, render_round1,
                    render_two_chat)
from .corpus import Benchmark, TaskInstance
from .errors import EmptyRecords, KeypromptError, RunnerUnavailable
from .tagging import TaggerModel

SETTINGS = ("no_attention", "auto", "human", "llm")
VERDICTS = ("passed", "failed", "timeout", "exec_error", "gen_error")

RAW_EXCERPT_CHARS = 500


@dataclass(frozen=True)
class EvalRecord:
    task_id: str
    setting: str
    verdict: str
    duration_ms: int
    attention_used: tuple[str, ...]
    extraction: str
    raw_excerpt: str


@dataclass
class EvalReport:
    benchmark: str
    nl_lang: str
    setting: str
    total: int
    solved: int
    pass_at_1: float
    records: list[EvalRecord]


def pass_at_1(records: list[EvalRecord]) -> float:
    """solved / total; raises EmptyRecords on an empty list."""
    if not records:
        raise EmptyRecords("pass@1 over zero records")
    solved = sum(1 for r in records if r.verdict == "passed")
    return solved / len(records)


def round_half_up(value: float, places: int) -> float:
    quant = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quant, rounding=ROUND_HALF_UP))


def format_fraction(value: float) -> str:
    return f"{round_half_up(value, 4):.4f}"


def format_percent(value: float) -> str:
    return f"{round_half_up(value * 100.0, 2):.2f}"


# --- completion cache -------------------------------------------------------

class CompletionCache:
    """One file per completion, named by a stable key hash."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(task_id: str, setting: str, model: str, bundle) -> str:
        payload = json.dumps(
            {"task_id": task_id, "setting": setting, "model": model,
             "style": bundle.style, "messages": bundle.as_payload()},
            sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.txt"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if path.is_file():
            return path.read_text(encoding="utf-8")
        return None

    def put(self, key: str, raw: str) -> None:
        self._path(key).write_text(raw, encoding="utf-8")


# --- runner client ----------------------------------------------------------

class RunnerClient:
    """Spawns one sandbox-runner process per request (JSON over stdio)."""

    GRACE_S = 15.0

    def __init__(self, command: list[str]):
        if not command:
            raise RunnerUnavailable("empty runner command")
        self.command = list(command)

    def run(self, source: str, timeout_s: float,
            memory_mb: int | None = None) -> dict:
        request = {"source": source, "timeout_s": timeout_s}
        if memory_mb is not None:
            request["memory_mb"] = memory_mb
        try:
            proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True)
        except OSError as exc:
            raise RunnerUnavailable(f"cannot start runner: {exc}") from exc
        try:
            stdout, _ = proc.communicate(json.dumps(request),
                                         timeout=timeout_s + self.GRACE_S)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.communicate()
            return {"status": "error", "stderr_tail": "runner hung", "duration_ms": 0}
        try:
            return json.loads(stdout)
        except (ValueError, TypeError):
            return {"status": "error",
                    "stderr_tail": f"unparseable runner output: {stdout[:200]}",
                    "duration_ms": 0}


def _map_runner_status(verdict: dict) -> str:
    status = verdict.get("status")
    if status == "passed":
        return "passed"
    if status == "timeout":
        return "timeout"
    if status == "failed":
        # assertion failures are test failures; anything else crashed
        if "AssertionError" in verdict.get("stderr_tail", ""):
            return "failed"
        return "exec_error"
    return "exec_error"


# --- evaluation --------------------------------------------------------------

@dataclass
class EvalConfig:
    setting: str = "no_attention"
    style: str = "one_chat"  # one_chat | two_chat
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    labels: LabelTable = field(default_factory=LabelTable)
    gen: GenParams = field(default_factory=GenParams)
    timeout_s: float = 10.0
    workers: int = 4
    overrides: dict = field(default_factory=dict)  # task_id -> [phrase]
    llm_phrase_count: int = 10


class CachingChatClient:
    """Routes llm-extraction calls through the completion cache so warm
    reruns never touch the network."""

    def __init__(self, cache: "CompletionCache", client: ChatClient | None,
                 setting: str, params: GenParams):
        self.cache = cache
        self.client = client
        self.setting = setting
        self.params = params

    def complete(self, bundle, _params):
        key = CompletionCache.key(bundle.task_id, self.setting,
                                  self.params.model_name, bundle)
        hit = self.cache.get(key)
        if hit is not None:
            from .coder import CompletionResult
            return CompletionResult(raw=hit)
        if self.client is None:
            raise KeypromptError("cache miss and no chat client configured")
        result = self.client.complete(bundle, self.params)
        self.cache.put(key, result.raw)
        return result


def _attention_for(task: TaskInstance, cfg: EvalConfig,
                   model: TaggerModel | None, client: ChatClient | None,
                   cache: "CompletionCache | None" = None) -> AttentionSet:
    if cfg.setting == "no_attention":
        return empty_attention(task.task_id)
    if cfg.setting == "auto":
        return extract_attention(task, cfg.extraction, model)
    if cfg.setting == "human":
        return human_attention(task.task_id, cfg.overrides.get(task.task_id, []))
    if cfg.setting == "llm":
        extractor = (CachingChatClient(cache, client, "llm_extract", cfg.gen)
                     if cache is not None else client)
        return llm_extract(task, extractor, cfg.llm_phrase_count)
    raise ValueError(f"unknown setting {cfg.setting!r}")


def cached_complete(cache: CompletionCache, client: ChatClient | None,
                    bundle, params: GenParams, setting: str) -> str:
    key = CompletionCache.key(bundle.task_id, setting, params.model_name, bundle)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if client is None:
        raise KeypromptError("cache miss and no chat client configured")
    raw = client.complete(bundle, params).raw
    cache.put(key, raw)
    return raw


def _complete_task(task: TaskInstance, attention: AttentionSet, cfg: EvalConfig,
                   cache: CompletionCache, client: ChatClient | None) -> str:
    if cfg.style == "two_chat":
        round1 = render_round1(task)
        first = cached_complete(cache, client, round1, cfg.gen, cfg.setting)
        if cfg.setting == "no_attention":
            return first
        round2 = render_two_chat(task, attention, first, cfg.labels)
        return cached_complete(cache, client, round2, cfg.gen, cfg.setting)
    bundle = render_one_chat(task, attention, cfg.labels)
    return cached_complete(cache, client, bundle, cfg.gen, cfg.setting)


def _evaluate_task(task: TaskInstance, cfg: EvalConfig, cache: CompletionCache,
                   runner: RunnerClient, model: TaggerModel | None,
                   client: ChatClient | None) -> EvalRecord:
    attention_used: tuple[str, ...] = ()
    try:
        attention = _attention_for(task, cfg, model, client, cache)
        attention_used = tuple(attention.surfaces())
        raw = _complete_task(task, attention, cfg, cache, client)
        code, extraction = extract_code(raw, task.entry_point)
        program = assemble_program(task, code)
    except RunnerUnavailable:
        raise
    except Exception as exc:  # generation failures never abort the run
        return EvalRecord(task_id=task.task_id, setting=cfg.setting,
                          verdict="gen_error", duration_ms=0,
                          attention_used=attention_used, extraction="",
                          raw_excerpt=f"{type(exc).__name__}: {exc}"[:RAW_EXCERPT_CHARS])
    verdict = runner.run(program, cfg.timeout_s)
    return EvalRecord(
        task_id=task.task_id,
        setting=cfg.setting,
        verdict=_map_runner_status(verdict),
        duration_ms=int(verdict.get("duration_ms", 0)),
        attention_used=attention_used,
        extraction=extraction,
        raw_excerpt=raw[:RAW_EXCERPT_CHARS],
    )


def evaluate(benchmark: Benchmark, cfg: EvalConfig, cache: CompletionCache,
             runner: RunnerClient, model: TaggerModel | None = None,
             client: ChatClient | None = None) -> EvalReport:
    """Evaluate every task under one setting; per-task failures are data.

    Tasks run on a bounded worker pool; the report is assembled in
    task_id order so repeated warm-cache runs serialize identically.
    """
    workers = max(1, cfg.workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(
            lambda task: _evaluate_task(task, cfg, cache, runner, model, client),
            benchmark.tasks))
    records.sort(key=lambda r: r.task_id)
    solved = sum(1 for r in records if r.verdict == "passed")
    return EvalReport(
        benchmark=benchmark.name,
        nl_lang=benchmark.nl_lang,
        setting=cfg.setting,
        total=len(records),
        solved=solved,
        pass_at_1=pass_at_1(records),
        records=records,
    )


# --- report rendering ---------------------------------------------------------

def _report_dict(report: EvalReport) -> dict:
    return {
        "benchmark": report.benchmark,
        "nl_lang": report.nl_lang,
        "setting": report.setting,
        "total": report.total,
        "solved": report.solved,
        "pass_at_1": float(format_fraction(report.pass_at_1)),
        "records": [
            {
                "task_id": r.task_id,
                "setting": r.setting,
                "verdict": r.verdict,
                "duration_ms": r.duration_ms,
                "attention_used": list(r.attention_used),
                "extraction": r.extraction,
                "raw_excerpt": r.raw_excerpt,
            }
            for r in report.records
        ],
    }


def report_from_dict(data: dict) -> EvalReport:
    records = [EvalRecord(task_id=r["task_id"], setting=r["setting"],
                          verdict=r["verdict"], duration_ms=r["duration_ms"],
                          attention_used=tuple(r["attention_used"]),
                          extraction=r["extraction"],
                          raw_excerpt=r["raw_excerpt"])
               for r in data["records"]]
    return EvalReport(benchmark=data["benchmark"], nl_lang=data["nl_lang"],
                      setting=data["setting"], total=data["total"],
                      solved=data["solved"], pass_at_1=data["pass_at_1"],
                      records=records)


def emit_report(reports: EvalReport | list[EvalReport], fmt: str) -> bytes:
    """Serialize one report (or several settings side by side).

    json keeps the full structure; csv is one row per record; markdown is
    a settings x pass@1 table with deltas against the no_attention row.
    """
    if isinstance(reports, EvalReport):
        reports = [reports]
    if fmt == "json":
        payload = [_report_dict(r) for r in reports]
        body = payload[0] if len(payload) == 1 else payload
        return (json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False)
                + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["task_id", "setting", "verdict", "duration_ms",
                         "attention_used", "extraction", "raw_excerpt"])
        for report in reports:
            for r in report.records:
                writer.writerow([r.task_id, r.setting, r.verdict, r.duration_ms,
                                 "|".join(r.attention_used), r.extraction,
                                 r.raw_excerpt])
        return buf.getvalue().encode("utf-8")
    if fmt == "markdown":
        baseline = next((r for r in reports if r.setting == "no_attention"), None)
        lines = [
            f"# {reports[0].benchmark} ({reports[0].nl_lang})",
            "",
            "| Setting | Solved | Total | pass@1 | pass@1 % | Δ vs no_attention |",
            "|---|---|---|---|---|---|",
        ]
        for report in reports:
            if baseline is not None and report is not baseline:
                delta = report.pass_at_1 - baseline.pass_at_1
                delta_str = f"{delta:+.4f}"
            elif baseline is report:
                delta_str = "baseline"
            else:
                delta_str = "n/a"
            lines.append(
                f"| {report.setting} | {report.solved} | {report.total} "
                f"| {format_fraction(report.pass_at_1)} "
                f"| {format_percent(report.pass_at_1)}% | {delta_str} |")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")
