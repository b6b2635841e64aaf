"""Command-line surface: extract, augment, generate, evaluate, ablate,
report.

Every run is reproducible from its RunConfig: flags override the config
file, the file overrides defaults, and the resolved config is written
into the output directory next to the reports.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .attention import (ExtractionConfig, empty_attention,
                        extract_attention, human_attention, llm_extract,
                        load_attention_overrides)
from .coder import (ChatClient, EndpointConfig, GenParams, LabelTable,
                    render_one_chat, render_round1)
from .corpus import load_benchmark
from .errors import ConfigError, KeypromptError
from .evaluator import (CachingChatClient, CompletionCache, EvalConfig,
                        RunnerClient, cached_complete, emit_report,
                        evaluate, report_from_dict)
from .tagging import LexiconTagger

DEFAULT_RUNNER_CMD = f"{sys.executable} -m sandbox_runner"

ABLATION_AXES = {
    "granularity": ("word", "phrase", "sentence"),
    "algorithm": ("textrank", "singlerank", "positionrank", "topicrank",
                  "multipartiterank"),
    "topk": (0, 1, 3, 5, "all"),
    "kind": ("noun_only", "verb_only", "mixed"),
}


@dataclass
class RunConfig:
    benchmark: str = ""
    lang: str = "en"
    setting: str = "auto"
    style: str = "one_chat"
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    labels: LabelTable = field(default_factory=LabelTable)
    gen: GenParams = field(default_factory=GenParams)
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    runner_cmd: str = DEFAULT_RUNNER_CMD
    timeout_s: float = 10.0
    workers: int = 4
    cache_dir: str = ""
    output_dir: str = "out"
    overrides: str = ""  # path to the human-attention JSON
    llm_phrase_count: int = 10

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "lang": self.lang,
            "setting": self.setting,
            "style": self.style,
            "extraction": self.extraction.to_dict(),
            "labels": dict(self.labels.labels),
            "gen": {
                "model_name": self.gen.model_name,
                "temperature": self.gen.temperature,
                "max_new_tokens": self.gen.max_new_tokens,
                "stop": list(self.gen.stop) if self.gen.stop else None,
            },
            "endpoint": {
                "base_url": self.endpoint.base_url,
                "api_key_env": self.endpoint.api_key_env,
                "timeout_s": self.endpoint.timeout_s,
                "max_in_flight": self.endpoint.max_in_flight,
                "requests_per_minute": self.endpoint.requests_per_minute,
                "retry_base_s": self.endpoint.retry_base_s,
            },
            "runner_cmd": self.runner_cmd,
            "timeout_s": self.timeout_s,
            "workers": self.workers,
            "cache_dir": self.cache_dir,
            "output_dir": self.output_dir,
            "overrides": self.overrides,
            "llm_phrase_count": self.llm_phrase_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cfg = cls()
        cfg.benchmark = data.get("benchmark", cfg.benchmark)
        cfg.lang = data.get("lang", cfg.lang)
        cfg.setting = data.get("setting", cfg.setting)
        cfg.style = data.get("style", cfg.style)
        cfg.extraction = ExtractionConfig.from_dict(data.get("extraction", {}))
        cfg.labels = LabelTable(labels={**LabelTable().labels,
                                        **data.get("labels", {})})
        gen = data.get("gen", {})
        cfg.gen = GenParams(
            model_name=gen.get("model_name", "gpt-3.5-turbo"),
            temperature=gen.get("temperature", 0.0),
            max_new_tokens=gen.get("max_new_tokens", 1024),
            stop=tuple(gen["stop"]) if gen.get("stop") else None,
        )
        ep = data.get("endpoint", {})
        cfg.endpoint = EndpointConfig(
            base_url=ep.get("base_url", "https://api.openai.com"),
            api_key_env=ep.get("api_key_env", "OPENAI_API_KEY"),
            timeout_s=ep.get("timeout_s", 120.0),
            max_in_flight=ep.get("max_in_flight", 4),
            requests_per_minute=ep.get("requests_per_minute", 0),
            retry_base_s=ep.get("retry_base_s", 0.5),
        )
        cfg.runner_cmd = data.get("runner_cmd", cfg.runner_cmd)
        cfg.timeout_s = data.get("timeout_s", cfg.timeout_s)
        cfg.workers = data.get("workers", cfg.workers)
        cfg.cache_dir = data.get("cache_dir", cfg.cache_dir)
        cfg.output_dir = data.get("output_dir", cfg.output_dir)
        cfg.overrides = data.get("overrides", cfg.overrides)
        cfg.llm_phrase_count = data.get("llm_phrase_count", cfg.llm_phrase_count)
        return cfg

    def validate(self, need_benchmark: bool = True) -> None:
        if need_benchmark:
            if not self.benchmark:
                raise ConfigError("--benchmark is required")
            if not Path(self.benchmark).is_file():
                raise ConfigError(f"benchmark file not found: {self.benchmark}")
        if self.overrides and not Path(self.overrides).is_file():
            raise ConfigError(f"overrides file not found: {self.overrides}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.style not in ("one_chat", "two_chat"):
            raise ConfigError(f"unknown style {self.style!r}")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--benchmark", help="benchmark JSONL path")
    parser.add_argument("--lang", help="natural-language tag (en/zh/fr/es/ja)")
    parser.add_argument("--setting",
                        choices=("no_attention", "auto", "human", "llm"))
    parser.add_argument("--style", choices=("one_chat", "two_chat"))
    parser.add_argument("--granularity", choices=("word", "phrase", "sentence"))
    parser.add_argument("--algorithm",
                        choices=("textrank", "singlerank", "positionrank",
                                 "topicrank", "multipartiterank"))
    parser.add_argument("--kind-filter",
                        choices=("noun_only", "verb_only", "mixed"))
    parser.add_argument("--top-k", help='integer or "all"')
    parser.add_argument("--strip-examples", action=argparse.BooleanOptionalAction,
                        default=None)
    parser.add_argument("--model", help="model name sent to the endpoint")
    parser.add_argument("--endpoint", help="chat endpoint base URL")
    parser.add_argument("--api-key-env", help="env var holding the credential")
    parser.add_argument("--runner-cmd", help="sandbox runner command line")
    parser.add_argument("--timeout-s", type=float, help="per-task exec timeout")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--cache-dir")
    parser.add_argument("--output-dir")
    parser.add_argument("--overrides", help="human attention JSON path")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        config_path = Path(args.config)
        if not config_path.is_file():
            raise ConfigError(f"config file not found: {args.config}")
        data = json.loads(config_path.read_text(encoding="utf-8"))
    cfg = RunConfig.from_dict(data)

    extraction = cfg.extraction.to_dict()
    if getattr(args, "granularity", None):
        extraction["granularity"] = args.granularity
    if getattr(args, "algorithm", None):
        extraction["algorithm"] = args.algorithm
    if getattr(args, "kind_filter", None):
        extraction["kind_filter"] = args.kind_filter
    if getattr(args, "top_k", None) is not None:
        extraction["top_k"] = args.top_k
    if getattr(args, "strip_examples", None) is not None:
        extraction["strip_examples"] = args.strip_examples
    try:
        cfg.extraction = ExtractionConfig.from_dict(extraction)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if getattr(args, "benchmark", None):
        cfg.benchmark = args.benchmark
    if getattr(args, "lang", None):
        cfg.lang = args.lang
    if getattr(args, "setting", None):
        cfg.setting = args.setting
    if getattr(args, "style", None):
        cfg.style = args.style
    if getattr(args, "model", None):
        cfg.gen = GenParams(model_name=args.model,
                            temperature=cfg.gen.temperature,
                            max_new_tokens=cfg.gen.max_new_tokens,
                            stop=cfg.gen.stop)
    if getattr(args, "endpoint", None):
        cfg.endpoint = EndpointConfig(
            base_url=args.endpoint,
            api_key_env=cfg.endpoint.api_key_env,
            timeout_s=cfg.endpoint.timeout_s,
            max_in_flight=cfg.endpoint.max_in_flight,
            requests_per_minute=cfg.endpoint.requests_per_minute,
            retry_base_s=cfg.endpoint.retry_base_s)
    if getattr(args, "api_key_env", None):
        cfg.endpoint = EndpointConfig(
            base_url=cfg.endpoint.base_url, api_key_env=args.api_key_env,
            timeout_s=cfg.endpoint.timeout_s,
            max_in_flight=cfg.endpoint.max_in_flight,
            requests_per_minute=cfg.endpoint.requests_per_minute,
            retry_base_s=cfg.endpoint.retry_base_s)
    if getattr(args, "runner_cmd", None):
        cfg.runner_cmd = args.runner_cmd
    if getattr(args, "timeout_s", None) is not None:
        cfg.timeout_s = args.timeout_s
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "cache_dir", None):
        cfg.cache_dir = args.cache_dir
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    if getattr(args, "overrides", None):
        cfg.overrides = args.overrides
    return cfg


def _tagger_for(lang: str) -> LexiconTagger:
    return LexiconTagger(lang)


def _attention_sets(cfg: RunConfig, benchmark, client=None):
    """(task, attention, error) triples for extract/augment/generate."""
    model = _tagger_for(cfg.lang)
    overrides = (load_attention_overrides(cfg.overrides)
                 if cfg.overrides else {})
    if cfg.setting == "llm" and client is None:
        client = ChatClient(cfg.endpoint)
    for task in benchmark:
        try:
            if cfg.setting == "human":
                attention = human_attention(task.task_id,
                                            overrides.get(task.task_id, []))
            elif cfg.setting == "no_attention":
                attention = empty_attention(task.task_id)
            elif cfg.setting == "llm":
                attention = llm_extract(task, client, cfg.llm_phrase_count)
            else:
                attention = extract_attention(task, cfg.extraction, model)
            yield task, attention, None
        except KeypromptError as exc:
            yield task, None, exc


def _cmd_extract(cfg: RunConfig) -> int:
    benchmark = load_benchmark(cfg.benchmark, cfg.lang)
    failures = 0
    for task, attention, exc in _attention_sets(cfg, benchmark):
        if exc is not None:
            print(f"error: {task.task_id}: {exc}", file=sys.stderr)
            failures += 1
            continue
        print(attention.to_json())
    return 1 if failures else 0


def _cmd_augment(cfg: RunConfig) -> int:
    benchmark = load_benchmark(cfg.benchmark, cfg.lang)
    failures = 0
    for task, attention, exc in _attention_sets(cfg, benchmark):
        if exc is not None:
            print(f"error: {task.task_id}: {exc}", file=sys.stderr)
            failures += 1
            continue
        try:
            if cfg.style == "two_chat":
                bundle = render_round1(task)
            else:
                bundle = render_one_chat(task, attention, cfg.labels)
        except KeypromptError as exc2:
            print(f"error: {task.task_id}: {exc2}", file=sys.stderr)
            failures += 1
            continue
        print(json.dumps({"task_id": bundle.task_id, "style": bundle.style,
                          "messages": bundle.as_payload()},
                         sort_keys=True, ensure_ascii=False))
    return 1 if failures else 0


def _cache_for(cfg: RunConfig) -> CompletionCache:
    cache_dir = cfg.cache_dir or str(Path(cfg.output_dir) / "cache")
    return CompletionCache(cache_dir)


def _cmd_generate(cfg: RunConfig) -> int:
    from .coder import render_two_chat

    benchmark = load_benchmark(cfg.benchmark, cfg.lang)
    cache = _cache_for(cfg)
    client = ChatClient(cfg.endpoint)
    extraction_client = CachingChatClient(cache, client, "llm_extract", cfg.gen)
    failures = 0
    for task, attention, exc in _attention_sets(cfg, benchmark, extraction_client):
        if exc is not None:
            print(f"error: {task.task_id}: {exc}", file=sys.stderr)
            failures += 1
            continue
        try:
            if cfg.style == "two_chat":
                round1 = render_round1(task)
                first = cached_complete(cache, client, round1, cfg.gen, cfg.setting)
                if cfg.setting != "no_attention":
                    round2 = render_two_chat(task, attention, first, cfg.labels)
                    cached_complete(cache, client, round2, cfg.gen, cfg.setting)
            else:
                bundle = render_one_chat(task, attention, cfg.labels)
                cached_complete(cache, client, bundle, cfg.gen, cfg.setting)
            print(f"cached: {task.task_id}")
        except KeypromptError as exc2:
            print(f"error: {task.task_id}: {exc2}", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


def _eval_config(cfg: RunConfig) -> EvalConfig:
    overrides = (load_attention_overrides(cfg.overrides)
                 if cfg.overrides else {})
    return EvalConfig(setting=cfg.setting, style=cfg.style,
                      extraction=cfg.extraction, labels=cfg.labels,
                      gen=cfg.gen, timeout_s=cfg.timeout_s,
                      workers=cfg.workers, overrides=overrides,
                      llm_phrase_count=cfg.llm_phrase_count)


def _write_outputs(cfg: RunConfig, report, out_dir: Path) -> None:
    from .plotting import save_report_figure

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
        + "\n", encoding="utf-8")
    for fmt, name in (("json", "report.json"), ("csv", "report.csv"),
                      ("markdown", "report.md")):
        (out_dir / name).write_bytes(emit_report(report, fmt))
    save_report_figure([report], out_dir / "report.png")


def _cmd_evaluate(cfg: RunConfig) -> int:
    benchmark = load_benchmark(cfg.benchmark, cfg.lang)
    cache = _cache_for(cfg)
    runner = RunnerClient(shlex.split(cfg.runner_cmd))
    model = _tagger_for(cfg.lang)
    client = ChatClient(cfg.endpoint)
    report = evaluate(benchmark, _eval_config(cfg), cache, runner,
                      model=model, client=client)
    out_dir = Path(cfg.output_dir)
    _write_outputs(cfg, report, out_dir)
    print(f"pass@1 = {report.pass_at_1:.4f} "
          f"({report.solved}/{report.total}) -> {out_dir}")
    return 1 if any(r.verdict == "gen_error" for r in report.records) else 0


def _apply_axis(cfg: RunConfig, axis: str, value: str) -> RunConfig:
    clone = RunConfig.from_dict(cfg.to_dict())
    extraction = clone.extraction.to_dict()
    if axis == "granularity":
        extraction["granularity"] = value
    elif axis == "algorithm":
        extraction["algorithm"] = value
    elif axis == "topk":
        extraction["top_k"] = value
    elif axis == "kind":
        extraction["kind_filter"] = value
    else:
        raise ConfigError(f"unknown ablation axis {axis!r}")
    clone.extraction = ExtractionConfig.from_dict(extraction)
    return clone


def _cmd_ablate(cfg: RunConfig, axis: str, values: list[str]) -> int:
    from .plotting import save_sweep_figure

    benchmark = load_benchmark(cfg.benchmark, cfg.lang)
    cache = _cache_for(cfg)
    runner = RunnerClient(shlex.split(cfg.runner_cmd))
    model = _tagger_for(cfg.lang)
    client = ChatClient(cfg.endpoint)
    out_root = Path(cfg.output_dir)
    points = []
    status = 0
    for value in values:
        point_cfg = _apply_axis(cfg, axis, value)
        point_dir = out_root / f"{axis}-{value}"
        point_cfg.output_dir = str(point_dir)
        report = evaluate(benchmark, _eval_config(point_cfg), cache, runner,
                          model=model, client=client)
        _write_outputs(point_cfg, report, point_dir)
        points.append((str(value), report.pass_at_1))
        if any(r.verdict == "gen_error" for r in report.records):
            status = 1
        print(f"{axis}={value}: pass@1 = {report.pass_at_1:.4f}")
    out_root.mkdir(parents=True, exist_ok=True)
    summary = {"axis": axis,
               "points": [{"value": v, "pass_at_1": p} for v, p in points]}
    (out_root / "sweep.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    save_sweep_figure(axis, points, out_root / "sweep.png")
    return status


def _cmd_report(paths: list[str], fmt: str) -> int:
    from .plotting import save_report_figure

    reports = []
    for raw_path in paths:
        path = Path(raw_path)
        if path.is_dir():
            path = path / "report.json"
        if not path.is_file():
            raise ConfigError(f"no report at {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(data, list):
            reports.extend(report_from_dict(d) for d in data)
        else:
            reports.append(report_from_dict(data))
    if not reports:
        raise ConfigError("no reports to render")
    sys.stdout.write(emit_report(reports, fmt).decode("utf-8"))
    first_dir = Path(paths[0])
    if first_dir.is_dir():
        save_report_figure(reports, first_dir / "report.png")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="keyprompt",
        description="Key-phrase prompt augmentation and pass@1 evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
            ("extract", "print attention sets per task as JSON"),
            ("augment", "print rendered prompt bundles"),
            ("generate", "call the endpoint and fill the completion cache"),
            ("evaluate", "run the full pipeline and write report files"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p)

    p_ablate = sub.add_parser("ablate", help="sweep one axis, one report per point")
    _add_common_flags(p_ablate)
    p_ablate.add_argument("--axis", required=True,
                          choices=tuple(ABLATION_AXES))
    p_ablate.add_argument("--values",
                          help="comma-separated sweep values (defaults per axis)")

    p_report = sub.add_parser("report", help="re-render cached reports")
    p_report.add_argument("paths", nargs="+",
                          help="report.json files or output directories")
    p_report.add_argument("--format", default="markdown",
                          choices=("json", "csv", "markdown"))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return _cmd_report(args.paths, args.format)
        cfg = _resolve_config(args)
        cfg.validate()
        if args.command == "extract":
            return _cmd_extract(cfg)
        if args.command == "augment":
            return _cmd_augment(cfg)
        if args.command == "generate":
            return _cmd_generate(cfg)
        if args.command == "evaluate":
            return _cmd_evaluate(cfg)
        if args.command == "ablate":
            values = (args.values.split(",") if args.values
                      else [str(v) for v in ABLATION_AXES[args.axis]])
            return _cmd_ablate(cfg, args.axis, values)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except KeypromptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
