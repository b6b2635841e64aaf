"""Benchmark loading and validation.

Benchmarks are JSONL files in the HumanEval layout: one JSON object per
line with the keys task_id, prompt, entry_point, canonical_solution and
test. The language tag is supplied by the caller (one file per language);
it is metadata, never inferred from the text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyBenchmark, FormatError

REQUIRED_FIELDS = ("task_id", "prompt", "entry_point", "canonical_solution", "test")

# Language tags with first-class tokenizer/tagger support. Other tags are
# carried through untouched and only matter when a pipeline stage needs
# language-specific resources.
SUPPORTED_LANGS = ("en", "zh", "fr", "es", "ja")


@dataclass(frozen=True)
class TaskInstance:
    """One benchmark problem: code context plus the machinery to test it."""

    task_id: str
    nl_lang: str
    prompt: str
    entry_point: str
    canonical_solution: str
    test: str


@dataclass
class Benchmark:
    name: str
    nl_lang: str
    tasks: list[TaskInstance] = field(default_factory=list)

    def __iter__(self):
        return iter(self.tasks)

    def __len__(self):
        return len(self.tasks)


def load_benchmark(path: str | Path, nl_lang: str) -> Benchmark:
    """Read a JSONL benchmark file, preserving file order.

    Raises OSError for unreadable paths, FormatError(line_no, field) for a
    malformed line or missing required field, and EmptyBenchmark when the
    file holds zero records. Unknown JSON fields are ignored.
    """
    path = Path(path)
    tasks = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(line_no, "<json>", f"line {line_no}: {exc}") from exc
            if not isinstance(record, dict):
                raise FormatError(line_no, "<json>", f"line {line_no}: not an object")
            for key in REQUIRED_FIELDS:
                if key not in record or not isinstance(record[key], str):
                    raise FormatError(line_no, key)
            if record["task_id"] in seen_ids:
                raise FormatError(line_no, "task_id",
                                  f"line {line_no}: duplicate task_id {record['task_id']!r}")
            seen_ids.add(record["task_id"])
            tasks.append(TaskInstance(
                task_id=record["task_id"],
                nl_lang=nl_lang,
                prompt=record["prompt"],
                entry_point=record["entry_point"],
                canonical_solution=record["canonical_solution"],
                test=record["test"],
            ))
    if not tasks:
        raise EmptyBenchmark(f"{path}: no records")
    return Benchmark(name=path.stem, nl_lang=nl_lang, tasks=tasks)


def save_benchmark(benchmark: Benchmark, path: str | Path) -> None:
    """Serialize back to JSONL with exactly the required keys."""
    with open(path, "w", encoding="utf-8") as fh:
        for task in benchmark.tasks:
            record = {
                "task_id": task.task_id,
                "prompt": task.prompt,
                "entry_point": task.entry_point,
                "canonical_solution": task.canonical_solution,
                "test": task.test,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def validate_instance(task: TaskInstance) -> list[str]:
    """Return every invariant violation (empty list means the task is ok)."""
    violations = []
    if not task.task_id:
        violations.append("task_id empty")
    if task.entry_point not in task.prompt:
        violations.append("entry_point not in prompt")
    if not task.test:
        violations.append("test empty")
    return violations
