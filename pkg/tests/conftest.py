import json
import sys
from pathlib import Path

import pytest

from keyprompt.corpus import load_benchmark
from keyprompt.tagging import LexiconTagger

DATA_DIR = Path(__file__).parent / "data"

# stub runner: accepts the wire request, always reports success
STUB_PASS_RUNNER = (
    "import sys, json; json.load(sys.stdin); "
    "print(json.dumps({'status': 'passed', 'stderr_tail': '', 'duration_ms': 1}))"
)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def benchmark_en():
    return load_benchmark(DATA_DIR / "benchmark_en.jsonl", "en")


@pytest.fixture(scope="session")
def benchmark_zh():
    return load_benchmark(DATA_DIR / "benchmark_zh.jsonl", "zh")


@pytest.fixture(scope="session")
def table3_task(benchmark_en):
    return benchmark_en.tasks[0]  # HumanEval/0


@pytest.fixture(scope="session")
def en_tagger():
    return LexiconTagger("en")


@pytest.fixture(scope="session")
def zh_tagger():
    return LexiconTagger("zh")


@pytest.fixture()
def stub_runner_cmd():
    return [sys.executable, "-c", STUB_PASS_RUNNER]


@pytest.fixture(scope="session")
def mutations():
    with open(DATA_DIR / "mutations.json", encoding="utf-8") as fh:
        return json.load(fh)
