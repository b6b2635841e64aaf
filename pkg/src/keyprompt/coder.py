"""Prompt rendering and the chat-completions client.

Two prompt styles exist. One-chat splices a localized "Key Words" line
into the task's comment and asks for a script in a single message.
Two-chat first asks for a plain solution, then sends the key words and
the comment back for a rewrite. With an empty attention set the one-chat
prompt is byte-identical to the plain task, which is what makes baseline
comparisons honest.
"""

from __future__ import annotations

import re
import threading
import time
from dataclasses import dataclass, field

import requests

from .attention import AttentionSet
from .comments import extract_comment, splice_comment_line
from .corpus import TaskInstance
from .errors import (EmptyCode, HttpStatusError, MalformedResponse,
                     MissingFirstResponse, RateLimited, TransportError)

DEFAULT_LABELS = {
    "en": "Key Words",
    "zh": "关键词",
    "fr": "Mots-clés",
    "es": "Palabras clave",
    "ja": "キーワード",
}

ONE_CHAT_HEADER = ("Below is an instruction that describes a task. "
                   "Write a response that appropriately completes the request.")

TWO_CHAT_INSTRUCTION = (
    "1. Check out if the target code generated before is correct to match "
    "the Code Description\n"
    "2. If not, pay attention to these Key Words in Code Description and "
    "rewrite the code to be correct"
)


@dataclass(frozen=True)
class LabelTable:
    labels: dict = field(default_factory=lambda: dict(DEFAULT_LABELS))

    def label_for(self, lang: str) -> str:
        return self.labels.get(lang, self.labels.get("en", "Key Words"))


@dataclass(frozen=True)
class PromptBundle:
    messages: tuple[tuple[str, str], ...]  # (role, content)
    style: str  # one_chat | two_chat_round1 | two_chat_round2
    task_id: str

    def __post_init__(self):
        if not self.messages:
            raise ValueError("bundle needs at least one message")
        body = list(self.messages)
        if body[0][0] == "system":
            body = body[1:]
        for i, (role, _) in enumerate(body):
            expected = "user" if i % 2 == 0 else "assistant"
            if role != expected:
                raise ValueError("roles must alternate user/assistant")
        if self.messages[-1][0] != "user":
            raise ValueError("last message must be from the user")

    def as_payload(self) -> list[dict]:
        return [{"role": role, "content": content}
                for role, content in self.messages]


@dataclass(frozen=True)
class GenParams:
    model_name: str = "gpt-3.5-turbo"
    temperature: float = 0.0  # greedy
    max_new_tokens: int = 1024
    stop: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = "https://api.openai.com"
    api_key_env: str = "OPENAI_API_KEY"
    timeout_s: float = 120.0
    max_in_flight: int = 4
    requests_per_minute: int = 0  # 0 = unthrottled
    retry_base_s: float = 0.5


@dataclass(frozen=True)
class CompletionResult:
    raw: str
    code: str = ""
    extraction: str = ""  # fenced_block | entry_point_scan | whole_reply
    latency_ms: int = 0


def _key_words_line(attention: AttentionSet, label: str) -> str:
    return f"{label}: {', '.join(attention.surfaces())}"


def render_one_chat(task: TaskInstance, attention: AttentionSet,
                    labels: LabelTable = LabelTable()) -> PromptBundle:
    """Single user message; splices the key-words line into the comment.

    An empty attention set renders the un-augmented baseline prompt.
    Raises NoCommentFound when there are phrases but no comment to host
    them.
    """
    if attention.items:
        label = labels.label_for(task.nl_lang)
        prompt = splice_comment_line(task.prompt, _key_words_line(attention, label))
    else:
        prompt = task.prompt
    content = (f"{ONE_CHAT_HEADER}\n"
               f"### Instruction:\n"
               f"Create a Python script for this problem:\n"
               f"{prompt}\n"
               f"### Response:")
    return PromptBundle(messages=(("user", content),), style="one_chat",
                        task_id=task.task_id)


def render_round1(task: TaskInstance) -> PromptBundle:
    """The plain first round of the two-chat dialogue."""
    return PromptBundle(messages=(("user", f"Question:\n{task.prompt}"),),
                        style="two_chat_round1", task_id=task.task_id)


def render_two_chat(task: TaskInstance, attention: AttentionSet,
                    first_response: str,
                    labels: LabelTable = LabelTable()) -> PromptBundle:
    """Round-2 dialogue: original question, first answer, rewrite request."""
    if not first_response:
        raise MissingFirstResponse(task.task_id)
    comment = extract_comment(task.prompt)
    round2 = (f"{TWO_CHAT_INSTRUCTION}\n"
              f"### Key Words\n"
              f"{', '.join(attention.surfaces())}\n"
              f"### Code Description\n"
              f"{comment.text}")
    return PromptBundle(
        messages=(
            ("user", f"Question:\n{task.prompt}"),
            ("assistant", first_response),
            ("user", round2),
        ),
        style="two_chat_round2",
        task_id=task.task_id,
    )


class ChatClient:
    """Thread-safe client for an OpenAI-compatible chat-completions API.

    Bounds in-flight requests with a semaphore and optionally paces to a
    requests-per-minute budget; 429s are retried with exponential backoff
    five times before surfacing as RateLimited.
    """

    MAX_RETRIES = 5

    def __init__(self, endpoint: EndpointConfig, session: requests.Session | None = None):
        self.endpoint = endpoint
        self._session = session or requests.Session()
        self._gate = threading.BoundedSemaphore(max(1, endpoint.max_in_flight))
        self._pace_lock = threading.Lock()
        self._recent: list[float] = []

    def _pace(self):
        budget = self.endpoint.requests_per_minute
        if budget <= 0:
            return
        while True:
            with self._pace_lock:
                now = time.monotonic()
                self._recent = [t for t in self._recent if now - t < 60.0]
                if len(self._recent) < budget:
                    self._recent.append(now)
                    return
                wait = 60.0 - (now - self._recent[0])
            time.sleep(max(wait, 0.01))

    def complete(self, bundle: PromptBundle, params: GenParams) -> CompletionResult:
        """POST the bundle; returns the first choice's content verbatim."""
        import os

        url = self.endpoint.base_url.rstrip("/") + "/v1/chat/completions"
        body = {
            "model": params.model_name,
            "messages": bundle.as_payload(),
            "temperature": params.temperature,
            "max_tokens": params.max_new_tokens,
        }
        if params.stop:
            body["stop"] = list(params.stop)
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.endpoint.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        started = time.monotonic()
        with self._gate:
            last_snippet = ""
            for attempt in range(self.MAX_RETRIES + 1):
                self._pace()
                try:
                    response = self._session.post(
                        url, json=body, headers=headers,
                        timeout=self.endpoint.timeout_s)
                except requests.RequestException as exc:
                    raise TransportError(str(exc)) from exc
                if response.status_code == 429:
                    last_snippet = response.text[:200]
                    if attempt < self.MAX_RETRIES:
                        time.sleep(self.endpoint.retry_base_s * (2 ** attempt))
                    continue
                if response.status_code != 200:
                    raise HttpStatusError(response.status_code, response.text[:200])
                try:
                    payload = response.json()
                    raw = payload["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise MalformedResponse(str(exc)) from exc
                if not isinstance(raw, str):
                    raise MalformedResponse("content is not a string")
                latency = int((time.monotonic() - started) * 1000)
                return CompletionResult(raw=raw, latency_ms=latency)
            raise RateLimited(last_snippet)


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.S)
_IMPORTISH_RE = re.compile(r"^(?:import\s|from\s|@|(?:async\s+)?def\s)")


def extract_code(raw: str, entry_point: str) -> tuple[str, str]:
    """Post-process a chat reply into code: (code, extraction kind).

    Precedence: first fenced block, then the entry-point def block with
    any imports/helpers directly above it, then the whole reply.
    """
    match = _FENCE_RE.search(raw)
    if match:
        return match.group(1).strip("\n"), "fenced_block"

    lines = raw.splitlines()
    def_re = re.compile(rf"^\s*(?:async\s+)?def\s+{re.escape(entry_point)}\s*\(")
    def_at = next((i for i, l in enumerate(lines) if def_re.match(l)), None)
    if def_at is not None:
        start = def_at
        j = def_at - 1
        while j >= 0:
            line = lines[j]
            stripped = line.strip()
            if not stripped or line[0] in " \t" or stripped.startswith("#"):
                j -= 1  # crossable filler between the def and earlier imports
                continue
            if _IMPORTISH_RE.match(stripped):
                start = j
                j -= 1
                continue
            break
        end = len(lines)
        for k in range(def_at + 1, len(lines)):
            line = lines[k]
            if line.strip() and line[0] not in " \t" and not _IMPORTISH_RE.match(line):
                end = k
                break
        block = lines[start:end]
        while block and not block[-1].strip():
            block.pop()
        return "\n".join(block), "entry_point_scan"

    return raw, "whole_reply"


def assemble_program(task: TaskInstance, code: str) -> str:
    """Candidate program: completion (+ prompt when body-only) + tests."""
    if not code.strip():
        raise EmptyCode(task.task_id)
    if f"def {task.entry_point}" in code:
        base = code
    else:
        base = task.prompt + code
    return f"{base}\n\n{task.test}\n\ncheck({task.entry_point})\n"
