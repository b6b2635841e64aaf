"""Pull the natural-language comment out of a code context.

Four comment shapes are recognized: triple-quoted docstrings, runs of
``#`` lines, runs of ``//`` lines, and ``/* ... */`` blocks. The block
returned is the first one following the last function signature that has
any comment after it (i.e. the task description of the final signature);
when no signature precedes a comment, the first comment in the context
wins.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from .errors import NoCommentFound

DOCSTRING = "docstring_triple_quote"
LINE_HASH = "line_hash"
LINE_SLASH = "line_double_slash"
BLOCK = "block_slash_star"

_SIGNATURE_RE = re.compile(
    r"^\s*(?:async\s+)?def\s+\w+\s*\("
    r"|^\s*(?:pub(?:\(\w+\))?\s+)?fn\s+\w+"
    r"|^\s*func\s+(?:\(\w+ [^)]*\)\s*)?\w+\s*\("
    r"|^\s*(?:export\s+)?(?:async\s+)?function\s*\w*\s*\("
    r"|^.*\w+\s*\([^;{}]*\)\s*\{\s*$"
)

_TRIPLE_RE = re.compile(r'("""|\'\'\')(.*?)\1', re.S)
_BLOCK_RE = re.compile(r"/\*(.*?)\*/", re.S)

_DOCTEST_RE = re.compile(r"^\s*>>>")
_CALL_RE = re.compile(r"^\s*[A-Za-z_][\w.]*\s*\(.*\)")
_EXAMPLE_HEADER_RE = re.compile(
    r"^\s*(?:(?:for|par|por)\s+)?"
    r"(?:examples?|exemples?|ejemplos?|例如|例子|示例|例えば|例)\s*[:：]?\s*$",
    re.I,
)


@dataclass(frozen=True)
class ExtractedComment:
    """A comment body with its provenance in the prompt.

    byte_span addresses the raw matched region, delimiters included, as
    offsets into the UTF-8 encoding of the prompt.
    """

    text: str
    byte_span: tuple[int, int]
    style: str

    def raw(self, prompt: str) -> str:
        """The verbatim matched region, delimiters and all."""
        start, end = self.byte_span
        return prompt.encode("utf-8")[start:end].decode("utf-8")


@dataclass(frozen=True)
class _Block:
    start: int  # char offsets
    end: int
    style: str
    inner_start: int
    inner_end: int


def _line_offsets(text: str) -> list[tuple[int, str]]:
    offsets = []
    pos = 0
    for line in text.splitlines(keepends=True):
        offsets.append((pos, line))
        pos += len(line)
    return offsets


def _find_blocks(prompt: str) -> list[_Block]:
    blocks = []
    for match in _TRIPLE_RE.finditer(prompt):
        blocks.append(_Block(match.start(), match.end(), DOCSTRING,
                             match.start(2), match.end(2)))
    for match in _BLOCK_RE.finditer(prompt):
        if any(b.start <= match.start() < b.end for b in blocks):
            continue
        blocks.append(_Block(match.start(), match.end(), BLOCK,
                             match.start(1), match.end(1)))

    def add_line_runs(marker: str, style: str):
        run: list[tuple[int, str]] = []
        for offset, line in _line_offsets(prompt):
            inside = any(b.start <= offset < b.end for b in blocks)
            if not inside and line.lstrip().startswith(marker):
                run.append((offset, line))
            else:
                if run:
                    blocks.append(_run_block(run, style))
                    run = []
        if run:
            blocks.append(_run_block(run, style))

    def _run_block(run, style):
        start = run[0][0]
        last_offset, last_line = run[-1]
        end = last_offset + len(last_line.rstrip("\n").rstrip("\r"))
        return _Block(start, end, style, start, end)

    add_line_runs("#", LINE_HASH)
    add_line_runs("//", LINE_SLASH)
    blocks.sort(key=lambda b: b.start)
    return blocks


def _pick_block(prompt: str) -> _Block:
    blocks = _find_blocks(prompt)
    if not blocks:
        raise NoCommentFound("no comment pattern matched")
    chosen = None
    for offset, line in _line_offsets(prompt):
        if any(b.start <= offset < b.end for b in blocks):
            continue
        if _SIGNATURE_RE.match(line):
            line_end = offset + len(line)
            following = [b for b in blocks if b.start >= line_end]
            if following:
                chosen = following[0]
    return chosen or blocks[0]


def _clean_delimited(raw_inner: str) -> str:
    lines = raw_inner.splitlines()
    if not lines:
        return ""
    first, rest = lines[0].strip(), lines[1:]
    indents = [len(l) - len(l.lstrip()) for l in rest if l.strip()]
    margin = min(indents) if indents else 0
    cleaned = [first] + [l[margin:].rstrip() for l in rest]
    while cleaned and not cleaned[0].strip():
        cleaned.pop(0)
    while cleaned and not cleaned[-1].strip():
        cleaned.pop()
    return "\n".join(cleaned)


def _clean_line_run(raw: str, marker: str) -> str:
    cleaned = []
    for line in raw.splitlines():
        body = line.lstrip()
        body = body[len(marker):]
        if body.startswith(" "):
            body = body[1:]
        cleaned.append(body.rstrip())
    while cleaned and not cleaned[0].strip():
        cleaned.pop(0)
    while cleaned and not cleaned[-1].strip():
        cleaned.pop()
    return "\n".join(cleaned)


def _clean_block_comment(raw_inner: str) -> str:
    # strip javadoc-style leading asterisks before dedenting
    lines = []
    for line in raw_inner.splitlines():
        stripped = line.lstrip()
        if stripped.startswith("*"):
            stripped = stripped[1:]
            if stripped.startswith(" "):
                stripped = stripped[1:]
            lines.append(stripped)
        else:
            lines.append(line)
    return _clean_delimited("\n".join(lines))


def _byte_span(prompt: str, start: int, end: int) -> tuple[int, int]:
    head = len(prompt[:start].encode("utf-8"))
    return head, head + len(prompt[start:end].encode("utf-8"))


def extract_comment(prompt: str) -> ExtractedComment:
    """Extract the task-describing comment from a code context.

    Raises NoCommentFound when nothing matches.
    """
    if not prompt:
        raise NoCommentFound("empty prompt")
    block = _pick_block(prompt)
    raw_inner = prompt[block.inner_start:block.inner_end]
    if block.style == DOCSTRING:
        text = _clean_delimited(raw_inner)
    elif block.style == BLOCK:
        text = _clean_block_comment(raw_inner)
    elif block.style == LINE_HASH:
        text = _clean_line_run(raw_inner, "#")
    else:
        text = _clean_line_run(raw_inner, "//")
    text = unicodedata.normalize("NFC", text)
    return ExtractedComment(
        text=text,
        byte_span=_byte_span(prompt, block.start, block.end),
        style=block.style,
    )


def is_example_line(line: str) -> bool:
    """Doctest lines, bare call demonstrations, and Example headers."""
    return bool(_DOCTEST_RE.match(line)
                or _CALL_RE.match(line)
                or _EXAMPLE_HEADER_RE.match(line))


def strip_example_lines(text: str) -> str:
    """Drop doctest/demonstration lines, keeping the prose.

    A line right after a doctest line is treated as its expected output.
    An Example/Examples header line (localized variants included) cuts off
    everything that follows.
    """
    kept = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if _EXAMPLE_HEADER_RE.match(line):
            break
        if _DOCTEST_RE.match(line):
            i += 1
            if i < len(lines) and lines[i].strip() and not _DOCTEST_RE.match(lines[i]):
                i += 1
            continue
        if _CALL_RE.match(line):
            i += 1
            continue
        kept.append(line)
        i += 1
    while kept and not kept[0].strip():
        kept.pop(0)
    while kept and not kept[-1].strip():
        kept.pop()
    return "\n".join(kept)


def strip_examples(comment: ExtractedComment) -> str:
    """Prose-only text of a comment (empty if it was all examples)."""
    return strip_example_lines(comment.text)


def splice_comment_line(prompt: str, content: str) -> str:
    """Insert one line into the prompt's comment, after the prose.

    The line lands right before the first example line of the comment, or
    at the comment's end when there are no examples. It inherits the local
    indentation and, for line-style comments, the comment marker. Exactly
    one line is inserted; the rest of the prompt is untouched.
    """
    block = _pick_block(prompt)
    marker = {LINE_HASH: "# ", LINE_SLASH: "// "}.get(block.style, "")

    target_offset = None  # insert before the line at this offset
    last_body = None      # (offset, line) of last non-blank body line
    for offset, line in _line_offsets(prompt):
        line_end = offset + len(line)
        if line_end <= block.inner_start or offset >= block.inner_end:
            continue
        body = line
        if offset < block.inner_start:      # opening-delimiter line
            body = prompt[block.inner_start:line_end]
        elif line_end > block.inner_end:    # closing-delimiter line
            body = prompt[offset:block.inner_end]
        if marker:
            stripped = body.lstrip()
            body = stripped[len(marker.strip()):]
        if is_example_line(body):
            target_offset = max(offset, block.inner_start)
            break
        if body.strip():
            last_body = (offset, line)

    if target_offset is not None:
        line_at = prompt[target_offset:prompt.find("\n", target_offset) + 1 or None]
        indent = line_at[:len(line_at) - len(line_at.lstrip())]
        inserted = f"{indent}{marker}{content}\n"
        return prompt[:target_offset] + inserted + prompt[target_offset:]

    # no example lines: append at the comment's end
    if last_body is not None:
        ref_offset, ref_line = last_body
        indent = ref_line[:len(ref_line) - len(ref_line.lstrip())]
        if ref_offset < block.inner_start:
            indent = " " * (block.inner_start - ref_offset - 3)
    else:
        indent = ""
    if block.style in (DOCSTRING, BLOCK):
        close_start = block.inner_end
        lead = prompt[:close_start]
        line_start = lead.rfind("\n") + 1
        if prompt[line_start:close_start].strip():
            # closing delimiter shares a line with text: break the line
            return prompt[:close_start] + f"\n{indent}{content}" + prompt[close_start:]
        return prompt[:line_start] + f"{indent}{content}\n" + prompt[line_start:]
    # line-run comments: add one more comment line after the run
    end = block.end
    suffix = prompt[end:]
    insert = f"\n{indent}{marker}{content}"
    return prompt[:end] + insert + suffix
