"""Exception types shared across the toolkit."""


class KeypromptError(Exception):
    """Base class for all toolkit errors."""


# corpus

class FormatError(KeypromptError):
    """A benchmark record is malformed JSON or is missing a required field."""

    def __init__(self, line_no: int, field: str, message: str = ""):
        self.line_no = line_no
        self.field = field
        super().__init__(message or f"line {line_no}: bad or missing field {field!r}")


class EmptyBenchmark(KeypromptError):
    """The benchmark file contained zero records."""


# comment extraction

class NoCommentFound(KeypromptError):
    """No comment pattern matched the code context."""


# tagging

class UnsupportedLanguage(KeypromptError):
    """No segmenter is available for the requested language tag."""


class ModelMissing(KeypromptError):
    """No tagger model is loaded for the requested language."""

    def __init__(self, lang: str):
        self.lang = lang
        super().__init__(f"no tagger model for language {lang!r}")


# ranking

class EmptyGraph(KeypromptError):
    """PageRank was asked to score a graph with no nodes."""


class EmptyCandidates(KeypromptError):
    """Phrase ranking requires at least one candidate phrase."""


# attention pipeline

class EmptyAttention(KeypromptError):
    """The extraction pipeline produced zero items for a nonzero top-k."""


class ParseEmpty(KeypromptError):
    """No phrase survived parsing of an LLM extraction reply."""


# prompt rendering / chat client

class MissingFirstResponse(KeypromptError):
    """Two-chat round 2 needs the round-1 answer."""


class EmptyCode(KeypromptError):
    """Cannot assemble a program from empty code."""


class ClientError(KeypromptError):
    """Any failure talking to the chat endpoint."""


class TransportError(ClientError):
    """Network-level failure talking to the chat endpoint."""


class HttpStatusError(ClientError):
    """Chat endpoint returned a non-success HTTP status."""

    def __init__(self, status: int, body_snippet: str):
        self.status = status
        self.body_snippet = body_snippet
        super().__init__(f"HTTP {status}: {body_snippet[:200]}")


class RateLimited(HttpStatusError):
    """HTTP 429 persisted through all retries."""

    def __init__(self, body_snippet: str):
        super().__init__(429, body_snippet)


class MalformedResponse(KeypromptError):
    """Chat endpoint reply was not a parseable chat completion."""


# evaluation

class EmptyRecords(KeypromptError):
    """pass@1 is undefined over zero records."""


class RunnerUnavailable(KeypromptError):
    """The sandbox runner command could not be started."""


class ConfigError(KeypromptError):
    """A run configuration value is missing or invalid."""
