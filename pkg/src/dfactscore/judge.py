"""Text-completion judges behind one interface: a remote chat-endpoint
client, a table-driven scripted judge for hermetic runs, and a replay
judge that serves responses from a recorded transcript.

Prompts are rendered from versioned template files; every completed
request can be appended to a JSONL transcript keyed by a request hash,
which makes any pipeline run repeatable bit-for-bit offline.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence

import requests

from .knowledge import Passage

TEMPLATE_IDS = ("decompose", "group", "verify", "relevance", "citation_nli")

TEMPLATE_VERSIONS = {
    "decompose": "1.0.0",
    "group": "1.0.0",
    "verify": "1.0.0",
    "relevance": "1.0.0",
    "citation_nli": "1.0.0",
}

GROUP_SEPARATOR = "==="

ENV_ENDPOINT = "DFS_JUDGE_ENDPOINT"
ENV_MODEL = "DFS_JUDGE_MODEL"
ENV_TOKEN = "DFS_JUDGE_TOKEN"


class JudgeError(Exception):
    pass


class TransportError(JudgeError):
    """Remote endpoint failed after bounded retries."""


class RateLimited(JudgeError):
    """Remote endpoint kept answering 429 after bounded retries."""


class ReplayMiss(JudgeError):
    """Replay-mode request not present in the transcript."""


def _load_template(name: str) -> str:
    return resources.files("dfactscore.templates").joinpath(f"{name}.txt").read_text(
        encoding="utf-8"
    )


@dataclass(frozen=True)
class JudgeParams:
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def as_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
        }


# Evaluation subtasks run greedily; long-output subtasks get more room.
EVAL_PARAMS = JudgeParams(temperature=0.0, top_p=1.0, max_tokens=512)
LONG_OUTPUT_PARAMS = JudgeParams(temperature=0.0, top_p=1.0, max_tokens=1024)


@dataclass(frozen=True)
class JudgeRequest:
    """One rendered prompt bound for a judge.

    ``meta`` carries the structured inputs the prompt was rendered from
    (fact text, page id, ...) so scripted judges can answer without
    parsing prose. It is not part of the request identity: the hash
    covers template, prompt, and sampling params only.
    """

    template_id: str
    rendered_prompt: str
    params: JudgeParams = EVAL_PARAMS
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.template_id not in TEMPLATE_IDS:
            raise ValueError(f"unknown template id {self.template_id!r}")
        if not self.rendered_prompt:
            raise ValueError("rendered prompt must be non-empty")

    def request_hash(self) -> str:
        payload = json.dumps(
            {
                "template_id": self.template_id,
                "prompt": self.rendered_prompt,
                "params": self.params.as_dict(),
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Judge(Protocol):
    provider_tag: str

    def complete(self, request: JudgeRequest) -> str: ...


def complete(judge: "Judge", request: JudgeRequest) -> str:
    """Run one request against a judge and return the raw response."""
    return judge.complete(request)


# --------------------------------------------------------------------------
# Prompt rendering. All renderers are pure and byte-stable.
# --------------------------------------------------------------------------


def _render_evidence(passages: Sequence[Passage]) -> str:
    return "\n\n".join(f"Title: {p.title}\nText: {p.text}" for p in passages)


def render_verify_prompt(fact_text: str, evidence: Sequence[Passage]) -> str:
    """Evidence passages in the given order, then the claim as a
    True-or-False question."""
    if not evidence:
        raise ValueError("verify prompt needs at least one evidence passage")
    template = _load_template("verify")
    return template.replace("{evidence}", _render_evidence(evidence)).replace(
        "{fact}", fact_text
    )


def render_no_context_verify_prompt(fact_text: str) -> str:
    """Evidence-free variant of the verify prompt. Kept for diagnostics
    only; it cannot distinguish same-name entities and is excluded from
    reports."""
    return f"Input: {fact_text} True or False?\nOutput:"


def render_relevance_prompt(fact_text: str, name: str) -> str:
    template = _load_template("relevance")
    return template.replace("{fact}", fact_text).replace("{name}", name)


def render_citation_prompt(sentence: str, cited_docs: Sequence[Passage]) -> str:
    if not cited_docs:
        raise ValueError("citation prompt needs at least one cited document")
    template = _load_template("citation_nli")
    return template.replace("{evidence}", _render_evidence(cited_docs)).replace(
        "{sentence}", sentence
    )


def render_decompose_prompt(sentence: str) -> str:
    return _load_template("decompose").replace("{sentence}", sentence)


def render_group_prompt(paragraph_text: str, fact_texts: Sequence[str]) -> str:
    facts_block = "\n".join(f"- {t}" for t in fact_texts)
    return (
        _load_template("group")
        .replace("{paragraph}", paragraph_text)
        .replace("{facts}", facts_block)
    )


# --------------------------------------------------------------------------
# Response parsing
# --------------------------------------------------------------------------


class ParsedVerdict(enum.Enum):
    SUPPORTED = "Supported"
    NOT_SUPPORTED = "NotSupported"
    INDETERMINATE = "Indeterminate"


_LEADING_WORD_RE = re.compile(r"[A-Za-z]+")


def parse_verdict(response_text: str) -> ParsedVerdict:
    """Map a judge response to a verdict by its leading word,
    case-insensitively. Anything that does not start with true/false is
    Indeterminate."""
    match = _LEADING_WORD_RE.search(response_text)
    word = match.group().lower() if match else ""
    if word == "true":
        return ParsedVerdict.SUPPORTED
    if word == "false":
        return ParsedVerdict.NOT_SUPPORTED
    return ParsedVerdict.INDETERMINATE


def parse_yes_no(response_text: str) -> Optional[bool]:
    match = _LEADING_WORD_RE.search(response_text)
    word = match.group().lower() if match else ""
    if word == "yes":
        return True
    if word == "no":
        return False
    return None


def parse_fact_lines(response_text: str) -> list[str]:
    """Extract '- ' bullet lines; a bare '- ===' is kept verbatim so
    grouping parsers can spot separators."""
    lines = []
    for raw in response_text.splitlines():
        stripped = raw.strip()
        if stripped.startswith("- "):
            lines.append(stripped[2:].strip())
        elif stripped == "-":
            continue
    return lines


# --------------------------------------------------------------------------
# Judges
# --------------------------------------------------------------------------


class ScriptedJudge:
    """Deterministic lookup-table judge for hermetic tests.

    verify answers come from ``support_table[(fact_text, page_id)]``
    (missing pairs read as unsupported); relevance from
    ``relevance_table[fact_text]`` (missing reads as relevant); grouping
    from ``group_script[paragraph_id]`` (missing re-emits the input
    facts as a single group); decomposition from
    ``decompose_script[sentence]`` (missing echoes the sentence as one
    fact); citation support from ``citation_table[sentence]`` (missing
    reads as supported).
    """

    provider_tag = "scripted"

    def __init__(
        self,
        support_table: Optional[Mapping[tuple[str, str], bool]] = None,
        relevance_table: Optional[Mapping[str, bool]] = None,
        group_script: Optional[Mapping[str, str]] = None,
        decompose_script: Optional[Mapping[str, Sequence[str]]] = None,
        citation_table: Optional[Mapping[str, bool]] = None,
    ):
        self.support_table = dict(support_table or {})
        self.relevance_table = dict(relevance_table or {})
        self.group_script = dict(group_script or {})
        self.decompose_script = dict(decompose_script or {})
        self.citation_table = dict(citation_table or {})

    def complete(self, request: JudgeRequest) -> str:
        meta = request.meta
        if request.template_id == "verify":
            key = (str(meta["fact_text"]), str(meta["page_id"]))
            return "True" if self.support_table.get(key, False) else "False"
        if request.template_id == "relevance":
            return "Yes" if self.relevance_table.get(str(meta["fact_text"]), True) else "No"
        if request.template_id == "group":
            paragraph_id = str(meta["paragraph_id"])
            if paragraph_id in self.group_script:
                return self.group_script[paragraph_id]
            facts = meta["facts"]
            return "\n".join(f"- {t}" for t in facts)
        if request.template_id == "decompose":
            sentence = str(meta["sentence"])
            facts = self.decompose_script.get(sentence, [sentence])
            return "\n".join(f"- {t}" for t in facts)
        if request.template_id == "citation_nli":
            return "True" if self.citation_table.get(str(meta["sentence"]), True) else "False"
        raise ValueError(f"unhandled template id {request.template_id!r}")


def chat_complete(
    endpoint: str,
    model: str,
    token: str,
    prompt: str,
    params: dict,
    max_attempts: int = 3,
    backoff_seconds: float = 0.5,
    timeout: float = 60.0,
) -> str:
    """POST one prompt to a chat-completions endpoint and return the
    message content. Transient failures (5xx, connection errors, 429)
    are retried up to max_attempts times.

    Raises:
        RateLimited: the endpoint kept answering 429.
        TransportError: any other unrecoverable failure.
    """
    body = {
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        **params,
    }
    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    last_error: Optional[str] = None
    rate_limited = False
    for attempt in range(max_attempts):
        if attempt:
            time.sleep(backoff_seconds * attempt)
        try:
            response = requests.post(endpoint, json=body, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = str(exc)
            continue
        if response.status_code == 429:
            rate_limited = True
            last_error = "rate limited"
            continue
        if response.status_code >= 500:
            last_error = f"HTTP {response.status_code}"
            continue
        if response.status_code != 200:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
    if rate_limited:
        raise RateLimited(f"gave up after {max_attempts} attempts: {last_error}")
    raise TransportError(f"gave up after {max_attempts} attempts: {last_error}")


class RemoteJudge:
    """Chat-completions judge configured from DFS_JUDGE_* environment
    variables. At most ``max_in_flight`` requests run concurrently."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        token: str = "",
        max_attempts: int = 3,
        backoff_seconds: float = 0.5,
        timeout: float = 60.0,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint
        self.model = model
        self.token = token
        self.max_attempts = max_attempts
        self.backoff_seconds = backoff_seconds
        self.timeout = timeout
        self.provider_tag = f"remote:{model}"
        self._gate = threading.Semaphore(max_in_flight)

    @classmethod
    def from_env(cls, **kwargs) -> "RemoteJudge":
        endpoint = os.environ.get(ENV_ENDPOINT)
        model = os.environ.get(ENV_MODEL)
        if not endpoint or not model:
            raise TransportError(
                f"remote judge needs {ENV_ENDPOINT} and {ENV_MODEL} set"
            )
        return cls(endpoint, model, os.environ.get(ENV_TOKEN, ""), **kwargs)

    def complete(self, request: JudgeRequest) -> str:
        with self._gate:
            return chat_complete(
                self.endpoint,
                self.model,
                self.token,
                request.rendered_prompt,
                request.params.as_dict(),
                max_attempts=self.max_attempts,
                backoff_seconds=self.backoff_seconds,
                timeout=self.timeout,
            )


class TranscriptWriter:
    """Serialized appender for the JSONL judge transcript."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(
        self, request: JudgeRequest, response_text: str, latency_ms: int, provider_tag: str
    ) -> None:
        row = {
            "request_hash": request.request_hash(),
            "template_id": request.template_id,
            "template_version": TEMPLATE_VERSIONS[request.template_id],
            "rendered_prompt": request.rendered_prompt,
            "params": request.params.as_dict(),
            "response_text": response_text,
            "latency_ms": latency_ms,
            "provider_tag": provider_tag,
        }
        line = json.dumps(row, ensure_ascii=False) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)


class RecordingJudge:
    """Wraps a judge and appends every exchange to a transcript."""

    def __init__(self, inner: Judge, writer: TranscriptWriter):
        self._inner = inner
        self._writer = writer
        self.provider_tag = inner.provider_tag

    def complete(self, request: JudgeRequest) -> str:
        start = time.monotonic()
        response = self._inner.complete(request)
        latency_ms = int((time.monotonic() - start) * 1000)
        self._writer.append(request, response, latency_ms, self.provider_tag)
        return response


@dataclass(frozen=True)
class TranscriptRecord:
    """One judge exchange as stored in the transcript JSONL."""

    request_hash: str
    template_id: str
    template_version: str
    rendered_prompt: str
    params: dict
    response_text: str
    latency_ms: int
    provider_tag: str


def read_transcript(path: str | Path) -> list[TranscriptRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            records.append(
                TranscriptRecord(
                    request_hash=row["request_hash"],
                    template_id=row["template_id"],
                    template_version=row.get("template_version", ""),
                    rendered_prompt=row["rendered_prompt"],
                    params=row["params"],
                    response_text=row["response_text"],
                    latency_ms=row.get("latency_ms", 0),
                    provider_tag=row.get("provider_tag", ""),
                )
            )
    return records


class ReplayJudge:
    """Serves recorded responses by request hash; never goes remote.

    Raises:
        ReplayMiss: a request was not seen when the transcript was
            recorded.
    """

    provider_tag = "replay"

    def __init__(self, transcript_path: str | Path):
        self.transcript_path = Path(transcript_path)
        self._responses: dict[str, str] = {}
        with open(self.transcript_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                self._responses[row["request_hash"]] = row["response_text"]

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, request: JudgeRequest) -> str:
        key = request.request_hash()
        try:
            return self._responses[key]
        except KeyError:
            raise ReplayMiss(
                f"no recorded response for template {request.template_id!r} (hash {key[:12]})"
            ) from None
