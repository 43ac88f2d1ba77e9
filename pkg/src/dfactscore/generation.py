"""Retrieval-augmented biography generation: build the cited-document
prompt with 2-shot demonstrations, call a generation endpoint, and turn
outputs into sentence-level citation records for later evaluation."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .core import SentenceCitationRecord
from .judge import TransportError, chat_complete
from .knowledge import PassageStore
from .retrieval import RetrievedPassage, RetrieverConfig, make_query, retrieve
from .text import extract_citations, split_sentences

ENV_ENDPOINT = "DFS_GEN_ENDPOINT"
ENV_MODEL = "DFS_GEN_MODEL"
ENV_TOKEN = "DFS_GEN_TOKEN"

SAMPLING_TEMPERATURE = 1.0
SAMPLING_TOP_P = 0.95
DEFAULT_MAX_TOKENS = 512


class GenerationError(Exception):
    pass


class EmptyRetrieval(GenerationError):
    pass


@dataclass(frozen=True)
class DemoDoc:
    title: str
    text: str


@dataclass(frozen=True)
class Demo:
    name: str
    passages: tuple[DemoDoc, ...]
    answer: str


@dataclass(frozen=True)
class DemoSet:
    """Exactly two worked examples; each answer sticks to one entity so
    the model sees how to handle (or sidestep) name ambiguity."""

    kind: str  # with_ambiguity | without_ambiguity
    demos: tuple[Demo, Demo]

    def __post_init__(self) -> None:
        if self.kind not in ("with_ambiguity", "without_ambiguity"):
            raise ValueError(f"unknown demo kind {self.kind!r}")
        if len(self.demos) != 2:
            raise ValueError("a demo set holds exactly 2 demonstrations")


@dataclass(frozen=True)
class GenerationRecord:
    name: str
    prompt: str
    output_text: str
    retrieved: tuple[RetrievedPassage, ...]
    temperature: float = SAMPLING_TEMPERATURE
    top_p: float = SAMPLING_TOP_P


def load_demo_set(kind: str) -> DemoSet:
    """Load one of the shipped demo files (editable package data)."""
    filename = f"demos_{kind}.json"
    raw = resources.files("dfactscore.templates").joinpath(filename).read_text("utf-8")
    payload = json.loads(raw)
    demos = tuple(
        Demo(
            name=d["name"],
            passages=tuple(DemoDoc(p["title"], p["text"]) for p in d["passages"]),
            answer=d["answer"],
        )
        for d in payload["demos"]
    )
    return DemoSet(kind=payload["kind"], demos=demos)


def _instruction() -> str:
    return (
        resources.files("dfactscore.templates")
        .joinpath("vanilla_instruction.txt")
        .read_text("utf-8")
        .rstrip("\n")
    )


def _block(name: str, docs: Sequence, answer: Optional[str]) -> str:
    lines = [_instruction()]
    for i, doc in enumerate(docs, start=1):
        lines.append(f"Document [{i}] (Title: {doc.title}) {doc.text}")
    lines.append(f"Name of the person: {name}")
    lines.append(f"Answer: {answer}" if answer is not None else "Answer:")
    return "\n".join(lines)


def build_prompt(name: str, passages: Sequence, demo_set: DemoSet) -> str:
    """Instruction + numbered documents + name + answer slot, with the
    two demonstrations prepended in the same format. Titles keep their
    disambiguating parentheticals verbatim."""
    blocks = [_block(d.name, d.passages, d.answer) for d in demo_set.demos]
    blocks.append(_block(name, passages, None))
    return "\n\n".join(blocks)


class Generator(Protocol):
    model_tag: str

    def generate(self, prompt: str, temperature: float, top_p: float) -> str: ...


class RemoteGenerator:
    """Generation endpoint client; same chat wire format as the judge,
    separate DFS_GEN_* environment variables."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        token: str = "",
        max_tokens: int = DEFAULT_MAX_TOKENS,
        max_attempts: int = 3,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.token = token
        self.max_tokens = max_tokens
        self.max_attempts = max_attempts
        self.timeout = timeout
        self.model_tag = model

    @classmethod
    def from_env(cls, **kwargs) -> "RemoteGenerator":
        endpoint = os.environ.get(ENV_ENDPOINT)
        model = os.environ.get(ENV_MODEL)
        if not endpoint or not model:
            raise TransportError(f"generation needs {ENV_ENDPOINT} and {ENV_MODEL} set")
        return cls(endpoint, model, os.environ.get(ENV_TOKEN, ""), **kwargs)

    def generate(self, prompt: str, temperature: float, top_p: float) -> str:
        return chat_complete(
            self.endpoint,
            self.model,
            self.token,
            prompt,
            {"temperature": temperature, "top_p": top_p, "max_tokens": self.max_tokens},
            max_attempts=self.max_attempts,
            timeout=self.timeout,
        )


class ScriptedGenerator:
    """Returns canned outputs by name; for tests and dry runs."""

    model_tag = "scripted"

    def __init__(self, outputs_by_name: dict[str, str], default: str = ""):
        self.outputs_by_name = dict(outputs_by_name)
        self.default = default

    def generate(self, prompt: str, temperature: float, top_p: float) -> str:
        # The query block comes after the demos, so the last name line
        # is the one being asked about.
        names = re.findall(r"^Name of the person: (.+)$", prompt, flags=re.M)
        name = names[-1] if names else ""
        return self.outputs_by_name.get(name, self.default)


def generate_bio(
    generator: Generator,
    name: str,
    store: PassageStore,
    retriever_config: RetrieverConfig,
    demo_set: DemoSet,
) -> GenerationRecord:
    """Retrieve top-k passages for the name, build the prompt, and call
    the generator at the fixed sampling settings.

    Raises:
        EmptyRetrieval: retrieval produced no passages.
        TransportError: the generation endpoint failed.
    """
    retrieved = retrieve(retriever_config, store, make_query(name))
    if not retrieved:
        raise EmptyRetrieval(name)
    prompt = build_prompt(name, [rp.passage for rp in retrieved], demo_set)
    output = generator.generate(prompt, SAMPLING_TEMPERATURE, SAMPLING_TOP_P)
    return GenerationRecord(
        name=name,
        prompt=prompt,
        output_text=output,
        retrieved=tuple(retrieved),
    )


def resolve_citations(
    output_text: str, retrieved: Sequence[RetrievedPassage]
) -> list[SentenceCitationRecord]:
    """Sentence-split the output and collect each sentence's bracketed
    citation numbers (1-based retrieval ranks). Support flags start
    False; they are decided later by the citation judge, and a sentence
    whose citations are all out of range can never become supported."""
    records = []
    for index, sentence in enumerate(split_sentences(output_text)):
        cited = extract_citations(sentence)
        records.append(
            SentenceCitationRecord(
                sentence_index=index,
                citation_ids=tuple(cited),
                supported_by_citations=False,
            )
        )
    return records


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "name"


def record_to_paragraph_row(record: GenerationRecord, sequence: int) -> dict:
    """Row in the pipeline's paragraph input format, with generation
    provenance carried along."""
    return {
        "paragraph_id": f"gen-{sequence:04d}-{_slug(record.name)}",
        "name": record.name,
        "text": record.output_text,
        "citations_resolved": [
            {
                "doc_index": rp.rank,
                "title": rp.passage.title,
                "text": rp.passage.text,
            }
            for rp in record.retrieved
        ],
        "prompt": record.prompt,
        "sampling": {"temperature": record.temperature, "top_p": record.top_p},
    }


def write_generation_records(
    records: Sequence[GenerationRecord], path: str | Path, model_tag: str = ""
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sequence, record in enumerate(records):
            row = record_to_paragraph_row(record, sequence)
            if model_tag:
                row["model_tag"] = model_tag
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
