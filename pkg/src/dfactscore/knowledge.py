"""Entity-page store built from a JSONL dump, with pages split into
100-word passages, plus mining of disambiguation records into an
ambiguous-name corpus."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .core import EntityRef
from .text import normalize_ws

logger = logging.getLogger(__name__)

PASSAGE_WORDS = 100


class KnowledgeError(Exception):
    pass


class DuplicateTitle(KnowledgeError):
    pass


class MalformedRecord(KnowledgeError):
    pass


class UnknownEntity(KnowledgeError):
    pass


class InsufficientNames(KnowledgeError):
    """Fewer eligible ambiguous names than the requested sample size."""


@dataclass(frozen=True)
class Passage:
    """A retrievable chunk of at most 100 whitespace words."""

    page_id: str
    passage_index: int
    title: str
    text: str

    def __post_init__(self) -> None:
        n = len(self.text.split())
        if not 1 <= n <= PASSAGE_WORDS:
            raise ValueError(f"passage must hold 1..{PASSAGE_WORDS} words, got {n}")


@dataclass(frozen=True)
class WikiPage:
    """One entity page: full body plus its passage split."""

    entity: EntityRef
    text: str
    passages: tuple[Passage, ...]


@dataclass(frozen=True)
class AmbigName:
    """A surface name shared by two or more entities in the store."""

    name: str
    candidate_entities: tuple[EntityRef, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("ambiguous name must be non-empty")
        if len({e.page_id for e in self.candidate_entities}) < 2:
            raise ValueError("an ambiguous name needs >= 2 distinct candidate entities")


def split_passages(page_id: str, title: str, body: str) -> tuple[Passage, ...]:
    """Greedy left-to-right chunking of whitespace tokens into passages
    of 100 words; only the final passage may be shorter. Empty bodies
    yield no passages."""
    tokens = body.split()
    passages = []
    for index, start in enumerate(range(0, len(tokens), PASSAGE_WORDS)):
        chunk = tokens[start : start + PASSAGE_WORDS]
        passages.append(
            Passage(page_id=page_id, passage_index=index, title=title, text=" ".join(chunk))
        )
    return tuple(passages)


class PassageStore:
    """Read-only collection of entity pages and their passages.

    Construction is single-threaded; after that the store is immutable
    and safe to share across threads.
    """

    def __init__(self, pages: Iterable[WikiPage]):
        self._by_id: dict[str, WikiPage] = {}
        self._by_title: dict[str, WikiPage] = {}
        self._passages: list[Passage] = []
        for page in pages:
            if page.entity.title in self._by_title:
                raise DuplicateTitle(page.entity.title)
            if page.entity.page_id in self._by_id:
                raise DuplicateTitle(f"page id {page.entity.page_id!r} reused")
            self._by_id[page.entity.page_id] = page
            self._by_title[page.entity.title] = page
            self._passages.extend(page.passages)

    def __len__(self) -> int:
        return len(self._by_id)

    @property
    def passages(self) -> list[Passage]:
        return list(self._passages)

    @property
    def passage_count(self) -> int:
        return len(self._passages)

    def pages(self) -> Iterator[WikiPage]:
        return iter(self._by_id.values())

    def entity_page(self, entity: EntityRef) -> WikiPage:
        """The full page for an entity, looked up by page id.

        Raises:
            UnknownEntity: the page id is not in the store.
        """
        try:
            return self._by_id[entity.page_id]
        except KeyError:
            raise UnknownEntity(entity.page_id) from None

    def page_by_title(self, title: str) -> Optional[WikiPage]:
        """Exact-title lookup; no fuzzy matching, parentheticals count."""
        return self._by_title.get(title)

    def save(self, directory: str | Path) -> None:
        """Persist as passages.jsonl + pages.jsonl. Byte-stable for
        identical input."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "pages.jsonl", "w", encoding="utf-8") as fh:
            for page in self._by_id.values():
                fh.write(
                    json.dumps(
                        {"page_id": page.entity.page_id, "title": page.entity.title},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        with open(directory / "passages.jsonl", "w", encoding="utf-8") as fh:
            for passage in self._passages:
                fh.write(
                    json.dumps(
                        {
                            "page_id": passage.page_id,
                            "passage_index": passage.passage_index,
                            "title": passage.title,
                            "text": passage.text,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, directory: str | Path) -> "PassageStore":
        directory = Path(directory)
        passages_by_page: dict[str, list[Passage]] = {}
        with open(directory / "passages.jsonl", encoding="utf-8") as fh:
            for line in fh:
                row = json.loads(line)
                passages_by_page.setdefault(row["page_id"], []).append(
                    Passage(
                        page_id=row["page_id"],
                        passage_index=row["passage_index"],
                        title=row["title"],
                        text=row["text"],
                    )
                )
        pages = []
        with open(directory / "pages.jsonl", encoding="utf-8") as fh:
            for line in fh:
                row = json.loads(line)
                passages = tuple(
                    sorted(
                        passages_by_page.get(row["page_id"], []),
                        key=lambda p: p.passage_index,
                    )
                )
                pages.append(
                    WikiPage(
                        entity=EntityRef(title=row["title"], page_id=row["page_id"]),
                        text=" ".join(p.text for p in passages),
                        passages=passages,
                    )
                )
        return cls(pages)


def ingest_dump(records: Iterable[tuple[str, str]]) -> PassageStore:
    """Build a PassageStore from (title, body) records.

    Page ids are assigned sequentially in record order, so identical
    input always produces an identical store.

    Raises:
        DuplicateTitle: a title appears twice.
        MalformedRecord: a record is not a (title, body) string pair.
    """
    pages = []
    seen_titles: set[str] = set()
    for index, record in enumerate(records):
        try:
            title, body = record
        except (TypeError, ValueError):
            raise MalformedRecord(f"record {index} is not a (title, body) pair") from None
        if not isinstance(title, str) or not isinstance(body, str) or not title:
            raise MalformedRecord(f"record {index}: title and body must be strings")
        if title in seen_titles:
            raise DuplicateTitle(title)
        seen_titles.add(title)
        page_id = f"p{index:06d}"
        normalized = normalize_ws(body)
        pages.append(
            WikiPage(
                entity=EntityRef(title=title, page_id=page_id),
                text=normalized,
                passages=split_passages(page_id, title, body),
            )
        )
    return PassageStore(pages)


def read_dump_jsonl(path: str | Path) -> Iterator[tuple[str, str]]:
    """Yield (title, text) pairs from a JSONL dump file."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                yield row["title"], row["text"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise MalformedRecord(f"{path}:{line_no}: expected {{title, text}}") from None


def read_disambig_jsonl(path: str | Path) -> list[tuple[str, list[str]]]:
    """Read disambiguation records {name, members} from JSONL."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out.append((row["name"], list(row["members"])))
            except (json.JSONDecodeError, KeyError, TypeError):
                raise MalformedRecord(f"{path}:{line_no}: expected {{name, members}}") from None
    return out


def build_ambigbio(
    store: PassageStore,
    disambig_source: Iterable[tuple[str, list[str]]],
    sample_size: int,
    seed: int,
) -> list[AmbigName]:
    """Sample ambiguous names whose members resolve to store pages.

    A name is eligible when at least two of its member titles exist in
    the store; members without a page are dropped (counted and warned
    about once). The sample is a seeded shuffle of the eligible names,
    truncated to sample_size, so a fixed seed gives identical output.

    Raises:
        InsufficientNames: fewer eligible names than sample_size.
    """
    eligible: list[AmbigName] = []
    dropped_members = 0
    for name, member_titles in disambig_source:
        candidates = []
        for title in member_titles:
            page = store.page_by_title(title)
            if page is None:
                dropped_members += 1
                continue
            candidates.append(page.entity)
        if len({c.page_id for c in candidates}) >= 2:
            eligible.append(AmbigName(name=name, candidate_entities=tuple(candidates)))
    if dropped_members:
        logger.warning(
            "build_ambigbio: dropped %d disambiguation members without a store page",
            dropped_members,
        )
    if sample_size > len(eligible):
        raise InsufficientNames(
            f"requested {sample_size} names but only {len(eligible)} are eligible"
        )
    rng = random.Random(seed)
    rng.shuffle(eligible)
    return eligible[:sample_size]


def entity_page(store: PassageStore, entity: EntityRef) -> WikiPage:
    """The single evidence scope used for group verification."""
    return store.entity_page(entity)
