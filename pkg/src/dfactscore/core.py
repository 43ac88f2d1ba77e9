"""Domain types and pure scoring math: FS, D-FS, citation recall, and
paragraph categorization. No I/O, no model calls; every operation is a
pure function over immutable values, and scores are exact rationals."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence


class ScoringError(Exception):
    """Base class for scoring-contract violations."""


class EmptyRelevantSet(ScoringError):
    """Every fact was labeled Irrelevant; the paragraph is unscorable."""


class PartitionViolation(ScoringError):
    """Fact groups overlap, omit a fact, or reference unknown facts."""


class EmptyParagraph(ScoringError):
    """No sentences to score."""


class Verdict(enum.Enum):
    SUPPORTED = "Supported"
    NOT_SUPPORTED = "NotSupported"
    IRRELEVANT = "Irrelevant"


class Category(enum.Enum):
    ONE_BIO_ONE_ENTITY = "OneBioOneEntity"
    ONE_BIO_MANY_ENTITIES = "OneBioManyEntities"
    MANY_BIOS_MANY_ENTITIES = "ManyBiosManyEntities"
    OTHER = "Other"


@dataclass(frozen=True)
class AtomicFact:
    """One short declarative claim decomposed from a paragraph."""

    id: str
    text: str
    source_sentence_index: int

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("atomic fact text must be non-empty")


@dataclass(frozen=True)
class FactLabel:
    """Verdict for one (fact, evidence-scope) pair."""

    verdict: Verdict


@dataclass(frozen=True)
class EntityRef:
    """A knowledge-source entity: canonical title (disambiguating
    parenthetical included) plus an opaque page id."""

    title: str
    page_id: str

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError("entity title must be non-empty")


@dataclass(frozen=True)
class FactGroup:
    """Facts a reader would attribute to one individual, in paragraph
    order, plus the entity the group was linked to (None = no match)."""

    member_fact_ids: tuple[str, ...]
    linked_entity: Optional[EntityRef] = None


@dataclass(frozen=True)
class SentenceCitationRecord:
    """Citation state of one generated sentence."""

    sentence_index: int
    citation_ids: tuple[int, ...]
    supported_by_citations: bool = False

    def __post_init__(self) -> None:
        if not self.citation_ids and self.supported_by_citations:
            raise ValueError("a sentence without citations cannot be supported by them")


@dataclass(frozen=True)
class ParagraphReport:
    """Per-paragraph scoring summary. fs and dfs are exact fractions in
    [0, 1]; rendering as one-decimal percentages happens at report time."""

    paragraph_id: str
    fs: Fraction
    dfs: Fraction
    num_bios: int
    num_entities: int
    category: Category
    relevant_fact_count: int
    citation_recall: Optional[Fraction] = None

    def __post_init__(self) -> None:
        for name, value in (("fs", self.fs), ("dfs", self.dfs)):
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.citation_recall is not None and not 0 <= self.citation_recall <= 1:
            raise ValueError("citation_recall must lie in [0, 1]")
        if self.relevant_fact_count >= 1 and self.num_bios < 1:
            raise ValueError("a scorable paragraph must contain at least one bio")
        if self.num_entities < 0:
            raise ValueError("num_entities must be non-negative")


def fact_score(labels: Sequence[FactLabel]) -> Fraction:
    """Fraction of relevant facts that are Supported.

    Irrelevant labels are excluded from numerator and denominator.

    Raises:
        EmptyRelevantSet: all labels are Irrelevant (or the list is empty).
    """
    supported = 0
    relevant = 0
    for label in labels:
        if label.verdict is Verdict.IRRELEVANT:
            continue
        relevant += 1
        if label.verdict is Verdict.SUPPORTED:
            supported += 1
    if relevant == 0:
        raise EmptyRelevantSet("no relevant facts to score")
    return Fraction(supported, relevant)


def d_fact_score(
    groups: Sequence[FactGroup],
    per_fact_labels: Mapping[str, FactLabel],
) -> Fraction:
    """Fraction of relevant facts supported by their own group's linked
    entity page.

    ``per_fact_labels`` holds each fact's verdict as judged against the
    linked entity of the group it belongs to; the groups must partition
    its key set. Facts in a group whose linked entity is None (no match
    in the knowledge source) count NotSupported. Irrelevant facts are
    excluded, as in fact_score.

    Raises:
        PartitionViolation: groups overlap, omit a labeled fact, or name
            an unlabeled fact.
        EmptyRelevantSet: no relevant facts remain.
    """
    seen: set[str] = set()
    for group in groups:
        for fact_id in group.member_fact_ids:
            if fact_id in seen:
                raise PartitionViolation(f"fact {fact_id!r} appears in two groups")
            if fact_id not in per_fact_labels:
                raise PartitionViolation(f"fact {fact_id!r} has no label")
            seen.add(fact_id)
    missing = set(per_fact_labels) - seen
    if missing:
        raise PartitionViolation(f"facts omitted from all groups: {sorted(missing)}")

    supported = 0
    relevant = 0
    for group in groups:
        for fact_id in group.member_fact_ids:
            label = per_fact_labels[fact_id]
            if label.verdict is Verdict.IRRELEVANT:
                continue
            relevant += 1
            if group.linked_entity is None:
                continue  # no-match group: relevant facts count NotSupported
            if label.verdict is Verdict.SUPPORTED:
                supported += 1
    if relevant == 0:
        raise EmptyRelevantSet("no relevant facts to score")
    return Fraction(supported, relevant)


def categorize(num_bios: int, num_entities: int) -> Category:
    """Classify a paragraph by distinguishable-bio and distinct-entity
    counts. Only the three named shapes exist; every other combination
    (e.g. several bios all pointing at one entity) is Other."""
    if num_bios < 1:
        raise ValueError("num_bios must be >= 1")
    if num_entities < 0:
        raise ValueError("num_entities must be >= 0")
    if num_bios == 1 and num_entities == 1:
        return Category.ONE_BIO_ONE_ENTITY
    if num_bios == 1 and num_entities > 1:
        return Category.ONE_BIO_MANY_ENTITIES
    if num_bios > 1 and num_entities > 1:
        return Category.MANY_BIOS_MANY_ENTITIES
    return Category.OTHER


def count_distinct_entities(attributions: Iterable[Optional[EntityRef]]) -> int:
    """Number of unique page ids among non-empty per-fact attributions."""
    return len({ref.page_id for ref in attributions if ref is not None})


def citation_recall(records: Sequence[SentenceCitationRecord]) -> Fraction:
    """Fraction of sentences that carry at least one citation and are
    supported by their cited documents.

    Raises:
        EmptyParagraph: the record list is empty.
    """
    if not records:
        raise EmptyParagraph("no sentences to score")
    hits = sum(
        1 for r in records if r.citation_ids and r.supported_by_citations
    )
    return Fraction(hits, len(records))
