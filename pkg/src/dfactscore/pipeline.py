"""Automatic paragraph evaluation: decompose into atomic facts, group
facts by the individual they appear to describe, link each group to the
candidate entity that best supports it, verify facts against their
group's entity page (D-FS) and against the union of candidate pages
(FS), and score citations per sentence.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

from .assignment import max_sum_assignment
from .core import (
    AtomicFact,
    Category,
    EntityRef,
    FactGroup,
    FactLabel,
    ParagraphReport,
    SentenceCitationRecord,
    Verdict,
    categorize,
    citation_recall,
    count_distinct_entities,
    d_fact_score,
    fact_score,
)
from .judge import (
    EVAL_PARAMS,
    GROUP_SEPARATOR,
    LONG_OUTPUT_PARAMS,
    Judge,
    JudgeError,
    JudgeRequest,
    ParsedVerdict,
    parse_fact_lines,
    parse_verdict,
    parse_yes_no,
    render_citation_prompt,
    render_decompose_prompt,
    render_group_prompt,
    render_no_context_verify_prompt,
    render_relevance_prompt,
    render_verify_prompt,
)
from .knowledge import PassageStore, WikiPage
from .retrieval import (
    RetrieverConfig,
    candidate_entities,
    make_query,
    rank_passages_lexical,
    retrieve,
    DISAMBIGUATION_SUFFIX,
)
from .text import extract_citations, normalize_ws, split_sentences, strip_citations

EVIDENCE_K = 5


class PipelineError(Exception):
    pass


class JudgeFailure(PipelineError):
    pass


class EmptyDecomposition(PipelineError):
    pass


class AlignmentError(PipelineError):
    """Grouping response does not re-emit the input facts."""


class UnscorableParagraph(PipelineError):
    """Every decomposed fact was judged irrelevant."""

    def __init__(self, paragraph_id: str, reason: str):
        super().__init__(f"{paragraph_id}: {reason}")
        self.paragraph_id = paragraph_id
        self.reason = reason


@dataclass(frozen=True)
class CitedDoc:
    """A document the generator cited, resolved to its text."""

    doc_index: int
    title: str
    text: str


@dataclass(frozen=True)
class Paragraph:
    """One generation to evaluate. citations_resolved is None when the
    input carries no citation information."""

    paragraph_id: str
    name: str
    text: str
    citations_resolved: Optional[tuple[CitedDoc, ...]] = None


@dataclass(frozen=True)
class GroupingOutput:
    """Parsed fact grouping; flattening groups reproduces the input
    facts in order. alignment_fallback marks a response that failed
    validation twice and was replaced by a single group."""

    raw_text: str
    groups: tuple[tuple[str, ...], ...]
    alignment_fallback: bool = False


@dataclass(frozen=True)
class LinkingResult:
    group_index: int
    entity: Optional[EntityRef]
    support_fraction: Fraction
    per_fact_support: dict[str, bool]


@dataclass(frozen=True)
class FactDetail:
    fact_id: str
    text: str
    group_index: Optional[int]
    linked_entity: Optional[str]
    fs_label: Optional[str]
    dfs_label: Optional[str]


@dataclass(frozen=True)
class ParagraphEvaluation:
    paragraph_id: str
    num_entities: int
    relevant_fact_count: int
    fs: Optional[Fraction] = None
    dfs: Optional[Fraction] = None
    num_bios: Optional[int] = None
    category: Optional[Category] = None
    citation_recall: Optional[Fraction] = None
    grouping_fallback: bool = False
    fact_details: tuple[FactDetail, ...] = ()
    report: Optional[ParagraphReport] = None


@dataclass(frozen=True)
class EvaluateOptions:
    mode: str = "both"  # fs | dfs | both
    assign_mode: str = "independent"  # independent | hungarian
    evidence_k: int = EVIDENCE_K

    def __post_init__(self) -> None:
        if self.mode not in ("fs", "dfs", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.assign_mode not in ("independent", "hungarian"):
            raise ValueError(f"unknown assignment mode {self.assign_mode!r}")


def _clean_name(name: str) -> str:
    cleaned = name.strip()
    if cleaned.lower().endswith(DISAMBIGUATION_SUFFIX):
        cleaned = cleaned[: -len(DISAMBIGUATION_SUFFIX)].strip()
    return cleaned


# --------------------------------------------------------------------------
# Step 1: decomposition
# --------------------------------------------------------------------------


def decompose(judge: Judge, paragraph: Paragraph) -> list[AtomicFact]:
    """Split the paragraph into sentences and ask the judge to break
    each into independent facts, keeping paragraph order.

    Raises:
        EmptyDecomposition: no fact lines were parsed for any sentence.
        JudgeFailure: the judge transport failed.
    """
    facts: list[AtomicFact] = []
    for sentence_index, sentence in enumerate(split_sentences(paragraph.text)):
        request = JudgeRequest(
            template_id="decompose",
            rendered_prompt=render_decompose_prompt(sentence),
            params=LONG_OUTPUT_PARAMS,
            meta={"sentence": sentence, "paragraph_id": paragraph.paragraph_id},
        )
        try:
            response = judge.complete(request)
        except JudgeError as exc:
            raise JudgeFailure(f"{paragraph.paragraph_id}: decompose failed: {exc}") from exc
        for line in parse_fact_lines(response):
            if line == GROUP_SEPARATOR:
                continue
            facts.append(
                AtomicFact(
                    id=f"f{len(facts):03d}",
                    text=line,
                    source_sentence_index=sentence_index,
                )
            )
    if not facts:
        raise EmptyDecomposition(paragraph.paragraph_id)
    return facts


# --------------------------------------------------------------------------
# Step 2: grouping
# --------------------------------------------------------------------------


def parse_group_response(response_text: str) -> list[list[str]]:
    """Split re-emitted fact lines into groups at '- ===' markers.
    Empty groups produced by stray separators are dropped."""
    groups: list[list[str]] = [[]]
    for line in parse_fact_lines(response_text):
        if line == GROUP_SEPARATOR:
            groups.append([])
        else:
            groups[-1].append(line)
    return [g for g in groups if g]


def validate_grouping(input_facts: Sequence[str], groups: Sequence[Sequence[str]]) -> None:
    """Flatten-equality check, whitespace-normalized.

    Raises:
        AlignmentError: the groups do not reproduce the input facts in
            order.
    """
    emitted = [normalize_ws(t) for group in groups for t in group]
    expected = [normalize_ws(t) for t in input_facts]
    if emitted != expected:
        raise AlignmentError(
            f"grouped facts do not match input (got {len(emitted)} facts, "
            f"expected {len(expected)})"
        )


def group_facts(
    judge: Judge, paragraph: Paragraph, facts: Sequence[AtomicFact]
) -> GroupingOutput:
    """Ask the judge to re-emit the facts with '- ===' between groups
    belonging to different biographies.

    A response that fails flatten-equality validation is retried once;
    a second failure falls back to a single group covering all facts,
    flagged on the output.
    """
    if not facts:
        raise ValueError("cannot group an empty fact list")
    fact_texts = [f.text for f in facts]
    request = JudgeRequest(
        template_id="group",
        rendered_prompt=render_group_prompt(paragraph.text, fact_texts),
        params=LONG_OUTPUT_PARAMS,
        meta={"paragraph_id": paragraph.paragraph_id, "facts": tuple(fact_texts)},
    )
    last_response = ""
    for _ in range(2):
        try:
            last_response = judge.complete(request)
        except JudgeError as exc:
            raise JudgeFailure(f"{paragraph.paragraph_id}: grouping failed: {exc}") from exc
        groups = parse_group_response(last_response)
        try:
            validate_grouping(fact_texts, groups)
        except AlignmentError:
            continue
        return GroupingOutput(
            raw_text=last_response,
            groups=tuple(tuple(g) for g in groups),
        )
    return GroupingOutput(
        raw_text=last_response,
        groups=(tuple(fact_texts),),
        alignment_fallback=True,
    )


# --------------------------------------------------------------------------
# Step 3: entity linking and assignment
# --------------------------------------------------------------------------

SupportOracle = Callable[[AtomicFact, EntityRef], bool]


def link_entity(
    group: Sequence[AtomicFact],
    candidates: Sequence[EntityRef],
    support: SupportOracle,
    group_index: int = 0,
) -> LinkingResult:
    """Link a fact group to the candidate entity supporting the largest
    fraction of its facts; ties go to the earliest-retrieved candidate.
    With no candidates the group stays unlinked at fraction 0."""
    if not group:
        raise ValueError("cannot link an empty fact group")
    best: Optional[tuple[Fraction, int, dict[str, bool]]] = None
    for index, entity in enumerate(candidates):
        per_fact = {fact.id: support(fact, entity) for fact in group}
        fraction = Fraction(sum(per_fact.values()), len(group))
        if best is None or fraction > best[0]:
            best = (fraction, index, per_fact)
    if best is None:
        return LinkingResult(
            group_index=group_index,
            entity=None,
            support_fraction=Fraction(0),
            per_fact_support={fact.id: False for fact in group},
        )
    fraction, index, per_fact = best
    return LinkingResult(
        group_index=group_index,
        entity=candidates[index],
        support_fraction=fraction,
        per_fact_support=per_fact,
    )


def assign_entities(
    groups: Sequence[Sequence[AtomicFact]],
    candidates: Sequence[EntityRef],
    support_matrix: Sequence[Sequence[int]],
    mode: str = "independent",
) -> list[Optional[EntityRef]]:
    """Pick an entity per group from a groups x candidates matrix of
    supported-fact counts.

    independent: per-group argmax; several groups may share an entity
    (the default; the injective variant buys little in practice).
    hungarian: injective assignment maximizing the total supported
    count; with more groups than candidates, leftover groups stay
    unassigned.
    """
    if len(support_matrix) != len(groups):
        raise ValueError("support matrix rows must match groups")
    if any(len(row) != len(candidates) for row in support_matrix):
        raise ValueError("support matrix columns must match candidates")
    if not candidates:
        return [None] * len(groups)
    if mode == "independent":
        out: list[Optional[EntityRef]] = []
        for row in support_matrix:
            best_index = max(range(len(candidates)), key=lambda j: (row[j], -j))
            out.append(candidates[best_index])
        return out
    if mode == "hungarian":
        cols = max_sum_assignment([list(row) for row in support_matrix])
        return [candidates[j] if j is not None else None for j in cols]
    raise ValueError(f"unknown assignment mode {mode!r}")


# --------------------------------------------------------------------------
# Verification
# --------------------------------------------------------------------------


def _judge_relevance(judge: Judge, fact_text: str, name: str, paragraph_id: str) -> bool:
    request = JudgeRequest(
        template_id="relevance",
        rendered_prompt=render_relevance_prompt(fact_text, name),
        params=EVAL_PARAMS,
        meta={"fact_text": fact_text, "name": name, "paragraph_id": paragraph_id},
    )
    try:
        answer = parse_yes_no(judge.complete(request))
    except JudgeError as exc:
        raise JudgeFailure(f"{paragraph_id}: relevance check failed: {exc}") from exc
    # An unparseable answer keeps the fact in scope: dropping facts can
    # only inflate the score.
    return answer is not False


def _judge_support(
    judge: Judge,
    fact_text: str,
    page: WikiPage,
    paragraph_id: str,
    evidence_k: int,
) -> bool:
    if not page.passages:
        return False
    evidence = rank_passages_lexical(fact_text, page.passages, evidence_k)
    request = JudgeRequest(
        template_id="verify",
        rendered_prompt=render_verify_prompt(fact_text, evidence),
        params=EVAL_PARAMS,
        meta={
            "fact_text": fact_text,
            "page_id": page.entity.page_id,
            "paragraph_id": paragraph_id,
        },
    )
    try:
        verdict = parse_verdict(judge.complete(request))
    except JudgeError as exc:
        raise JudgeFailure(f"{paragraph_id}: verification failed: {exc}") from exc
    return verdict is ParsedVerdict.SUPPORTED


def verify_fact(
    judge: Judge,
    fact: AtomicFact,
    entity_page: WikiPage,
    name: str,
    evidence_k: int = EVIDENCE_K,
    no_context: bool = False,
) -> FactLabel:
    """Full per-fact protocol against one entity page: relevance first,
    then verification over the page's top-scoring passages. Anything
    the verdict parser cannot read counts NotSupported.

    no_context asks the judge without any evidence. That variant cannot
    tell same-name entities apart, so it exists for diagnostics only
    and is never used by evaluate_paragraph.
    """
    if not entity_page.passages:
        raise ValueError("entity page has no passages to verify against")
    if not _judge_relevance(judge, fact.text, _clean_name(name), "single-fact"):
        return FactLabel(Verdict.IRRELEVANT)
    if no_context:
        request = JudgeRequest(
            template_id="verify",
            rendered_prompt=render_no_context_verify_prompt(fact.text),
            params=EVAL_PARAMS,
            meta={"fact_text": fact.text, "page_id": "", "no_context": True},
        )
        try:
            verdict = parse_verdict(judge.complete(request))
        except JudgeError as exc:
            raise JudgeFailure(f"single-fact: verification failed: {exc}") from exc
        supported = verdict is ParsedVerdict.SUPPORTED
    else:
        supported = _judge_support(judge, fact.text, entity_page, "single-fact", evidence_k)
    return FactLabel(Verdict.SUPPORTED if supported else Verdict.NOT_SUPPORTED)


# --------------------------------------------------------------------------
# Citation recall
# --------------------------------------------------------------------------


def _citation_records(
    judge: Judge, paragraph: Paragraph
) -> Optional[list[SentenceCitationRecord]]:
    if paragraph.citations_resolved is None:
        return None
    docs_by_index = {doc.doc_index: doc for doc in paragraph.citations_resolved}
    records = []
    for sentence_index, sentence in enumerate(split_sentences(paragraph.text)):
        cited = extract_citations(sentence)
        valid = [docs_by_index[i] for i in cited if i in docs_by_index]
        has_dangling = len(valid) != len(cited)
        supported = False
        if cited and valid and not has_dangling:
            claim = strip_citations(sentence)
            request = JudgeRequest(
                template_id="citation_nli",
                rendered_prompt=render_citation_prompt(claim, valid),
                params=EVAL_PARAMS,
                meta={"sentence": claim, "paragraph_id": paragraph.paragraph_id},
            )
            try:
                supported = parse_verdict(judge.complete(request)) is ParsedVerdict.SUPPORTED
            except JudgeError as exc:
                raise JudgeFailure(
                    f"{paragraph.paragraph_id}: citation check failed: {exc}"
                ) from exc
        records.append(
            SentenceCitationRecord(
                sentence_index=sentence_index,
                citation_ids=tuple(cited),
                supported_by_citations=supported,
            )
        )
    return records


# --------------------------------------------------------------------------
# Full paragraph evaluation
# --------------------------------------------------------------------------


def evaluate_paragraph(
    paragraph: Paragraph,
    store: PassageStore,
    retriever_config: RetrieverConfig,
    judge: Judge,
    options: EvaluateOptions = EvaluateOptions(),
) -> ParagraphEvaluation:
    """Run the full evaluation for one paragraph.

    FS verifies each relevant fact against every candidate page and
    counts any-support; D-FS verifies it only against its group's linked
    page. Both draw on one shared per-(fact, page) verification, so the
    two scores are always comparable.

    Raises:
        UnscorableParagraph: every fact was judged irrelevant.
    """
    facts = decompose(judge, paragraph)
    name = _clean_name(paragraph.name)

    relevant: dict[str, bool] = {
        fact.id: _judge_relevance(judge, fact.text, name, paragraph.paragraph_id)
        for fact in facts
    }
    relevant_facts = [f for f in facts if relevant[f.id]]
    if not relevant_facts:
        raise UnscorableParagraph(paragraph.paragraph_id, "all facts irrelevant")

    retrieved = retrieve(retriever_config, store, make_query(paragraph.name))
    candidates = candidate_entities(retrieved)
    pages = {c.page_id: store.entity_page(c) for c in candidates}

    support_cache: dict[tuple[str, str], bool] = {}

    def support(fact: AtomicFact, entity: EntityRef) -> bool:
        key = (fact.id, entity.page_id)
        if key not in support_cache:
            support_cache[key] = _judge_support(
                judge, fact.text, pages[entity.page_id], paragraph.paragraph_id,
                options.evidence_k,
            )
        return support_cache[key]

    # Shared matrix: every relevant fact against every candidate page.
    for fact in relevant_facts:
        for entity in candidates:
            support(fact, entity)

    def first_supporting(fact: AtomicFact) -> Optional[EntityRef]:
        for entity in candidates:
            if support_cache[(fact.id, entity.page_id)]:
                return entity
        return None

    attributions = [first_supporting(f) for f in relevant_facts]
    num_entities = count_distinct_entities(attributions)

    fs: Optional[Fraction] = None
    fs_labels: dict[str, Verdict] = {}
    if options.mode in ("fs", "both"):
        for fact in facts:
            if not relevant[fact.id]:
                fs_labels[fact.id] = Verdict.IRRELEVANT
            elif first_supporting(fact) is not None:
                fs_labels[fact.id] = Verdict.SUPPORTED
            else:
                fs_labels[fact.id] = Verdict.NOT_SUPPORTED
        fs = fact_score([FactLabel(fs_labels[f.id]) for f in facts])

    dfs: Optional[Fraction] = None
    num_bios: Optional[int] = None
    grouping_fallback = False
    dfs_labels: dict[str, Verdict] = {}
    group_of_fact: dict[str, int] = {}
    linked_by_group: dict[int, Optional[EntityRef]] = {}
    if options.mode in ("dfs", "both"):
        grouping = group_facts(judge, paragraph, facts)
        grouping_fallback = grouping.alignment_fallback
        num_bios = len(grouping.groups)

        fact_groups: list[list[AtomicFact]] = []
        cursor = 0
        for group in grouping.groups:
            members = [facts[cursor + i] for i in range(len(group))]
            cursor += len(group)
            fact_groups.append(members)
        for index, members in enumerate(fact_groups):
            for fact in members:
                group_of_fact[fact.id] = index

        scorable = [
            (index, [f for f in members if relevant[f.id]])
            for index, members in enumerate(fact_groups)
        ]
        matrix_rows = [(index, members) for index, members in scorable if members]
        matrix = [
            [sum(1 for f in members if support(f, entity)) for entity in candidates]
            for _, members in matrix_rows
        ]
        assigned = assign_entities(
            [members for _, members in matrix_rows],
            candidates,
            matrix,
            mode=options.assign_mode,
        )
        linked_by_group = {index: None for index in range(len(fact_groups))}
        for (index, _), entity in zip(matrix_rows, assigned):
            linked_by_group[index] = entity

        core_groups = []
        for index, members in enumerate(fact_groups):
            core_groups.append(
                FactGroup(
                    member_fact_ids=tuple(f.id for f in members),
                    linked_entity=linked_by_group[index],
                )
            )
        label_map: dict[str, FactLabel] = {}
        for index, members in enumerate(fact_groups):
            entity = linked_by_group[index]
            for fact in members:
                if not relevant[fact.id]:
                    verdict = Verdict.IRRELEVANT
                elif entity is not None and support(fact, entity):
                    verdict = Verdict.SUPPORTED
                else:
                    verdict = Verdict.NOT_SUPPORTED
                dfs_labels[fact.id] = verdict
                label_map[fact.id] = FactLabel(verdict)
        dfs = d_fact_score(core_groups, label_map)

    recall: Optional[Fraction] = None
    records = _citation_records(judge, paragraph)
    if records:
        recall = citation_recall(records)

    category: Optional[Category] = None
    if num_bios is not None:
        category = categorize(num_bios, num_entities)

    details = []
    for fact in facts:
        group_index = group_of_fact.get(fact.id)
        linked = linked_by_group.get(group_index) if group_index is not None else None
        details.append(
            FactDetail(
                fact_id=fact.id,
                text=fact.text,
                group_index=group_index,
                linked_entity=linked.title if linked else None,
                fs_label=fs_labels[fact.id].value if fact.id in fs_labels else None,
                dfs_label=dfs_labels[fact.id].value if fact.id in dfs_labels else None,
            )
        )

    report: Optional[ParagraphReport] = None
    if fs is not None and dfs is not None and num_bios is not None and category is not None:
        report = ParagraphReport(
            paragraph_id=paragraph.paragraph_id,
            fs=fs,
            dfs=dfs,
            num_bios=num_bios,
            num_entities=num_entities,
            category=category,
            relevant_fact_count=len(relevant_facts),
            citation_recall=recall,
        )

    return ParagraphEvaluation(
        paragraph_id=paragraph.paragraph_id,
        num_entities=num_entities,
        relevant_fact_count=len(relevant_facts),
        fs=fs,
        dfs=dfs,
        num_bios=num_bios,
        category=category,
        citation_recall=recall,
        grouping_fallback=grouping_fallback,
        fact_details=tuple(details),
        report=report,
    )


@dataclass(frozen=True)
class CorpusResult:
    evaluations: tuple[ParagraphEvaluation, ...]
    unscorable: tuple[tuple[str, str], ...]  # (paragraph_id, reason)


def evaluate_corpus(
    paragraphs: Sequence[Paragraph],
    store: PassageStore,
    retriever_config: RetrieverConfig,
    judge: Judge,
    options: EvaluateOptions = EvaluateOptions(),
    workers: int = 1,
) -> CorpusResult:
    """Evaluate paragraphs independently, optionally in parallel.
    Results are sorted by paragraph id afterwards, so worker count never
    changes the output."""

    def run(paragraph: Paragraph):
        try:
            return evaluate_paragraph(paragraph, store, retriever_config, judge, options)
        except UnscorableParagraph as exc:
            return exc

    if workers <= 1:
        outcomes = [run(p) for p in paragraphs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, paragraphs))

    evaluations = []
    unscorable = []
    for outcome in outcomes:
        if isinstance(outcome, UnscorableParagraph):
            unscorable.append((outcome.paragraph_id, outcome.reason))
        else:
            evaluations.append(outcome)
    evaluations.sort(key=lambda e: e.paragraph_id)
    unscorable.sort()
    return CorpusResult(evaluations=tuple(evaluations), unscorable=tuple(unscorable))


# --------------------------------------------------------------------------
# External formats
# --------------------------------------------------------------------------


def read_paragraphs_jsonl(path: str | Path) -> list[Paragraph]:
    paragraphs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            citations = None
            if "citations_resolved" in row and row["citations_resolved"] is not None:
                citations = tuple(
                    CitedDoc(
                        doc_index=int(d["doc_index"]),
                        title=d["title"],
                        text=d["text"],
                    )
                    for d in row["citations_resolved"]
                )
            paragraphs.append(
                Paragraph(
                    paragraph_id=row["paragraph_id"],
                    name=row["name"],
                    text=row["text"],
                    citations_resolved=citations,
                )
            )
    return paragraphs


def _pct(value: Optional[Fraction]) -> Optional[float]:
    if value is None:
        return None
    return round(float(value) * 100.0, 1)


def report_row(evaluation: ParagraphEvaluation) -> dict:
    """JSON-ready report row: exact fractions as strings, plus the
    one-decimal percent rendering used in tables."""
    return {
        "paragraph_id": evaluation.paragraph_id,
        "fs": str(evaluation.fs) if evaluation.fs is not None else None,
        "fs_pct": _pct(evaluation.fs),
        "dfs": str(evaluation.dfs) if evaluation.dfs is not None else None,
        "dfs_pct": _pct(evaluation.dfs),
        "num_bios": evaluation.num_bios,
        "num_entities": evaluation.num_entities,
        "category": evaluation.category.value if evaluation.category else None,
        "citation_recall": (
            str(evaluation.citation_recall)
            if evaluation.citation_recall is not None
            else None
        ),
        "citation_recall_pct": _pct(evaluation.citation_recall),
        "relevant_fact_count": evaluation.relevant_fact_count,
        "grouping_fallback": evaluation.grouping_fallback,
        "unscorable": False,
    }


def unscorable_row(paragraph_id: str, reason: str) -> dict:
    return {"paragraph_id": paragraph_id, "unscorable": True, "reason": reason}


def fact_detail_rows(evaluation: ParagraphEvaluation) -> list[dict]:
    rows = []
    for detail in evaluation.fact_details:
        rows.append(
            {
                "paragraph_id": evaluation.paragraph_id,
                "fact_id": detail.fact_id,
                "text": detail.text,
                "group": detail.group_index,
                "linked_entity": detail.linked_entity,
                "fs_label": detail.fs_label,
                "dfs_label": detail.dfs_label,
            }
        )
    return rows


def write_reports(result: CorpusResult, reports_path: str | Path, facts_path: str | Path) -> None:
    rows = [report_row(e) for e in result.evaluations]
    rows.extend(unscorable_row(pid, reason) for pid, reason in result.unscorable)
    rows.sort(key=lambda r: r["paragraph_id"])
    with open(reports_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    with open(facts_path, "w", encoding="utf-8") as fh:
        for evaluation in result.evaluations:
            for row in fact_detail_rows(evaluation):
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
