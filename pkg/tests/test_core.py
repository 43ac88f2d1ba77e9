"""Unit and property tests for the pure scoring layer."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dfactscore.core import (
    AtomicFact,
    Category,
    EmptyParagraph,
    EmptyRelevantSet,
    EntityRef,
    FactGroup,
    FactLabel,
    ParagraphReport,
    PartitionViolation,
    SentenceCitationRecord,
    Verdict,
    categorize,
    citation_recall,
    count_distinct_entities,
    d_fact_score,
    fact_score,
)

S = FactLabel(Verdict.SUPPORTED)
N = FactLabel(Verdict.NOT_SUPPORTED)
I = FactLabel(Verdict.IRRELEVANT)


# ---------------------------------------------------------------------------
# fact_score
# ---------------------------------------------------------------------------


def test_fact_score_all_supported():
    assert fact_score([S] * 5) == 1


def test_fact_score_excludes_irrelevant():
    assert fact_score([S] * 11 + [N] + [I]) == Fraction(11, 12)


def test_fact_score_all_irrelevant_raises():
    with pytest.raises(EmptyRelevantSet):
        fact_score([I, I, I])


def test_fact_score_empty_raises():
    with pytest.raises(EmptyRelevantSet):
        fact_score([])


def test_fact_score_permutation_invariant():
    labels = [S, N, S, I, S, N, S]
    rng = random.Random(3)
    for _ in range(20):
        shuffled = labels[:]
        rng.shuffle(shuffled)
        assert fact_score(shuffled) == fact_score(labels)


# ---------------------------------------------------------------------------
# d_fact_score
# ---------------------------------------------------------------------------


def _entity(tag):
    return EntityRef(title=f"Entity {tag}", page_id=f"p-{tag}")


def test_d_fact_score_single_group_single_entity_all_supported():
    group = FactGroup(member_fact_ids=tuple(f"f{i}" for i in range(8)), linked_entity=_entity("a"))
    labels = {f"f{i}": S for i in range(8)}
    assert d_fact_score([group], labels) == 1


def test_d_fact_score_two_candidate_disjoint_support():
    # One group of 10 facts; entity A supports facts 0-6, entity B
    # supports facts 7-9. Oracle: enumerate both possible linkings by
    # direct counting and take the max -> 7/10.
    support = {"A": set(range(7)), "B": set(range(7, 10))}
    oracle_best = max(len(support["A"]), len(support["B"]))
    assert oracle_best == 7

    linked = "A" if len(support["A"]) >= len(support["B"]) else "B"
    labels = {
        f"f{i}": (S if i in support[linked] else N) for i in range(10)
    }
    group = FactGroup(member_fact_ids=tuple(f"f{i}" for i in range(10)),
                      linked_entity=_entity(linked))
    assert d_fact_score([group], labels) == Fraction(oracle_best, 10) == Fraction(7, 10)

    # FS over the same oracle counts any-entity support: every fact is
    # covered by one of the two entities.
    fs_labels = [S if (i in support["A"] or i in support["B"]) else N for i in range(10)]
    assert fact_score(fs_labels) == 1


def test_d_fact_score_no_match_group_counts_not_supported():
    groups = [
        FactGroup(member_fact_ids=("f0", "f1"), linked_entity=_entity("a")),
        FactGroup(member_fact_ids=("f2", "f3"), linked_entity=None),
    ]
    labels = {"f0": S, "f1": S, "f2": S, "f3": I}
    # f2 is relevant but its group has no match -> NotSupported; f3 is
    # excluded entirely.
    assert d_fact_score(groups, labels) == Fraction(2, 3)


def test_d_fact_score_partition_violations():
    labels = {"f0": S, "f1": S}
    overlapping = [
        FactGroup(member_fact_ids=("f0", "f1"), linked_entity=_entity("a")),
        FactGroup(member_fact_ids=("f1",), linked_entity=_entity("b")),
    ]
    with pytest.raises(PartitionViolation):
        d_fact_score(overlapping, labels)
    omitting = [FactGroup(member_fact_ids=("f0",), linked_entity=_entity("a"))]
    with pytest.raises(PartitionViolation):
        d_fact_score(omitting, labels)
    unknown = [
        FactGroup(member_fact_ids=("f0", "f1", "fX"), linked_entity=_entity("a")),
    ]
    with pytest.raises(PartitionViolation):
        d_fact_score(unknown, labels)


def test_d_fact_score_all_irrelevant_raises():
    group = FactGroup(member_fact_ids=("f0", "f1"), linked_entity=_entity("a"))
    with pytest.raises(EmptyRelevantSet):
        d_fact_score([group], {"f0": I, "f1": I})


def test_d_fact_score_group_order_invariant():
    groups = [
        FactGroup(member_fact_ids=("f0", "f1"), linked_entity=_entity("a")),
        FactGroup(member_fact_ids=("f2",), linked_entity=None),
        FactGroup(member_fact_ids=("f3", "f4"), linked_entity=_entity("b")),
    ]
    labels = {"f0": S, "f1": N, "f2": S, "f3": S, "f4": I}
    expected = d_fact_score(groups, labels)
    assert d_fact_score(list(reversed(groups)), labels) == expected


# ---------------------------------------------------------------------------
# Dominance and collapse properties over random support oracles
# ---------------------------------------------------------------------------


def _random_instance(rng, n_candidates=None):
    n_facts = rng.randint(1, 12)
    n_candidates = n_candidates if n_candidates is not None else rng.randint(1, 5)
    fact_ids = [f"f{i}" for i in range(n_facts)]
    # random ordered partition
    groups = []
    start = 0
    while start < n_facts:
        size = rng.randint(1, n_facts - start)
        groups.append(fact_ids[start : start + size])
        start += size
    support = {
        (fid, c): rng.random() < 0.5
        for fid in fact_ids
        for c in range(n_candidates)
    }
    irrelevant = {fid for fid in fact_ids if rng.random() < 0.2}
    if len(irrelevant) == n_facts:
        irrelevant.discard(fact_ids[0])
    return fact_ids, groups, n_candidates, support, irrelevant


def _score_both_ways(fact_ids, groups, n_candidates, support, irrelevant):
    fs_labels = []
    for fid in fact_ids:
        if fid in irrelevant:
            fs_labels.append(I)
        elif any(support[(fid, c)] for c in range(n_candidates)):
            fs_labels.append(S)
        else:
            fs_labels.append(N)
    fs = fact_score(fs_labels)

    core_groups = []
    dfs_labels = {}
    for members in groups:
        relevant = [fid for fid in members if fid not in irrelevant]
        linked = None
        if relevant and n_candidates:
            counts = [
                sum(1 for fid in relevant if support[(fid, c)])
                for c in range(n_candidates)
            ]
            linked = max(range(n_candidates), key=lambda c: (counts[c], -c))
        entity = _entity(str(linked)) if linked is not None else None
        core_groups.append(FactGroup(member_fact_ids=tuple(members), linked_entity=entity))
        for fid in members:
            if fid in irrelevant:
                dfs_labels[fid] = I
            elif linked is not None and support[(fid, linked)]:
                dfs_labels[fid] = S
            else:
                dfs_labels[fid] = N
    dfs = d_fact_score(core_groups, dfs_labels)
    return fs, dfs


def test_dominance_randomized():
    rng = random.Random(20240)
    for _ in range(2000):
        instance = _random_instance(rng)
        fs, dfs = _score_both_ways(*instance)
        assert dfs <= fs


def test_single_entity_collapse_randomized():
    rng = random.Random(777)
    for _ in range(500):
        instance = _random_instance(rng, n_candidates=1)
        fs, dfs = _score_both_ways(*instance)
        assert dfs == fs


@given(st.lists(st.sampled_from([Verdict.SUPPORTED, Verdict.NOT_SUPPORTED, Verdict.IRRELEVANT]),
                min_size=1, max_size=30))
def test_fact_score_bounds(verdicts):
    labels = [FactLabel(v) for v in verdicts]
    if all(v is Verdict.IRRELEVANT for v in verdicts):
        with pytest.raises(EmptyRelevantSet):
            fact_score(labels)
    else:
        assert 0 <= fact_score(labels) <= 1


# ---------------------------------------------------------------------------
# categorize / count_distinct_entities / citation_recall
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "bios,entities,expected",
    [
        (1, 1, Category.ONE_BIO_ONE_ENTITY),
        (1, 3, Category.ONE_BIO_MANY_ENTITIES),
        (2, 2, Category.MANY_BIOS_MANY_ENTITIES),
        (2, 1, Category.OTHER),
        (1, 0, Category.OTHER),
        (3, 0, Category.OTHER),
        (5, 2, Category.MANY_BIOS_MANY_ENTITIES),
    ],
)
def test_categorize(bios, entities, expected):
    assert categorize(bios, entities) is expected


def test_categorize_total_and_deterministic():
    for bios in range(1, 8):
        for entities in range(0, 8):
            first = categorize(bios, entities)
            assert first is categorize(bios, entities)
            assert isinstance(first, Category)


def test_categorize_rejects_zero_bios():
    with pytest.raises(ValueError):
        categorize(0, 1)


def test_count_distinct_entities_examples():
    a, b = _entity("a"), _entity("b")
    assert count_distinct_entities([a, a, a]) == 1
    assert count_distinct_entities([a, b, a, None]) == 2
    assert count_distinct_entities([]) == 0


def test_count_distinct_entities_matches_set_oracle():
    rng = random.Random(5)
    pool = [_entity(str(i)) for i in range(6)]
    for _ in range(200):
        slots = [rng.choice(pool + [None]) for _ in range(rng.randint(0, 15))]
        oracle = set()
        for ref in slots:
            if ref is not None:
                oracle.add(ref.page_id)
        assert count_distinct_entities(slots) == len(oracle)


def test_citation_recall_all_supported():
    records = [
        SentenceCitationRecord(i, (1,), supported_by_citations=True) for i in range(3)
    ]
    assert citation_recall(records) == 1


def test_citation_recall_uncited_contributes_zero():
    records = [
        SentenceCitationRecord(0, (), supported_by_citations=False),
        SentenceCitationRecord(1, (2,), supported_by_citations=True),
    ]
    assert citation_recall(records) == Fraction(1, 2)


def test_citation_recall_no_citations_is_zero():
    records = [SentenceCitationRecord(i, ()) for i in range(4)]
    assert citation_recall(records) == 0


def test_citation_recall_empty_raises():
    with pytest.raises(EmptyParagraph):
        citation_recall([])


def test_citation_record_invariant():
    with pytest.raises(ValueError):
        SentenceCitationRecord(0, (), supported_by_citations=True)


# ---------------------------------------------------------------------------
# Type invariants
# ---------------------------------------------------------------------------


def test_atomic_fact_rejects_empty_text():
    with pytest.raises(ValueError):
        AtomicFact(id="f0", text="   ", source_sentence_index=0)


def test_entity_ref_rejects_empty_title():
    with pytest.raises(ValueError):
        EntityRef(title="", page_id="p0")


def test_paragraph_report_validates_ranges():
    with pytest.raises(ValueError):
        ParagraphReport(
            paragraph_id="x",
            fs=Fraction(3, 2),
            dfs=Fraction(1, 2),
            num_bios=1,
            num_entities=1,
            category=Category.ONE_BIO_ONE_ENTITY,
            relevant_fact_count=4,
        )
    with pytest.raises(ValueError):
        ParagraphReport(
            paragraph_id="x",
            fs=Fraction(1, 2),
            dfs=Fraction(1, 2),
            num_bios=0,
            num_entities=1,
            category=Category.OTHER,
            relevant_fact_count=4,
        )
