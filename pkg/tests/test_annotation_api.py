"""Annotation store and HTTP service: scheduling, validation,
implied-score cross-checks, exports."""

import json
import math
import random
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from dfactscore.annotation.service import create_app, read_tasks_jsonl
from dfactscore.annotation.store import (
    AnnotationStore,
    AnnotationTask,
    IncompleteLabels,
    MissingStepTwo,
    NotAssigned,
    PartitionViolation,
    StepThreeLabel,
    StepTwoLabel,
    UnknownAnnotator,
    schedule_assignments,
    validate_partition,
)
from dfactscore.core import (
    AtomicFact,
    EmptyRelevantSet,
    EntityRef,
    FactGroup,
    FactLabel,
    Verdict,
    d_fact_score,
    fact_score,
)

SHARED_VECTORS = Path(__file__).parent.parent / "shared" / "partition_vectors.json"


def _task(pid, n_facts=4, n_pages=2, model_tag=""):
    return AnnotationTask(
        paragraph_id=pid,
        paragraph_text=f"Paragraph text of {pid}.",
        facts=tuple(
            AtomicFact(id=f"f{i:03d}", text=f"{pid} fact {i}.", source_sentence_index=i)
            for i in range(n_facts)
        ),
        entity_pages=tuple(
            (EntityRef(title=f"{pid} entity {j}", page_id=f"{pid}-p{j}"), f"page body {j}")
            for j in range(n_pages)
        ),
        model_tag=model_tag,
    )


def _store(tmp_path, n_tasks=3, annotators=("ann-a", "ann-b"), overlap=0.10, seed=0):
    tasks = [_task(f"para-{i:03d}") for i in range(n_tasks)]
    return AnnotationStore(
        tasks=tasks,
        annotators=list(annotators),
        journal_path=tmp_path / "journal.jsonl",
        overlap=overlap,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Shared partition vectors
# ---------------------------------------------------------------------------


def test_shared_vectors_exist_and_are_balanced():
    vectors = json.loads(SHARED_VECTORS.read_text(encoding="utf-8"))
    assert len(vectors) == 50
    assert any(v["valid"] for v in vectors)
    assert any(not v["valid"] for v in vectors)


def test_validator_agrees_with_all_shared_vectors():
    vectors = json.loads(SHARED_VECTORS.read_text(encoding="utf-8"))
    for vector in vectors:
        problems = validate_partition(
            vector["fact_ids"], vector["num_bios"], vector["bio_spans"]
        )
        assert (not problems) == vector["valid"], vector["name"]


def test_shared_vector_flags_match_their_construction():
    # Mutated vectors are invalid by construction; untouched ones valid.
    vectors = json.loads(SHARED_VECTORS.read_text(encoding="utf-8"))
    for vector in vectors:
        name = vector["name"]
        if name.startswith("random-"):
            kind = name.rsplit("-", 1)[1]
            assert vector["valid"] == (kind == "valid"), name
    by_name = {v["name"]: v for v in vectors}
    assert by_name["single-group-identity"]["valid"]
    assert by_name["two-contiguous-groups"]["valid"]
    assert by_name["non-contiguous-but-complete"]["valid"]
    for bad in ("empty-span", "missing-fact", "duplicated-fact", "unknown-fact",
                "count-mismatch-high", "count-mismatch-low", "zero-bios"):
        assert not by_name[bad]["valid"], bad


# ---------------------------------------------------------------------------
# Scheduler
# ---------------------------------------------------------------------------


def test_scheduler_exact_overlap_count():
    ids = [f"p{i}" for i in range(100)]
    assignments = schedule_assignments(ids, ["a", "b"], overlap=0.10, seed=1)
    doubles = [pid for pid, annotators in assignments.items() if len(annotators) == 2]
    assert len(doubles) == 10


@pytest.mark.parametrize("n", [1, 7, 10, 33, 99])
def test_scheduler_ceil_rule(n):
    ids = [f"p{i}" for i in range(n)]
    assignments = schedule_assignments(ids, ["a", "b", "c"], overlap=0.10, seed=5)
    doubles = sum(1 for v in assignments.values() if len(v) == 2)
    assert doubles == math.ceil(0.10 * n)


def test_scheduler_deterministic_by_seed():
    ids = [f"p{i}" for i in range(40)]
    first = schedule_assignments(ids, ["a", "b"], seed=3)
    second = schedule_assignments(ids, ["a", "b"], seed=3)
    assert first == second
    third = schedule_assignments(ids, ["a", "b"], seed=4)
    assert third != first


def test_scheduler_single_annotator_never_doubles():
    ids = [f"p{i}" for i in range(20)]
    assignments = schedule_assignments(ids, ["solo"], overlap=0.10, seed=0)
    assert all(v == ("solo",) for v in assignments.values())


# ---------------------------------------------------------------------------
# Store flow
# ---------------------------------------------------------------------------


def _step2(store, annotator, pid, spans=None, links=None):
    task = store.task(pid)
    fact_ids = [f.id for f in task.facts]
    spans = spans if spans is not None else (tuple(fact_ids),)
    entity = task.entity_pages[0][0]
    links = links if links is not None else tuple([entity] * len(spans))
    return StepTwoLabel(
        annotator_id=annotator,
        paragraph_id=pid,
        num_bios=len(spans),
        bio_spans=tuple(tuple(s) for s in spans),
        bio_entity_links=links,
    )


def _step3(store, annotator, pid, verdict=Verdict.SUPPORTED):
    task = store.task(pid)
    entity = task.entity_pages[0][0]
    return StepThreeLabel(
        annotator_id=annotator,
        paragraph_id=pid,
        fact_labels={f.id: verdict for f in task.facts},
        fs_fact_labels={f.id: verdict for f in task.facts},
        fact_entity_attribution={f.id: entity for f in task.facts},
    )


def test_next_task_first_in_order_then_done(tmp_path):
    store = _store(tmp_path, n_tasks=3, annotators=("solo",), overlap=0.0)
    first = store.next_task("solo")
    assert first.paragraph_id == "para-000"
    store.submit_step2(_step2(store, "solo", "para-000"))
    # step 2 alone does not finish the task
    assert store.next_task("solo").paragraph_id == "para-000"
    store.submit_step3(_step3(store, "solo", "para-000"))
    assert store.next_task("solo").paragraph_id == "para-001"
    for pid in ("para-001", "para-002"):
        store.submit_step2(_step2(store, "solo", pid))
        store.submit_step3(_step3(store, "solo", pid))
    assert store.next_task("solo") is None


def test_unknown_annotator(tmp_path):
    store = _store(tmp_path)
    with pytest.raises(UnknownAnnotator):
        store.next_task("stranger")


def test_not_assigned_rejected(tmp_path):
    store = _store(tmp_path, n_tasks=10, annotators=("ann-a", "ann-b"), overlap=0.0)
    assignments = store.assignments()
    pid = next(p for p, v in assignments.items() if v == ("ann-b",))
    with pytest.raises(NotAssigned):
        store.submit_step2(_step2(store, "ann-a", pid))


def test_step2_partition_violation(tmp_path):
    store = _store(tmp_path, annotators=("solo",), overlap=0.0)
    label = _step2(store, "solo", "para-000", spans=(("f000", "f001"),),
                   links=(store.task("para-000").entity_pages[0][0],))
    with pytest.raises(PartitionViolation):
        store.submit_step2(label)


def test_step2_resubmission_supersedes(tmp_path):
    store = _store(tmp_path, annotators=("solo",), overlap=0.0)
    assert store.submit_step2(_step2(store, "solo", "para-000")) == 1
    assert store.submit_step2(_step2(store, "solo", "para-000")) == 2
    store.submit_step3(_step3(store, "solo", "para-000"))
    export = store.export()
    assert export["rows"][0]["step2_version"] == 2


def test_step3_requires_step2(tmp_path):
    store = _store(tmp_path, annotators=("solo",), overlap=0.0)
    with pytest.raises(MissingStepTwo):
        store.submit_step3(_step3(store, "solo", "para-000"))


def test_step3_incomplete_labels(tmp_path):
    store = _store(tmp_path, annotators=("solo",), overlap=0.0)
    store.submit_step2(_step2(store, "solo", "para-000"))
    label = _step3(store, "solo", "para-000")
    broken = StepThreeLabel(
        annotator_id=label.annotator_id,
        paragraph_id=label.paragraph_id,
        fact_labels={k: v for k, v in list(label.fact_labels.items())[:-1]},
        fs_fact_labels=label.fs_fact_labels,
        fact_entity_attribution=label.fact_entity_attribution,
    )
    with pytest.raises(IncompleteLabels):
        store.submit_step3(broken)


def test_step3_all_irrelevant_flags_unscorable(tmp_path):
    store = _store(tmp_path, annotators=("solo",), overlap=0.0)
    store.submit_step2(_step2(store, "solo", "para-000"))
    ack = store.submit_step3(_step3(store, "solo", "para-000", verdict=Verdict.IRRELEVANT))
    assert ack["unscorable"] is True
    assert ack["implied_dfs"] is None


def test_step2_revision_invalidates_step3(tmp_path):
    store = _store(tmp_path, annotators=("solo",), overlap=0.0)
    store.submit_step2(_step2(store, "solo", "para-000"))
    store.submit_step3(_step3(store, "solo", "para-000"))
    store.submit_step2(_step2(store, "solo", "para-000"))
    assert store.next_task("solo").paragraph_id == "para-000"
    assert store.export()["rows"] == []


def test_journal_survives_restart(tmp_path):
    store = _store(tmp_path, annotators=("solo",), overlap=0.0)
    store.submit_step2(_step2(store, "solo", "para-000"))
    store.submit_step3(_step3(store, "solo", "para-000"))
    reloaded = AnnotationStore(
        tasks=[_task(f"para-{i:03d}") for i in range(3)],
        annotators=["solo"],
        journal_path=tmp_path / "journal.jsonl",
        overlap=0.0,
        seed=0,
    )
    assert reloaded.next_task("solo").paragraph_id == "para-001"
    assert len(reloaded.export()["rows"]) == 1


# ---------------------------------------------------------------------------
# Implied-score cross-check against the core ops
# ---------------------------------------------------------------------------


def test_implied_scores_match_core_on_synthetic_submissions(tmp_path):
    rng = random.Random(515)
    n_cases = 200
    tasks = [
        _task(f"case-{i:04d}", n_facts=rng.randint(1, 10), n_pages=rng.randint(1, 3))
        for i in range(n_cases)
    ]
    store = AnnotationStore(
        tasks=tasks, annotators=["solo"], journal_path=tmp_path / "journal.jsonl",
        overlap=0.0, seed=0,
    )
    verdict_pool = [Verdict.SUPPORTED, Verdict.NOT_SUPPORTED, Verdict.IRRELEVANT]
    for task in tasks:
        fact_ids = [f.id for f in task.facts]
        spans, start = [], 0
        while start < len(fact_ids):
            size = rng.randint(1, len(fact_ids) - start)
            spans.append(tuple(fact_ids[start:start + size]))
            start += size
        entities = [ref for ref, _ in task.entity_pages]
        links = tuple(
            rng.choice(entities + [None]) for _ in spans
        )
        store.submit_step2(StepTwoLabel(
            annotator_id="solo",
            paragraph_id=task.paragraph_id,
            num_bios=len(spans),
            bio_spans=tuple(spans),
            bio_entity_links=links,
        ))
        fact_labels = {fid: rng.choice(verdict_pool) for fid in fact_ids}
        fs_labels = {fid: rng.choice(verdict_pool) for fid in fact_ids}
        ack = store.submit_step3(StepThreeLabel(
            annotator_id="solo",
            paragraph_id=task.paragraph_id,
            fact_labels=fact_labels,
            fs_fact_labels=fs_labels,
            fact_entity_attribution={fid: rng.choice(entities + [None]) for fid in fact_ids},
        ))
        groups = [
            FactGroup(member_fact_ids=span, linked_entity=link)
            for span, link in zip(spans, links)
        ]
        label_map = {fid: FactLabel(v) for fid, v in fact_labels.items()}
        try:
            expected_dfs = d_fact_score(groups, label_map)
            assert ack["implied_dfs"] == str(expected_dfs)
        except EmptyRelevantSet:
            assert ack["unscorable"] or ack["implied_dfs"] is None
        try:
            expected_fs = fact_score([FactLabel(fs_labels[fid]) for fid in fact_ids])
            if not ack["unscorable"]:
                assert ack["implied_fs"] == str(expected_fs)
        except EmptyRelevantSet:
            pass


# ---------------------------------------------------------------------------
# Export and agreement manifest
# ---------------------------------------------------------------------------


def test_export_empty_store(tmp_path):
    store = _store(tmp_path)
    export = store.export()
    assert export["rows"] == []


def test_export_lists_agreement_pair(tmp_path):
    store = _store(tmp_path, n_tasks=10, annotators=("ann-a", "ann-b"), overlap=0.10, seed=2)
    doubles = store.doubly_assigned()
    assert len(doubles) == 1
    pid = doubles[0]
    for annotator in store.assignments()[pid]:
        store.submit_step2(_step2(store, annotator, pid))
        store.submit_step3(_step3(store, annotator, pid))
    export = store.export()
    assert export["agreement_pairs"] == [
        {"paragraph_id": pid, "annotators": list(store.assignments()[pid])}
    ]
    roles = {r["role"] for r in export["rows"] if r["paragraph_id"] == pid}
    assert roles == {"primary", "secondary"}


def test_export_round_trips_into_analysis(tmp_path):
    from dfactscore.analysis import compare_human_auto

    store = _store(tmp_path, n_tasks=6, annotators=("solo",), overlap=0.0)
    partitions = [
        (("f000", "f001", "f002", "f003"),),
        (("f000", "f001"), ("f002", "f003")),
        (("f000",), ("f001",), ("f002", "f003")),
    ]
    for i, pid in enumerate(f"para-{i:03d}" for i in range(3)):
        task = store.task(pid)
        entity = task.entity_pages[0][0]
        store.submit_step2(_step2(
            store, "solo", pid,
            spans=partitions[i],
            links=tuple([entity] * len(partitions[i])),
        ))
        # paragraph i gets exactly i+1 supported facts, so dfs varies
        verdicts = {
            f.id: (Verdict.SUPPORTED if j <= i else Verdict.NOT_SUPPORTED)
            for j, f in enumerate(task.facts)
        }
        store.submit_step3(StepThreeLabel(
            annotator_id="solo", paragraph_id=pid,
            fact_labels=verdicts, fs_fact_labels=verdicts,
            fact_entity_attribution={f.id: entity for f in task.facts},
        ))
    export = store.export()
    rows = [r for r in export["rows"] if not r["unscorable"]]
    result = compare_human_auto(rows, rows)
    assert result.pooled_dfs == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------


@pytest.fixture
def client(tmp_path):
    store = _store(tmp_path, n_tasks=2, annotators=("ann-a",), overlap=0.0)
    app = create_app(store, token="sesame")
    return TestClient(app)


def _headers():
    return {"X-DFS-Token": "sesame"}


def test_http_requires_token(client):
    assert client.get("/progress").status_code == 401
    assert client.get("/progress", headers=_headers()).status_code == 200


def test_http_full_flow(client):
    task = client.get("/tasks/next", params={"annotator": "ann-a"}, headers=_headers()).json()
    assert task["paragraph_id"] == "para-000"
    fact_ids = [f["id"] for f in task["facts"]]
    entity = task["entity_pages"][0]
    step2 = {
        "annotator_id": "ann-a",
        "paragraph_id": task["paragraph_id"],
        "num_bios": 1,
        "bio_spans": [fact_ids],
        "bio_entity_links": [{"title": entity["title"], "page_id": entity["page_id"]}],
    }
    response = client.post("/labels/step2", json=step2, headers=_headers())
    assert response.status_code == 200
    assert response.json()["version"] == 1

    step3 = {
        "annotator_id": "ann-a",
        "paragraph_id": task["paragraph_id"],
        "fact_labels": {fid: "Supported" for fid in fact_ids},
        "fs_fact_labels": {fid: "Supported" for fid in fact_ids},
        "fact_entity_attribution": {
            fid: {"title": entity["title"], "page_id": entity["page_id"]}
            for fid in fact_ids
        },
    }
    response = client.post("/labels/step3", json=step3, headers=_headers())
    assert response.status_code == 200
    assert response.json()["implied_dfs"] == "1"

    export = client.get("/export", headers=_headers()).json()
    assert len(export["rows"]) == 1
    progress = client.get("/progress", headers=_headers()).json()
    assert progress["completed"] == 1


def test_http_error_codes(client):
    assert client.get(
        "/tasks/next", params={"annotator": "ghost"}, headers=_headers()
    ).status_code == 404
    bad_step2 = {
        "annotator_id": "ann-a",
        "paragraph_id": "para-000",
        "num_bios": 1,
        "bio_spans": [["f000"]],  # omits the other facts
        "bio_entity_links": [None],
    }
    assert client.post("/labels/step2", json=bad_step2, headers=_headers()).status_code == 400
    orphan_step3 = {
        "annotator_id": "ann-a",
        "paragraph_id": "para-001",
        "fact_labels": {},
        "fs_fact_labels": {},
        "fact_entity_attribution": {},
    }
    assert client.post("/labels/step3", json=orphan_step3, headers=_headers()).status_code == 409


def test_read_tasks_jsonl(tmp_path):
    path = tmp_path / "tasks.jsonl"
    row = {
        "paragraph_id": "t-0001",
        "paragraph_text": "Some paragraph.",
        "facts": [{"id": "f000", "text": "A fact.", "source_sentence_index": 0}],
        "entity_pages": [{"title": "Entity", "page_id": "p0", "text": "body"}],
        "model_tag": "m",
    }
    path.write_text(json.dumps(row) + "\n", encoding="utf-8")
    tasks = read_tasks_jsonl(path)
    assert tasks[0].paragraph_id == "t-0001"
    assert tasks[0].model_tag == "m"
