"""Task assignment and label persistence for the annotation service.

Labels land in a single append-only JSONL journal with an in-memory
index; resubmissions supersede by version. The store recomputes each
annotator's implied FS and D-FS with the core scoring functions the
moment step 3 arrives, so exports never drift from the metric
definitions.
"""

from __future__ import annotations

import json
import math
import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

from ..core import (
    AtomicFact,
    EmptyRelevantSet,
    EntityRef,
    FactGroup,
    FactLabel,
    Verdict,
    d_fact_score,
    fact_score,
)

DEFAULT_OVERLAP = 0.10


class AnnotationError(Exception):
    pass


class UnknownAnnotator(AnnotationError):
    pass


class NotAssigned(AnnotationError):
    pass


class PartitionViolation(AnnotationError):
    pass


class MissingStepTwo(AnnotationError):
    pass


class IncompleteLabels(AnnotationError):
    pass


@dataclass(frozen=True)
class AnnotationTask:
    paragraph_id: str
    paragraph_text: str
    facts: tuple[AtomicFact, ...]
    entity_pages: tuple[tuple[EntityRef, str], ...]
    model_tag: str = ""

    def __post_init__(self) -> None:
        if not self.entity_pages:
            raise ValueError("an annotation task needs at least one entity page")
        if not self.facts:
            raise ValueError("an annotation task needs pre-decomposed facts")


@dataclass(frozen=True)
class StepTwoLabel:
    annotator_id: str
    paragraph_id: str
    num_bios: int
    bio_spans: tuple[tuple[str, ...], ...]
    bio_entity_links: tuple[Optional[EntityRef], ...]  # None = NoMatch


@dataclass(frozen=True)
class StepThreeLabel:
    annotator_id: str
    paragraph_id: str
    fact_labels: Mapping[str, Verdict]
    fs_fact_labels: Mapping[str, Verdict]
    fact_entity_attribution: Mapping[str, Optional[EntityRef]]  # None = NoMatch


def _entity_json(ref: Optional[EntityRef]) -> Optional[dict]:
    return {"title": ref.title, "page_id": ref.page_id} if ref else None


def validate_partition(
    fact_ids: Sequence[str],
    num_bios: int,
    bio_spans: Sequence[Sequence[str]],
) -> list[str]:
    """Check that bio_spans is a valid partition of fact_ids into
    num_bios non-empty groups. Returns a list of problems, empty when
    valid. The browser client ships the same rules; the two sides are
    held together by shared test vectors."""
    problems = []
    if num_bios < 1:
        problems.append("num_bios must be >= 1")
    if len(bio_spans) != num_bios:
        problems.append(
            f"bio_spans has {len(bio_spans)} groups but num_bios is {num_bios}"
        )
    known = set(fact_ids)
    seen: set[str] = set()
    for index, span in enumerate(bio_spans):
        if not span:
            problems.append(f"bio {index} is empty")
        for fact_id in span:
            if fact_id not in known:
                problems.append(f"bio {index} references unknown fact {fact_id!r}")
            elif fact_id in seen:
                problems.append(f"fact {fact_id!r} appears in more than one bio")
            seen.add(fact_id)
    missing = known - seen
    if missing:
        problems.append(f"facts not covered by any bio: {sorted(missing)}")
    return problems


def schedule_assignments(
    paragraph_ids: Sequence[str],
    annotators: Sequence[str],
    overlap: float = DEFAULT_OVERLAP,
    seed: int = 0,
) -> dict[str, tuple[str, ...]]:
    """Assign each task to one annotator, with an overlap fraction of
    tasks doubly assigned for agreement measurement.

    Exactly ceil(overlap * N) tasks get two annotators (when at least
    two annotators exist). A seeded shuffle decides which, so the
    schedule is reproducible. The first annotator listed per task is
    the primary one used in consolidated exports.
    """
    if not annotators:
        raise ValueError("need at least one annotator")
    ids = list(paragraph_ids)
    rng = random.Random(seed)
    order = list(range(len(ids)))
    rng.shuffle(order)
    n_double = math.ceil(overlap * len(ids)) if len(annotators) >= 2 else 0
    assignments: dict[str, tuple[str, ...]] = {}
    for position, task_index in enumerate(order):
        first = annotators[position % len(annotators)]
        if position < n_double:
            second = annotators[(position + 1) % len(annotators)]
            assignments[ids[task_index]] = (first, second)
        else:
            assignments[ids[task_index]] = (first,)
    return assignments


@dataclass
class _LabelRecord:
    version: int
    payload: dict


class AnnotationStore:
    """Tasks, assignments, and the append-only label journal.

    Appends go through one lock; reads see plain dict snapshots, which
    are safe under concurrent HTTP handlers because mutation happens
    only under the lock.
    """

    def __init__(
        self,
        tasks: Sequence[AnnotationTask],
        annotators: Sequence[str],
        journal_path: str | Path,
        overlap: float = DEFAULT_OVERLAP,
        seed: int = 0,
    ):
        if len({t.paragraph_id for t in tasks}) != len(tasks):
            raise ValueError("duplicate paragraph ids in task list")
        self._tasks = {t.paragraph_id: t for t in tasks}
        self._task_order = [t.paragraph_id for t in tasks]
        self._annotators = list(annotators)
        self._assignments = schedule_assignments(
            self._task_order, self._annotators, overlap=overlap, seed=seed
        )
        self._journal_path = Path(journal_path)
        self._lock = threading.Lock()
        # (kind, annotator, paragraph) -> latest record
        self._labels: dict[tuple[str, str, str], _LabelRecord] = {}
        if self._journal_path.exists():
            self._replay_journal()

    # -- journal -----------------------------------------------------------

    def _replay_journal(self) -> None:
        with open(self._journal_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                key = (row["kind"], row["annotator_id"], row["paragraph_id"])
                self._labels[key] = _LabelRecord(version=row["version"], payload=row)

    def _append(self, row: dict) -> None:
        self._journal_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    # -- task access -------------------------------------------------------

    @property
    def annotators(self) -> list[str]:
        return list(self._annotators)

    def assignments(self) -> dict[str, tuple[str, ...]]:
        return dict(self._assignments)

    def doubly_assigned(self) -> list[str]:
        return [pid for pid in self._task_order if len(self._assignments[pid]) == 2]

    def task(self, paragraph_id: str) -> AnnotationTask:
        return self._tasks[paragraph_id]

    def next_task(self, annotator_id: str) -> Optional[AnnotationTask]:
        """First task in corpus order assigned to the annotator without
        a completed step 3; None when everything is done."""
        if annotator_id not in self._annotators:
            raise UnknownAnnotator(annotator_id)
        for paragraph_id in self._task_order:
            if annotator_id not in self._assignments[paragraph_id]:
                continue
            if ("step3", annotator_id, paragraph_id) not in self._labels:
                return self._tasks[paragraph_id]
        return None

    # -- submissions -------------------------------------------------------

    def _check_assigned(self, annotator_id: str, paragraph_id: str) -> AnnotationTask:
        if annotator_id not in self._annotators:
            raise UnknownAnnotator(annotator_id)
        task = self._tasks.get(paragraph_id)
        if task is None or annotator_id not in self._assignments[paragraph_id]:
            raise NotAssigned(f"{annotator_id} is not assigned {paragraph_id}")
        return task

    def submit_step2(self, label: StepTwoLabel) -> int:
        """Persist a bio partition + entity links; returns the stored
        version (resubmission supersedes)."""
        task = self._check_assigned(label.annotator_id, label.paragraph_id)
        problems = validate_partition(
            [f.id for f in task.facts], label.num_bios, label.bio_spans
        )
        if problems:
            raise PartitionViolation("; ".join(problems))
        if len(label.bio_entity_links) != label.num_bios:
            raise PartitionViolation(
                f"expected {label.num_bios} entity links, got {len(label.bio_entity_links)}"
            )
        known_pages = {ref.page_id for ref, _ in task.entity_pages}
        for link in label.bio_entity_links:
            if link is not None and link.page_id not in known_pages:
                raise PartitionViolation(f"linked entity {link.page_id!r} not in task pages")
        with self._lock:
            key = ("step2", label.annotator_id, label.paragraph_id)
            version = self._labels[key].version + 1 if key in self._labels else 1
            row = {
                "kind": "step2",
                "annotator_id": label.annotator_id,
                "paragraph_id": label.paragraph_id,
                "version": version,
                "num_bios": label.num_bios,
                "bio_spans": [list(span) for span in label.bio_spans],
                "bio_entity_links": [_entity_json(e) for e in label.bio_entity_links],
            }
            self._append(row)
            self._labels[key] = _LabelRecord(version=version, payload=row)
            # A revised partition invalidates any step-3 labels built on it.
            self._labels.pop(("step3", label.annotator_id, label.paragraph_id), None)
        return version

    def submit_step3(self, label: StepThreeLabel) -> dict:
        """Persist fact verdicts; recomputes and stores the implied
        FS/D-FS for this annotator's partition. Returns an ack dict with
        the implied scores (None when every fact is Irrelevant)."""
        task = self._check_assigned(label.annotator_id, label.paragraph_id)
        step2_key = ("step2", label.annotator_id, label.paragraph_id)
        if step2_key not in self._labels:
            raise MissingStepTwo(f"no step-2 record for {label.paragraph_id}")
        step2 = self._labels[step2_key].payload
        fact_ids = [f.id for f in task.facts]
        for mapping, description in (
            (label.fact_labels, "fact_labels"),
            (label.fs_fact_labels, "fs_fact_labels"),
            (label.fact_entity_attribution, "fact_entity_attribution"),
        ):
            missing = [fid for fid in fact_ids if fid not in mapping]
            if missing:
                raise IncompleteLabels(f"{description} missing facts: {missing}")

        groups = [
            FactGroup(
                member_fact_ids=tuple(span),
                linked_entity=(
                    EntityRef(title=link["title"], page_id=link["page_id"])
                    if link
                    else None
                ),
            )
            for span, link in zip(step2["bio_spans"], step2["bio_entity_links"])
        ]
        label_map = {fid: FactLabel(label.fact_labels[fid]) for fid in fact_ids}
        implied_dfs: Optional[Fraction] = None
        implied_fs: Optional[Fraction] = None
        try:
            implied_dfs = d_fact_score(groups, label_map)
        except EmptyRelevantSet:
            pass
        try:
            implied_fs = fact_score(
                [FactLabel(label.fs_fact_labels[fid]) for fid in fact_ids]
            )
        except EmptyRelevantSet:
            pass
        unscorable = implied_dfs is None or implied_fs is None

        with self._lock:
            key = ("step3", label.annotator_id, label.paragraph_id)
            version = self._labels[key].version + 1 if key in self._labels else 1
            row = {
                "kind": "step3",
                "annotator_id": label.annotator_id,
                "paragraph_id": label.paragraph_id,
                "version": version,
                "fact_labels": {fid: label.fact_labels[fid].value for fid in fact_ids},
                "fs_fact_labels": {
                    fid: label.fs_fact_labels[fid].value for fid in fact_ids
                },
                "fact_entity_attribution": {
                    fid: _entity_json(label.fact_entity_attribution[fid])
                    for fid in fact_ids
                },
                "implied_dfs": str(implied_dfs) if implied_dfs is not None else None,
                "implied_fs": str(implied_fs) if implied_fs is not None else None,
                "unscorable": unscorable,
            }
            self._append(row)
            self._labels[key] = _LabelRecord(version=version, payload=row)
        return {
            "version": version,
            "implied_dfs": str(implied_dfs) if implied_dfs is not None else None,
            "implied_fs": str(implied_fs) if implied_fs is not None else None,
            "unscorable": unscorable,
        }

    # -- exports -----------------------------------------------------------

    def progress(self) -> dict:
        done_pairs = {
            (annotator, paragraph)
            for kind, annotator, paragraph in self._labels
            if kind == "step3"
        }
        total_pairs = sum(len(v) for v in self._assignments.values())
        return {
            "tasks": len(self._task_order),
            "assignments": total_pairs,
            "completed": len(done_pairs),
            "doubly_assigned": len(self.doubly_assigned()),
        }

    def export(self) -> dict:
        """Latest-version labels with implied scores, plus the manifest
        of doubly-annotated paragraphs for agreement analysis."""
        rows = []
        for paragraph_id in self._task_order:
            task = self._tasks[paragraph_id]
            assigned = self._assignments[paragraph_id]
            for role_index, annotator_id in enumerate(assigned):
                step2 = self._labels.get(("step2", annotator_id, paragraph_id))
                step3 = self._labels.get(("step3", annotator_id, paragraph_id))
                if step2 is None or step3 is None:
                    continue
                dfs = step3.payload["implied_dfs"]
                fs = step3.payload["implied_fs"]
                rows.append(
                    {
                        "paragraph_id": paragraph_id,
                        "annotator_id": annotator_id,
                        "role": "primary" if role_index == 0 else "secondary",
                        "model_tag": task.model_tag,
                        "num_bios": step2.payload["num_bios"],
                        "dfs": dfs,
                        "dfs_pct": (
                            round(float(Fraction(dfs)) * 100.0, 1) if dfs else None
                        ),
                        "fs": fs,
                        "fs_pct": round(float(Fraction(fs)) * 100.0, 1) if fs else None,
                        "unscorable": step3.payload["unscorable"],
                        "fact_labels": step3.payload["fact_labels"],
                        "fs_fact_labels": step3.payload["fs_fact_labels"],
                        "fact_entity_attribution": step3.payload[
                            "fact_entity_attribution"
                        ],
                        "step2_version": step2.version,
                        "step3_version": step3.version,
                    }
                )
        pairs = [
            {"paragraph_id": pid, "annotators": list(self._assignments[pid])}
            for pid in self.doubly_assigned()
        ]
        return {"rows": rows, "agreement_pairs": pairs}
