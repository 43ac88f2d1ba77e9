"""HTTP layer over the annotation store.

Routes:
    GET  /tasks/next?annotator=...   next unfinished assigned task
    POST /labels/step2               bio partition + entity links
    POST /labels/step3               per-fact verdicts
    GET  /export                     labels + implied scores + pairs
    GET  /progress                   completion counters

All requests carry the shared token in the X-DFS-Token header when the
server was started with one.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException
from pydantic import BaseModel

from ..core import AtomicFact, EntityRef, Verdict
from .store import (
    AnnotationStore,
    AnnotationTask,
    IncompleteLabels,
    MissingStepTwo,
    NotAssigned,
    PartitionViolation,
    StepThreeLabel,
    StepTwoLabel,
    UnknownAnnotator,
)

TOKEN_HEADER = "X-DFS-Token"


class EntityRefBody(BaseModel):
    title: str
    page_id: str

    def to_ref(self) -> EntityRef:
        return EntityRef(title=self.title, page_id=self.page_id)


class Step2Body(BaseModel):
    annotator_id: str
    paragraph_id: str
    num_bios: int
    bio_spans: list[list[str]]
    bio_entity_links: list[Optional[EntityRefBody]]


class Step3Body(BaseModel):
    annotator_id: str
    paragraph_id: str
    fact_labels: dict[str, str]
    fs_fact_labels: dict[str, str]
    fact_entity_attribution: dict[str, Optional[EntityRefBody]]


def _verdicts(raw: dict[str, str], field_name: str) -> dict[str, Verdict]:
    out = {}
    for fact_id, value in raw.items():
        try:
            out[fact_id] = Verdict(value)
        except ValueError:
            raise HTTPException(
                status_code=400,
                detail=f"{field_name}[{fact_id}]: unknown verdict {value!r}",
            ) from None
    return out


def _task_json(task: AnnotationTask) -> dict:
    return {
        "done": False,
        "paragraph_id": task.paragraph_id,
        "paragraph_text": task.paragraph_text,
        "model_tag": task.model_tag,
        "facts": [
            {
                "id": f.id,
                "text": f.text,
                "source_sentence_index": f.source_sentence_index,
            }
            for f in task.facts
        ],
        "entity_pages": [
            {"title": ref.title, "page_id": ref.page_id, "text": text}
            for ref, text in task.entity_pages
        ],
    }


def create_app(store: AnnotationStore, token: str = "") -> FastAPI:
    app = FastAPI(title="dfactscore annotation api")

    def check_token(x_dfs_token: Optional[str] = Header(default=None)) -> None:
        if token and x_dfs_token != token:
            raise HTTPException(status_code=401, detail="bad or missing token")

    @app.get("/tasks/next", dependencies=[Depends(check_token)])
    def next_task(annotator: str):
        try:
            task = store.next_task(annotator)
        except UnknownAnnotator:
            raise HTTPException(status_code=404, detail=f"unknown annotator {annotator!r}")
        if task is None:
            return {"done": True}
        return _task_json(task)

    @app.post("/labels/step2", dependencies=[Depends(check_token)])
    def submit_step2(body: Step2Body):
        label = StepTwoLabel(
            annotator_id=body.annotator_id,
            paragraph_id=body.paragraph_id,
            num_bios=body.num_bios,
            bio_spans=tuple(tuple(span) for span in body.bio_spans),
            bio_entity_links=tuple(
                link.to_ref() if link else None for link in body.bio_entity_links
            ),
        )
        try:
            version = store.submit_step2(label)
        except UnknownAnnotator as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except NotAssigned as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except PartitionViolation as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"ok": True, "version": version}

    @app.post("/labels/step3", dependencies=[Depends(check_token)])
    def submit_step3(body: Step3Body):
        label = StepThreeLabel(
            annotator_id=body.annotator_id,
            paragraph_id=body.paragraph_id,
            fact_labels=_verdicts(body.fact_labels, "fact_labels"),
            fs_fact_labels=_verdicts(body.fs_fact_labels, "fs_fact_labels"),
            fact_entity_attribution={
                fid: ref.to_ref() if ref else None
                for fid, ref in body.fact_entity_attribution.items()
            },
        )
        try:
            ack = store.submit_step3(label)
        except UnknownAnnotator as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except NotAssigned as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except MissingStepTwo as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except IncompleteLabels as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"ok": True, **ack}

    @app.get("/export", dependencies=[Depends(check_token)])
    def export():
        return store.export()

    @app.get("/progress", dependencies=[Depends(check_token)])
    def progress():
        return store.progress()

    return app


def read_tasks_jsonl(path: str | Path) -> list[AnnotationTask]:
    """Load annotation tasks from JSONL rows of
    {paragraph_id, paragraph_text, facts, entity_pages, model_tag?}."""
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            tasks.append(
                AnnotationTask(
                    paragraph_id=row["paragraph_id"],
                    paragraph_text=row["paragraph_text"],
                    facts=tuple(
                        AtomicFact(
                            id=f["id"],
                            text=f["text"],
                            source_sentence_index=f.get("source_sentence_index", 0),
                        )
                        for f in row["facts"]
                    ),
                    entity_pages=tuple(
                        (EntityRef(title=p["title"], page_id=p["page_id"]), p["text"])
                        for p in row["entity_pages"]
                    ),
                    model_tag=row.get("model_tag", ""),
                )
            )
    return tasks
