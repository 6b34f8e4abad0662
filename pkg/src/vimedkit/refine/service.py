"""HTTP surface for the refinement queue plus a lexicon-backed mock NMT.

Endpoints:

* ``GET /tasks/next?annotator=`` — claim one task; 204 when drained.
* ``POST /tasks/{task_id}/submit`` — submit the final text for a claim.
* ``GET /progress`` — counts by status and per-annotator submissions.
* ``GET /lexicon`` — the abbreviation rules driving suggestions/highlights.
* ``POST /translate`` — texts in, translations out (positional alignment), a
  first-party counterparty for the HTTP translation backend.
"""

from __future__ import annotations

from typing import Sequence

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from ..mednli import AbbrevRule
from ..translation import mock_translate
from .store import (
    LeaseExpiredError,
    RefinementTask,
    TaskStateError,
    TaskStore,
    UnknownTaskError,
    WrongClaimantError,
)


class TaskOut(BaseModel):
    task_id: int
    uid: str
    field: str
    source_text: str
    machine_text: str
    suggested_text: str
    suggested_rule_ids: list[str]
    status: str
    claimant: str | None = None
    claim_expiry: float | None = None
    final_text: str | None = None

    @classmethod
    def from_task(cls, task: RefinementTask) -> "TaskOut":
        return cls(
            task_id=task.task_id,
            uid=task.uid,
            field=task.field,
            source_text=task.source_text,
            machine_text=task.machine_text,
            suggested_text=task.suggested_text,
            suggested_rule_ids=list(task.suggested_rule_ids),
            status=task.status,
            claimant=task.claimant,
            claim_expiry=task.claim_expiry,
            final_text=task.final_text,
        )


class SubmitIn(BaseModel):
    annotator: str = Field(min_length=1)
    final_text: str = Field(min_length=1)


class ProgressOut(BaseModel):
    open: int
    claimed: int
    submitted: int
    total: int
    all_submitted: bool
    by_annotator: dict[str, int]


class LexiconRuleOut(BaseModel):
    rule_id: str
    pattern: str
    action: str
    replacement: str
    case_sensitive: bool
    notes: str


class LexiconOut(BaseModel):
    rules: list[LexiconRuleOut]


class TranslateIn(BaseModel):
    texts: list[str]


class TranslateOut(BaseModel):
    translations: list[str]


def create_app(
    store: TaskStore,
    lexicon: Sequence[AbbrevRule] = (),
    translate_lexicon: dict[str, str] | None = None,
) -> FastAPI:
    app = FastAPI(title="vimedkit refinement service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.lexicon = list(lexicon)
    app.state.translate_lexicon = dict(translate_lexicon or {})

    @app.get("/tasks/next", response_model=TaskOut, responses={204: {}})
    def claim_next(annotator: str = Query(min_length=1)):
        task = store.claim_next(annotator)
        if task is None:
            return Response(status_code=204)
        return TaskOut.from_task(task)

    @app.post("/tasks/{task_id}/submit", response_model=TaskOut)
    def submit(task_id: int, payload: SubmitIn):
        try:
            task = store.submit(task_id, payload.annotator, payload.final_text)
        except UnknownTaskError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except LeaseExpiredError as exc:
            raise HTTPException(
                status_code=409,
                detail={"code": "lease_expired", "message": str(exc)},
            ) from exc
        except WrongClaimantError as exc:
            raise HTTPException(
                status_code=409,
                detail={"code": "wrong_claimant", "message": str(exc)},
            ) from exc
        except TaskStateError as exc:
            raise HTTPException(
                status_code=409,
                detail={"code": "invalid_state", "message": str(exc)},
            ) from exc
        return TaskOut.from_task(task)

    @app.get("/progress", response_model=ProgressOut)
    def progress():
        return ProgressOut(**store.progress().as_dict())

    @app.get("/lexicon", response_model=LexiconOut)
    def lexicon_rules():
        return LexiconOut(
            rules=[
                LexiconRuleOut(
                    rule_id=rule.rule_id,
                    pattern=rule.pattern,
                    action=rule.action,
                    replacement=rule.replacement,
                    case_sensitive=rule.case_sensitive,
                    notes=rule.notes,
                )
                for rule in app.state.lexicon
            ]
        )

    @app.post("/translate", response_model=TranslateOut)
    def translate(payload: TranslateIn):
        return TranslateOut(
            translations=[
                mock_translate(app.state.translate_lexicon, text)
                for text in payload.texts
            ]
        )

    return app
