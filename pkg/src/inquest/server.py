"""HTTP annotation service: task assignment, append-only persistence, exports.

Tasks are derived from a corpus (salience for every question, answerability
for questions whose aggregated validity is valid, ranking for articles with
exactly three candidate summaries). Each item targets a configured number of
annotators; submissions append to a JSONL store that survives restarts, and
exports mirror the corpus file formats at any moment.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .corpus import ANSWERABILITY_SCALE, Corpus, SALIENCE_SCALE
from .errors import DegenerateDataError, InquestError
from .metrics import RatingMatrix, krippendorff_alpha_ordinal
from .summeval import SummaryCandidate

TASK_KINDS = ("salience", "answerability", "ranking")


@dataclass(frozen=True)
class TaskAssignment:
    task_id: str
    kind: str
    payload: Mapping
    annotator_id: str


@dataclass
class Submission:
    seq: int
    kind: str
    task_id: str
    annotator_id: str
    data: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "task_id": self.task_id,
            "annotator_id": self.annotator_id,
            "data": self.data,
        }


class AnnotationStore:
    """Append-only submission log; the file is the source of truth."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.submissions: list[Submission] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        obj = json.loads(line)
                        self.submissions.append(
                            Submission(
                                seq=obj["seq"],
                                kind=obj["kind"],
                                task_id=obj["task_id"],
                                annotator_id=obj["annotator_id"],
                                data=obj["data"],
                            )
                        )

    def append(self, kind: str, task_id: str, annotator_id: str, data: dict) -> Submission:
        with self._lock:
            sub = Submission(
                seq=len(self.submissions) + 1,
                kind=kind,
                task_id=task_id,
                annotator_id=annotator_id,
                data=data,
            )
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(sub.to_dict(), ensure_ascii=False) + "\n")
                fh.flush()
            self.submissions.append(sub)
            return sub

    def by_task(self, task_id: str) -> list[Submission]:
        return [s for s in self.submissions if s.task_id == task_id]

    def seen(self, task_id: str, annotator_id: str) -> bool:
        return any(
            s.task_id == task_id and s.annotator_id == annotator_id for s in self.submissions
        )


@dataclass
class ServerConfig:
    annotators: tuple[str, ...]
    annotators_per_item: int = 3
    seed: int = 0
    token: str | None = None


class AnnotationService:
    """Task bookkeeping shared by the HTTP layer and tests."""

    def __init__(
        self,
        corpus: Corpus,
        store: AnnotationStore,
        config: ServerConfig,
        candidates: Mapping[str, list[SummaryCandidate]] | None = None,
        tldrs: Mapping[str, str] | None = None,
    ):
        self.corpus = corpus
        self.store = store
        self.config = config
        self.candidates = dict(candidates or {})
        self.tldrs = dict(tldrs or {})
        for article_id, cands in self.candidates.items():
            if len(cands) != 3:
                raise InquestError(
                    f"ranking task for {article_id!r} needs exactly 3 candidates, got {len(cands)}"
                )
        # Candidate ids are opaque to annotators: system names stay hidden.
        self._candidate_ids: dict[str, dict[str, str]] = {
            article_id: {f"{article_id}::c{i + 1}": cand.system for i, cand in enumerate(cands)}
            for article_id, cands in self.candidates.items()
        }

    # -- task enumeration ---------------------------------------------------

    def _task_items(self) -> list[tuple[str, str, str]]:
        """(kind, item_id, task_id) in serving order: kind, then item id."""
        items: list[tuple[str, str, str]] = []
        for qid in sorted(self.corpus.questions):
            items.append(("salience", qid, f"sal:{qid}"))
        valid = self.corpus.valid_question_ids()
        for qid in sorted(valid):
            items.append(("answerability", qid, f"ans:{qid}"))
        for article_id in sorted(self.candidates):
            items.append(("ranking", article_id, f"rank:{article_id}"))
        return items

    def _payload(self, kind: str, item_id: str, annotator_id: str) -> dict:
        if kind == "salience":
            q = self.corpus.questions[item_id]
            return {
                "question_id": q.id,
                "question": q.text,
                "preceding": q.context.preceding,
                "anchor": q.context.anchor,
                "anchor_index": q.context.anchor_index,
                "article_id": q.context.article_id,
            }
        if kind == "answerability":
            q = self.corpus.questions[item_id]
            article = self.corpus.articles[q.context.article_id]
            return {
                "question_id": q.id,
                "question": q.text,
                "preceding": q.context.preceding,
                "anchor": q.context.anchor,
                "subsequent": q.context.subsequent(article),
                "article_id": article.id,
            }
        # ranking: shuffle candidate order deterministically per (task, annotator)
        ids = list(self._candidate_ids[item_id])
        rng = random.Random(f"{item_id}:{annotator_id}:{self.config.seed}")
        rng.shuffle(ids)
        id_to_cand = {
            cid: cand
            for cid, cand in zip(self._candidate_ids[item_id], self.candidates[item_id])
        }
        return {
            "article_id": item_id,
            "tldr": self.tldrs.get(item_id, ""),
            "candidates": [{"candidate_id": cid, "text": id_to_cand[cid].text} for cid in ids],
        }

    def check_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.config.annotators:
            raise KeyError(annotator_id)

    def next_task(self, annotator_id: str) -> TaskAssignment | None:
        self.check_annotator(annotator_id)
        k = self.config.annotators_per_item
        for kind, item_id, task_id in self._task_items():
            if self.store.seen(task_id, annotator_id):
                continue
            if len(self.store.by_task(task_id)) >= k:
                continue
            return TaskAssignment(
                task_id=task_id,
                kind=kind,
                payload=self._payload(kind, item_id, annotator_id),
                annotator_id=annotator_id,
            )
        return None

    # -- submissions ----------------------------------------------------------

    def _check_submittable(self, kind: str, task_id: str, annotator_id: str) -> str:
        self.check_annotator(annotator_id)
        prefix = {"salience": "sal:", "answerability": "ans:", "ranking": "rank:"}[kind]
        if not task_id.startswith(prefix):
            raise ValueError(f"task {task_id!r} is not a {kind} task")
        item_id = task_id[len(prefix):]
        if kind == "ranking":
            if item_id not in self.candidates:
                raise ValueError(f"unknown ranking task {task_id!r}")
        elif item_id not in self.corpus.questions:
            raise ValueError(f"unknown task {task_id!r}")
        elif kind == "answerability" and item_id not in self.corpus.valid_question_ids():
            raise ValueError(
                f"question {item_id!r} is not aggregated-valid; no answerability task exists"
            )
        if self.store.seen(task_id, annotator_id):
            raise ValueError(f"duplicate submission for {task_id!r} by {annotator_id!r}")
        return item_id

    def submit_salience(self, task_id: str, annotator_id: str, score: int, rationale: str):
        item_id = self._check_submittable("salience", task_id, annotator_id)
        if score not in SALIENCE_SCALE:
            raise ValueError(f"salience score {score} not in 0..5")
        if not rationale.strip():
            raise ValueError("rationale must be non-empty")
        return self.store.append(
            "salience", task_id, annotator_id,
            {"question_id": item_id, "score": score, "rationale": rationale},
        )

    def submit_answerability(self, task_id: str, annotator_id: str, score: int):
        item_id = self._check_submittable("answerability", task_id, annotator_id)
        if score not in ANSWERABILITY_SCALE:
            raise ValueError(f"answerability score {score} not in 0..3")
        return self.store.append(
            "answerability", task_id, annotator_id,
            {"question_id": item_id, "score": score},
        )

    def submit_ranking(self, task_id: str, annotator_id: str, order: list[str]):
        """``order`` lists the three candidate ids best-first; stored as
        scores 3/2/1 by position."""
        article_id = self._check_submittable("ranking", task_id, annotator_id)
        expected = set(self._candidate_ids[article_id])
        if sorted(order) != sorted(expected):
            raise ValueError(
                f"order must be a permutation of the assigned candidates {sorted(expected)}"
            )
        scores = {
            self._candidate_ids[article_id][cid]: 3 - position
            for position, cid in enumerate(order)
        }
        return self.store.append(
            "ranking", task_id, annotator_id,
            {"article_id": article_id, "scores": scores},
        )

    # -- reporting -------------------------------------------------------------

    def _alpha(self, kind: str) -> float | None:
        triples = []
        for s in self.store.submissions:
            if s.kind == kind:
                triples.append((s.data["question_id"], s.annotator_id, s.data["score"]))
        if not triples:
            return None
        try:
            matrix = RatingMatrix.from_annotations(triples)
            if not matrix.pairable_units():
                return None
            return krippendorff_alpha_ordinal(matrix)
        except DegenerateDataError:
            return None

    def progress_report(self) -> dict:
        k = self.config.annotators_per_item
        report: dict = {}
        items = self._task_items()
        for kind in TASK_KINDS:
            kind_items = [t for t in items if t[0] == kind]
            assigned = len(kind_items) * min(k, len(self.config.annotators))
            completed = sum(1 for s in self.store.submissions if s.kind == kind)
            report[kind] = {
                "assigned": assigned,
                "completed": completed,
                "remaining": assigned - completed,
            }
        report["alpha"] = {
            "salience": self._alpha("salience"),
            "answerability": self._alpha("answerability"),
        }
        return report

    # -- exports -----------------------------------------------------------------

    def export(self, kind: str) -> Iterator[str]:
        """Corpus-format JSONL lines for everything submitted so far."""
        for s in self.store.submissions:
            if s.kind != kind:
                continue
            if kind == "salience":
                rec = {
                    "question_id": s.data["question_id"],
                    "annotator_id": s.annotator_id,
                    "score": s.data["score"],
                    "rationale": s.data["rationale"],
                }
                yield json.dumps(rec, ensure_ascii=False)
            elif kind == "answerability":
                rec = {
                    "question_id": s.data["question_id"],
                    "annotator_id": s.annotator_id,
                    "score": s.data["score"],
                }
                yield json.dumps(rec, ensure_ascii=False)
            else:
                for system, score in sorted(s.data["scores"].items()):
                    rec = {
                        "article_id": s.data["article_id"],
                        "annotator_id": s.annotator_id,
                        "system": system,
                        "score": score,
                    }
                    yield json.dumps(rec, ensure_ascii=False)


# --------------------------------------------------------------------------
# HTTP layer
# --------------------------------------------------------------------------


class SalienceBody(BaseModel):
    task_id: str
    annotator_id: str
    score: int = Field(ge=0, le=5)
    rationale: str


class AnswerabilityBody(BaseModel):
    task_id: str
    annotator_id: str
    score: int = Field(ge=0, le=3)


class RankingBody(BaseModel):
    task_id: str
    annotator_id: str
    order: list[str]


def make_app(service: AnnotationService, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="inquest annotation service")

    def _guard(annotator: str):
        try:
            service.check_annotator(annotator)
        except KeyError:
            raise HTTPException(status_code=401, detail=f"unknown annotator {annotator!r}")

    @app.get("/tasks/next")
    def next_task(annotator: str):
        _guard(annotator)
        task = service.next_task(annotator)
        if task is None:
            return {"task": None}
        return {
            "task": {
                "task_id": task.task_id,
                "kind": task.kind,
                "payload": task.payload,
                "annotator_id": task.annotator_id,
            }
        }

    def _submit(fn, *args):
        try:
            sub = fn(*args)
        except KeyError as exc:
            raise HTTPException(status_code=401, detail=f"unknown annotator {exc}")
        except ValueError as exc:
            status = 409 if "duplicate" in str(exc) else 422
            raise HTTPException(status_code=status, detail=str(exc))
        return {"ok": True, "seq": sub.seq}

    @app.post("/annotations/salience")
    def post_salience(body: SalienceBody):
        return _submit(
            service.submit_salience, body.task_id, body.annotator_id, body.score, body.rationale
        )

    @app.post("/annotations/answerability")
    def post_answerability(body: AnswerabilityBody):
        return _submit(
            service.submit_answerability, body.task_id, body.annotator_id, body.score
        )

    @app.post("/rankings")
    def post_ranking(body: RankingBody):
        return _submit(service.submit_ranking, body.task_id, body.annotator_id, body.order)

    @app.get("/progress")
    def progress():
        return service.progress_report()

    @app.get("/export/{kind}", response_class=PlainTextResponse)
    def export(kind: str):
        if kind not in TASK_KINDS and kind != "rankings":
            raise HTTPException(status_code=404, detail=f"unknown export {kind!r}")
        kind = "ranking" if kind == "rankings" else kind
        lines = list(service.export(kind))
        return "\n".join(lines) + ("\n" if lines else "")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
