"""HTTP labeling service: serves images and rating prompts to human raters,
records their ratings in the append-only store, and reports live class
distributions next to the published reference shares."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Query
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .dataset import (
    REFERENCE_SHARES,
    TASKS,
    VALID_VALUES,
    ImageRecord,
    InvalidValue,
    LabelRecord,
    LabelStore,
    read_manifest,
    resolve_labels,
)
from .features import FeatureVector
from .model import SvmModel, decision_values

MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}


class CorpusExhausted(LookupError):
    """Every image already rated by this rater on this task."""


class UnknownImage(KeyError):
    pass


@dataclass
class LabelingSession:
    """Tracks what one rater has been shown for one task."""

    rater_id: str
    task: str
    strategy: str = "sequential"
    served_ids: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class NextItem:
    image_id: str
    image_url: str
    task: str
    labeled: int
    total: int
    warning: str | None = None


class LabelService:
    """Core labeling logic, independent of the HTTP layer.

    Item selection: ``sequential`` serves the lowest unlabeled image id;
    ``uncertain`` serves the unlabeled image whose current model is least
    sure (smallest |decision value|, or smallest top-two gap for quality),
    ties to the lowest image id. An image is not re-served within a session
    until every unlabeled image has been shown once.
    """

    def __init__(
        self,
        images: list[ImageRecord],
        store: LabelStore,
        models: dict[str, SvmModel] | None = None,
        features: dict[str, FeatureVector] | None = None,
    ):
        self.images = {rec.image_id: rec for rec in images}
        self.store = store
        self.models = models or {}
        self.features = features or {}
        self._sessions: dict[tuple[str, str], LabelingSession] = {}
        self._lock = threading.Lock()

    def session(self, rater_id: str, task: str, strategy: str) -> LabelingSession:
        with self._lock:
            sess = self._sessions.setdefault((rater_id, task), LabelingSession(rater_id, task))
            sess.strategy = strategy
            return sess

    def _labeled_by(self, rater_id: str, task: str) -> set[str]:
        return {r.image_id for r in self.store.records() if r.task == task and r.rater_id == rater_id}

    def _uncertainty(self, task: str, image_id: str) -> float:
        model = self.models[task]
        vals = decision_values(model, self.features[image_id])
        if model.is_binary:
            return abs(float(vals[0]))
        top_two = sorted(vals)[-2:]
        return float(top_two[1] - top_two[0])

    def task_progress(self, task: str) -> tuple[int, int]:
        """Images with at least one resolved label for this task, over corpus size."""
        labeled = sum(1 for i in resolve_labels(self.store, task) if i in self.images)
        return labeled, len(self.images)

    def next_item(self, session: LabelingSession) -> NextItem:
        if not self.images:
            raise CorpusExhausted("empty corpus")
        unlabeled = sorted(set(self.images) - self._labeled_by(session.rater_id, session.task))
        if not unlabeled:
            raise CorpusExhausted(
                f"rater {session.rater_id!r} has labeled every image for {session.task!r}"
            )
        candidates = [i for i in unlabeled if i not in session.served_ids]
        if not candidates:
            session.served_ids.clear()  # rater skipped through; start over
            candidates = unlabeled

        warning = None
        strategy = session.strategy
        if strategy == "uncertain" and (
            session.task not in self.models
            or any(i not in self.features for i in candidates)
        ):
            warning = "no model/features loaded for uncertain strategy; falling back to sequential"
            strategy = "sequential"

        if strategy == "uncertain":
            chosen = min(candidates, key=lambda i: (self._uncertainty(session.task, i), i))
        else:
            chosen = candidates[0]
        session.served_ids.append(chosen)

        labeled, total = self.task_progress(session.task)
        return NextItem(
            image_id=chosen,
            image_url=f"/images/{chosen}",
            task=session.task,
            labeled=labeled,
            total=total,
            warning=warning,
        )

    def submit_label(self, image_id: str, task: str, value: int, rater_id: str) -> LabelRecord:
        if image_id not in self.images:
            raise UnknownImage(image_id)
        rec = LabelRecord(image_id=image_id, task=task, value=value, rater_id=rater_id, ts=time.time())
        self.store.append(rec)
        return rec

    def stats(self, task: str) -> dict:
        if task not in VALID_VALUES:
            raise InvalidValue(f"unknown task {task!r}")
        resolved = resolve_labels(self.store, task)
        counts = {cls: 0 for cls in VALID_VALUES[task]}
        for value in resolved.values():
            counts[value] = counts.get(value, 0) + 1
        total = sum(counts.values())
        shares = {cls: (100.0 * n / total if total else 0.0) for cls, n in counts.items()}
        return {
            "task": task,
            "counts": counts,
            "shares": shares,
            "reference_shares": REFERENCE_SHARES[task],
        }


class _LabelBody(BaseModel):
    image_id: str
    task: str
    value: int
    rater_id: str


def create_app(
    manifest_path=None,
    label_store_path=None,
    service: LabelService | None = None,
    models: dict[str, SvmModel] | None = None,
    features: dict[str, FeatureVector] | None = None,
    ui_dir=None,
) -> FastAPI:
    """Build the HTTP app around a LabelService (or construct one from paths)."""
    if service is None:
        images = read_manifest(manifest_path)
        service = LabelService(images, LabelStore(label_store_path), models, features)

    app = FastAPI(title="streetrate labeling service")
    app.state.service = service

    @app.get("/api/tasks")
    def tasks():
        out = []
        for task in TASKS:
            labeled, total = service.task_progress(task)
            out.append({"task": task, "labeled": labeled, "total": total})
        return out

    @app.get("/api/next")
    def next_item(
        task: str = Query(...),
        rater: str = Query(...),
        strategy: str = Query("sequential"),
    ):
        if task not in VALID_VALUES:
            return JSONResponse({"error": f"unknown task {task!r}"}, status_code=422)
        if strategy not in ("sequential", "uncertain"):
            return JSONResponse({"error": f"unknown strategy {strategy!r}"}, status_code=422)
        sess = service.session(rater, task, strategy)
        try:
            item = service.next_item(sess)
        except CorpusExhausted as exc:
            return JSONResponse({"error": "corpus_exhausted", "detail": str(exc)}, status_code=404)
        body = {
            "image_id": item.image_id,
            "image_url": item.image_url,
            "task": item.task,
            "progress": {"labeled": item.labeled, "total": item.total},
        }
        if item.warning:
            body["warning"] = item.warning
        return body

    @app.post("/api/labels", status_code=201)
    def submit(body: _LabelBody):
        try:
            rec = service.submit_label(body.image_id, body.task, body.value, body.rater_id)
        except UnknownImage:
            return JSONResponse({"error": f"unknown image {body.image_id!r}"}, status_code=404)
        except InvalidValue as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        return {
            "image_id": rec.image_id,
            "task": rec.task,
            "value": rec.value,
            "rater_id": rec.rater_id,
            "ts": rec.ts,
        }

    @app.get("/api/stats")
    def stats(task: str = Query(...)):
        try:
            return service.stats(task)
        except InvalidValue as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)

    @app.get("/images/{image_id}")
    def image(image_id: str):
        rec = service.images.get(image_id)
        if rec is None:
            return JSONResponse({"error": f"unknown image {image_id!r}"}, status_code=404)
        path = Path(rec.raster_path)
        media = MEDIA_TYPES.get(path.suffix.lower(), "application/octet-stream")
        return FileResponse(path, media_type=media)

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
