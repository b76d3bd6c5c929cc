"""Orchestration: train/evaluate the three raters, screen, score, validate.

Stages exchange flat files (points, features, splits, models, predictions)
so each is independently runnable and resumable; every merge sorts by
image_id so outputs do not depend on worker scheduling.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import metrics
from .dataset import ImageRecord, Split, stratified_split
from .features import Codebook, FeatureVector, extract_bovw
from .metrics import MetricsReport, ValidationReport
from .model import Hyperparams, SvmModel, decision_values, predict, train_binary, train_ovr


class MissingFeature(KeyError):
    """An image to score has no feature vector."""

    def __init__(self, image_id: str):
        super().__init__(image_id)
        self.image_id = image_id

    def __str__(self):
        return f"no feature vector for image {self.image_id!r}"


@dataclass(frozen=True)
class SegmentScore:
    """Aggregated machine ratings of one street segment."""

    segment_id: str
    quality_mean: float
    continuity_share: float
    n_images: int

    def __post_init__(self):
        if self.n_images <= 0:
            raise ValueError("a SegmentScore must aggregate at least one image")


@dataclass(frozen=True)
class SurveyRecord:
    """One on-site rating of a street segment, 1-5 scale."""

    segment_id: str
    rating: int
    gender: str | None = None
    age_band: str | None = None
    residence: str | None = None
    education: str | None = None

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise ValueError(f"survey rating must be 1..5, got {self.rating!r}")


@dataclass(frozen=True)
class SplitSpec:
    """Per-class dev/test counts and the split seed."""

    per_class_dev: int = 40
    per_class_test: int = 60
    seed: int = 0


def _default_workers() -> int:
    return min(8, os.cpu_count() or 1)


def extract_features(
    images: Sequence[ImageRecord], codebook: Codebook, workers: int | None = None
) -> list[FeatureVector]:
    """Visual-word histograms for a manifest, computed by a worker pool.

    The result is sorted by image_id regardless of completion order.
    """
    workers = workers or _default_workers()

    def one(rec: ImageRecord) -> FeatureVector:
        return extract_bovw(rec.raster_path, codebook, image_id=rec.image_id)

    if workers <= 1:
        vecs = [one(rec) for rec in images]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vecs = list(pool.map(one, images))
    return sorted(vecs, key=lambda v: v.image_id)


def _subset(
    ids: Iterable[str], labels: Mapping[str, int], feats: Mapping[str, FeatureVector]
) -> tuple[list[FeatureVector], list[int]]:
    chosen = sorted(ids)
    return [feats[i] for i in chosen], [labels[i] for i in chosen]


def _report(model: SvmModel, X: list[FeatureVector], y: list[int], task: str) -> MetricsReport:
    preds = [predict(model, v) for v in X]
    if task == "quality":
        return metrics.quality_report(y, preds)
    return metrics.classification_report(y, preds)


def train_task(
    task: str,
    labels: Mapping[str, int],
    features: Mapping[str, FeatureVector],
    hyper: Hyperparams,
    split_spec: SplitSpec,
    lam_grid: Sequence[float] = (),
) -> tuple[SvmModel, dict[str, MetricsReport], Split]:
    """Split, train, and report metrics on train/dev/test.

    With a non-empty ``lam_grid`` the regularization strength is chosen on
    the dev split (lowest MSE for quality, highest F1 otherwise; ties to the
    smaller lam). The test split is only touched by the final model.
    """
    missing = [i for i in labels if i not in features]
    if missing:
        raise MissingFeature(sorted(missing)[0])

    split = stratified_split(labels, split_spec.per_class_dev, split_spec.per_class_test, split_spec.seed)
    x_train, y_train = _subset(split.train_ids, labels, features)
    x_dev, y_dev = _subset(split.dev_ids, labels, features)
    x_test, y_test = _subset(split.test_ids, labels, features)

    train_fn = train_ovr if task == "quality" else train_binary

    lam = hyper.lam
    if lam_grid:
        best = None
        for cand in lam_grid:
            h = Hyperparams(cand, hyper.epochs, hyper.seed, hyper.normalize)
            m = train_fn(x_train, y_train, h, task=task)
            rep = _report(m, x_dev, y_dev, task)
            key = rep.mse if task == "quality" else -rep.f1
            if best is None or (key, cand) < best:
                best = (key, cand)
        lam = best[1]

    final_hyper = Hyperparams(lam, hyper.epochs, hyper.seed, hyper.normalize)
    model = train_fn(x_train, y_train, final_hyper, task=task)
    reports = {
        "train": _report(model, x_train, y_train, task),
        "dev": _report(model, x_dev, y_dev, task),
        "test": _report(model, x_test, y_test, task),
    }
    return model, reports, split


def screen_qualified(
    images: Sequence[ImageRecord],
    qual_model: SvmModel,
    features: Mapping[str, FeatureVector],
) -> tuple[list[ImageRecord], list[ImageRecord]]:
    """Partition the corpus by the qualification prediction."""
    qualified, rejected = [], []
    for rec in images:
        vec = features.get(rec.image_id)
        if vec is None:
            raise MissingFeature(rec.image_id)
        (qualified if predict(qual_model, vec) == 1 else rejected).append(rec)
    return qualified, rejected


def score_segments(
    images: Sequence[ImageRecord],
    quality_model: SvmModel,
    continuity_model: SvmModel,
    features: Mapping[str, FeatureVector],
) -> list[SegmentScore]:
    """Mean predicted quality and continuous share per street segment.

    Only the given (already screened) images count; segments without any
    are omitted rather than zero-filled.
    """
    by_segment: dict[str, list[tuple[int, int]]] = {}
    for rec in images:
        vec = features.get(rec.image_id)
        if vec is None:
            raise MissingFeature(rec.image_id)
        q = predict(quality_model, vec)
        c = predict(continuity_model, vec)
        by_segment.setdefault(rec.segment_id, []).append((q, c))

    scores = []
    for seg_id in sorted(by_segment):
        pairs = by_segment[seg_id]
        n = len(pairs)
        scores.append(
            SegmentScore(
                segment_id=seg_id,
                quality_mean=sum(q for q, _ in pairs) / n,
                continuity_share=sum(c for _, c in pairs) / n,
                n_images=n,
            )
        )
    return scores


def predict_records(
    images: Sequence[ImageRecord],
    models: Mapping[str, SvmModel],
    features: Mapping[str, FeatureVector],
) -> list[tuple]:
    """(image_id, task, predicted, *decision_values) rows, sorted for stable output."""
    rows = []
    for rec in sorted(images, key=lambda r: r.image_id):
        vec = features.get(rec.image_id)
        if vec is None:
            raise MissingFeature(rec.image_id)
        for task in sorted(models):
            model = models[task]
            vals = decision_values(model, vec)
            rows.append((rec.image_id, task, predict(model, vec), *[float(v) for v in vals]))
    return rows


def write_predictions_csv(rows: Sequence[tuple], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("image_id,task,predicted,decision_values\n")
        for row in rows:
            image_id, task, pred, *vals = row
            fh.write(f"{image_id},{task},{pred}," + ",".join(repr(v) for v in vals) + "\n")


SCORES_HEADER = ["segment_id", "quality_mean", "continuity_share", "n_images"]


def write_scores_csv(scores: Sequence[SegmentScore], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(SCORES_HEADER) + "\n")
        for s in sorted(scores, key=lambda s: s.segment_id):
            fh.write(f"{s.segment_id},{repr(s.quality_mean)},{repr(s.continuity_share)},{s.n_images}\n")


def read_scores_csv(path) -> list[SegmentScore]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SCORES_HEADER:
            raise ValueError(f"scores header must be {','.join(SCORES_HEADER)}")
        return [
            SegmentScore(
                row["segment_id"],
                float(row["quality_mean"]),
                float(row["continuity_share"]),
                int(row["n_images"]),
            )
            for row in reader
        ]


def read_survey_csv(path) -> list[SurveyRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"segment_id", "rating"}
        if not required <= set(reader.fieldnames or ()):
            raise ValueError("survey header needs at least segment_id,rating")
        out = []
        for row in reader:
            out.append(
                SurveyRecord(
                    segment_id=row["segment_id"],
                    rating=int(row["rating"]),
                    gender=row.get("gender") or None,
                    age_band=row.get("age_band") or None,
                    residence=row.get("residence") or None,
                    education=row.get("education") or None,
                )
            )
        return out


def validate_against_survey(
    scores: Sequence[SegmentScore], surveys: Sequence[SurveyRecord]
) -> dict[str, ValidationReport]:
    """Spearman's r between machine scores and per-segment survey means.

    Only segments present on both sides count; survey responses for unscored
    segments cannot change the result.
    """
    survey_by_segment: dict[str, list[int]] = {}
    for rec in surveys:
        survey_by_segment.setdefault(rec.segment_id, []).append(rec.rating)
    score_by_segment = {s.segment_id: s for s in scores}

    common = sorted(set(score_by_segment) & set(survey_by_segment))
    if len(common) < 3:
        raise metrics.TooFewPoints(f"only {len(common)} segments in both score and survey sets")

    survey_means = [float(np.mean(survey_by_segment[s])) for s in common]
    out = {}
    for feature, values in (
        ("quality", [score_by_segment[s].quality_mean for s in common]),
        ("continuity", [score_by_segment[s].continuity_share for s in common]),
    ):
        out[feature] = ValidationReport(feature, metrics.spearman(values, survey_means), len(common))
    return out
