"""Label records, the append-only JSONL store, vote resolution and data splits."""

from __future__ import annotations

import csv
import json
import os
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .rng import SplitMix64

TASKS = ("qualification", "quality", "continuity")

VALID_VALUES = {
    "qualification": (0, 1),  # 0 = street image, 1 = building image
    "quality": (1, 2, 3, 4),
    "continuity": (0, 1),  # 0 = discontinuous, 1 = continuous
}

# Published class shares (percent) shipped for stats displays; never enforced.
REFERENCE_SHARES = {
    "qualification": {1: 73.6, 0: 26.4},
    "quality": {4: 18.8, 3: 41.9, 2: 31.4, 1: 7.8},
    "continuity": {1: 41.5, 0: 58.5},
}


class InvalidValue(ValueError):
    """Label value outside the task's allowed range, or unknown task."""


class StorageFailure(RuntimeError):
    """The label store could not be read or written."""


class InsufficientClass(ValueError):
    def __init__(self, cls, have: int, need: int):
        super().__init__(f"class {cls!r} has {have} labelled images, needs {need}")
        self.cls = cls
        self.have = have
        self.need = need


@dataclass(frozen=True)
class LabelRecord:
    """One human rating of one image on one task."""

    image_id: str
    task: str
    value: int
    rater_id: str
    ts: float  # UTC seconds

    def __post_init__(self):
        if self.task not in VALID_VALUES:
            raise InvalidValue(f"unknown task {self.task!r}")
        if self.value not in VALID_VALUES[self.task]:
            raise InvalidValue(
                f"value {self.value!r} not allowed for task {self.task!r} "
                f"(allowed: {VALID_VALUES[self.task]})"
            )


class LabelStore:
    """Append-only JSONL store; one record per line, never rewritten.

    Writes are serialized through a process-local lock and flushed to disk
    per append, so concurrent submitters cannot interleave partial lines.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, rec: LabelRecord) -> None:
        line = json.dumps(
            {
                "image_id": rec.image_id,
                "task": rec.task,
                "value": rec.value,
                "rater_id": rec.rater_id,
                "ts": rec.ts,
            },
            ensure_ascii=False,
        )
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot append to {self.path}: {exc}") from exc

    def records(self) -> list[LabelRecord]:
        """Snapshot of all records in append order."""
        if not self.path.exists():
            return []
        out = []
        try:
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        obj = json.loads(line)
                        out.append(
                            LabelRecord(
                                image_id=str(obj["image_id"]),
                                task=str(obj["task"]),
                                value=int(obj["value"]),
                                rater_id=str(obj["rater_id"]),
                                ts=float(obj["ts"]),
                            )
                        )
                    except (KeyError, ValueError, json.JSONDecodeError) as exc:
                        raise StorageFailure(f"{self.path}:{lineno}: bad record: {exc}") from exc
        except OSError as exc:
            raise StorageFailure(f"cannot read {self.path}: {exc}") from exc
        return out

    def __len__(self) -> int:
        return len(self.records())


def append_label(store: LabelStore, rec: LabelRecord) -> None:
    """Validate and durably append one rating (records are never mutated)."""
    store.append(rec)


def resolve_labels(store: LabelStore | Iterable[LabelRecord], task: str) -> dict[str, int]:
    """Collapse raw ratings to one value per image for the given task.

    Per rater the last write wins (latest timestamp, then append order).
    Across raters the majority value wins; a tied vote falls to the record
    with the latest timestamp, then the lexicographically largest rater_id,
    which makes resolution total and deterministic.
    """
    if task not in VALID_VALUES:
        raise InvalidValue(f"unknown task {task!r}")
    records = store.records() if isinstance(store, LabelStore) else list(store)

    current: dict[tuple[str, str], tuple[float, int, LabelRecord]] = {}
    for seq, rec in enumerate(records):
        if rec.task != task:
            continue
        key = (rec.image_id, rec.rater_id)
        prev = current.get(key)
        if prev is None or (rec.ts, seq) >= (prev[0], prev[1]):
            current[key] = (rec.ts, seq, rec)

    by_image: dict[str, list[LabelRecord]] = {}
    for (_image, _rater), (_ts, _seq, rec) in current.items():
        by_image.setdefault(rec.image_id, []).append(rec)

    resolved = {}
    for image_id, recs in by_image.items():
        votes = Counter(r.value for r in recs)
        top = max(votes.values())
        leaders = {v for v, c in votes.items() if c == top}
        if len(leaders) == 1:
            resolved[image_id] = leaders.pop()
        else:
            winner = max((r for r in recs if r.value in leaders), key=lambda r: (r.ts, r.rater_id))
            resolved[image_id] = winner.value
    return resolved


@dataclass(frozen=True)
class Split:
    """Disjoint train/dev/test image-id sets plus the seed that produced them."""

    train_ids: frozenset[str]
    dev_ids: frozenset[str]
    test_ids: frozenset[str]
    seed: int


def stratified_split(
    labels: Mapping[str, int], per_class_dev: int, per_class_test: int, seed: int
) -> Split:
    """Sample dev/test with exactly the requested count per class; rest trains.

    Image ids are sorted per class and shuffled with a SplitMix64(seed)
    Fisher-Yates pass (classes visited in ascending order, one shared
    stream), so the same inputs and seed reproduce the same split anywhere.
    """
    if per_class_dev < 0 or per_class_test < 0:
        raise ValueError("per-class counts must be non-negative")
    gen = SplitMix64(seed)
    train: set[str] = set()
    dev: set[str] = set()
    test: set[str] = set()
    for cls in sorted(set(labels.values())):
        ids = sorted(i for i, v in labels.items() if v == cls)
        need = per_class_dev + per_class_test
        if len(ids) < need:
            raise InsufficientClass(cls, len(ids), need)
        gen.shuffle(ids)
        dev.update(ids[:per_class_dev])
        test.update(ids[per_class_dev:need])
        train.update(ids[need:])
    return Split(frozenset(train), frozenset(dev), frozenset(test), seed)


def save_split(split: Split, path) -> None:
    doc = {
        "train_ids": sorted(split.train_ids),
        "dev_ids": sorted(split.dev_ids),
        "test_ids": sorted(split.test_ids),
        "seed": split.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_split(path) -> Split:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return Split(
        frozenset(doc["train_ids"]),
        frozenset(doc["dev_ids"]),
        frozenset(doc["test_ids"]),
        int(doc["seed"]),
    )


@dataclass(frozen=True)
class ImageRecord:
    """One street-view capture in the corpus manifest."""

    image_id: str
    point_id: str
    segment_id: str
    raster_path: str
    width_px: int
    height_px: int

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError(f"image {self.image_id!r}: dimensions must be positive")


MANIFEST_HEADER = ["image_id", "point_id", "segment_id", "raster_path", "width", "height"]


def read_manifest(path) -> list[ImageRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_HEADER:
            raise ValueError(f"manifest header must be {','.join(MANIFEST_HEADER)}")
        return [
            ImageRecord(
                row["image_id"],
                row["point_id"],
                row["segment_id"],
                row["raster_path"],
                int(row["width"]),
                int(row["height"]),
            )
            for row in reader
        ]


def write_manifest(records: Iterable[ImageRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for rec in sorted(records, key=lambda r: r.image_id):
            writer.writerow(
                [rec.image_id, rec.point_id, rec.segment_id, rec.raster_path, rec.width_px, rec.height_px]
            )
