"""Procedural synthetic corpus for demos and end-to-end tests.

Generates a small city: a 20-segment street network, 400 PNG captures whose
texture statistics encode their ratings, a labels file from one synthetic
expert, and a survey whose responses track segment quality. Facade-like
images are square-wave stripe textures; rating 1-4 sets the stripe period
(coarse to fine) and the continuity flag sets the stripe orientation.
Unqualified street-like images are smooth ramps with faint speckle.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import ImageRecord, LabelRecord, LabelStore, write_manifest
from .rng import SplitMix64

IMAGE_W = 96
IMAGE_H = 64
N_SEGMENTS = 20
QUALIFIED_PER_SEGMENT = 15
UNQUALIFIED_PER_SEGMENT = 5

STRIPE_PERIOD = {1: 32, 2: 16, 3: 8, 4: 4}

# per-segment quality mixes: low / mid / high visual quality streets
_QUALITY_ROWS = {
    "low": (1, 1, 1, 1, 2, 1, 2, 2, 1, 3, 1, 2, 2, 1, 2),
    "mid": (2, 3, 2, 3, 3, 2, 4, 2, 3, 3, 2, 3, 1, 3, 3),
    "high": (4, 3, 4, 4, 3, 4, 4, 2, 4, 3, 4, 4, 3, 4, 4),
}

RATER = "synthetic-expert"
BASE_TS = 1_700_000_000.0

ORIGIN_LON = 116.380
ORIGIN_LAT = 39.900


def _segment_band(s: int) -> str:
    if s < 7:
        return "low"
    if s < 14:
        return "mid"
    return "high"


def _quality_of(s: int, j: int) -> int:
    return _QUALITY_ROWS[_segment_band(s)][j]


def _continuity_of(s: int, j: int) -> int:
    # southern segments read as gappier street walls
    share = 1 if s < 10 else 2
    return 1 if (j * 7 + s) % 3 < share else 0


def _stripe_image(period: int, horizontal: bool, phase: int, gen: SplitMix64) -> np.ndarray:
    axis = np.arange(IMAGE_H if horizontal else IMAGE_W)
    wave = ((axis + phase) // (period // 2)) % 2
    img = np.where(wave == 0, 40.0, 215.0)
    img = np.tile(img[:, None], (1, IMAGE_W)) if horizontal else np.tile(img[None, :], (IMAGE_H, 1))
    noise = np.array([gen.next_float() for _ in range(IMAGE_H * IMAGE_W)]).reshape(IMAGE_H, IMAGE_W)
    return np.clip(img + (noise - 0.5) * 16.0, 0, 255)


def _street_image(gen: SplitMix64) -> np.ndarray:
    # smooth diagonal ramp, almost gradient-free at patch scale
    yy, xx = np.mgrid[0:IMAGE_H, 0:IMAGE_W]
    tilt = gen.next_float()
    img = 90.0 + 60.0 * (tilt * xx / IMAGE_W + (1 - tilt) * yy / IMAGE_H)
    noise = np.array([gen.next_float() for _ in range(IMAGE_H * IMAGE_W)]).reshape(IMAGE_H, IMAGE_W)
    return np.clip(img + (noise - 0.5) * 4.0, 0, 255)


def _segment_polyline(s: int) -> list[list[float]]:
    # parallel north-south streets ~445 m long, 170 m apart
    lon = ORIGIN_LON + 0.002 * s
    return [[lon, ORIGIN_LAT], [lon, ORIGIN_LAT + 0.004]]


def make_corpus(out_dir, seed: int = 7) -> dict:
    """Write the full synthetic corpus under out_dir and return its paths."""
    out = Path(out_dir)
    image_dir = out / "images"
    image_dir.mkdir(parents=True, exist_ok=True)

    records: list[ImageRecord] = []
    labels: list[LabelRecord] = []
    ts = BASE_TS
    idx = 0

    for s in range(N_SEGMENTS):
        seg_id = f"seg_{s:02d}"
        for j in range(QUALIFIED_PER_SEGMENT + UNQUALIFIED_PER_SEGMENT):
            image_id = f"img_{idx:04d}"
            gen = SplitMix64(seed * 1_000_003 + idx)
            qualified = j < QUALIFIED_PER_SEGMENT
            if qualified:
                quality = _quality_of(s, j)
                continuity = _continuity_of(s, j)
                phase = gen.next_below(64)
                arr = _stripe_image(STRIPE_PERIOD[quality], continuity == 1, phase, gen)
            else:
                arr = _street_image(gen)
            path = image_dir / f"{image_id}.png"
            Image.fromarray(arr.astype(np.uint8), mode="L").save(path)

            records.append(
                ImageRecord(
                    image_id=image_id,
                    point_id=f"{seg_id}:{j % 3}",
                    segment_id=seg_id,
                    raster_path=str(path),
                    width_px=IMAGE_W,
                    height_px=IMAGE_H,
                )
            )
            labels.append(LabelRecord(image_id, "qualification", int(qualified), RATER, ts))
            ts += 1.0
            if qualified:
                labels.append(LabelRecord(image_id, "quality", quality, RATER, ts))
                labels.append(LabelRecord(image_id, "continuity", continuity, RATER, ts + 1.0))
                ts += 2.0
            idx += 1

    manifest_path = out / "images.csv"
    write_manifest(records, manifest_path)

    labels_path = out / "labels.jsonl"
    if labels_path.exists():
        labels_path.unlink()
    store = LabelStore(labels_path)
    for rec in labels:
        store.append(rec)

    network_path = out / "network.geojson"
    features = [
        {
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": _segment_polyline(s)},
            "properties": {"segment_id": f"seg_{s:02d}"},
        }
        for s in range(N_SEGMENTS)
    ]
    with open(network_path, "w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh)
        fh.write("\n")

    survey_path = out / "survey.csv"
    _write_survey(survey_path, seed)

    return {
        "manifest": manifest_path,
        "labels": labels_path,
        "network": network_path,
        "survey": survey_path,
        "images": image_dir,
    }


def _write_survey(path, seed: int) -> None:
    """10-15 on-site responses per segment, tracking the segment quality band."""
    gen = SplitMix64(seed + 99)
    genders = ("male", "female")
    ages = ("<18", "18-40", "41-60", "60+")
    residences = ("resident", "visitor")
    educations = ("elementary", "junior", "high_school", "bachelor", "master_plus")
    lines = ["segment_id,rating,gender,age_band,residence,education"]
    for s in range(N_SEGMENTS):
        qualities = [_quality_of(s, j) for j in range(QUALIFIED_PER_SEGMENT)]
        mean_q = sum(qualities) / len(qualities)
        center = 1.0 + (mean_q - 1.0) * 4.0 / 3.0  # map 1..4 to 1..5
        for _ in range(10 + gen.next_below(6)):
            rating = round(center + (gen.next_float() - 0.5) * 1.6)
            rating = min(5, max(1, int(rating)))
            lines.append(
                f"seg_{s:02d},{rating},{genders[gen.next_below(2)]},{ages[gen.next_below(4)]},"
                f"{residences[gen.next_below(2)]},{educations[gen.next_below(5)]}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="generate the synthetic demo corpus")
    parser.add_argument("out_dir", help="directory to write the corpus into")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = make_corpus(args.out_dir, seed=args.seed)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
