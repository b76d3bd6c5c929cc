"""Shared helper: build (or reuse) the synthetic demo corpus and its features."""

from pathlib import Path

import numpy as np

from streetrate import dataset, features, pipeline, synth
from streetrate.rng import SplitMix64

DEMO_DIR = Path(__file__).resolve().parent / "output"


def corpus_paths():
    corpus_dir = DEMO_DIR / "corpus"
    if not (corpus_dir / "images.csv").exists():
        print(f"generating synthetic corpus under {corpus_dir} ...")
        synth.make_corpus(corpus_dir, seed=7)
    return {
        "manifest": corpus_dir / "images.csv",
        "labels": corpus_dir / "labels.jsonl",
        "network": corpus_dir / "network.geojson",
        "survey": corpus_dir / "survey.csv",
    }


def corpus_features(paths, k=32, seed=3):
    """Codebook + visual-word features, cached as CSV next to the corpus."""
    cache = DEMO_DIR / "features.csv"
    if cache.exists():
        return features.load_features_map(cache)
    images = dataset.read_manifest(paths["manifest"])
    pool = np.concatenate([features.dense_descriptors(r.raster_path) for r in images])
    pool = pool[np.linalg.norm(pool, axis=1) > 0]
    idx = list(range(len(pool)))
    SplitMix64(seed ^ 0xC0DEB00C).shuffle(idx)
    book = features.build_codebook(pool[sorted(idx[:20000])], k=k, seed=seed)
    vecs = pipeline.extract_features(images, book)
    features.write_features_csv(vecs, cache)
    return {v.image_id: v for v in vecs}
