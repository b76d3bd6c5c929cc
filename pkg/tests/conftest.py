"""Shared fixtures: one synthetic corpus per session, featurized once."""

from __future__ import annotations

import numpy as np
import pytest

from streetrate import dataset, features, pipeline, synth
from streetrate.rng import SplitMix64

CORPUS_SEED = 7
CODEBOOK_SEED = 3
CODEBOOK_K = 32
MAX_DESCRIPTORS = 20_000


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    paths = synth.make_corpus(out, seed=CORPUS_SEED)
    return paths


@pytest.fixture(scope="session")
def corpus_images(corpus):
    return dataset.read_manifest(corpus["manifest"])


@pytest.fixture(scope="session")
def corpus_labels(corpus):
    store = dataset.LabelStore(corpus["labels"])
    return {task: dataset.resolve_labels(store, task) for task in dataset.TASKS}


@pytest.fixture(scope="session")
def codebook(corpus_images):
    chunks = [features.dense_descriptors(rec.raster_path) for rec in corpus_images]
    sample = np.concatenate(chunks)
    sample = sample[np.linalg.norm(sample, axis=1) > 0]
    idx = list(range(len(sample)))
    SplitMix64(CODEBOOK_SEED ^ 0xC0DEB00C).shuffle(idx)
    sample = sample[sorted(idx[:MAX_DESCRIPTORS])]
    return features.build_codebook(sample, k=CODEBOOK_K, seed=CODEBOOK_SEED)


@pytest.fixture(scope="session")
def corpus_features(corpus_images, codebook):
    vecs = pipeline.extract_features(corpus_images, codebook, workers=4)
    return {v.image_id: v for v in vecs}
