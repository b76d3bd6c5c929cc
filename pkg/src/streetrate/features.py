"""Fixed-dimension image features.

The native extractor is a dense bag-of-visual-words: 128-d gradient
orientation descriptors on a regular grid, quantized against a k-means
codebook into an L1-normalized word histogram. Descriptors are HOG-style
dense patches, not keypoint SIFT; the extractor id says so ("bovw-*").
Externally computed embeddings (e.g. CNN activations) are imported from CSV.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ._container import ContainerError, read_container, write_container
from .rng import SplitMix64

PATCH = 16  # patch side in pixels
STRIDE = 8  # grid stride in pixels
CELL = 4  # spatial cell side inside a patch
ORIENT_BINS = 8
DESCRIPTOR_DIM = (PATCH // CELL) ** 2 * ORIENT_BINS  # 128
CLAMP = 0.2

KMEANS_MAX_ITER = 50
KMEANS_SHIFT_TOL = 1e-6

# patches whose raw gradient energy is below this are treated as gradient-free
# (guards against float noise from the luma conversion being normalized up)
ZERO_NORM_FLOOR = 1e-9

LUMA = np.array([0.299, 0.587, 0.114])


class UndecodableImage(ValueError):
    """The raster file could not be decoded."""


class ImageTooSmall(ValueError):
    """Both image sides must be at least one patch wide."""


class TooFewDescriptors(ValueError):
    """Codebook building needs at least k distinct descriptors."""


class DimensionMismatch(ValueError):
    """A vector's length disagrees with the declared dimension."""


class NonFiniteValue(ValueError):
    """NaN or infinity where a finite real is required."""


class MalformedHeader(ValueError):
    """Embedding CSV must start with an 'extractor_id,<id>' line."""


class CorruptCodebookFile(ContainerError):
    """Codebook file failed magic/version/checksum validation."""


@dataclass(frozen=True)
class FeatureVector:
    """One image's numeric representation under a named extractor."""

    image_id: str
    extractor_id: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise DimensionMismatch(f"feature vector must be 1-D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue(f"non-finite value in features of {self.image_id!r}")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Codebook:
    """k visual words in descriptor space plus build provenance."""

    extractor_id: str
    k: int
    centroids: np.ndarray  # (k, d)
    descriptor_dim: int
    build_seed: int

    def __post_init__(self):
        cents = np.asarray(self.centroids, dtype=float)
        if self.k < 2:
            raise ValueError("codebook needs k >= 2")
        if cents.shape != (self.k, self.descriptor_dim):
            raise DimensionMismatch(
                f"centroids shape {cents.shape} != ({self.k}, {self.descriptor_dim})"
            )
        if not np.all(np.isfinite(cents)):
            raise NonFiniteValue("non-finite centroid")
        # pairwise distinct centroids
        for i in range(self.k):
            same = np.all(cents[i + 1 :] == cents[i], axis=1)
            if np.any(same):
                raise ValueError(f"centroids {i} and {i + 1 + int(np.argmax(same))} coincide")
        object.__setattr__(self, "centroids", cents)


def _luma(rgb: np.ndarray) -> np.ndarray:
    # equal channels mean a grayscale source; use it directly so the
    # conversion is exact rather than value * (sum of luma weights)
    if np.array_equal(rgb[..., 0], rgb[..., 1]) and np.array_equal(rgb[..., 1], rgb[..., 2]):
        return rgb[..., 0]
    return rgb @ LUMA


def _as_gray(image) -> np.ndarray:
    """Accept a path, PIL image or 2-D array; return float grayscale (luma)."""
    if isinstance(image, np.ndarray):
        arr = np.asarray(image, dtype=float)
        if arr.ndim == 3:
            arr = _luma(arr)
        return arr
    if isinstance(image, Image.Image):
        pil = image
    else:
        try:
            pil = Image.open(image)
            pil.load()
        except (UnidentifiedImageError, OSError) as exc:
            raise UndecodableImage(f"cannot decode {image!r}: {exc}") from exc
    rgb = np.asarray(pil.convert("RGB"), dtype=float)
    return _luma(rgb)


def dense_descriptors(image) -> np.ndarray:
    """Dense gradient-orientation descriptors on a 16x16-patch, stride-8 grid.

    Each patch yields 4x4 spatial cells x 8 orientation bins = 128 values
    (cell row-major, orientation innermost), gradient magnitudes accumulated
    per cell. Descriptors are L2-normalized, clamped at 0.2 and renormalized;
    zero-gradient patches stay all-zero. Returns an (n, 128) array.
    """
    gray = _as_gray(image)
    h, w = gray.shape
    if min(h, w) < PATCH:
        raise ImageTooSmall(f"image {w}x{h} smaller than {PATCH}px patch")

    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx)  # (-pi, pi], y axis points down the image
    bins = (np.floor((ang + np.pi) / (2 * np.pi / ORIENT_BINS)).astype(int)) % ORIENT_BINS

    # cell origins all land on the 4px lattice, so cell sums are exact
    # non-overlapping 4x4 tile sums per orientation channel
    n_ci = (h - CELL) // CELL + 1
    n_cj = (w - CELL) // CELL + 1
    cell_sums = np.empty((ORIENT_BINS, n_ci, n_cj))
    hx, wx = n_ci * CELL, n_cj * CELL
    for b in range(ORIENT_BINS):
        ch = np.where(bins == b, mag, 0.0)[:hx, :wx]
        cell_sums[b] = ch.reshape(n_ci, CELL, n_cj, CELL).sum(axis=(1, 3))

    n_py = (h - PATCH) // STRIDE + 1
    n_px = (w - PATCH) // STRIDE + 1
    cells_per_side = PATCH // CELL
    step = STRIDE // CELL
    ci = step * np.arange(n_py)[:, None] + np.arange(cells_per_side)[None, :]
    cj = step * np.arange(n_px)[:, None] + np.arange(cells_per_side)[None, :]
    # (bins, n_py, 4, n_px, 4) -> (n_py, n_px, cell_i, cell_j, bin)
    desc = cell_sums[:, ci][:, :, :, cj].transpose(1, 3, 2, 4, 0)
    desc = np.ascontiguousarray(desc).reshape(n_py * n_px, DESCRIPTOR_DIM)

    norms = np.linalg.norm(desc, axis=1, keepdims=True)
    nz = norms[:, 0] > ZERO_NORM_FLOOR
    desc[~nz] = 0.0
    desc[nz] /= norms[nz]
    np.clip(desc, None, CLAMP, out=desc)
    norms = np.linalg.norm(desc, axis=1, keepdims=True)
    desc[nz] /= norms[nz]
    return desc


def _squared_distances(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances, clamped at zero."""
    d2 = (x * x).sum(1)[:, None] - 2.0 * (x @ c.T) + (c * c).sum(1)[None, :]
    return np.maximum(d2, 0.0)


def build_codebook(descriptor_sample, k: int, seed: int, extractor_id: str | None = None) -> Codebook:
    """Lloyd's k-means over a descriptor sample with seeded k-means++ init.

    Runs at most 50 iterations or until the largest centroid shift drops
    below 1e-6; empty clusters keep their previous centroid. Deterministic
    given (sample order, k, seed).
    """
    x = np.asarray(descriptor_sample, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"descriptor sample must be 2-D, got shape {x.shape}")
    n, d = x.shape
    if n < k:
        raise TooFewDescriptors(f"{n} descriptors < k={k}")

    gen = SplitMix64(seed)
    centroids = np.empty((k, d))
    centroids[0] = x[gen.next_below(n)]
    d2 = _squared_distances(x, centroids[:1])[:, 0]
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            raise TooFewDescriptors(f"fewer than k={k} distinct descriptors in sample")
        r = gen.next_float() * total
        idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        idx = min(idx, n - 1)
        centroids[j] = x[idx]
        d2 = np.minimum(d2, _squared_distances(x, centroids[j : j + 1])[:, 0])

    for _ in range(KMEANS_MAX_ITER):
        assign = np.argmin(_squared_distances(x, centroids), axis=1)
        new_centroids = centroids.copy()
        for j in range(k):
            members = x[assign == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < KMEANS_SHIFT_TOL:
            break

    return Codebook(
        extractor_id=extractor_id or f"bovw-k{k}-v1",
        k=k,
        centroids=centroids,
        descriptor_dim=d,
        build_seed=seed,
    )


def quantize(descriptors: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Nearest-centroid word index per descriptor; ties go to the lowest index."""
    if descriptors.shape[1] != codebook.descriptor_dim:
        raise DimensionMismatch(
            f"descriptor dim {descriptors.shape[1]} != codebook dim {codebook.descriptor_dim}"
        )
    return np.argmin(_squared_distances(descriptors, codebook.centroids), axis=1)


def extract_bovw(image, codebook: Codebook, image_id: str = "") -> FeatureVector:
    """Visual-word histogram of an image, L1-normalized.

    All-zero descriptors (no gradient energy anywhere in the patch) carry no
    texture evidence and are excluded before quantization; an image with none
    left yields the all-zeros vector.
    """
    desc = dense_descriptors(image)
    nonzero = desc[np.linalg.norm(desc, axis=1) > 0]
    counts = np.zeros(codebook.k)
    if len(nonzero):
        words = quantize(nonzero, codebook)
        counts = np.bincount(words, minlength=codebook.k).astype(float)
        counts /= counts.sum()
    return FeatureVector(image_id=image_id, extractor_id=codebook.extractor_id, values=counts)


_CODEBOOK_MAGIC = b"FCBK"
_CODEBOOK_VERSION = 1


def save_codebook(codebook: Codebook, path) -> None:
    meta = json.dumps(
        {
            "extractor_id": codebook.extractor_id,
            "k": codebook.k,
            "descriptor_dim": codebook.descriptor_dim,
            "build_seed": codebook.build_seed,
        }
    ).encode("utf-8")
    raw = codebook.centroids.astype("<f8").tobytes()
    payload = len(meta).to_bytes(4, "little") + meta + raw
    write_container(path, _CODEBOOK_MAGIC, _CODEBOOK_VERSION, payload)


def load_codebook(path) -> Codebook:
    try:
        payload = read_container(path, _CODEBOOK_MAGIC, _CODEBOOK_VERSION)
        mlen = int.from_bytes(payload[:4], "little")
        meta = json.loads(payload[4 : 4 + mlen])
        cents = np.frombuffer(payload[4 + mlen :], dtype="<f8").reshape(
            meta["k"], meta["descriptor_dim"]
        )
    except (ContainerError, ValueError, KeyError) as exc:
        raise CorruptCodebookFile(str(exc)) from exc
    return Codebook(
        extractor_id=meta["extractor_id"],
        k=int(meta["k"]),
        centroids=cents.copy(),
        descriptor_dim=int(meta["descriptor_dim"]),
        build_seed=int(meta["build_seed"]),
    )


def import_embeddings(path) -> list[FeatureVector]:
    """Read externally computed embeddings from CSV.

    Line 1 must be exactly ``extractor_id,<id>``; each following row is
    ``image_id,v0,v1,...``. Every row must have the same dimension and all
    values must be finite.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeader(f"{path}: empty file") from None
        if len(header) != 2 or header[0] != "extractor_id" or not header[1]:
            raise MalformedHeader(f"{path}: first line must be 'extractor_id,<id>'")
        extractor_id = header[1]

        vectors: list[FeatureVector] = []
        dim: int | None = None
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise DimensionMismatch(f"{path}:{rownum}: row has no values")
            image_id = row[0]
            if dim is None:
                dim = len(row) - 1
            elif len(row) - 1 != dim:
                raise DimensionMismatch(
                    f"{path}:{rownum}: dimension {len(row) - 1} != {dim} of first row"
                )
            values = np.empty(dim)
            for col, cell in enumerate(row[1:]):
                try:
                    v = float(cell)
                except ValueError as exc:
                    raise NonFiniteValue(f"{path}:{rownum}: column {col}: {cell!r}") from exc
                if not math.isfinite(v):
                    raise NonFiniteValue(f"{path}:{rownum}: column {col}: {cell!r}")
                values[col] = v
            vectors.append(FeatureVector(image_id=image_id, extractor_id=extractor_id, values=values))
    return vectors


def write_features_csv(vectors: list[FeatureVector], path) -> None:
    """Write features in the embedding CSV format, rows sorted by image_id."""
    if not vectors:
        raise ValueError("no feature vectors to write")
    extractor_ids = {v.extractor_id for v in vectors}
    dims = {v.dim for v in vectors}
    if len(extractor_ids) != 1 or len(dims) != 1:
        raise ValueError("all vectors must share one extractor and dimension")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"extractor_id,{vectors[0].extractor_id}\n")
        for vec in sorted(vectors, key=lambda v: v.image_id):
            fh.write(vec.image_id + "," + ",".join(repr(float(x)) for x in vec.values) + "\n")


def load_features_map(path) -> dict[str, FeatureVector]:
    """Features CSV -> {image_id: FeatureVector}."""
    return {v.image_id: v for v in import_embeddings(path)}
