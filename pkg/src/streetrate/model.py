"""Linear SVM training and inference.

Binary classifiers are trained in the primal with stochastic subgradient
descent on the regularized hinge objective

    J(w, b) = lam/2 * ||w||^2 + mean_i max(0, 1 - y_i (w.x_i + b))

with step size 1/(lam * t) and one seeded shuffle per epoch (Pegasos-style;
the bias is not regularized). The 4-class quality rater is a one-vs-rest
stack of such classifiers sharing one input normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._container import ContainerError, read_container, write_container
from .features import FeatureVector
from .rng import SplitMix64

NORMALIZE_MODES = ("none", "l2", "standardize")


class SingleClassInput(ValueError):
    """Training needs at least two classes present."""


class DimensionMismatch(ValueError):
    """Feature dimensions disagree."""


class NonFiniteFeature(ValueError):
    """NaN or infinity in the training matrix."""


class CorruptModelFile(ContainerError):
    """Model file failed magic/version/checksum validation."""


@dataclass(frozen=True)
class Hyperparams:
    lam: float = 1e-4
    epochs: int = 30
    seed: int = 0
    normalize: str = "l2"

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.normalize not in NORMALIZE_MODES:
            raise ValueError(f"normalize must be one of {NORMALIZE_MODES}")


@dataclass
class SvmModel:
    """Trained linear classifier.

    Binary tasks store a single weight vector and classes == (1,); prediction
    is 1 when the decision value is >= 0. Multiclass models store one row per
    class in ascending class order and predict by argmax.
    ``objective_curve`` is a training diagnostic (per-epoch regularized
    objective at the averaged iterate) and is not serialized.
    """

    task: str
    extractor_id: str
    classes: tuple[int, ...]
    weights: np.ndarray  # (n_classes, d)
    bias: np.ndarray  # (n_classes,)
    hyper: Hyperparams
    norm_stats: tuple[np.ndarray, np.ndarray] | None = None  # (mean, std)
    objective_curve: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2 or w.shape[0] != len(self.classes) or b.shape != (len(self.classes),):
            raise DimensionMismatch(
                f"weights {w.shape} / bias {b.shape} inconsistent with {len(self.classes)} classes"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NonFiniteFeature("non-finite model parameters")
        self.weights = w
        self.bias = b

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def is_binary(self) -> bool:
        return len(self.classes) == 1


def _as_matrix(X, extractor_id: str | None = None) -> tuple[np.ndarray, str]:
    """Accept a list of FeatureVector or an (n, d) array."""
    if len(X) and isinstance(X[0], FeatureVector):
        ids = {v.extractor_id for v in X}
        if len(ids) != 1:
            raise ValueError(f"mixed extractors in one training set: {sorted(ids)}")
        dims = {v.dim for v in X}
        if len(dims) != 1:
            raise DimensionMismatch(f"mixed feature dimensions: {sorted(dims)}")
        return np.stack([v.values for v in X]), ids.pop()
    mat = np.asarray(X, dtype=float)
    if mat.ndim != 2:
        raise DimensionMismatch(f"feature matrix must be 2-D, got shape {mat.shape}")
    return mat, extractor_id or ""


def _fit_norm(X: np.ndarray, mode: str) -> tuple[np.ndarray, np.ndarray] | None:
    if mode != "standardize":
        return None
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def _apply_norm(X: np.ndarray, mode: str, stats) -> np.ndarray:
    if mode == "none":
        return X
    if mode == "l2":
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        return np.divide(X, norms, out=X.copy(), where=norms > 0)
    mean, std = stats
    return (X - mean) / std


def hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Full-batch regularized hinge objective; y in {-1, +1}."""
    margins = y * (X @ w + b)
    return float(lam / 2 * (w @ w) + np.maximum(0.0, 1.0 - margins).mean())


def hinge_subgradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Subgradient of hinge_objective, using the margin < 1 convention at the kink."""
    margins = y * (X @ w + b)
    active = margins < 1.0
    gw = lam * w - (y[active, None] * X[active]).sum(axis=0) / len(y)
    gb = -float(y[active].sum()) / len(y)
    return gw, gb


def _pegasos(
    X: np.ndarray, y: np.ndarray, lam: float, epochs: int, gen: SplitMix64
) -> tuple[np.ndarray, float, list[float]]:
    # Weights step by 1/(lam*t), the schedule matched to the lam-strong
    # convexity of the regularizer. The bias is unregularized, so that
    # magnitude is unjustified for it and diverges on small lam; it takes
    # the lam-scaled step 1/t instead.
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    w_sum = np.zeros(d)
    b_sum = 0.0
    curve: list[float] = []
    order = list(range(n))
    t = 0
    for _ in range(epochs):
        gen.shuffle(order)
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (X[i] @ w + b)
            w *= 1.0 - eta * lam  # == 1 - 1/t
            if margin < 1.0:
                w += eta * y[i] * X[i]
                b += y[i] / t
            w_sum += w
            b_sum += b
        curve.append(hinge_objective(w_sum / t, b_sum / t, X, y, lam))
    return w, b, curve


def _validate_training(X: np.ndarray, y: np.ndarray) -> None:
    if len(X) != len(y):
        raise ValueError(f"{len(X)} feature rows vs {len(y)} labels")
    if len(X) < 2:
        raise ValueError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("non-finite value in training features")
    if len(set(int(v) for v in y)) < 2:
        raise SingleClassInput("training labels contain a single class")


def train_binary(
    X, y: Sequence[int], hyper: Hyperparams, task: str = "qualification", extractor_id: str = ""
) -> SvmModel:
    """Train the positive-vs-negative classifier for a 0/1 task."""
    mat, ext = _as_matrix(X, extractor_id)
    labels = np.asarray([int(v) for v in y])
    if not set(labels.tolist()) <= {0, 1}:
        raise ValueError("binary labels must be 0 or 1")
    _validate_training(mat, labels)
    stats = _fit_norm(mat, hyper.normalize)
    xn = _apply_norm(mat, hyper.normalize, stats)
    y_pm = np.where(labels == 1, 1.0, -1.0)
    w, b, curve = _pegasos(xn, y_pm, hyper.lam, hyper.epochs, SplitMix64(hyper.seed))
    return SvmModel(
        task=task,
        extractor_id=ext,
        classes=(1,),
        weights=w[None, :],
        bias=np.array([b]),
        hyper=hyper,
        norm_stats=stats,
        objective_curve=curve,
    )


def train_ovr(
    X, y: Sequence[int], hyper: Hyperparams, task: str = "quality", extractor_id: str = ""
) -> SvmModel:
    """One-vs-rest stack over the distinct classes present, ascending.

    All per-class classifiers share one normalization fitted on the full
    training set and draw their shuffles from one seeded stream.
    """
    mat, ext = _as_matrix(X, extractor_id)
    labels = np.asarray([int(v) for v in y])
    _validate_training(mat, labels)
    classes = tuple(sorted(set(labels.tolist())))
    stats = _fit_norm(mat, hyper.normalize)
    xn = _apply_norm(mat, hyper.normalize, stats)
    gen = SplitMix64(hyper.seed)
    weights = np.empty((len(classes), mat.shape[1]))
    bias = np.empty(len(classes))
    curves = []
    for row, cls in enumerate(classes):
        y_pm = np.where(labels == cls, 1.0, -1.0)
        w, b, curve = _pegasos(xn, y_pm, hyper.lam, hyper.epochs, gen)
        weights[row] = w
        bias[row] = b
        curves.append(curve)
    return SvmModel(
        task=task,
        extractor_id=ext,
        classes=classes,
        weights=weights,
        bias=bias,
        hyper=hyper,
        norm_stats=stats,
        objective_curve=curves,
    )


def _normalize_input(model: SvmModel, x: np.ndarray) -> np.ndarray:
    mode = model.hyper.normalize
    if mode == "none":
        return x
    if mode == "l2":
        norm = np.linalg.norm(x)
        return x / norm if norm > 0 else x
    mean, std = model.norm_stats
    return (x - mean) / std


def decision_values(model: SvmModel, x) -> np.ndarray:
    """Per-class decision values w_c . x~ + b_c under the stored normalization."""
    vec = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=float)
    if vec.shape != (model.dim,):
        raise DimensionMismatch(f"input shape {vec.shape} != ({model.dim},)")
    xn = _normalize_input(model, vec)
    return model.weights @ xn + model.bias


def predict(model: SvmModel, x) -> int:
    """Predicted class: sign rule for binary models, argmax otherwise.

    Ties go to the lowest class in order; a binary decision value of exactly
    zero counts as positive.
    """
    vals = decision_values(model, x)
    if model.is_binary:
        return 1 if vals[0] >= 0.0 else 0
    return int(model.classes[int(np.argmax(vals))])


def decision_matrix(model: SvmModel, X) -> np.ndarray:
    """(n, n_classes) decision values for a batch."""
    mat, _ = _as_matrix(X, model.extractor_id)
    if mat.shape[1] != model.dim:
        raise DimensionMismatch(f"input dim {mat.shape[1]} != {model.dim}")
    xn = _apply_norm(mat, model.hyper.normalize, model.norm_stats)
    return xn @ model.weights.T + model.bias


def predict_batch(model: SvmModel, X) -> np.ndarray:
    vals = decision_matrix(model, X)
    if model.is_binary:
        return (vals[:, 0] >= 0.0).astype(int)
    return np.asarray(model.classes)[np.argmax(vals, axis=1)]


_MODEL_MAGIC = b"FSVM"
_MODEL_VERSION = 1


def save_model(model: SvmModel, path) -> None:
    doc = {
        "task": model.task,
        "extractor_id": model.extractor_id,
        "classes": list(model.classes),
        "weights": [[float(v) for v in row] for row in model.weights],
        "bias": [float(v) for v in model.bias],
        "hyper": {
            "lam": model.hyper.lam,
            "epochs": model.hyper.epochs,
            "seed": model.hyper.seed,
            "normalize": model.hyper.normalize,
        },
        "norm_stats": None
        if model.norm_stats is None
        else {
            "mean": [float(v) for v in model.norm_stats[0]],
            "std": [float(v) for v in model.norm_stats[1]],
        },
    }
    write_container(path, _MODEL_MAGIC, _MODEL_VERSION, json.dumps(doc).encode("utf-8"))


def load_model(path) -> SvmModel:
    try:
        doc = json.loads(read_container(path, _MODEL_MAGIC, _MODEL_VERSION))
        hyper = Hyperparams(**doc["hyper"])
        stats = doc["norm_stats"]
        norm_stats = None if stats is None else (np.array(stats["mean"]), np.array(stats["std"]))
        return SvmModel(
            task=doc["task"],
            extractor_id=doc["extractor_id"],
            classes=tuple(int(c) for c in doc["classes"]),
            weights=np.array(doc["weights"], dtype=float),
            bias=np.array(doc["bias"], dtype=float),
            hyper=hyper,
            norm_stats=norm_stats,
        )
    except (ContainerError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CorruptModelFile(str(exc)) from exc
