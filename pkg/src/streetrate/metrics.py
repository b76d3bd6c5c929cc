"""Evaluation measures: confusion counts, precision/recall/F1, MSE, accuracy,
and Spearman rank correlation with average-rank tie handling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence


class LengthMismatch(ValueError):
    """Paired inputs have different lengths."""


class EmptyInput(ValueError):
    """A measure was asked of zero pairs."""


class TooFewPoints(ValueError):
    """Rank correlation needs at least 3 points."""


class ConstantInput(ValueError):
    """Rank correlation is undefined for a constant vector."""


def _check_pairs(y_true: Sequence, y_pred: Sequence) -> None:
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} vs {len(y_pred)}")
    if len(y_true) == 0:
        raise EmptyInput("no pairs to evaluate")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def p(self) -> int:
        """Number of labelled positives."""
        return self.tp + self.fn

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionCounts:
    """Binary confusion counts; labels must be 0/1 with 1 the positive class."""
    _check_pairs(y_true, y_pred)
    tp = fp = fn = tn = 0
    for t, p in zip(y_true, y_pred):
        if t not in (0, 1) or p not in (0, 1):
            raise ValueError(f"binary labels must be 0 or 1, got ({t}, {p})")
        if t == 1 and p == 1:
            tp += 1
        elif t == 0 and p == 1:
            fp += 1
        elif t == 1 and p == 0:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def prf1(c: ConfusionCounts) -> tuple[float, float, float]:
    """Precision, recall and F1 with the zero-denominator conventions:
    precision = 0 when tp+fp = 0, recall = 0 when p = 0, f1 = 0 when both are 0."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp > 0 else 0.0
    recall = c.tp / c.p if c.p > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def accuracy(y_true: Sequence, y_pred: Sequence) -> float:
    """Share of exact matches."""
    _check_pairs(y_true, y_pred)
    return sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true)


def mse(y: Sequence[float], t: Sequence[float]) -> float:
    """Mean squared error between machine ratings y and reference ratings t."""
    _check_pairs(y, t)
    return sum((float(a) - float(b)) ** 2 for a, b in zip(y, t)) / len(y)


def _average_ranks(values: Sequence[float]) -> list[float]:
    """1-based fractional ranks; tied values share the mean of their positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman's r: the Pearson correlation of average-fractional ranks.

    Equals 1 - 6*sum(d^2)/(n*(n^2-1)) when there are no ties.
    """
    _check_pairs(a, b)
    if len(a) < 3:
        raise TooFewPoints(f"need >= 3 points, got {len(a)}")
    for name, v in (("a", a), ("b", b)):
        if all(x == v[0] for x in v):
            raise ConstantInput(f"input {name} is constant")
    ra = _average_ranks(a)
    rb = _average_ranks(b)
    n = len(a)
    ma = sum(ra) / n
    mb = sum(rb) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    va = sum((x - ma) ** 2 for x in ra)
    vb = sum((y - mb) ** 2 for y in rb)
    return cov / math.sqrt(va * vb)


def multiclass_prf1(
    y_true: Sequence[int], y_pred: Sequence[int], classes: Sequence[int] | None = None
) -> tuple[dict[int, tuple[float, float, float]], tuple[float, float, float]]:
    """One-vs-rest precision/recall/F1 per class plus the macro average.

    The positive class of each row is the class itself; reports should say so.
    """
    _check_pairs(y_true, y_pred)
    if classes is None:
        classes = sorted(set(y_true) | set(y_pred))
    per_class = {}
    for c in classes:
        counts = confusion([1 if t == c else 0 for t in y_true], [1 if p == c else 0 for p in y_pred])
        per_class[c] = prf1(counts)
    k = len(per_class)
    macro = tuple(sum(v[i] for v in per_class.values()) / k for i in range(3))
    return per_class, macro


@dataclass(frozen=True)
class MetricsReport:
    """One evaluation row; rates are fractions in [0, 1], mse only for quality."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    n: int
    mse: float | None = None


def classification_report(y_true: Sequence[int], y_pred: Sequence[int]) -> MetricsReport:
    """Binary report with class 1 positive."""
    c = confusion(y_true, y_pred)
    p, r, f = prf1(c)
    return MetricsReport(accuracy(y_true, y_pred), p, r, f, len(y_true))


def quality_report(y_true: Sequence[int], y_pred: Sequence[int]) -> MetricsReport:
    """Multiclass report: accuracy, macro P/R/F1, and MSE on the integer ratings."""
    _, macro = multiclass_prf1(y_true, y_pred)
    return MetricsReport(accuracy(y_true, y_pred), *macro, len(y_true), mse(y_pred, y_true))


@dataclass(frozen=True)
class ValidationReport:
    """Machine-vs-survey agreement for one visual feature."""

    feature: str  # "quality" or "continuity"
    spearman_r: float
    n_segments: int


def classification_csv(rows: Mapping[str, MetricsReport]) -> str:
    """CSV table: rows = model variants, percentage columns to 2 decimals."""
    lines = ["variant,accuracy,precision,recall,f1"]
    for name, rep in rows.items():
        lines.append(
            f"{name},{rep.accuracy * 100:.2f},{rep.precision * 100:.2f},"
            f"{rep.recall * 100:.2f},{rep.f1 * 100:.2f}"
        )
    return "\n".join(lines) + "\n"


def mse_csv(rows: Mapping[str, tuple[float, float, float]]) -> str:
    """CSV table: rows = model variants, columns = train/dev/test MSE."""
    lines = ["variant,train,dev,test"]
    for name, (tr, dv, te) in rows.items():
        lines.append(f"{name},{tr:.6g},{dv:.6g},{te:.6g}")
    return "\n".join(lines) + "\n"
