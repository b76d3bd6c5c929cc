"""Measures against brute-force oracles and the published table fixtures."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streetrate import metrics
from streetrate.metrics import ConfusionCounts, confusion, mse, prf1, spearman
from streetrate.rng import SplitMix64

# ---------------------------------------------------------------- oracles


def brute_confusion(y_true, y_pred):
    """Tabulate the four cells pair by pair."""
    cells = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for t, p in zip(y_true, y_pred):
        key = {(1, 1): "tp", (0, 1): "fp", (1, 0): "fn", (0, 0): "tn"}[(t, p)]
        cells[key] += 1
    return cells


def brute_prf1(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fn + fp) if 2 * tp + fn + fp else 0.0
    return precision, recall, f1


def brute_mse(y, t):
    total = 0.0
    for a, b in zip(y, t):
        total += (a - b) * (a - b)
    return total / len(y)


def brute_spearman(a, b):
    """Explicit average-rank assignment, then textbook Pearson."""

    def ranks(v):
        out = []
        for x in v:
            less = sum(1 for o in v if o < x)
            equal = sum(1 for o in v if o == x)
            out.append(less + (equal + 1) / 2.0)
        return out

    ra, rb = ranks(a), ranks(b)
    n = len(a)
    ma, mb = sum(ra) / n, sum(rb) / n
    num = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    den = math.sqrt(sum((x - ma) ** 2 for x in ra) * sum((y - mb) ** 2 for y in rb))
    return num / den


# ------------------------------------------------------------- confusion


def test_confusion_perfect():
    c = confusion([1, 1, 0], [1, 1, 0])
    assert (c.tp, c.tn, c.fp, c.fn) == (2, 1, 0, 0)
    assert c.p == 2


def test_confusion_hand_tabulated():
    # oracle: pairs (1,1)=tp, (1,0)=fn, (0,1)=fp, (0,0)=tn
    c = confusion([1, 1, 0, 0], [1, 0, 1, 0])
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)


def test_confusion_all_negative():
    c = confusion([0, 0, 0], [0, 0, 0])
    assert (c.tp, c.fp, c.fn) == (0, 0, 0)
    assert c.tn == 3


def test_confusion_errors():
    with pytest.raises(metrics.LengthMismatch):
        confusion([1], [1, 0])
    with pytest.raises(metrics.EmptyInput):
        confusion([], [])


def test_confusion_identity_p_equals_tp_plus_fn():
    gen = SplitMix64(1)
    for _ in range(100):
        n = 1 + gen.next_below(20)
        y_true = [gen.next_below(2) for _ in range(n)]
        y_pred = [gen.next_below(2) for _ in range(n)]
        c = confusion(y_true, y_pred)
        assert c.p == sum(y_true)
        assert c.total == n


# ------------------------------------------------------------------ prf1

# Published qualification-model rows: (precision %, recall %, printed F1 %).
TABLE_ROWS = [
    ("sift-hist", 45.06, 71.28, 55.22),
    ("alexnet", 48.23, 85.94, 61.78),
    ("googlenet", 48.13, 86.31, 61.79),
]

# Published continuity-model rows, same layout.
CONTINUITY_ROWS = [
    ("train", 41.57, 76.18, 53.79),
    ("dev", 46.00, 69.00, 55.20),
    ("test", 48.00, 72.00, 57.60),
]


@pytest.mark.parametrize("name,precision,recall,printed_f1", TABLE_ROWS + CONTINUITY_ROWS)
def test_prf1_reproduces_printed_f1(name, precision, recall, printed_f1):
    f1 = 2 * precision * recall / (precision + recall)
    assert f1 == pytest.approx(printed_f1, abs=0.02)


def test_prf1_zero_conventions():
    assert prf1(ConfusionCounts(0, 0, 0, 5)) == (0.0, 0.0, 0.0)


def test_prf1_against_oracle_random_counts():
    gen = SplitMix64(17)
    for _ in range(1000):
        tp, fp, fn, tn = (gen.next_below(20) for _ in range(4))
        got = prf1(ConfusionCounts(tp, fp, fn, tn))
        want = brute_prf1(tp, fp, fn)
        for g, w in zip(got, want):
            assert abs(g - w) <= 1e-12


@given(st.integers(1, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
def test_prf1_two_f1_forms_agree(tp, fp, fn):
    # 2TP/(2TP+FN+FP) == 2PR/(P+R) whenever the denominators are nonzero
    p, r, f1 = prf1(ConfusionCounts(tp, fp, fn, 0))
    assert f1 == pytest.approx(2 * tp / (2 * tp + fn + fp), abs=1e-12)
    assert f1 == pytest.approx(2 * p * r / (p + r), abs=1e-12)


# -------------------------------------------------------------- accuracy


def test_accuracy_basic():
    assert metrics.accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert metrics.accuracy([0, 1], [1, 0]) == 0.0
    assert metrics.accuracy([1, 2, 3, 4], [1, 2, 3, 1]) == 0.75


# ------------------------------------------------------------------- mse


def test_mse_identity_and_hand_value():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    # oracle: ((4-3)^2 + (3-3)^2) / 2
    assert mse([4, 3], [3, 3]) == 0.5


def test_mse_translation_invariant():
    y, t = [1.0, 2.5, 3.0], [2.0, 2.0, 4.0]
    assert mse(y, t) == pytest.approx(mse([v + 17.5 for v in y], [v + 17.5 for v in t]), abs=1e-12)


def test_mse_against_oracle():
    gen = SplitMix64(23)
    for _ in range(1000):
        n = 1 + gen.next_below(20)
        y = [gen.next_float() * 8 for _ in range(n)]
        t = [gen.next_float() * 8 for _ in range(n)]
        assert abs(mse(y, t) - brute_mse(y, t)) <= 1e-12


# -------------------------------------------------------------- spearman


def test_spearman_identity_and_reversal():
    a = [3.0, 1.0, 4.0, 1.5, 5.0]
    assert spearman(a, a) == pytest.approx(1.0, abs=1e-12)
    assert spearman(a, [-x for x in a]) == pytest.approx(-1.0, abs=1e-12)


def test_spearman_no_ties_formula():
    # oracle: 1 - 6*(0+1+1+0)/(4*15) = 0.8
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_spearman_symmetry():
    a = [1.0, 5.0, 2.0, 4.0]
    b = [2.0, 2.0, 7.0, 1.0]
    assert spearman(a, b) == pytest.approx(spearman(b, a), abs=1e-12)


def test_spearman_ties_against_bruteforce():
    gen = SplitMix64(31)
    checked = 0
    while checked < 1000:
        n = 3 + gen.next_below(18)
        a = [float(gen.next_below(6)) for _ in range(n)]  # heavy ties
        b = [float(gen.next_below(6)) for _ in range(n)]
        if len(set(a)) < 2 or len(set(b)) < 2:
            continue
        assert abs(spearman(a, b) - brute_spearman(a, b)) <= 1e-12
        checked += 1


@settings(max_examples=200)
@given(
    st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=20),
    st.sampled_from([lambda x: 3 * x + 1, lambda x: x**3, lambda x: math.atan(x)]),
)
def test_spearman_invariant_under_monotone_transform(a, f):
    fa = [f(x) for x in a]
    # the transform must stay injective in float arithmetic for ranks to match
    if len(set(a)) < 2 or sorted(set(map(f, set(a)))) != list(map(f, sorted(set(a)))) or len(set(fa)) != len(set(a)):
        return
    gen = SplitMix64(int(sum(abs(x) for x in a) * 1000) & (2**32 - 1))
    b = [gen.next_float() for _ in range(len(a))]
    if len(set(b)) < 2:
        return
    base = spearman(a, b)
    assert spearman(fa, b) == pytest.approx(base, abs=1e-9)


def test_spearman_errors():
    with pytest.raises(metrics.TooFewPoints):
        spearman([1, 2], [2, 1])
    with pytest.raises(metrics.ConstantInput):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(metrics.LengthMismatch):
        spearman([1, 2, 3], [1, 2])


# ------------------------------------------------------------ multiclass


def test_multiclass_prf1_per_class_and_macro():
    y_true = [1, 2, 3, 4, 1, 2]
    y_pred = [1, 2, 3, 1, 1, 3]
    per_class, macro = metrics.multiclass_prf1(y_true, y_pred)
    assert set(per_class) == {1, 2, 3, 4}
    # class 1: tp=2 (both 1s right), fp=1 (the 4 predicted 1), fn=0
    assert per_class[1] == pytest.approx(brute_prf1(2, 1, 0))
    assert macro[0] == pytest.approx(sum(v[0] for v in per_class.values()) / 4)


def test_report_csv_shapes():
    rep = metrics.classification_report([1, 0, 1, 1], [1, 0, 0, 1])
    text = metrics.classification_csv({"demo": rep})
    lines = text.strip().splitlines()
    assert lines[0] == "variant,accuracy,precision,recall,f1"
    assert lines[1].startswith("demo,75.00,")
    mse_text = metrics.mse_csv({"demo": (0.358, 0.841, 0.835)})
    assert mse_text.strip().splitlines()[1] == "demo,0.358,0.841,0.835"


def test_quality_report_f1_internconsistency():
    rep = metrics.classification_report([1, 0, 1, 1, 0], [1, 0, 0, 1, 1])
    if rep.precision + rep.recall > 0:
        expect = 2 * rep.precision * rep.recall / (rep.precision + rep.recall)
        assert rep.f1 == pytest.approx(expect, abs=1e-12)
