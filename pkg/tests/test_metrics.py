import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tannin.metrics import AVERAGING, confusion, evaluate, format_table, report

labels = st.lists(st.integers(0, 9), min_size=1, max_size=60)


def test_three_sample_fixture():
    cm = confusion([5, 5, 6], [5, 6, 6])
    expected = np.zeros((10, 10), dtype=int)
    expected[5, 5] = expected[5, 6] = expected[6, 6] = 1
    np.testing.assert_array_equal(cm.counts, expected)
    r = report(cm)
    assert sorted(r.per_class) == [5, 6]
    assert (r.per_class[5].precision, r.per_class[5].recall) == (1.0, 0.5)
    assert (r.per_class[6].precision, r.per_class[6].recall) == (0.5, 1.0)
    assert r.per_class[5].f1 == r.per_class[6].f1 == 2 / 3
    assert r.accuracy == 2 / 3


def test_perfect_predictions():
    y = [3, 4, 5, 5, 6, 8]
    cm = confusion(y, y)
    assert np.count_nonzero(cm.counts - np.diag(np.diag(cm.counts))) == 0
    r = report(cm)
    assert r.macro_precision == r.macro_recall == r.macro_f1 == r.accuracy == 1.0


def test_all_wrong():
    r = evaluate([3, 4, 5], [4, 5, 3])
    assert r.accuracy == 0.0
    assert r.macro_f1 == 0.0


def test_class_never_predicted_has_zero_precision():
    r = evaluate([5, 5, 6], [5, 5, 5])
    assert r.per_class[6].precision == 0.0
    assert r.per_class[6].f1 == 0.0


def test_predicted_only_classes_excluded_from_macro():
    # class 7 is predicted but has no support; it does not enter the averages
    r = evaluate([5, 5], [5, 7])
    assert list(r.per_class) == [5]
    assert r.macro_precision == 1.0
    assert r.macro_recall == 0.5


@pytest.mark.parametrize(
    "y_true, y_pred, match",
    [([], [], "empty"), ([1, 2], [1], "length"), ([10], [1], "outside"), ([1], [-1], "outside")],
)
def test_confusion_errors(y_true, y_pred, match):
    with pytest.raises(ValueError, match=match):
        confusion(y_true, y_pred)


def test_empty_matrix_report_rejected():
    cm = confusion([1], [1])
    with pytest.raises(ValueError, match="empty"):
        report(type(cm)(np.zeros((10, 10), dtype=np.int64)))


def test_macro_f1_is_mean_of_class_f1_on_random_vectors():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        n = rng.integers(1, 200)
        yt, yp = rng.integers(0, 10, n), rng.integers(0, 10, n)
        r = evaluate(yt, yp)
        mean = np.mean([m.f1 for m in r.per_class.values()])
        worst = max(worst, abs(r.macro_f1 - mean))
    assert worst <= 4 * np.finfo(float).eps


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_report_properties(data):
    yt = data.draw(labels)
    yp = data.draw(st.lists(st.integers(0, 9), min_size=len(yt), max_size=len(yt)))
    cm = confusion(yt, yp)
    r = report(cm)
    assert cm.total == len(yt)
    assert r.accuracy == np.trace(cm.counts) / cm.counts.sum()
    for m in r.per_class.values():
        for v in (m.precision, m.recall, m.f1):
            assert 0.0 <= v <= 1.0
        if m.precision + m.recall > 0:
            assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall), rel=1e-15)
    for v in (r.macro_precision, r.macro_recall, r.macro_f1, r.accuracy):
        assert 0.0 <= v <= 1.0


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_invariant_under_relabeling(data):
    yt = np.array(data.draw(labels))
    yp = np.array(data.draw(st.lists(st.integers(0, 9), min_size=len(yt), max_size=len(yt))))
    perm = np.array(data.draw(st.permutations(range(10))))
    a, b = evaluate(yt, yp), evaluate(perm[yt], perm[yp])
    assert a.accuracy == b.accuracy
    for c, m in a.per_class.items():
        assert b.per_class[int(perm[c])] == m
    for attr in ("macro_precision", "macro_recall", "macro_f1"):
        assert getattr(a, attr) == pytest.approx(getattr(b, attr), abs=1e-15)


def test_to_dict_is_json_and_records_averaging():
    d = evaluate([5, 5, 6], [5, 6, 6]).to_dict()
    again = json.loads(json.dumps(d))
    assert again["averaging"] == AVERAGING
    assert set(again["per_class"]) == {"5", "6"}
    assert again["accuracy"] == 2 / 3


def test_format_table_layout():
    rows = [("kNN", evaluate([5, 5, 6], [5, 6, 6])), ("RF", {"precision": 1, "accuracy": 1, "recall": 1, "f1": 1})]
    text = format_table(rows)
    lines = text.splitlines()
    assert lines[0].split() == ["Model", "Precision", "Accuracy", "Recall", "F1-Score"]
    assert set(lines[1]) == {"-"}
    assert lines[2].split() == ["kNN", "0.750", "0.667", "0.750", "0.667"]
    assert lines[3].split() == ["RF", "1.000", "1.000", "1.000", "1.000"]
    assert len({len(l) for l in lines}) == 1


def test_format_table_extra_columns():
    row = {"precision": 0.5, "accuracy": 0.5, "recall": 0.5, "f1": 0.5, "gap": 0.1234, "note": "n/a"}
    text = format_table([("DNN", row)], extra_columns=[("Gap", "gap"), ("Note", "note")])
    assert text.splitlines()[2].split()[-2:] == ["0.123", "n/a"]
