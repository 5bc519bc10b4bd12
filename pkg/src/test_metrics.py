"""
Tests for confusion matrices, per-class metrics, reports and class collapsing.
"""

import numpy as np
import numpy.testing as npt
import pytest
from sklearn.metrics import confusion_matrix as sk_confusion_matrix
from sklearn.metrics import precision_recall_fscore_support

from imagegen import GRADE_NAMES, set_point_to_grade_mapping
from metrics import (
    ClassCounts,
    ClassMetrics,
    ConfusionMatrix,
    MetricsReport,
    class_counts,
    class_metrics,
    collapse_classes,
    confusion_matrix,
    macro_report,
    read_confusion_csv,
    read_report_csv,
    write_confusion_csv,
    write_report_csv,
)
from utils import DomainError


def random_labels(rng, n_classes, n):
    return rng.integers(0, n_classes, n), rng.integers(0, n_classes, n)


def counting_oracle(t, p, c):
    """One-vs-rest counts by walking the samples."""
    tp = fp = fn = tn = 0
    for ti, pi in zip(t, p):
        if ti == c and pi == c:
            tp += 1
        elif pi == c:
            fp += 1
        elif ti == c:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


class TestConfusion:
    def test_perfect_predictions_are_diagonal(self):
        cm = confusion_matrix([0, 1, 2, 2], [0, 1, 2, 2], 3)
        npt.assert_array_equal(cm.counts, np.diag([1, 1, 2]))

    def test_rows_are_true_columns_predicted(self):
        cm = confusion_matrix([4] * 100, [4] * 81 + [3] * 19, 5)
        assert cm.counts[4, 4] == 81
        assert cm.counts[4, 3] == 19

    @pytest.mark.parametrize('n_classes', [2, 5, 21])
    def test_matches_sklearn(self, rng, n_classes):
        t, p = random_labels(rng, n_classes, 400)
        cm = confusion_matrix(t, p, n_classes)
        npt.assert_array_equal(cm.counts, sk_confusion_matrix(t, p, labels=range(n_classes)))
        assert cm.total == 400

    def test_errors(self):
        with pytest.raises(DomainError):
            confusion_matrix([0, 1], [0], 2)
        with pytest.raises(DomainError):
            confusion_matrix([0, 2], [0, 1], 2)
        with pytest.raises(DomainError):
            confusion_matrix([0, 1], [-1, 1], 2)

    def test_class_counts_hand_example(self):
        cm = ConfusionMatrix(np.array([[8, 2], [3, 7]]))
        assert class_counts(cm, 0) == ClassCounts(tp=8, fp=3, fn=2, tn=7)

    def test_counts_match_oracle(self, rng):
        for n_classes in (2, 5, 21):
            t, p = random_labels(rng, n_classes, 150)
            cm = confusion_matrix(t, p, n_classes)
            counts = [class_counts(cm, c) for c in range(n_classes)]
            for c, k in enumerate(counts):
                assert (k.tp, k.fp, k.fn, k.tn) == counting_oracle(t, p, c)
                assert k.total == cm.total
            assert sum(k.tp for k in counts) == np.trace(cm.counts)
            assert sum(k.tp + k.fn for k in counts) == cm.total

    def test_csv_round_trip(self, tmp_path, rng):
        t, p = random_labels(rng, 5, 60)
        cm = confusion_matrix(t, p, 5, list(GRADE_NAMES))
        path = write_confusion_csv(cm, tmp_path / 'cm.csv')
        assert path.read_text().splitlines()[0] == 'true,A,B,C,D,E'
        back = read_confusion_csv(path)
        npt.assert_array_equal(back.counts, cm.counts)
        assert back.class_names == list(GRADE_NAMES)


class TestClassMetrics:
    def test_worked_example(self):
        m = class_metrics(ClassCounts(tp=91, fp=0, fn=9, tn=400))
        assert m.sensitivity == pytest.approx(0.91)
        assert m.precision == 1.0
        assert m.specificity == 1.0

    def test_all_correct(self):
        m = class_metrics(ClassCounts(tp=10, fp=0, fn=0, tn=30))
        assert m.as_dict() == {name: 1.0 for name in m.as_dict()}
        assert not m.undefined

    def test_zero_denominator_flagged(self):
        m = class_metrics(ClassCounts(tp=0, fp=0, fn=0, tn=5))
        assert m.precision == 0.0 and m.sensitivity == 0.0 and m.f_score == 0.0
        assert m.undefined == {'precision', 'sensitivity', 'f_score'}
        assert m.specificity == 1.0

    def test_empty_counts_rejected(self):
        with pytest.raises(DomainError):
            class_metrics(ClassCounts(0, 0, 0, 0))

    def test_formulas_on_random_counts(self, rng):
        for tp, fp, fn, tn in rng.integers(0, 50, (10_000, 4)):
            if tp + fp + fn + tn == 0:
                continue
            m = class_metrics(ClassCounts(int(tp), int(fp), int(fn), int(tn)))
            total = tp + fp + fn + tn
            assert m.accuracy == pytest.approx((tp + tn) / total, abs=1e-12)
            if tp + fp and tp + fn:
                assert m.precision == pytest.approx(tp / (tp + fp), abs=1e-12)
                assert m.sensitivity == pytest.approx(tp / (tp + fn), abs=1e-12)
                if m.precision + m.sensitivity:
                    harmonic = 2 * m.precision * m.sensitivity / (m.precision + m.sensitivity)
                    assert m.f_score == pytest.approx(harmonic, abs=1e-12)
            values = np.array(list(m.as_dict().values()))
            assert ((0 <= values) & (values <= 1)).all()

    @pytest.mark.parametrize('n_classes', [2, 5, 21])
    def test_per_class_scores_match_sklearn(self, rng, n_classes):
        t, p = random_labels(rng, n_classes, 500)
        report = macro_report(confusion_matrix(t, p, n_classes))
        precision, recall, f1, _ = precision_recall_fscore_support(
            t, p, labels=range(n_classes), zero_division=0)
        npt.assert_allclose([m.precision for m in report.per_class], precision, atol=1e-12)
        npt.assert_allclose([m.sensitivity for m in report.per_class], recall, atol=1e-12)
        npt.assert_allclose([m.f_score for m in report.per_class], f1, atol=1e-12)


class TestReport:
    def test_macro_of_published_grade_values(self):
        accuracies = (0.96, 0.936, 0.92, 0.945, 0.94)
        specificities = (0.98, 0.96, 0.92, 0.975, 0.975)
        per_class = [ClassMetrics(precision=0.9, sensitivity=0.9, specificity=s, f_score=0.9, accuracy=a)
                     for a, s in zip(accuracies, specificities)]
        report = MetricsReport.from_class_metrics(per_class, list(GRADE_NAMES))
        assert report.macro['accuracy'] == pytest.approx(0.9402, abs=5e-4)
        assert report.macro['specificity'] == pytest.approx(0.962, abs=5e-4)

    def test_identity_matrix(self):
        report = macro_report(ConfusionMatrix(np.eye(5, dtype=int) * 4))
        assert all(v == 1.0 for v in report.macro.values())
        assert report.total_accuracy == 1.0

    def test_permutation_equivariance(self, rng):
        t, p = random_labels(rng, 5, 300)
        perm = rng.permutation(5)
        a = macro_report(confusion_matrix(t, p, 5))
        b = macro_report(confusion_matrix(perm[t], perm[p], 5))
        for c in range(5):
            assert a.per_class[c] == b.per_class[perm[c]]
        for name in a.macro:
            assert a.macro[name] == pytest.approx(b.macro[name], abs=1e-12)

    def test_weighted_averaging(self):
        cm = ConfusionMatrix(np.array([[9, 1], [0, 0]]))
        report = macro_report(cm, weighted=True)
        assert report.weighted
        assert report.macro['sensitivity'] == pytest.approx(0.9)
        assert any('sensitivity' in flag for flag in report.flags)

    def test_csv_round_trip(self, tmp_path, rng):
        t, p = random_labels(rng, 5, 100)
        report = macro_report(confusion_matrix(t, p, 5, list(GRADE_NAMES)))
        path = write_report_csv(report, tmp_path / 'metrics.csv')
        lines = path.read_text().splitlines()
        assert lines[0] == 'class,precision,sensitivity,specificity,f_score,accuracy'
        assert lines[-1].startswith('macro,')
        back = read_report_csv(path)
        assert back.class_names == list(GRADE_NAMES)
        assert back.macro['f_score'] == pytest.approx(report.macro['f_score'], abs=1e-6)


class TestCollapse:
    def test_identity_mapping(self, rng):
        t, p = random_labels(rng, 5, 80)
        cm = confusion_matrix(t, p, 5)
        npt.assert_array_equal(collapse_classes(cm, range(5)).counts, cm.counts)

    def test_blocks_are_summed(self):
        cm = ConfusionMatrix(np.arange(9).reshape(3, 3))
        merged = collapse_classes(cm, [0, 0, 1])
        npt.assert_array_equal(merged.counts, [[0 + 1 + 3 + 4, 2 + 5], [6 + 7, 8]])

    def test_unmapped_class(self):
        cm = ConfusionMatrix(np.eye(3, dtype=int))
        with pytest.raises(DomainError):
            collapse_classes(cm, [0, 1])

    def test_collapse_never_lowers_accuracy(self, rng):
        mapping = set_point_to_grade_mapping()
        for _ in range(1000):
            cm = ConfusionMatrix(rng.integers(0, 6, (21, 21)))
            merged = collapse_classes(cm, mapping, list(GRADE_NAMES))
            assert merged.total == cm.total
            assert merged.total_accuracy() >= cm.total_accuracy()
