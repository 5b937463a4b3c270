"""Confusion counting and metric aggregation."""

import numpy as np
import pytest

from dialectid.errors import ConfigurationError, DimensionError
from dialectid.evaluation import Report, confusion, evaluate, metrics, metrics_line
from dialectid.train import Manifest, Utterance


class TestConfusion:
    def test_perfect_predictions_diagonal(self):
        cm = confusion([0, 1, 2, 1], [0, 1, 2, 1], 3)
        np.testing.assert_array_equal(cm, np.diag([1, 2, 1]))

    def test_hand_tally(self):
        cm = confusion(preds=[0, 1, 1], refs=[0, 0, 1], n_classes=2)
        np.testing.assert_array_equal(cm, [[1, 1], [0, 1]])

    def test_empty_inputs_zero_matrix(self):
        cm = confusion([], [], 3)
        np.testing.assert_array_equal(cm, np.zeros((3, 3)))

    def test_order_independent(self):
        preds = [0, 1, 2, 0, 1]
        refs = [0, 2, 2, 1, 1]
        a = confusion(preds, refs, 3)
        b = confusion(preds[::-1], refs[::-1], 3)
        np.testing.assert_array_equal(a, b)

    def test_total_is_count(self):
        cm = confusion([0, 1, 1, 2], [2, 1, 0, 0], 3)
        assert cm.sum() == 4

    def test_out_of_range_label(self):
        with pytest.raises(ConfigurationError):
            confusion([0, 3], [0, 1], 3)
        with pytest.raises(ConfigurationError):
            confusion([0, 1], [-1, 1], 3)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            confusion([0, 1], [0], 2)


class TestMetrics:
    def test_hand_computation(self):
        acc, prec, rec = metrics(np.array([[2, 1], [0, 3]]))
        assert acc == pytest.approx(5 / 6)
        assert prec == pytest.approx((1.0 + 0.75) / 2)
        assert rec == pytest.approx((2 / 3 + 1.0) / 2)
        assert metrics_line(acc, prec, rec) == "83.3\t87.5\t83.3"

    def test_diagonal_is_perfect(self):
        acc, prec, rec = metrics(np.diag([5, 2, 9]))
        assert (acc, prec, rec) == (1.0, 1.0, 1.0)
        assert metrics_line(acc, prec, rec) == "100.0\t100.0\t100.0"

    def test_zero_denominator_contributes_zero(self):
        # class 1 never predicted and never referenced
        cm = np.array([[3, 0], [0, 0]])
        acc, prec, rec = metrics(cm)
        assert acc == 1.0
        assert prec == pytest.approx(0.5)
        assert rec == pytest.approx(0.5)

    def test_empty_matrix_rejected(self):
        with pytest.raises(ConfigurationError):
            metrics(np.zeros((3, 3)))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            metrics(np.zeros((2, 3)))

    def test_permutation_invariance(self, rng):
        cm = rng.integers(0, 10, size=(4, 4))
        cm[0, 0] += 1  # ensure nonzero total
        base = metrics(cm)
        perm = rng.permutation(4)
        permuted = metrics(cm[np.ix_(perm, perm)])
        assert base == pytest.approx(permuted)

    def test_uniform_random_predictions_near_chance(self):
        # balanced references, uniform predictions: accuracy ~ Binomial(n, 1/K)/n
        rng = np.random.default_rng(0)
        k, n = 4, 4000
        refs = np.repeat(np.arange(k), n // k)
        preds = rng.integers(0, k, size=n)
        acc, _, _ = metrics(confusion(preds, refs, k))
        sigma = np.sqrt((1 / k) * (1 - 1 / k) / n)
        assert abs(acc - 1 / k) <= 3 * sigma

    def test_accuracy_equals_micro_recall_when_balanced(self, rng):
        refs = np.repeat(np.arange(3), 30)
        preds = rng.integers(0, 3, size=90)
        cm = confusion(preds, refs, 3)
        acc, _, _ = metrics(cm)
        micro_recall = np.diag(cm).sum() / cm.sum()
        assert abs(acc - micro_recall) < 1e-12


class TestEvaluate:
    def _manifest(self):
        utts = [
            Utterance("a", "/p/a", "x", 1.0),
            Utterance("b", "/p/b", "y", 1.0),
            Utterance("c", "/p/c", "x", 1.0),
        ]
        return Manifest(utts)

    def test_singleton_perfect(self):
        man = Manifest([Utterance("a", "/p/a", "x", 1.0), Utterance("b", "/p/b", "y", 1.0)])
        report = evaluate(man, lambda utt_id: (man.label_index(dict(a="x", b="y")[utt_id]), np.array([0.5, 0.5])))
        assert (report.accuracy, report.precision, report.recall) == (1.0, 1.0, 1.0)

    def test_deterministic(self):
        man = self._manifest()

        def classifier(utt_id):
            return (0, np.array([0.7, 0.3]))

        a = evaluate(man, classifier)
        b = evaluate(man, classifier)
        np.testing.assert_array_equal(a.confusion, b.confusion)
        assert a.score_lines() == b.score_lines()

    def test_report_consistent_with_recomputation(self):
        man = self._manifest()
        fixed = {"a": 0, "b": 0, "c": 1}
        report = evaluate(man, lambda u: (fixed[u], np.array([0.6, 0.4])))
        preds = [fixed[u.utt_id] for u in man]
        refs = [man.label_index(u.label) for u in man]
        cm = confusion(preds, refs, man.n_classes)
        np.testing.assert_array_equal(report.confusion, cm)
        assert (report.accuracy, report.precision, report.recall) == pytest.approx(metrics(cm))

    def test_score_lines_format(self):
        man = self._manifest()
        report = evaluate(man, lambda u: (1, np.array([0.25, 0.75])))
        for line, u in zip(report.score_lines(), man):
            cols = line.split("\t")
            assert cols[0] == u.utt_id
            assert len(cols) == 2 + man.n_classes
            assert cols[-1] == "y"  # decision rendered as label
            assert float(cols[1]) == pytest.approx(0.25)

    def test_text_block_contains_matrix_and_line(self):
        man = self._manifest()
        report = evaluate(man, lambda u: (man.label_index({"a": "x", "b": "y", "c": "x"}[u]), np.ones(2) / 2))
        text = report.text()
        assert "confusion" in text
        assert "100.0\t100.0\t100.0" in text

    def test_empty_manifest_rejected(self):
        with pytest.raises(ConfigurationError):
            evaluate(Manifest([]), lambda u: (0, np.ones(2)))
