import math

import pytest
from hypothesis import given, settings, strategies as st

from follower.memory import SupervisionLog
from follower.thresholds import (BootstrapRequired, DecisionThresholds,
                                 binary_entropy, entropy_of,
                                 get_decision_thresholds,
                                 get_recognition_threshold,
                                 recognition_accuracy,
                                 recognition_candidates, window_length)


def make_log(pairs):
    log = SupervisionLog()
    for d, y in pairs:
        log.insert(d, y)
    return log


# Independent reference implementations, kept deliberately naive.

def ref_entropy(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    h = 0.0
    for value in (True, False):
        c = labels.count(value)
        if c:
            h -= (c / n) * math.log2(c / n)
    return h


def ref_band(pairs, alpha):
    """Brute-force window search over the sorted log."""
    pairs = sorted(pairs, key=lambda p: p[0])
    n = len(pairs)
    w = window_length(alpha, n)
    labels = [y for _, y in pairs]
    best = None
    for j in range(n - w + 1):
        score = (ref_entropy(labels[j:j + w])
                 - ref_entropy(labels[:j])
                 - ref_entropy(labels[j + w:]))
        if best is None or score > best[0] + 1e-12:
            best = (score, pairs[j][0], pairs[j + w - 1][0])
    return best[1], best[2]


def ref_lambda_r(pairs):
    """Brute-force scan of every midpoint candidate."""
    log = make_log(pairs)
    best_lam, best_acc = None, -1
    for lam in recognition_candidates(log):
        acc = sum(1 for d, y in log.records() if (d < lam) == y)
        if acc > best_acc:
            best_lam, best_acc = lam, acc
    return best_lam, best_acc


class TestEntropy:
    def test_pure_sets_have_zero_entropy(self):
        assert binary_entropy(5, 0) == 0.0
        assert binary_entropy(0, 7) == 0.0
        assert binary_entropy(0, 0) == 0.0

    def test_balanced_is_one_bit(self):
        assert binary_entropy(3, 3) == pytest.approx(1.0)

    def test_one_of_four(self):
        assert binary_entropy(1, 3) == pytest.approx(0.8112781244591328)

    @given(st.lists(st.booleans(), max_size=40))
    def test_matches_reference(self, labels):
        assert entropy_of(labels) == pytest.approx(ref_entropy(labels))


class TestWindowLength:
    def test_examples(self):
        assert window_length(0.4, 5) == 2
        assert window_length(0.5, 10) == 5
        assert window_length(0.5, 11) == 6
        assert window_length(1.0, 7) == 7
        assert window_length(0.0, 7) == 0

    def test_decimal_alpha_not_inflated_by_float_noise(self):
        # 0.4 * 5 is 2.0000000000000004 in binary; must still give 2
        assert window_length(0.4, 5) == 2
        assert window_length(0.3, 10) == 3
        assert window_length(0.7, 10) == 7

    @given(st.floats(0.001, 1.0), st.integers(1, 1000))
    def test_bounds(self, alpha, n):
        w = window_length(alpha, n)
        assert 1 <= w <= n


class TestDecisionThresholds:
    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            DecisionThresholds(2.0, 1.0)

    def test_empty_log_needs_bootstrap(self):
        with pytest.raises(BootstrapRequired):
            get_decision_thresholds(SupervisionLog(), 0.5)

    def test_alpha_zero_needs_bootstrap(self):
        log = make_log([(0.1, True), (0.2, False)])
        with pytest.raises(BootstrapRequired):
            get_decision_thresholds(log, 0.0)

    def test_alpha_out_of_range(self):
        log = make_log([(0.1, True)])
        with pytest.raises(ValueError):
            get_decision_thresholds(log, 1.5)

    def test_worked_example(self):
        # five records, alpha 0.4 -> window of two; the mixed window
        # covering the answer flip at 0.3/0.4 wins
        log = make_log([(0.1, True), (0.2, True), (0.3, True),
                        (0.4, False), (0.5, False)])
        band = get_decision_thresholds(log, 0.4)
        assert (band.lambda_l, band.lambda_u) == (0.3, 0.4)

    def test_alpha_one_spans_whole_log(self):
        log = make_log([(0.1, True), (0.4, False), (0.9, False)])
        band = get_decision_thresholds(log, 1.0)
        assert (band.lambda_l, band.lambda_u) == (0.1, 0.9)

    def test_tie_breaks_to_smallest_start(self):
        # all answers identical: every window scores 0; first window wins
        log = make_log([(0.1, True), (0.2, True), (0.3, True), (0.4, True)])
        band = get_decision_thresholds(log, 0.5)
        assert (band.lambda_l, band.lambda_u) == (0.1, 0.2)

    def test_single_record(self):
        band = get_decision_thresholds(make_log([(0.7, False)]), 0.5)
        assert (band.lambda_l, band.lambda_u) == (0.7, 0.7)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 10), st.booleans()),
                    min_size=1, max_size=25),
           st.sampled_from([0.1, 0.25, 0.4, 0.5, 0.75, 1.0]))
    def test_matches_brute_force(self, pairs, alpha):
        log = make_log(pairs)
        band = get_decision_thresholds(log, alpha)
        lo, hi = ref_band(pairs, alpha)
        assert (band.lambda_l, band.lambda_u) == (lo, hi)

    @given(st.lists(st.tuples(st.floats(0, 10), st.booleans()),
                    min_size=1, max_size=25),
           st.floats(0.05, 1.0))
    def test_band_bounds_are_logged_distances(self, pairs, alpha):
        log = make_log(pairs)
        band = get_decision_thresholds(log, alpha)
        assert band.lambda_l in log.deltas
        assert band.lambda_u in log.deltas
        assert band.lambda_l <= band.lambda_u


class TestRecognitionThreshold:
    def test_empty_log_needs_bootstrap(self):
        with pytest.raises(BootstrapRequired):
            get_recognition_threshold(SupervisionLog())

    def test_worked_example(self):
        # same five-record log as the band example: the perfect split
        # sits midway between the last "same" and the first "different"
        log = make_log([(0.1, True), (0.2, True), (0.3, True),
                        (0.4, False), (0.5, False)])
        lam = get_recognition_threshold(log)
        assert lam == pytest.approx(0.35)
        assert recognition_accuracy(log, lam) == 5

    def test_all_same_puts_cut_above_everything(self):
        log = make_log([(0.1, True), (0.5, True)])
        lam = get_recognition_threshold(log)
        assert lam > 0.5
        assert recognition_accuracy(log, lam) == 2

    def test_all_different_puts_cut_below_everything(self):
        log = make_log([(0.1, False), (0.5, False)])
        lam = get_recognition_threshold(log)
        assert lam < 0.1
        assert recognition_accuracy(log, lam) == 2

    def test_smallest_candidate_wins_ties(self):
        # inverted labels: several candidates reach accuracy 1 of 2
        log = make_log([(0.1, False), (0.2, True)])
        lam = get_recognition_threshold(log)
        candidates = recognition_candidates(log)
        winners = [c for c in candidates
                   if recognition_accuracy(log, c) == 1]
        assert lam == min(winners)

    def test_duplicate_distances_handled(self):
        log = make_log([(0.2, True), (0.2, False), (0.2, True), (0.5, False)])
        lam = get_recognition_threshold(log)
        _, ref_acc = ref_lambda_r(log.records())
        assert recognition_accuracy(log, lam) == ref_acc

    def test_candidate_count(self):
        log = make_log([(0.1, True), (0.4, False), (0.9, False)])
        assert len(recognition_candidates(log)) == 4

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 10), st.booleans()),
                    min_size=1, max_size=25))
    def test_matches_brute_force(self, pairs):
        log = make_log(pairs)
        lam = get_recognition_threshold(log)
        ref_lam, ref_acc = ref_lambda_r(pairs)
        assert recognition_accuracy(log, lam) == ref_acc
        assert lam == pytest.approx(ref_lam)

    @given(st.lists(st.tuples(st.floats(0, 10), st.booleans()),
                    min_size=1, max_size=25),
           st.floats(0.1, 9.9))
    def test_optimality(self, pairs, probe):
        log = make_log(pairs)
        lam = get_recognition_threshold(log)
        assert (recognition_accuracy(log, lam)
                >= recognition_accuracy(log, probe))
