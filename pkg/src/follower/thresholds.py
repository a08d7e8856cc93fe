"""Threshold selection from the supervision log.

Two procedures live here:

* the query-band pair (lambda_l, lambda_u): a contiguous window of the
  distance-sorted log, of length ceil(alpha * |log|), whose labels are
  maximally mixed relative to the labels outside it;
* the single recognition threshold lambda_r for query-free operation,
  the midpoint cut that maximizes accuracy on the logged answers.

Both run in time linear in the log size (given sortedness), using prefix
counts of positive answers.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .memory import SupervisionLog


class BootstrapRequired(Exception):
    """The log cannot support a threshold estimate yet; the caller must
    gather supervision first."""


@dataclass(frozen=True)
class DecisionThresholds:
    lambda_l: float
    lambda_u: float

    def __post_init__(self):
        if self.lambda_l > self.lambda_u:
            raise ValueError("lambda_l must not exceed lambda_u")


def binary_entropy(n_true: int, n_false: int) -> float:
    """Shannon entropy in bits of a boolean multiset given by counts.

    The empty set has entropy 0; zero-probability terms contribute 0.
    """
    n = n_true + n_false
    if n == 0 or n_true == 0 or n_false == 0:
        return 0.0
    p = n_true / n
    q = n_false / n
    return -(p * math.log2(p) + q * math.log2(q))


def entropy_of(answers) -> float:
    """Convenience wrapper of :func:`binary_entropy` over an iterable."""
    answers = list(answers)
    t = sum(1 for a in answers if a)
    return binary_entropy(t, len(answers) - t)


def window_length(alpha: float, n: int) -> int:
    """Query-band window length: ceil(alpha * n), robust to float noise.

    alpha values like 0.4 are decimal-intended; a raw ceil of 0.4 * 5 =
    2.0000000000000004 would give 3. Values within 1e-9 of an integer are
    treated as that integer.
    """
    raw = alpha * n
    nearest = round(raw)
    if abs(raw - nearest) < 1e-9:
        return int(nearest)
    return math.ceil(raw)


def get_decision_thresholds(log: SupervisionLog,
                            alpha: float) -> DecisionThresholds:
    """Pick the query band by sliding a fixed-length window over the sorted log.

    The window length w = ceil(alpha*|log|) makes exactly w logged answers
    fall inside the band by construction. Each window is scored
    H(inside) - H(before) - H(after); the maximizer wins, ties resolving to
    the smallest starting index. Returned thresholds are the distances of
    the first and last record in the winning window.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    n = len(log)
    if n == 0:
        raise BootstrapRequired("supervision log is empty")
    w = window_length(alpha, n)
    if w < 1:
        raise BootstrapRequired("effort budget selects an empty window")

    deltas = log.deltas
    answers = log.answers
    # prefix[i] = number of positive answers among the first i records
    prefix = [0] * (n + 1)
    for i, a in enumerate(answers):
        prefix[i + 1] = prefix[i] + (1 if a else 0)

    best_score = -math.inf
    best_j = 0
    for j in range(n - w + 1):
        t_in = prefix[j + w] - prefix[j]
        t_before = prefix[j]
        t_after = prefix[n] - prefix[j + w]
        score = (binary_entropy(t_in, w - t_in)
                 - binary_entropy(t_before, j - t_before)
                 - binary_entropy(t_after, (n - j - w) - t_after))
        if score > best_score:
            best_score = score
            best_j = j
    return DecisionThresholds(deltas[best_j], deltas[best_j + w - 1])


def _epsilon(delta_max: float) -> float:
    return max(1e-9, 1e-6 * abs(delta_max))


def recognition_accuracy(log: SupervisionLog, lam: float) -> int:
    """Number of logged answers a single cut at ``lam`` predicts correctly.

    A distance below the cut predicts "same object"; the prediction is
    correct when it matches the logged answer.
    """
    return sum(1 for d, y in zip(log.deltas, log.answers)
               if (d < lam) == bool(y))


def recognition_candidates(log: SupervisionLog) -> list[float]:
    """Midpoint candidate cuts between consecutive logged distances,
    padded with sentinels just below the smallest and just above the
    largest distance."""
    n = len(log)
    if n == 0:
        raise BootstrapRequired("supervision log is empty")
    deltas = log.deltas
    eps = _epsilon(deltas[-1])
    padded = [deltas[0] - eps, *deltas, deltas[-1] + eps]
    return [(padded[i] + padded[i + 1]) / 2.0 for i in range(n + 1)]


def get_recognition_threshold(log: SupervisionLog) -> float:
    """Accuracy-optimal single cut over the logged answers.

    Scans every midpoint candidate; among equally accurate candidates the
    smallest wins. Prefix counts plus a bisection per candidate keep this
    near-linear (duplicate distances make a plain index split unsound).
    """
    deltas = log.deltas
    answers = log.answers
    n = len(log)
    prefix = [0] * (n + 1)
    for i, a in enumerate(answers):
        prefix[i + 1] = prefix[i] + (1 if a else 0)
    total_true = prefix[n]

    best_lam = None
    best_acc = -1
    for lam in recognition_candidates(log):
        k = bisect.bisect_left(deltas, lam)  # records predicted "same"
        acc = prefix[k] + ((n - k) - (total_true - prefix[k]))
        if acc > best_acc:
            best_acc = acc
            best_lam = lam
    return best_lam
