"""Evaluation quantities: instantaneous accuracy and its average, hold-out
recognition fractions, CMC@1, query-rate curves, connected-component
clustering and the chance-adjusted agreement scores (ARI, AMI).

ARI and AMI are computed from the contingency table under the permutation
model; AMI uses the exact hypergeometric expected mutual information and
max normalization. Partitions are lists of disjoint sets of sequence ids.
"""

from __future__ import annotations

import csv
import json
import math
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .core import Metric
from .session import CSV_FIELDS, TraceRecord

Partition = Sequence[set]


# -- per-iteration accuracy -----------------------------------------------

def instantaneous_accuracy(delta: float | None, lambda_r: float | None,
                           nn_same: bool | None,
                           seen_before: bool) -> int:
    """Correctness indicator of the query-free same/new call for one step.

    The call is correct when the distance falls at or below the recognition
    cut and the nearest neighbour really is the same object, or when it
    exceeds the cut and the object is genuinely unseen. An empty memory
    (``delta`` None) behaves as an infinite distance; an uncalibrated cut
    (``lambda_r`` None) predicts "new", matching the cold-start behaviour
    of the loop itself.
    """
    if delta is None:
        return int(not seen_before)
    if lambda_r is not None and delta <= lambda_r:
        return int(bool(nn_same))
    return int(not seen_before)


def trace_accuracy(record: TraceRecord) -> int:
    """Instantaneous accuracy of one trace record (oracle fields required)."""
    if record.seen_before is None:
        raise ValueError(
            f"record {record.sequence_id!r} lacks oracle ground truth"
        )
    return instantaneous_accuracy(record.delta, record.lambda_r,
                                  record.nn_same, record.seen_before)


def averaged_instantaneous_accuracy(trace: Iterable[TraceRecord]) -> float:
    values = [trace_accuracy(r) for r in trace]
    if not values:
        raise ValueError("empty trace")
    return sum(values) / len(values)


def holdout_recognition_fractions(holdout: list[tuple[np.ndarray, str]],
                                  memory_entries: list[tuple[np.ndarray, str]],
                                  lambda_r: float | None,
                                  metric: Metric) -> tuple[float, float]:
    """Fractions of a hold-out set correctly recognized as seen / unseen.

    ``holdout`` and ``memory_entries`` are (representation, true object)
    pairs. Each hold-out item is matched to its nearest memory entry; it
    counts as correctly seen when the distance is within the cut and the
    neighbour is the same object, and as correctly unseen when the distance
    exceeds the cut and no memory entry shares its object. Both counts are
    normalized by the hold-out size.
    """
    if not holdout:
        raise ValueError("empty hold-out set")
    if not memory_entries:
        # nothing memorized: everything is predicted unseen
        return 0.0, sum(1 for _ in holdout) / len(holdout)
    mat = np.stack([r for r, _ in memory_entries])
    objects_in_memory = {obj for _, obj in memory_entries}
    seen_ok = 0
    unseen_ok = 0
    for rep, obj in holdout:
        dists = metric.to_all(rep, mat)
        idx = int(np.argmin(dists))
        delta = float(dists[idx])
        cut = lambda_r if lambda_r is not None else -math.inf
        if delta <= cut:
            if memory_entries[idx][1] == obj:
                seen_ok += 1
        else:
            if obj not in objects_in_memory:
                unseen_ok += 1
    n = len(holdout)
    return seen_ok / n, unseen_ok / n


# -- re-identification ----------------------------------------------------

def cmc_at_one(gallery: list[tuple[np.ndarray, str]],
               probes: list[tuple[np.ndarray, str]],
               metric: Metric = Metric()) -> float:
    """Fraction of probes whose nearest gallery item is the same object.

    Ties resolve to the earliest gallery item.
    """
    if not gallery:
        raise ValueError("empty gallery")
    if not probes:
        raise ValueError("empty probe set")
    gmat = np.stack([r for r, _ in gallery]).astype(np.float64)
    pmat = np.stack([r for r, _ in probes]).astype(np.float64)
    if metric.kind == "cosine" or metric.normalize:
        hits = 0
        for i, (rep, obj) in enumerate(probes):
            dists = metric.to_all(rep, gmat)
            hits += gallery[int(np.argmin(dists))][1] == obj
        return hits / len(probes)
    dists = cdist(pmat, gmat)  # euclidean
    nn = np.argmin(dists, axis=1)  # first minimum on ties
    hits = sum(1 for i, j in enumerate(nn) if gallery[int(j)][1] == probes[i][1])
    return hits / len(probes)


def query_rate_curve(queried: Sequence[bool], window: int) -> np.ndarray:
    """Moving average of the query flag over full windows.

    Entry i covers iterations [i, i + window); the series has
    ``len(queried) - window + 1`` points.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    flags = np.asarray([1.0 if q else 0.0 for q in queried])
    if window > len(flags):
        raise ValueError("window longer than the trace")
    kernel = np.ones(window) / window
    return np.convolve(flags, kernel, mode="valid")


# -- clustering -----------------------------------------------------------

def extract_clusters(links: Iterable[tuple[str, str | None]]) -> list[set[str]]:
    """Connected components of the undirected prediction-link graph.

    Each pair links a sequence to the earlier sequence it was predicted to
    match (or to None). Unlinked sequences are singletons. The result is
    independent of link order; components are returned sorted by their
    smallest member for determinism.
    """
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for node, target in links:
        parent.setdefault(node, node)
        if target is not None:
            parent.setdefault(target, target)
            union(node, target)

    groups: dict[str, set[str]] = {}
    for node in parent:
        groups.setdefault(find(node), set()).add(node)
    return sorted(groups.values(), key=lambda g: min(g))


def _check_partitions(pred: Partition, truth: Partition) -> list:
    elements = set()
    for part in (pred, truth):
        covered = set()
        for cluster in part:
            if covered & cluster:
                raise ValueError("clusters are not disjoint")
            covered |= cluster
        elements.add(frozenset(covered))
    if len(elements) != 1:
        raise ValueError("partitions cover different element sets")
    return sorted(next(iter(elements)))


def _contingency(pred: Partition, truth: Partition) -> np.ndarray:
    elements = _check_partitions(pred, truth)
    pred_of = {e: i for i, c in enumerate(pred) for e in c}
    truth_of = {e: j for j, c in enumerate(truth) for e in c}
    table = np.zeros((len(pred), len(truth)), dtype=np.int64)
    for e in elements:
        table[pred_of[e], truth_of[e]] += 1
    return table


def _same_partition(pred: Partition, truth: Partition) -> bool:
    return {frozenset(c) for c in pred if c} == {frozenset(c) for c in truth if c}


def adjusted_rand_index(pred: Partition, truth: Partition) -> float:
    """Chance-adjusted pair-counting agreement between two partitions.

    1 for identical partitions, ~0 in expectation for independent ones.
    """
    table = _contingency(pred, truth)
    if _same_partition(pred, truth):
        return 1.0
    n = int(table.sum())
    sum_cells = sum(v * (v - 1) // 2 for v in table.flat)
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    sum_a = sum(int(v) * (int(v) - 1) // 2 for v in a)
    sum_b = sum(int(v) * (int(v) - 1) // 2 for v in b)
    pairs = n * (n - 1) // 2
    expected = sum_a * sum_b / pairs
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def _entropy_from_counts(counts: np.ndarray) -> float:
    n = counts.sum()
    probs = counts[counts > 0] / n
    return float(-(probs * np.log(probs)).sum())


def _mutual_information(table: np.ndarray) -> float:
    n = table.sum()
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    mi = 0.0
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            nij = table[i, j]
            if nij > 0:
                mi += nij / n * math.log(n * nij / (a[i] * b[j]))
    return mi


def _expected_mutual_information(table: np.ndarray) -> float:
    """Exact expectation of MI under the hypergeometric permutation model."""
    n = int(table.sum())
    a = [int(v) for v in table.sum(axis=1)]
    b = [int(v) for v in table.sum(axis=0)]
    lg = math.lgamma
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            for nij in range(lo, hi + 1):
                term = nij / n * math.log(n * nij / (ai * bj))
                log_weight = (lg(ai + 1) + lg(bj + 1)
                              + lg(n - ai + 1) + lg(n - bj + 1)
                              - lg(n + 1) - lg(nij + 1)
                              - lg(ai - nij + 1) - lg(bj - nij + 1)
                              - lg(n - ai - bj + nij + 1))
                emi += term * math.exp(log_weight)
    return emi


def adjusted_mutual_information(pred: Partition, truth: Partition) -> float:
    """Chance-adjusted mutual information with max normalization.

    1 for identical partitions; 0 by convention when either partition has
    zero entropy and the partitions differ.
    """
    table = _contingency(pred, truth)
    if _same_partition(pred, truth):
        return 1.0
    h_pred = _entropy_from_counts(table.sum(axis=1))
    h_truth = _entropy_from_counts(table.sum(axis=0))
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    mi = _mutual_information(table)
    emi = _expected_mutual_information(table)
    denom = max(h_pred, h_truth) - emi
    if denom == 0.0:
        return 0.0
    return float((mi - emi) / denom)


# -- output writers -------------------------------------------------------

def write_trace_csv(trace: Iterable[TraceRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for record in trace:
            writer.writerow(record.to_dict())


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
