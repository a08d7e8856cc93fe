"""Experiment orchestration: dataset splitting, stream-ordering policies,
the simulated oracle user, synthetic data generation and multi-fold runs
with aggregate curves and summaries.

Randomness goes through numpy's default generator (PCG64); per-fold
generators are derived from ``SeedSequence((base_seed, fold_index))`` so
folds are reproducible and independently streamable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .core import DatasetManifest, Metric, SequenceSample, embed_video
from .io_formats import load_manifest
from .metrics import (adjusted_mutual_information, adjusted_rand_index,
                      averaged_instantaneous_accuracy, extract_clusters,
                      trace_accuracy, write_summary_json, write_trace_csv)
from .session import (PendingQuery, Session, SessionConfig, TraceRecord,
                      run_always_ask)


class StreamExhausted(Exception):
    """The sequence pool is empty."""


@dataclass(frozen=True)
class StreamPolicy:
    kind: str  # "random" or "devel"
    p_new: float = 0.3

    def __post_init__(self):
        if self.kind not in ("random", "devel"):
            raise ValueError(f"unknown stream policy {self.kind!r}")
        if self.kind == "devel" and not 0.0 < self.p_new < 1.0:
            raise ValueError("p_new must lie strictly inside (0, 1)")


@dataclass
class SplitPlan:
    """Disjoint, exhaustive split of a dataset for one fold."""

    heldout: list[SequenceSample]  # all sequences of the held-out objects
    train: list[SequenceSample]    # interaction sequences of the rest
    eval: list[SequenceSample]     # one per remaining object


def make_split(manifest: DatasetManifest, rng: np.random.Generator,
               heldout_count: int = 10) -> SplitPlan:
    """Hold out whole objects for the unsupervised phase and reserve one
    sequence per remaining object for in-training evaluation."""
    by_object = manifest.by_object()
    objects = sorted(by_object)
    if heldout_count >= len(objects):
        raise ValueError(
            f"cannot hold out {heldout_count} of {len(objects)} objects"
        )
    for obj, seqs in by_object.items():
        if len(seqs) < 2:
            raise ValueError(f"object {obj!r} has fewer than 2 sequences")
    heldout_objs = set(
        np.asarray(objects, dtype=object)[
            rng.choice(len(objects), size=heldout_count, replace=False)
        ]
    )
    heldout, train, eval_set = [], [], []
    for obj in objects:
        seqs = by_object[obj]
        if obj in heldout_objs:
            heldout.extend(seqs)
            continue
        eval_idx = int(rng.integers(len(seqs)))
        for i, s in enumerate(seqs):
            (eval_set if i == eval_idx else train).append(s)
    return SplitPlan(heldout=heldout, train=train, eval=eval_set)


def next_index(pool: list[SequenceSample], seen_objects: set[str],
               rng: np.random.Generator, policy: StreamPolicy) -> int:
    """Index of the next sequence to present from ``pool``.

    devel draws a sequence of a uniformly chosen unseen object with
    probability ``p_new`` and a uniform sequence of a seen object
    otherwise; when one side is exhausted the other is used. random is
    uniform without replacement.
    """
    if not pool:
        raise StreamExhausted("sequence pool is empty")
    if policy.kind == "random":
        return int(rng.integers(len(pool)))
    unseen = sorted({s.true_object for s in pool} - seen_objects)
    seen_idx = [i for i, s in enumerate(pool) if s.true_object in seen_objects]
    if unseen and (not seen_idx or rng.random() < policy.p_new):
        obj = unseen[int(rng.integers(len(unseen)))]
        candidates = [i for i, s in enumerate(pool) if s.true_object == obj]
        return candidates[int(rng.integers(len(candidates)))]
    return seen_idx[int(rng.integers(len(seen_idx)))]


def order_stream(samples: list[SequenceSample], policy: StreamPolicy,
                 rng: np.random.Generator) -> list[SequenceSample]:
    """Materialize the full presentation order of a pool under a policy."""
    pool = list(samples)
    seen: set[str] = set()
    out = []
    while pool:
        idx = next_index(pool, seen, rng, policy)
        sample = pool.pop(idx)
        if sample.true_object is not None:
            seen.add(sample.true_object)
        out.append(sample)
    return out


def oracle_answer(true_a: str | None, true_b: str | None) -> bool:
    """Ground-truth same/different answer for a simulated user."""
    if true_a is None or true_b is None:
        raise ValueError("oracle needs ground-truth labels on both sequences")
    return true_a == true_b


def make_oracle(manifest_by_id: dict[str, SequenceSample]):
    """Answer source resolving pending queries against ground truth."""

    def source(query: PendingQuery) -> bool:
        a = manifest_by_id[query.sequence_id].true_object
        b = manifest_by_id[query.nn_sequence_id].true_object
        return oracle_answer(a, b)

    return source


# -- synthetic data -------------------------------------------------------

@dataclass(frozen=True)
class SyntheticConfig:
    objects: int = 100
    sequences_per_object: int = 5
    frames_per_sequence: int = 10
    dim: int = 64
    intra_object_sigma: float = 1.55
    inter_object_spread: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.objects, self.sequences_per_object,
               self.frames_per_sequence, self.dim) < 1:
            raise ValueError("all sizes must be positive")
        if self.intra_object_sigma <= 0 or self.inter_object_spread <= 0:
            raise ValueError("scales must be positive")


def generate_synthetic_manifest(config: SyntheticConfig) -> DatasetManifest:
    """Gaussian stand-in for CNN features: one isotropic center per object,
    frames are center plus isotropic noise. Deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    centers = rng.normal(0.0, config.inter_object_spread,
                         (config.objects, config.dim))
    sequences = []
    for i in range(config.objects):
        for j in range(config.sequences_per_object):
            frames = centers[i] + rng.normal(
                0.0, config.intra_object_sigma,
                (config.frames_per_sequence, config.dim))
            sequences.append(SequenceSample(
                sequence_id=f"obj{i:03d}_seq{j}",
                frames=frames,
                true_object=f"obj{i:03d}",
            ))
    return DatasetManifest(sequences)


# -- fold execution -------------------------------------------------------

class HoldoutTracker:
    """Incrementally maintained nearest neighbour of each hold-out sequence
    against the growing memory, for per-iteration recognition fractions."""

    def __init__(self, holdout: list[SequenceSample], metric: Metric):
        self.metric = metric
        self.reps = np.stack([embed_video(s) for s in holdout])
        self.objs = [s.true_object for s in holdout]
        self.best = np.full(len(holdout), np.inf)
        self.best_same = np.zeros(len(holdout), dtype=bool)
        self.memory_objects: set[str] = set()

    def update(self, new_rep: np.ndarray, true_object: str | None) -> None:
        dists = self.metric.to_all(new_rep, self.reps)
        closer = dists < self.best
        self.best = np.where(closer, dists, self.best)
        for i in np.flatnonzero(closer):
            self.best_same[i] = self.objs[i] == true_object
        if true_object is not None:
            self.memory_objects.add(true_object)

    def fractions(self, lambda_r: float | None) -> tuple[float, float]:
        cut = -np.inf if lambda_r is None else lambda_r
        within = self.best <= cut
        seen_ok = np.count_nonzero(within & self.best_same)
        novel = np.asarray([o not in self.memory_objects for o in self.objs])
        unseen_ok = np.count_nonzero(~within & novel)
        n = len(self.objs)
        return seen_ok / n, unseen_ok / n


@dataclass
class FoldResult:
    trace: list[TraceRecord]
    eval_trace: list[TraceRecord]
    summary: dict
    curves: dict[str, list[float]]
    baseline_trace: list[TraceRecord] | None = None
    baseline_summary: dict | None = None


def post_bootstrap_query_rate(trace: list[TraceRecord],
                              bootstrap_queries: int) -> float | None:
    """Empirical query probability over the iterations where the band rule
    was actually in force (memory non-empty, bootstrap complete)."""
    answers = 0
    counted = 0
    queries = 0
    for r in trace:
        eligible = r.iteration > 0 and answers >= bootstrap_queries
        if eligible:
            counted += 1
            queries += bool(r.queried)
        if r.answer is not None:
            answers += 1
    return queries / counted if counted else None


def evaluation_clusters(eval_trace: list[TraceRecord]) -> list[set[str]]:
    """Connected components of the same-object links predicted during the
    unsupervised phase, restricted to the evaluated sequences."""
    links = [(r.sequence_id,
              r.nn_sequence_id if r.kind == "seen" else None)
             for r in eval_trace]
    eval_ids = {r.sequence_id for r in eval_trace}
    components = extract_clusters(links)
    restricted = [c & eval_ids for c in components]
    return [c for c in restricted if c]


def run_fold(manifest: DatasetManifest, *, policy: StreamPolicy,
             eval_policy: StreamPolicy, alpha: float,
             rng: np.random.Generator, bootstrap_queries: int = 10,
             heldout_count: int = 10, metric_kind: str = "euclidean",
             normalize: bool = False, track_holdout: bool = True,
             run_baseline: bool = False) -> FoldResult:
    """One complete fold: split, supervised phase, unsupervised phase."""
    split = make_split(manifest, rng, heldout_count)
    train_order = order_stream(split.train, policy, rng)
    eval_order = order_stream(split.heldout, eval_policy, rng)
    by_id = {s.sequence_id: s for s in manifest.sequences}
    oracle = make_oracle(by_id)

    config = SessionConfig(alpha=alpha, bootstrap_queries=bootstrap_queries,
                           metric=metric_kind, normalize=normalize)
    session = Session(config)
    metric = session.metric

    tracker = HoldoutTracker(split.eval, metric) if track_holdout else None
    train_objects = sorted({s.true_object for s in split.train})
    curves: dict[str, list[float]] = {
        "queried": [], "inst_accuracy": [], "unseen_objects_frac": [],
        "seen_frac": [], "unseen_frac": [],
    }
    shown: set[str] = set()

    for sample in train_order:
        record = session.process_sequence(sample, oracle)
        shown.add(sample.true_object)
        curves["queried"].append(float(record.queried))
        curves["inst_accuracy"].append(float(trace_accuracy(record)))
        curves["unseen_objects_frac"].append(
            1.0 - len(shown) / len(train_objects))
        if tracker is not None:
            tracker.update(session.memory.entries[-1].representation,
                           sample.true_object)
            seen_frac, unseen_frac = tracker.fractions(
                session.current_lambda_r())
            curves["seen_frac"].append(seen_frac)
            curves["unseen_frac"].append(unseen_frac)

    k_size = len(session.supervision)
    lambda_r_final = session.current_lambda_r()
    lambda_l_final, lambda_u_final = session.current_thresholds()

    session.switch_mode("unsupervised")
    eval_start = len(session.trace)
    for sample in eval_order:
        session.process_sequence(sample)
    eval_trace = session.trace[eval_start:]

    aia = averaged_instantaneous_accuracy(eval_trace)
    pred = evaluation_clusters(eval_trace)
    truth_groups: dict[str, set[str]] = {}
    for s in split.heldout:
        truth_groups.setdefault(s.true_object, set()).add(s.sequence_id)
    truth = [truth_groups[k] for k in sorted(truth_groups)]
    ari = adjusted_rand_index(pred, truth)
    ami = adjusted_mutual_information(pred, truth)

    summary = {
        "k_size": k_size,
        "aia": aia,
        "ari": ari,
        "ami": ami,
        "lambda_r": lambda_r_final,
        "lambda_l": lambda_l_final,
        "lambda_u": lambda_u_final,
        "query_rate": post_bootstrap_query_rate(
            session.trace[:eval_start], bootstrap_queries),
        "train_aia": averaged_instantaneous_accuracy(
            session.trace[:eval_start]),
    }

    baseline_trace = None
    baseline_summary = None
    if run_baseline:
        base = run_always_ask(train_order, oracle, config)
        baseline_trace = base.trace
        baseline_summary = {
            "k_size": len(base.supervision),
            "train_aia": averaged_instantaneous_accuracy(base.trace),
            "lambda_r": base.current_lambda_r(),
        }

    return FoldResult(trace=session.trace[:eval_start],
                      eval_trace=eval_trace, summary=summary, curves=curves,
                      baseline_trace=baseline_trace,
                      baseline_summary=baseline_summary)


# -- multi-fold experiments -----------------------------------------------

@dataclass
class ExperimentConfig:
    alpha: float
    policy: str = "random"
    eval_policy: str = "random"
    p_new: float = 0.3
    folds: int = 50
    seed: int = 0
    bootstrap_queries: int = 10
    heldout_count: int = 10
    metric: str = "euclidean"
    normalize: bool = False
    baseline: bool = False
    track_holdout: bool = True
    dataset: str | None = None  # manifest path; None uses synthetic data
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "synthetic" in d and isinstance(d["synthetic"], dict):
            d["synthetic"] = SyntheticConfig(**d["synthetic"])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    folds: list[FoldResult]
    summary: dict
    curves: dict[str, list[float]]


def fold_rng(seed: int, fold: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, fold)))


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def run_experiment(config: ExperimentConfig,
                   out_dir=None) -> ExperimentResult:
    """Run all folds and aggregate mean curves and summary statistics.

    When ``out_dir`` is given, writes ``config.json``, per-fold trace CSVs,
    ``summary.json`` and ``curves.csv`` under it.
    """
    if config.dataset is not None:
        manifest = load_manifest(config.dataset)
    else:
        manifest = generate_synthetic_manifest(config.synthetic)
    policy = StreamPolicy(config.policy, config.p_new)
    eval_policy = StreamPolicy(config.eval_policy, config.p_new)

    folds = []
    for i in range(config.folds):
        folds.append(run_fold(
            manifest, policy=policy, eval_policy=eval_policy,
            alpha=config.alpha, rng=fold_rng(config.seed, i),
            bootstrap_queries=config.bootstrap_queries,
            heldout_count=config.heldout_count,
            metric_kind=config.metric, normalize=config.normalize,
            track_holdout=config.track_holdout,
            run_baseline=config.baseline))

    summary = {
        "config": config.to_dict(),
        "folds": config.folds,
        "ami_normalization": "max",
        "mean": {key: _mean(f.summary[key] for f in folds)
                 for key in folds[0].summary},
        "per_fold": [f.summary for f in folds],
    }
    if config.baseline:
        summary["baseline_mean"] = {
            key: _mean(f.baseline_summary[key] for f in folds)
            for key in folds[0].baseline_summary
        }

    curve_keys = [k for k, v in folds[0].curves.items() if v]
    curves = {
        key: list(np.mean([f.curves[key] for f in folds], axis=0))
        for key in curve_keys
    }

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "config.json", "w") as fh:
            json.dump(config.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        for i, f in enumerate(folds):
            fold_dir = out_dir / f"fold_{i}"
            fold_dir.mkdir(exist_ok=True)
            write_trace_csv(f.trace + f.eval_trace, fold_dir / "trace.csv")
            if f.baseline_trace is not None:
                write_trace_csv(f.baseline_trace,
                                fold_dir / "baseline_trace.csv")
        write_summary_json(summary, out_dir / "summary.json")
        _write_curves_csv(curves, out_dir / "curves.csv")

    return ExperimentResult(config=config, folds=folds, summary=summary,
                            curves=curves)


def _write_curves_csv(curves: dict[str, list[float]], path) -> None:
    import csv

    keys = sorted(curves)
    length = max(len(v) for v in curves.values())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", *keys])
        for i in range(length):
            writer.writerow([i] + [
                curves[k][i] if i < len(curves[k]) else "" for k in keys])
