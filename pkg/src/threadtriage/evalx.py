"""Evaluation extras: probabilistic ROC, ablation/strategy harnesses,
group-normalized feature importance, and thread-level diagnostics.

The ROC variant spreads each item's probabilistic label across the expected
confusion matrix: sweeping a threshold over descending scores, the true
positive mass is the sum of q over items at or above the threshold and the
false positive mass the sum of (1 - q). The "optimal" curve ranks items by
their own labels, which no scorer can beat in expectation.
"""

import math
import statistics
import warnings
from dataclasses import dataclass

import numpy as np

from . import learn
from .corpus import FLAGGED, GREEN, resolve_label
from .errors import DataError
from .features import (
    AssemblyStrategy,
    FeatureMatrix,
    assemble_dataset,
    select_groups,
)
from .learn import CvResult, LinearModel, ModelSpec, kfold_cv


@dataclass(frozen=True)
class ProcCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr) from (0,0) to (1,1)
    thresholds: tuple[float, ...]  # aligned with points; +inf at (0,0)
    auc: float


def _expected_roc(scores: np.ndarray, q: np.ndarray) -> ProcCurve:
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    qq = q[order]
    pos_total = float(qq.sum())
    neg_total = float((1.0 - qq).sum())
    points = [(0.0, 0.0)]
    thresholds = [math.inf]
    tp = 0.0
    fp = 0.0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        tp += float(qq[i:j].sum())
        fp += float((1.0 - qq[i:j]).sum())
        points.append((fp / neg_total, tp / pos_total))
        thresholds.append(float(s[i]))
        i = j
    points[-1] = (1.0, 1.0)  # exact endpoint; the last threshold admits everything
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    auc = float(np.trapz(ys, xs))
    return ProcCurve(points=tuple(points), thresholds=tuple(thresholds), auc=auc)


def proc_analyze(scores, q) -> tuple[ProcCurve, ProcCurve]:
    """ROC over probabilistic labels, plus the optimal curve (scores := q)."""
    scores = np.asarray(scores, dtype=float)
    q = np.asarray(q, dtype=float)
    if scores.shape != q.shape or scores.ndim != 1 or scores.size == 0:
        raise DataError("scores and q must be equal-length nonempty vectors")
    if ((q < 0) | (q > 1)).any():
        raise DataError("q values must lie in [0, 1]")
    if q.sum() == 0.0 or (1.0 - q).sum() == 0.0:
        raise DataError("degenerate labels: no positive or no negative mass")
    return _expected_roc(scores, q), _expected_roc(q, q)


@dataclass(frozen=True)
class CvConfig:
    spec: ModelSpec
    k: int = 5
    seed: int = 0
    stratified: bool = True


@dataclass(frozen=True)
class HarnessRow:
    label: str
    precision: float
    recall: float
    f1: float
    fold_f1: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fold_f1": list(self.fold_f1),
        }


def _run_cv(fm: FeatureMatrix, cv: CvConfig) -> CvResult:
    return kfold_cv(
        fm.X, fm.y, cv.spec, k=cv.k, seed=cv.seed, stratified=cv.stratified, y_q=fm.y_q
    )


def _row(label: str, result: CvResult) -> HarnessRow:
    m = result.mean_metrics
    return HarnessRow(
        label=label,
        precision=m.macro_precision,
        recall=m.macro_recall,
        f1=m.macro_f1,
        fold_f1=tuple(result.macro_f1_per_fold),
    )


def ablation_run(fm: FeatureMatrix, group_subsets, cv: CvConfig) -> list[HarnessRow]:
    """One CV run per feature-group subset on identical folds.

    Shared features stay in every run; subsets name group kinds out of
    {liwc, sentiment, lda, tokens}.
    """
    subsets = [tuple(s) for s in group_subsets]
    if not subsets:
        raise DataError("no feature-group subsets given")
    rows = []
    for kinds in subsets:
        sub = select_groups(fm, kinds)
        rows.append(_row("+".join(kinds), _run_cv(sub, cv)))
    return rows


STRATEGY_ORDER = (
    AssemblyStrategy.TARGET_ONLY,
    AssemblyStrategy.AVERAGED,
    AssemblyStrategy.SEPARATE_SYMMETRIC,
)


def strategy_run(threads, resources, cv: CvConfig, include_shared: bool = True):
    """Compare the three assembly strategies on identical folds.

    Partition blocks are featurized once per thread and reassembled per
    strategy. Returns (rows, cv_results) in the fixed strategy order.
    """
    from .features import assemble_from_blocks, featurize_partition, shared_features

    if not threads:
        raise DataError("no threads to compare strategies on")
    blocks = [
        (
            featurize_partition(t.partition.target_posts, resources),
            featurize_partition(t.partition.participant_posts, resources),
            shared_features(t),
        )
        for t in threads
    ]
    rows = []
    results = {}
    for strategy in STRATEGY_ORDER:
        vectors = [
            assemble_from_blocks(bt, bp, sh, strategy, resources, include_shared)
            for bt, bp, sh in blocks
        ]
        fm = FeatureMatrix(
            X=np.vstack([v.values for v in vectors]),
            y=[t.y for t in threads],
            y_q=np.array([t.y_q for t in threads]),
            thread_ids=[t.thread.thread_id for t in threads],
            group_map=vectors[0].group_map,
            feature_names=vectors[0].feature_names,
            strategy=strategy.value,
            fingerprints={},
        )
        result = _run_cv(fm, cv)
        results[strategy.value] = result
        rows.append(_row(strategy.value, result))
    return rows, results


@dataclass(frozen=True)
class GroupImportance:
    group: str
    weights: tuple[tuple[str, float], ...]  # every feature, group-normalized
    top_positive: tuple[tuple[str, float], ...]
    top_negative: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class FeatureImportance:
    groups: dict[str, GroupImportance]


def top_features(model: LinearModel, group_map, feature_names, k: int = 3) -> FeatureImportance:
    """Per-group l2-normalized weights with the strongest signals each way."""
    if model.weights.size == 0:
        raise DataError("model has no feature weights to rank")
    groups = {}
    for name, (start, stop) in group_map.items():
        w = np.asarray(model.weights[start:stop], dtype=float)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            warnings.warn(f"group {name!r} has all-zero weights", stacklevel=2)
            normalized = w
        else:
            normalized = w / norm
        named = [
            (feature_names[start + i].split(".", 1)[-1], float(v))
            for i, v in enumerate(normalized)
        ]
        by_weight = sorted(named, key=lambda item: -item[1])
        top_pos = tuple(item for item in by_weight[:k] if item[1] > 0)
        by_weight_asc = sorted(named, key=lambda item: item[1])
        top_neg = tuple(item for item in by_weight_asc[:k] if item[1] < 0)
        groups[name] = GroupImportance(
            group=name,
            weights=tuple(named),
            top_positive=top_pos,
            top_negative=top_neg,
        )
    return FeatureImportance(groups=groups)


@dataclass(frozen=True)
class ThreadDiagnostics:
    rho_green: float | None
    p_green: float | None
    rho_flagged: float | None
    p_flagged: float | None
    volatility_mean: float
    volatility_median: float

    def to_dict(self) -> dict:
        return {
            "rho_green": self.rho_green,
            "p_green": self.p_green,
            "rho_flagged": self.rho_flagged,
            "p_flagged": self.p_flagged,
            "volatility_mean": self.volatility_mean,
            "volatility_median": self.volatility_median,
        }


def target_state_volatility(thread) -> float:
    """Sample stdev of the probabilistic states of all the initiator's posts."""
    qs = [
        resolve_label(p, thread.label_cfg)[1]
        for p in thread.thread.posts
        if p.author_id == thread.target_user_id
    ]
    return statistics.stdev(qs) if len(qs) > 1 else 0.0


def thread_diagnostics(cv: CvResult, threads) -> ThreadDiagnostics:
    """Correlate thread length with out-of-fold correctness, per final class.

    Also aggregates per-thread target-state volatility. A class with fewer
    than 3 threads has its correlation omitted with a warning.
    """
    if len(threads) != len(cv.y_true):
        raise DataError("CV result and thread list are misaligned")
    correct = [1.0 if cv.oof_pred[i] == cv.y_true[i] else 0.0 for i in range(len(threads))]
    lengths = [float(len(t.thread.posts)) for t in threads]
    rho = {GREEN: None, FLAGGED: None}
    pval = {GREEN: None, FLAGGED: None}
    for cls in (GREEN, FLAGGED):
        idx = [i for i, t in enumerate(threads) if t.y == cls]
        if len(idx) < 3:
            warnings.warn(f"class {cls!r} has fewer than 3 threads; correlation omitted",
                          stacklevel=2)
            continue
        rho[cls], pval[cls] = learn.pearson(
            [lengths[i] for i in idx], [correct[i] for i in idx]
        )
    volatility = [target_state_volatility(t) for t in threads]
    return ThreadDiagnostics(
        rho_green=rho[GREEN],
        p_green=pval[GREEN],
        rho_flagged=rho[FLAGGED],
        p_flagged=pval[FLAGGED],
        volatility_mean=float(np.mean(volatility)),
        volatility_median=float(np.median(volatility)),
    )
