"""Selection of flagged-initiated threads and their descriptive statistics.

A thread is kept when its first post resolves to flagged, its initiator wrote
at least two posts, and at least one other user replied before the
initiator's final post (so the interaction is visible inside the prediction
window). The final initiator post is the prediction target.
"""

import statistics
import warnings
from collections import Counter
from dataclasses import dataclass

from . import learn
from .corpus import (
    FLAGGED,
    GREEN,
    Corpus,
    LabelingConfig,
    PostPartition,
    Thread,
    partition_window,
    resolve_label,
)
from .errors import DataError


@dataclass(frozen=True)
class FlaggedThread:
    thread: Thread
    target_user_id: str
    prediction_index: int  # index of the final target-user post
    y_q: float
    y: str
    partition: PostPartition
    label_cfg: LabelingConfig

    def target_post_count(self) -> int:
        return sum(1 for p in self.thread.posts if p.author_id == self.target_user_id)

    def reply_count(self) -> int:
        return len(self.thread.posts) - self.target_post_count()

    def participant_count(self) -> int:
        return len({p.author_id for p in self.thread.posts} - {self.target_user_id})


def extract_flagged(corpus: Corpus, cfg: LabelingConfig) -> list[FlaggedThread]:
    """Apply the extraction filters; output is ordered by thread id."""
    out = []
    for tid in sorted(corpus.threads):
        thread = corpus.threads[tid]
        # Resolving every post up front surfaces unlabelable posts immediately.
        labels = [resolve_label(p, cfg) for p in thread.posts]
        if labels[0][0] != FLAGGED:
            continue
        initiator = thread.initiator_id
        target_idx = [i for i, p in enumerate(thread.posts) if p.author_id == initiator]
        if len(target_idx) < 2:
            continue
        k = target_idx[-1]
        if not any(p.author_id != initiator for p in thread.posts[:k]):
            continue
        y, y_q = labels[k]
        out.append(
            FlaggedThread(
                thread=thread,
                target_user_id=initiator,
                prediction_index=k,
                y_q=y_q,
                y=y,
                partition=partition_window(thread, k),
                label_cfg=cfg,
            )
        )
    return out


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    median: float
    mode: int
    stdev: float
    histogram: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "mode": self.mode,
            "stdev": self.stdev,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


@dataclass(frozen=True)
class ThreadStats:
    target_posts: MetricSummary
    replies: MetricSummary
    participants: MetricSummary


def _summarize(values: list[int]) -> MetricSummary:
    counts = Counter(values)
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)  # tie-break: smallest value
    stdev = statistics.stdev(values) if len(values) > 1 else 0.0
    return MetricSummary(
        mean=statistics.mean(values),
        median=statistics.median(values),
        mode=mode,
        stdev=stdev,
        histogram=dict(counts),
    )


def describe_threads(threads: list[FlaggedThread]) -> ThreadStats:
    """Mean/median/mode/sample-stdev and histograms of the three engagement metrics."""
    if not threads:
        raise DataError("cannot describe an empty thread list")
    return ThreadStats(
        target_posts=_summarize([t.target_post_count() for t in threads]),
        replies=_summarize([t.reply_count() for t in threads]),
        participants=_summarize([t.participant_count() for t in threads]),
    )


def engagement_green_rate(threads: list[FlaggedThread]):
    """Green-outcome rate per engagement level, plus their Pearson correlation.

    Returns (rows, rho, p) where rows are (n_target_posts, n_threads,
    green_fraction) sorted by level. The correlation treats the per-level
    rows unweighted; with fewer than 3 distinct levels it is omitted
    (rho = p = None) with a warning.
    """
    if not threads:
        raise DataError("cannot analyze an empty thread list")
    by_level: dict[int, list[FlaggedThread]] = {}
    for t in threads:
        by_level.setdefault(t.target_post_count(), []).append(t)
    rows = []
    for level in sorted(by_level):
        group = by_level[level]
        green = sum(1 for t in group if t.y == GREEN)
        rows.append((level, len(group), green / len(group)))
    if len(rows) < 3:
        warnings.warn(
            "fewer than 3 distinct engagement levels; correlation omitted", stacklevel=2
        )
        return rows, None, None
    rho, p = learn.pearson([r[0] for r in rows], [r[2] for r in rows])
    return rows, rho, p
