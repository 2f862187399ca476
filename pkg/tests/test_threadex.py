import numpy as np
import pytest

from threadtriage.corpus import FLAGGED, GREEN, Corpus, LabelingConfig
from threadtriage.errors import DataError
from threadtriage.threadex import (
    describe_threads,
    engagement_green_rate,
    extract_flagged,
)

from util import make_flagged_thread, make_thread

CFG = LabelingConfig(tau=0.5)

FLAG_Q = 0.2  # below tau
GREEN_Q = 0.9


def corpus_of(*threads):
    return Corpus({t.thread_id: t for t in threads})


class TestExtractFlagged:
    def test_basic_extraction(self):
        thread = make_thread(["T", "a", "T"], qs=[FLAG_Q, GREEN_Q, GREEN_Q])
        out = extract_flagged(corpus_of(thread), CFG)
        assert len(out) == 1
        ft = out[0]
        assert ft.prediction_index == 2
        assert ft.target_post_count() == 2
        assert ft.y == GREEN
        assert ft.y_q == GREEN_Q

    def test_too_few_target_posts_excluded(self):
        thread = make_thread(["T", "a"], qs=[FLAG_Q, GREEN_Q])
        assert extract_flagged(corpus_of(thread), CFG) == []

    def test_green_initial_excluded(self):
        thread = make_thread(["T", "a", "T"], qs=[GREEN_Q, GREEN_Q, GREEN_Q])
        assert extract_flagged(corpus_of(thread), CFG) == []

    def test_no_participants_excluded(self):
        thread = make_thread(["T", "T", "T"], qs=[FLAG_Q, FLAG_Q, FLAG_Q])
        assert extract_flagged(corpus_of(thread), CFG) == []

    def test_participant_after_final_target_does_not_count(self):
        # the only reply arrives after the last target post
        thread = make_thread(["T", "T", "a"], qs=[FLAG_Q, FLAG_Q, GREEN_Q])
        assert extract_flagged(corpus_of(thread), CFG) == []

    def test_unlabelable_post_names_it(self):
        thread = make_thread(["T", "a", "T"], qs=[FLAG_Q, None, FLAG_Q])
        with pytest.raises(DataError, match="t0_p01"):
            extract_flagged(corpus_of(thread), CFG)

    def test_output_sorted_by_thread_id(self):
        t1 = make_thread(["T", "a", "T"], qs=[FLAG_Q, GREEN_Q, FLAG_Q], thread_id="zz")
        t2 = make_thread(["T", "a", "T"], qs=[FLAG_Q, GREEN_Q, FLAG_Q], thread_id="aa")
        out = extract_flagged(corpus_of(t1, t2), CFG)
        assert [f.thread.thread_id for f in out] == ["aa", "zz"]

    def test_idempotent_on_survivors(self):
        rng = np.random.default_rng(17)
        threads = []
        for i in range(40):
            n = int(rng.integers(2, 8))
            authors = ["T"] + [str(rng.choice(["T", "a", "b"])) for _ in range(n - 1)]
            qs = [float(rng.random()) for _ in range(n)]
            threads.append(make_thread(authors, qs=qs, thread_id=f"t{i:02d}"))
        survivors = extract_flagged(corpus_of(*threads), CFG)
        again = extract_flagged(
            corpus_of(*[f.thread for f in survivors]), CFG
        )
        assert [f.thread.thread_id for f in again] == [
            f.thread.thread_id for f in survivors
        ]
        for ft in survivors:
            assert ft.target_post_count() >= 2
            assert any(
                p.author_id != ft.target_user_id
                for p in ft.thread.posts[: ft.prediction_index]
            )

    def test_removing_only_participant_removes_thread(self):
        thread = make_thread(["T", "a", "T"], qs=[FLAG_Q, GREEN_Q, FLAG_Q])
        assert len(extract_flagged(corpus_of(thread), CFG)) == 1
        shrunk = make_thread(["T", "T"], qs=[FLAG_Q, FLAG_Q])
        assert extract_flagged(corpus_of(shrunk), CFG) == []


def _threads_with_target_counts(counts):
    threads = []
    for i, c in enumerate(counts):
        authors = ["T", "a"] + ["T"] * (c - 1)
        qs = [FLAG_Q] * len(authors)
        threads.append(
            make_flagged_thread(authors, qs=qs, thread_id=f"t{i:02d}", cfg=CFG)
        )
    return threads


class TestDescribeThreads:
    def test_hand_example(self):
        stats = describe_threads(_threads_with_target_counts([2, 2, 3]))
        tp = stats.target_posts
        assert tp.mean == pytest.approx(2.3333, abs=1e-4)
        assert tp.median == 2
        assert tp.mode == 2
        assert tp.stdev == pytest.approx(0.5774, abs=1e-4)
        assert tp.histogram == {2: 2, 3: 1}

    def test_single_thread_degenerate(self):
        stats = describe_threads(_threads_with_target_counts([2]))
        tp = stats.target_posts
        assert (tp.mean, tp.median, tp.mode, tp.stdev) == (2, 2, 2, 0.0)

    def test_mode_tie_breaks_to_smallest(self):
        stats = describe_threads(_threads_with_target_counts([2, 3, 3, 2]))
        assert stats.target_posts.mode == 2

    def test_reply_and_participant_metrics(self):
        thread = make_flagged_thread(
            ["T", "a", "b", "T", "a"], qs=[FLAG_Q] * 5, cfg=CFG
        )
        stats = describe_threads([thread])
        assert stats.replies.mean == 3
        assert stats.participants.mean == 2

    def test_empty_list_rejected(self):
        with pytest.raises(DataError):
            describe_threads([])

    def test_histogram_sums_to_thread_count(self):
        threads = _threads_with_target_counts([2, 2, 3, 4, 4, 4])
        stats = describe_threads(threads)
        assert sum(stats.target_posts.histogram.values()) == len(threads)


def _threads_for_levels(levels, fractions, per_level=10):
    """per_level threads at each engagement level with the given green rate."""
    threads = []
    i = 0
    for level, frac in zip(levels, fractions):
        n_green = round(frac * per_level)
        for j in range(per_level):
            authors = ["T", "a"] + ["T"] * (level - 1)
            final_q = GREEN_Q if j < n_green else FLAG_Q
            qs = [FLAG_Q] * (len(authors) - 1) + [final_q]
            threads.append(
                make_flagged_thread(authors, qs=qs, thread_id=f"t{i:03d}", cfg=CFG)
            )
            i += 1
    return threads


class TestEngagementGreenRate:
    def test_perfectly_linear(self):
        threads = _threads_for_levels([2, 3, 4], [0.9, 0.6, 0.3])
        rows, rho, p = engagement_green_rate(threads)
        assert [(r[0], r[2]) for r in rows] == [(2, 0.9), (3, 0.6), (4, 0.3)]
        assert rho == pytest.approx(-1.0)

    def test_zero_variance_rate(self):
        threads = _threads_for_levels([2, 3, 4], [0.5, 0.5, 0.5])
        with pytest.warns(UserWarning, match="zero variance"):
            rows, rho, p = engagement_green_rate(threads)
        assert rho == 0.0
        assert p == 1.0

    def test_hand_pearson(self):
        # direct Pearson over levels [2,3,4] and fractions [0.8,0.9,0.1]:
        # centered products sum to -0.7, variances 2 and 0.38 -> -0.8030.
        threads = _threads_for_levels([2, 3, 4], [0.8, 0.9, 0.1])
        rows, rho, p = engagement_green_rate(threads)
        assert rho == pytest.approx(-0.8030, abs=1e-4)

    def test_too_few_levels_omits_correlation(self):
        threads = _threads_for_levels([2, 3], [0.8, 0.2])
        with pytest.warns(UserWarning, match="fewer than 3"):
            rows, rho, p = engagement_green_rate(threads)
        assert rho is None and p is None
        assert len(rows) == 2
