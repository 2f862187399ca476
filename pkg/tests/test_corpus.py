import io
import json

import numpy as np
import pytest

from threadtriage.corpus import (
    FLAGGED,
    GREEN,
    LabelingConfig,
    load_corpus,
    partition_window,
    resolve_label,
)
from threadtriage.errors import DataError

from util import make_post, make_thread


def record(post_id, thread_id="t1", ts=0, author="u1", p_green=0.5, manual=None, **extra):
    rec = {
        "post_id": post_id,
        "thread_id": thread_id,
        "author_id": author,
        "timestamp": ts,
        "board": "Tough Times",
        "body": "hello",
        "is_moderator": False,
        "p_green": p_green,
        "manual_label": manual,
    }
    rec.update(extra)
    return json.dumps(rec)


class TestLoadCorpus:
    def test_groups_and_sorts_threads(self):
        lines = [
            record("p2", thread_id="a", ts=5),
            record("p1", thread_id="a", ts=1),
            record("p3", thread_id="b", ts=0),
        ]
        corpus = load_corpus(lines)
        assert corpus.n_threads == 2
        assert corpus.n_posts == 3
        assert [p.post_id for p in corpus.threads["a"].posts] == ["p1", "p2"]

    def test_timestamp_tie_breaks_on_post_id(self):
        lines = [record("pz", ts=7), record("pa", ts=7)]
        corpus = load_corpus(lines)
        assert [p.post_id for p in corpus.threads["t1"].posts] == ["pa", "pz"]

    def test_p_green_out_of_range(self):
        with pytest.raises(DataError, match="label out of range"):
            load_corpus([record("p1", p_green=1.3)])

    def test_duplicate_post_id(self):
        with pytest.raises(DataError, match="duplicate post_id: p1"):
            load_corpus([record("p1"), record("p1", thread_id="t2")])

    def test_missing_required_field(self):
        rec = json.loads(record("p1"))
        del rec["board"]
        with pytest.raises(DataError, match="board"):
            load_corpus([json.dumps(rec)])

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(DataError, match="line 2"):
            load_corpus([record("p1"), "{not json"])

    def test_unknown_field_strict_vs_lenient(self):
        lines = [record("p1", mystery=1)]
        with pytest.raises(DataError, match="unknown field"):
            load_corpus(lines, strict=True)
        with pytest.warns(UserWarning, match="unknown field"):
            corpus = load_corpus(lines, strict=False)
        assert corpus.n_posts == 1

    def test_round_trip_identity(self):
        rng = np.random.default_rng(11)
        lines = [
            record(f"p{i}", thread_id=f"t{i % 3}", ts=int(rng.integers(0, 50)),
                   p_green=float(np.round(rng.random(), 6)))
            for i in range(20)
        ]
        first = load_corpus(lines)
        second = load_corpus(io.StringIO(first.to_jsonl()))
        assert first.to_jsonl() == second.to_jsonl()
        assert first.threads.keys() == second.threads.keys()
        for tid in first.threads:
            assert first.threads[tid].posts == second.threads[tid].posts


class TestResolveLabel:
    def test_probability_above_threshold(self):
        post = make_post("p", p_green=0.80)
        assert resolve_label(post, LabelingConfig(tau=0.7751)) == (GREEN, 0.80)

    def test_boundary_is_flagged(self):
        post = make_post("p", p_green=0.7751)
        assert resolve_label(post, LabelingConfig(tau=0.7751)) == (FLAGGED, 0.7751)

    def test_manual_precedence_gives_degenerate_q(self):
        post = make_post("p", p_green=0.99, manual=FLAGGED)
        assert resolve_label(post, LabelingConfig(prefer_manual=True)) == (FLAGGED, 0.0)
        post = make_post("p", p_green=0.01, manual=GREEN)
        assert resolve_label(post, LabelingConfig(prefer_manual=True)) == (GREEN, 1.0)

    def test_manual_ignored_when_not_preferred(self):
        post = make_post("p", p_green=0.9, manual=FLAGGED)
        assert resolve_label(post, LabelingConfig(prefer_manual=False)) == (GREEN, 0.9)

    def test_manual_fallback_without_probability(self):
        post = make_post("p", p_green=None, manual=GREEN)
        assert resolve_label(post, LabelingConfig(prefer_manual=False)) == (GREEN, 1.0)

    def test_unlabelable(self):
        post = make_post("px", p_green=None)
        with pytest.raises(DataError, match="px"):
            resolve_label(post, LabelingConfig())

    def test_monotone_in_p_green(self):
        cfg = LabelingConfig(tau=0.4)
        rng = np.random.default_rng(0)
        ps = np.sort(rng.random(200))
        labels = [resolve_label(make_post("p", p_green=float(v)), cfg)[0] for v in ps]
        seen_green = False
        for label in labels:
            if label == GREEN:
                seen_green = True
            else:
                assert not seen_green  # once green, higher p stays green


class TestPartitionWindow:
    def test_splits_by_authorship(self):
        thread = make_thread(["T", "a", "T", "a", "T"])
        part = partition_window(thread, 4)
        assert [p.post_id for p in part.target_posts] == ["t0_p00", "t0_p02"]
        assert [p.post_id for p in part.participant_posts] == ["t0_p01", "t0_p03"]

    def test_index_zero_rejected(self):
        thread = make_thread(["T", "a"])
        with pytest.raises(DataError, match="out of range"):
            partition_window(thread, 0)

    def test_non_initiator_index_rejected(self):
        thread = make_thread(["T", "a"])
        with pytest.raises(DataError, match="not authored by initiator"):
            partition_window(thread, 1)

    def test_partition_covers_prefix_exactly(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            authors = ["T"] + [rng.choice(["T", "a", "b"]) for _ in range(n - 1)]
            target_idx = [i for i, a in enumerate(authors) if a == "T"]
            if len(target_idx) < 2:
                continue
            k = target_idx[-1]
            thread = make_thread(authors)
            part = partition_window(thread, k)
            window_ids = {p.post_id for p in thread.posts[:k]}
            got = [p.post_id for p in part.target_posts] + [
                p.post_id for p in part.participant_posts
            ]
            assert len(got) == len(set(got))
            assert set(got) == window_ids
            assert all(p.author_id == "target" for p in part.target_posts)
