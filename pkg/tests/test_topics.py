import math

import numpy as np
import pytest

from threadtriage.errors import DataError
from threadtriage.synth import planted_topic_docs
from threadtriage.topics import (
    LdaModel,
    fit_lda,
    infer_theta,
    load_model,
    relevance_score,
    relevance_terms,
    save_model,
    topic_conditional,
)

from util import greedy_topic_alignment


def small_corpus(rng, n_docs=20, vocab=("a", "b", "c", "d", "e"), max_len=12):
    return [
        list(rng.choice(vocab, size=int(rng.integers(1, max_len))))
        for _ in range(n_docs)
    ]


class TestConditional:
    def test_hand_value(self):
        # n_d = [1, 0], word counts [2, 0], topic totals [3, 1], V=2, a=b=0.5
        probs = topic_conditional([1, 0], [2, 0], [3, 1], 0.5, 0.5, 2)
        assert probs == pytest.approx([0.8824, 0.1176], abs=1e-4)

    def test_normalized(self):
        probs = topic_conditional([3, 1, 0], [1, 1, 2], [10, 5, 4], 0.1, 0.2, 7)
        assert sum(probs) == pytest.approx(1.0)


class TestFitLda:
    def test_deterministic(self):
        rng = np.random.default_rng(0)
        docs = small_corpus(rng)
        a = fit_lda(docs, n_topics=3, sweeps=20, seed=5)
        b = fit_lda(docs, n_topics=3, sweeps=20, seed=5)
        assert np.array_equal(a.topic_word_counts, b.topic_word_counts)
        assert np.array_equal(a.phi, b.phi)

    def test_single_term_vocabulary(self):
        model = fit_lda([["x"], ["x", "x"]], n_topics=2, sweeps=10, seed=1)
        assert model.phi == pytest.approx(np.ones((2, 1)))

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(DataError, match="vocabulary"):
            fit_lda([[], []], n_topics=2, sweeps=5, seed=0)

    def test_k_below_two_rejected(self):
        with pytest.raises(DataError, match="n_topics"):
            fit_lda([["a"]], n_topics=1, sweeps=5, seed=0)

    def test_count_conservation_every_sweep(self):
        rng = np.random.default_rng(2)
        docs = small_corpus(rng)
        fit_lda(docs, n_topics=3, sweeps=15, seed=3, debug=True)  # asserts inside

    def test_phi_rows_are_distributions(self):
        rng = np.random.default_rng(3)
        model = fit_lda(small_corpus(rng), n_topics=4, sweeps=15, seed=0)
        assert model.phi.min() > 0
        assert np.abs(model.phi.sum(axis=1) - 1.0).max() <= 1e-9
        assert abs(model.p_word.sum() - 1.0) <= 1e-9

    def test_loglik_trend(self):
        docs, _ = planted_topic_docs(60, n_topics=3, words_per_topic=8, seed=4)
        model = fit_lda(docs, n_topics=3, sweeps=80, seed=4)
        assert model.loglik[-1][1] >= model.loglik[0][1]


class TestInferTheta:
    def planted_model(self):
        # topic k emits only terms from its own support
        vocab = ["a0", "a1", "b0", "b1", "c0", "c1"]
        counts = np.zeros((3, 6), dtype=np.int64)
        counts[0, 0:2] = 50
        counts[1, 2:4] = 50
        counts[2, 4:6] = 50
        return LdaModel(
            n_topics=3, vocab=vocab, alpha=0.5, beta=0.01,
            topic_word_counts=counts, seed=0, sweeps=0,
        )

    def test_empty_doc_uniform(self):
        model = self.planted_model()
        theta = infer_theta(model, [], seed=0)
        assert theta == pytest.approx(np.full(3, 1 / 3))

    def test_oov_tokens_skipped(self):
        model = self.planted_model()
        theta = infer_theta(model, ["zzz", "qqq"], seed=0)
        assert theta == pytest.approx(np.full(3, 1 / 3))

    def test_planted_topic_recovered(self):
        model = self.planted_model()
        theta = infer_theta(model, ["c0", "c1", "c0", "c1", "c0"], sweeps=100, seed=0)
        assert int(np.argmax(theta)) == 2

    def test_theta_sums_to_one(self):
        model = self.planted_model()
        rng = np.random.default_rng(5)
        for _ in range(10):
            doc = list(rng.choice(model.vocab + ["oov"], size=int(rng.integers(0, 15))))
            theta = infer_theta(model, doc, sweeps=30, seed=1)
            assert abs(theta.sum() - 1.0) <= 1e-9
            assert (theta >= 0).all()

    def test_deterministic_default_seed(self):
        model = self.planted_model()
        doc = ["a0", "b1", "c0"]
        assert np.array_equal(infer_theta(model, doc), infer_theta(model, doc))


class TestRelevance:
    def crafted_model(self):
        # counts [[3,1],[1,3]], beta=0.5: phi rows (0.7, 0.3) / (0.3, 0.7),
        # equal topic masses so p(w) = (0.5, 0.5)
        return LdaModel(
            n_topics=2, vocab=["u", "v"], alpha=1.0, beta=0.5,
            topic_word_counts=np.array([[3, 1], [1, 3]]), seed=0, sweeps=0,
        )

    def test_scalar_hand_value(self):
        assert relevance_score(0.2, 0.1, 0.6) == pytest.approx(-0.6884, abs=1e-4)

    def test_crafted_model_values(self):
        model = self.crafted_model()
        assert model.phi == pytest.approx(np.array([[0.7, 0.3], [0.3, 0.7]]))
        assert model.p_word == pytest.approx(np.array([0.5, 0.5]))
        ranked = relevance_terms(model, lam=0.6)
        expected_u = 0.6 * math.log(0.7) + 0.4 * math.log(0.7 / 0.5)
        assert ranked[0][0] == ("u", pytest.approx(expected_u))
        assert [t for t, _ in ranked[0]] == ["u", "v"]
        assert [t for t, _ in ranked[1]] == ["v", "u"]

    def test_lambda_one_orders_by_phi(self):
        rng = np.random.default_rng(6)
        model = fit_lda(small_corpus(rng), n_topics=3, sweeps=20, seed=2)
        ranked = relevance_terms(model, lam=1.0)
        for k, terms in enumerate(ranked):
            phis = [model.phi[k, model.vocab_index[t]] for t, _ in terms]
            assert phis == sorted(phis, reverse=True)

    def test_lambda_zero_orders_by_lift(self):
        rng = np.random.default_rng(7)
        model = fit_lda(small_corpus(rng), n_topics=3, sweeps=20, seed=2)
        ranked = relevance_terms(model, lam=0.0)
        for k, terms in enumerate(ranked):
            lifts = [
                model.phi[k, model.vocab_index[t]] / model.p_word[model.vocab_index[t]]
                for t, _ in terms
            ]
            assert lifts == pytest.approx(sorted(lifts, reverse=True))

    def test_top_n_clamps(self):
        model = self.crafted_model()
        assert len(relevance_terms(model, top_n=10)[0]) == 2

    def test_bad_lambda_rejected(self):
        with pytest.raises(DataError):
            relevance_terms(self.crafted_model(), lam=1.5)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        model = fit_lda(small_corpus(rng), n_topics=3, sweeps=20, seed=9)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.vocab == model.vocab
        assert np.array_equal(loaded.topic_word_counts, model.topic_word_counts)
        assert np.array_equal(loaded.phi, model.phi)
        assert np.array_equal(loaded.p_word, model.p_word)
        assert (loaded.alpha, loaded.beta, loaded.seed, loaded.sweeps) == (
            model.alpha, model.beta, model.seed, model.sweeps,
        )

    def test_version_check(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"version": 99}')
        with pytest.raises(DataError, match="version"):
            load_model(path)


class TestTopicRecovery:
    def test_planted_topics_recovered(self):
        docs, supports = planted_topic_docs(200, n_topics=3, words_per_topic=12, seed=1)
        model = fit_lda(docs, n_topics=3, sweeps=120, seed=1)
        assert greedy_topic_alignment(model, supports, top_n=10) >= 0.6
