"""Topic modeling with collapsed Gibbs sampling plus relevance-ranked terms.

The sampler keeps counts in plain Python lists (fast scalar access), draws
one uniform vector per sweep from a seeded generator, and resamples each
token from

    P(z = k | rest) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta)

with the token's own assignment excluded from the counts. Fitted models are
immutable; inference on new documents folds them in against frozen
topic-word counts.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .fileio import atomic_write_text, read_json

MODEL_FORMAT_VERSION = 1


@dataclass
class LdaModel:
    n_topics: int
    vocab: list[str]
    alpha: float
    beta: float
    topic_word_counts: np.ndarray  # (K, V) ints
    seed: int
    sweeps: int
    loglik: list[tuple[int, float]] = field(default_factory=list)
    phi: np.ndarray = None  # (K, V), row-stochastic
    p_word: np.ndarray = None  # (V,), corpus term marginal
    vocab_index: dict = None

    def __post_init__(self):
        counts = np.asarray(self.topic_word_counts, dtype=np.int64)
        if (counts < 0).any():
            raise DataError("negative topic-word count")
        self.topic_word_counts = counts
        topic_totals = counts.sum(axis=1)
        v = counts.shape[1]
        self.phi = (counts + self.beta) / (topic_totals[:, None] + v * self.beta)
        total = topic_totals.sum()
        if total == 0:
            raise DataError("model holds no assigned tokens")
        self.p_word = (topic_totals / total) @ self.phi
        self.vocab_index = {w: i for i, w in enumerate(self.vocab)}


def topic_conditional(doc_topic_counts, word_topic_counts, topic_totals, alpha, beta, n_terms):
    """Normalized collapsed-Gibbs conditional for one token (reference form)."""
    weights = [
        (doc_topic_counts[k] + alpha)
        * (word_topic_counts[k] + beta)
        / (topic_totals[k] + n_terms * beta)
        for k in range(len(topic_totals))
    ]
    total = sum(weights)
    return [w / total for w in weights]


def _check_counts(docs_w, n_dk, n_wk, n_k):
    for d, words in enumerate(docs_w):
        assert sum(n_dk[d]) == len(words), f"doc {d}: topic counts do not sum to length"
    total = sum(len(w) for w in docs_w)
    assert sum(n_k) == total, "topic totals do not sum to the token count"
    assert sum(sum(row) for row in n_wk) == total, "word counts do not sum to the token count"


def _loglik_per_token(docs_w, n_dk, n_wk, n_k, alpha, beta, n_topics, n_terms):
    """Mean in-sample predictive log-likelihood per token under current counts."""
    counts = np.array(n_wk, dtype=float).T  # (K, V)
    phi = (counts + beta) / (np.array(n_k, dtype=float)[:, None] + n_terms * beta)
    total_ll = 0.0
    total_tokens = 0
    for d, words in enumerate(docs_w):
        if not words:
            continue
        theta = (np.array(n_dk[d], dtype=float) + alpha) / (len(words) + n_topics * alpha)
        probs = theta @ phi[:, words]
        total_ll += float(np.log(probs).sum())
        total_tokens += len(words)
    return total_ll / total_tokens if total_tokens else 0.0


def fit_lda(
    docs,
    n_topics: int = 10,
    alpha: float | None = None,
    beta: float = 0.01,
    sweeps: int = 1000,
    seed: int = 0,
    debug: bool = False,
    ll_every: int | None = None,
) -> LdaModel:
    """Fit by collapsed Gibbs sampling; deterministic given the seed.

    alpha defaults to 50 / n_topics. With debug=True, count conservation is
    asserted after every sweep. The log-likelihood trace is recorded every
    *ll_every* sweeps (default: ~20 samples across the run).
    """
    docs = [list(d) for d in docs]
    if not docs:
        raise DataError("no documents to fit")
    if n_topics < 2:
        raise DataError("n_topics must be at least 2")
    if alpha is None:
        alpha = 50.0 / n_topics
    vocab = sorted({t for d in docs for t in d})
    if not vocab:
        raise DataError("empty vocabulary after filtering")
    index = {w: i for i, w in enumerate(vocab)}
    docs_w = [[index[t] for t in d] for d in docs]
    n_terms = len(vocab)
    vbeta = n_terms * beta

    rng = np.random.default_rng(seed)
    n_dk = [[0] * n_topics for _ in docs_w]
    n_wk = [[0] * n_topics for _ in range(n_terms)]
    n_k = [0] * n_topics
    assignments = []
    for d, words in enumerate(docs_w):
        zs = [int(z) for z in rng.integers(0, n_topics, size=len(words))]
        assignments.append(zs)
        row_d = n_dk[d]
        for w, k in zip(words, zs):
            row_d[k] += 1
            n_wk[w][k] += 1
            n_k[k] += 1

    total_tokens = sum(len(w) for w in docs_w)
    if ll_every is None:
        ll_every = max(1, sweeps // 20)
    loglik: list[tuple[int, float]] = [
        (0, _loglik_per_token(docs_w, n_dk, n_wk, n_k, alpha, beta, n_topics, n_terms))
    ]

    weights = [0.0] * n_topics
    topics = range(n_topics)
    for sweep in range(1, sweeps + 1):
        u_all = rng.random(total_tokens)
        ui = 0
        for d, words in enumerate(docs_w):
            row_d = n_dk[d]
            zs = assignments[d]
            for j, w in enumerate(words):
                k_old = zs[j]
                row_d[k_old] -= 1
                row_w = n_wk[w]
                row_w[k_old] -= 1
                n_k[k_old] -= 1
                total = 0.0
                for k in topics:
                    wt = (row_d[k] + alpha) * (row_w[k] + beta) / (n_k[k] + vbeta)
                    weights[k] = wt
                    total += wt
                u = u_all[ui] * total
                ui += 1
                acc = 0.0
                k_new = n_topics - 1
                for k in topics:
                    acc += weights[k]
                    if u < acc:
                        k_new = k
                        break
                zs[j] = k_new
                row_d[k_new] += 1
                row_w[k_new] += 1
                n_k[k_new] += 1
        if debug:
            _check_counts(docs_w, n_dk, n_wk, n_k)
        if sweep % ll_every == 0 or sweep == sweeps:
            loglik.append(
                (sweep, _loglik_per_token(docs_w, n_dk, n_wk, n_k, alpha, beta,
                                          n_topics, n_terms))
            )

    counts = np.array(n_wk, dtype=np.int64).T  # (K, V)
    return LdaModel(
        n_topics=n_topics,
        vocab=vocab,
        alpha=alpha,
        beta=beta,
        topic_word_counts=counts,
        seed=seed,
        sweeps=sweeps,
        loglik=loglik,
    )


def infer_theta(model: LdaModel, tokens, sweeps: int = 200, seed: int | None = None) -> np.ndarray:
    """Fold-in topic mixture for a new document against frozen model counts.

    Out-of-vocabulary tokens are skipped; a document with no known tokens
    gets the uniform prior mixture. The returned vector averages
    (n_dk + alpha) / (N + K*alpha) over the last half of the sweeps.
    """
    if sweeps < 1:
        raise DataError("inference needs at least one sweep")
    k_topics = model.n_topics
    words = [model.vocab_index[t] for t in tokens if t in model.vocab_index]
    if not words:
        return np.full(k_topics, 1.0 / k_topics)
    rng = np.random.default_rng(model.seed if seed is None else seed)
    vbeta = len(model.vocab) * model.beta
    topic_totals = model.topic_word_counts.sum(axis=1)
    # Frozen per-token topic likelihoods; only the doc-topic counts move.
    like = {
        w: [
            (int(model.topic_word_counts[k, w]) + model.beta) / (int(topic_totals[k]) + vbeta)
            for k in range(k_topics)
        ]
        for w in set(words)
    }
    alpha = model.alpha
    n_d = [0] * k_topics
    zs = [int(z) for z in rng.integers(0, k_topics, size=len(words))]
    for k in zs:
        n_d[k] += 1

    keep_from = max(1, sweeps - sweeps // 2 + 1)  # average over the last half
    acc = np.zeros(k_topics)
    kept = 0
    weights = [0.0] * k_topics
    topics = range(k_topics)
    for sweep in range(1, sweeps + 1):
        u_all = rng.random(len(words))
        for j, w in enumerate(words):
            k_old = zs[j]
            n_d[k_old] -= 1
            lk = like[w]
            total = 0.0
            for k in topics:
                wt = (n_d[k] + alpha) * lk[k]
                weights[k] = wt
                total += wt
            u = u_all[j] * total
            running = 0.0
            k_new = k_topics - 1
            for k in topics:
                running += weights[k]
                if u < running:
                    k_new = k
                    break
            zs[j] = k_new
            n_d[k_new] += 1
        if sweep >= keep_from:
            acc += np.array(n_d, dtype=float) + alpha
            kept += 1
    theta = acc / (kept * (len(words) + k_topics * alpha))
    return theta


def relevance_score(phi_kw: float, p_w: float, lam: float) -> float:
    """Scalar form of the term-relevance score (natural logarithms)."""
    import math

    return lam * math.log(phi_kw) + (1.0 - lam) * math.log(phi_kw / p_w)


def relevance_terms(model: LdaModel, lam: float = 0.6, top_n: int | None = None):
    """Rank each topic's terms by lam*log(phi) + (1-lam)*log(phi / p(w)).

    Natural logarithms; ties broken by vocabulary order. Returns one
    descending (term, relevance) list per topic.
    """
    if not 0.0 <= lam <= 1.0:
        raise DataError("relevance lambda must lie in [0, 1]")
    if (model.p_word <= 0).any():
        raise DataError("term marginal contains zero mass")
    log_phi = np.log(model.phi)
    log_lift = log_phi - np.log(model.p_word)[None, :]
    relevance = lam * log_phi + (1.0 - lam) * log_lift
    out = []
    for k in range(model.n_topics):
        order = sorted(range(len(model.vocab)), key=lambda i: (-relevance[k, i], i))
        if top_n is not None:
            order = order[:top_n]
        out.append([(model.vocab[i], float(relevance[k, i])) for i in order])
    return out


def save_model(model: LdaModel, path) -> None:
    """Persist as versioned JSON with integral counts; phi/p(w) recompute on load."""
    import json

    payload = {
        "version": MODEL_FORMAT_VERSION,
        "n_topics": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "vocab": model.vocab,
        "topic_word_counts": model.topic_word_counts.tolist(),
        "seed": model.seed,
        "sweeps": model.sweeps,
    }
    atomic_write_text(path, json.dumps(payload, sort_keys=True) + "\n")


def load_model(path) -> LdaModel:
    payload = read_json(path)
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {payload.get('version')!r}")
    return LdaModel(
        n_topics=payload["n_topics"],
        vocab=list(payload["vocab"]),
        alpha=payload["alpha"],
        beta=payload["beta"],
        topic_word_counts=np.array(payload["topic_word_counts"], dtype=np.int64),
        seed=payload["seed"],
        sweeps=payload["sweeps"],
    )
