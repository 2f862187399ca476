"""Feature extraction: tf-idf vocabulary, per-partition blocks, assembly.

Each side of a thread window (initiator posts vs everyone else's) is
concatenated into one pseudo-document and scored with four feature groups:
category-lexicon rates, mean sentiment, a topic mixture, and an l2-normalized
tf-idf vector. Thread-level shared features (first-reply likelihood and
window post counts) ride along with every assembly strategy.
"""

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import resolve_label
from .errors import DataError
from .fileio import atomic_write_text, read_json
from .textproc import (
    CategoryLexicon,
    SentimentLexicon,
    category_rates,
    is_numeric_token,
    sentiment_score,
    tokenize,
)
from .threadex import FlaggedThread
from .topics import LdaModel, infer_theta


@dataclass(frozen=True)
class TfidfVocab:
    terms: tuple[str, ...]
    df: tuple[int, ...]
    idf: np.ndarray
    n_docs: int
    min_df: int
    stopwords: frozenset[str]

    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}


def build_tfidf_vocab(doc_tokens, min_df: int = 5, stopwords=frozenset()) -> TfidfVocab:
    """Count document frequency at post granularity and keep informative terms.

    Stopwords, numeric tokens, and terms in fewer than min_df posts are
    dropped. idf(w) = ln((N + 1) / (df(w) + 1)) + 1.
    """
    stopwords = frozenset(stopwords)
    df: dict[str, int] = {}
    n_docs = 0
    for tokens in doc_tokens:
        n_docs += 1
        for term in set(tokens):
            if term in stopwords or is_numeric_token(term):
                continue
            df[term] = df.get(term, 0) + 1
    if n_docs == 0:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = sorted(t for t, c in df.items() if c >= min_df)
    if not kept:
        raise DataError(
            f"empty vocabulary after filtering (min_df={min_df}); lower min_df"
        )
    counts = tuple(df[t] for t in kept)
    idf = np.array([math.log((n_docs + 1) / (c + 1)) + 1.0 for c in counts])
    return TfidfVocab(
        terms=tuple(kept),
        df=counts,
        idf=idf,
        n_docs=n_docs,
        min_df=min_df,
        stopwords=stopwords,
    )


def tfidf_vector(tokens, vocab: TfidfVocab) -> np.ndarray:
    """Raw counts times idf, l2-normalized; all-out-of-vocabulary input gives zeros."""
    vec = np.zeros(len(vocab.terms))
    index = vocab.index()
    for token in tokens:
        i = index.get(token)
        if i is not None:
            vec[i] += 1.0
    vec *= vocab.idf
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


class AssemblyStrategy(str, Enum):
    TARGET_ONLY = "target_only"
    AVERAGED = "averaged"
    SEPARATE_SYMMETRIC = "separate_symmetric"


@dataclass(frozen=True)
class FeatureResources:
    category_lexicon: CategoryLexicon
    sentiment_lexicon: SentimentLexicon
    lda_model: LdaModel
    tfidf_vocab: TfidfVocab
    lda_infer_sweeps: int = 200
    lda_infer_seed: int | None = None


@dataclass(frozen=True)
class FeatureBlock:
    liwc: np.ndarray
    sentiment: tuple[float, float]
    lda: np.ndarray
    tokens: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.liwc, np.array(self.sentiment), self.lda, self.tokens])


@dataclass(frozen=True)
class SharedFeatures:
    first_reply_q: float
    n_target_posts: int
    n_participant_posts: int
    n_moderator_posts: int

    def to_vector(self) -> np.ndarray:
        return np.array(
            [
                self.first_reply_q,
                float(self.n_target_posts),
                float(self.n_participant_posts),
                float(self.n_moderator_posts),
            ]
        )


def featurize_partition(posts, resources: FeatureResources) -> FeatureBlock:
    """Score one window side as a single newline-joined pseudo-document.

    An empty side yields the defined defaults: zero category rates, (0, 0)
    sentiment, the uniform topic mixture, and a zero token vector.
    """
    k = resources.lda_model.n_topics
    if not posts:
        return FeatureBlock(
            liwc=np.zeros(resources.category_lexicon.n_categories),
            sentiment=(0.0, 0.0),
            lda=np.full(k, 1.0 / k),
            tokens=np.zeros(len(resources.tfidf_vocab.terms)),
        )
    text = "\n".join(p.body for p in posts)
    tokens = tokenize(text)
    return FeatureBlock(
        liwc=category_rates(tokens, resources.category_lexicon),
        sentiment=sentiment_score(tokens, resources.sentiment_lexicon),
        lda=infer_theta(
            resources.lda_model,
            tokens,
            sweeps=resources.lda_infer_sweeps,
            seed=resources.lda_infer_seed,
        ),
        tokens=tfidf_vector(tokens, resources.tfidf_vocab),
    )


def shared_features(thread: FlaggedThread) -> SharedFeatures:
    """Thread-level signals measured inside the prediction window."""
    participants = thread.partition.participant_posts
    if not participants:
        raise DataError(
            f"thread {thread.thread.thread_id}: no participant post in window"
        )
    first_reply = min(participants, key=lambda p: (p.timestamp, p.post_id))
    _, q = resolve_label(first_reply, thread.label_cfg)
    window = thread.partition.window()
    return SharedFeatures(
        first_reply_q=q,
        n_target_posts=len(thread.partition.target_posts),
        n_participant_posts=len(participants),
        n_moderator_posts=sum(1 for p in window if p.is_moderator),
    )


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    group_map: dict[str, tuple[int, int]]  # name -> [start, stop)
    feature_names: tuple[str, ...]


def _block_layout(resources: FeatureResources):
    lex_names = resources.category_lexicon.category_names
    k = resources.lda_model.n_topics
    groups = [
        ("liwc", list(lex_names)),
        ("sent", ["polarity", "subjectivity"]),
        ("lda", [f"topic_{i + 1}" for i in range(k)]),
        ("tok", list(resources.tfidf_vocab.terms)),
    ]
    return groups

SHARED_NAMES = ("first_reply_q", "n_target_posts", "n_participant_posts", "n_moderator_posts")


def _averaged_block(a: FeatureBlock, b: FeatureBlock) -> FeatureBlock:
    tok = (a.tokens + b.tokens) / 2.0
    norm = np.linalg.norm(tok)
    if norm > 0:
        tok = tok / norm  # averaging breaks the unit norm; restore it
    return FeatureBlock(
        liwc=(a.liwc + b.liwc) / 2.0,
        sentiment=(
            (a.sentiment[0] + b.sentiment[0]) / 2.0,
            (a.sentiment[1] + b.sentiment[1]) / 2.0,
        ),
        lda=(a.lda + b.lda) / 2.0,
        tokens=tok,
    )


def assemble_from_blocks(
    target_block: FeatureBlock,
    participant_block: FeatureBlock,
    shared: SharedFeatures,
    strategy: AssemblyStrategy,
    resources: FeatureResources,
    include_shared: bool = True,
) -> FeatureVector:
    strategy = AssemblyStrategy(strategy)
    layout = _block_layout(resources)
    if strategy is AssemblyStrategy.SEPARATE_SYMMETRIC:
        blocks = [("t", target_block), ("p", participant_block)]
    elif strategy is AssemblyStrategy.AVERAGED:
        blocks = [("t", _averaged_block(target_block, participant_block))]
    elif strategy is AssemblyStrategy.TARGET_ONLY:
        blocks = [("t", target_block)]
    else:  # pragma: no cover
        raise DataError(f"unknown strategy {strategy!r}")

    pieces = []
    names: list[str] = []
    group_map: dict[str, tuple[int, int]] = {}
    pos = 0
    for suffix, block in blocks:
        parts = {
            "liwc": block.liwc,
            "sent": np.array(block.sentiment),
            "lda": block.lda,
            "tok": block.tokens,
        }
        for group, member_names in layout:
            vec = parts[group]
            group_map[f"{group}_{suffix}"] = (pos, pos + len(vec))
            names.extend(f"{group}_{suffix}.{m}" for m in member_names)
            pieces.append(vec)
            pos += len(vec)
    if include_shared:
        vec = shared.to_vector()
        group_map["shared"] = (pos, pos + len(vec))
        names.extend(f"shared.{m}" for m in SHARED_NAMES)
        pieces.append(vec)
        pos += len(vec)
    return FeatureVector(
        values=np.concatenate(pieces),
        group_map=group_map,
        feature_names=tuple(names),
    )


def assemble(
    thread: FlaggedThread,
    strategy: AssemblyStrategy,
    resources: FeatureResources,
    include_shared: bool = True,
) -> FeatureVector:
    """Build the final vector for one extracted thread under a strategy."""
    target_block = featurize_partition(thread.partition.target_posts, resources)
    participant_block = featurize_partition(thread.partition.participant_posts, resources)
    return assemble_from_blocks(
        target_block,
        participant_block,
        shared_features(thread),
        strategy,
        resources,
        include_shared=include_shared,
    )


@dataclass
class FeatureMatrix:
    X: np.ndarray
    y: list[str]
    y_q: np.ndarray
    thread_ids: list[str]
    group_map: dict[str, tuple[int, int]]
    feature_names: tuple[str, ...]
    strategy: str
    fingerprints: dict[str, str]

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]


def assemble_dataset(
    threads,
    resources: FeatureResources,
    strategy: AssemblyStrategy,
    include_shared: bool = True,
    fingerprints: dict | None = None,
) -> FeatureMatrix:
    if not threads:
        raise DataError("no threads to featurize")
    vectors = [assemble(t, strategy, resources, include_shared) for t in threads]
    first = vectors[0]
    return FeatureMatrix(
        X=np.vstack([v.values for v in vectors]),
        y=[t.y for t in threads],
        y_q=np.array([t.y_q for t in threads]),
        thread_ids=[t.thread.thread_id for t in threads],
        group_map=first.group_map,
        feature_names=first.feature_names,
        strategy=AssemblyStrategy(strategy).value,
        fingerprints=dict(fingerprints or {}),
    )


def select_groups(fm: FeatureMatrix, kinds) -> FeatureMatrix:
    """Restrict a matrix to feature-group kinds; the shared range always stays.

    Kinds are the group families: liwc, sentiment, lda, tokens.
    """
    prefix_of = {"liwc": "liwc", "sentiment": "sent", "lda": "lda", "tokens": "tok"}
    unknown = [k for k in kinds if k not in prefix_of]
    if unknown:
        raise DataError(f"unknown feature group kind(s): {', '.join(unknown)}")
    prefixes = {prefix_of[k] for k in kinds}
    keep = [
        name
        for name in fm.group_map
        if name == "shared" or name.split("_")[0] in prefixes
    ]
    cols: list[int] = []
    new_map: dict[str, tuple[int, int]] = {}
    pos = 0
    for name in keep:
        start, stop = fm.group_map[name]
        cols.extend(range(start, stop))
        new_map[name] = (pos, pos + (stop - start))
        pos += stop - start
    return FeatureMatrix(
        X=fm.X[:, cols],
        y=list(fm.y),
        y_q=fm.y_q.copy(),
        thread_ids=list(fm.thread_ids),
        group_map=new_map,
        feature_names=tuple(fm.feature_names[c] for c in cols),
        strategy=fm.strategy,
        fingerprints=dict(fm.fingerprints),
    )


# Persistence: a header JSON plus a dense CSV for the non-token columns and a
# coordinate list for the sparse token columns.

def save_feature_matrix(fm: FeatureMatrix, directory) -> None:
    from pathlib import Path

    directory = Path(directory)
    token_ranges = [r for name, r in fm.group_map.items() if name.startswith("tok")]
    token_cols = sorted(c for start, stop in token_ranges for c in range(start, stop))
    token_set = set(token_cols)
    dense_cols = [c for c in range(fm.X.shape[1]) if c not in token_set]

    header = {
        "format_version": 1,
        "strategy": fm.strategy,
        "n_rows": fm.n_rows,
        "n_cols": fm.X.shape[1],
        "group_map": {k: list(v) for k, v in fm.group_map.items()},
        "feature_names": list(fm.feature_names),
        "dense_columns": dense_cols,
        "thread_ids": fm.thread_ids,
        "labels": fm.y,
        "y_q": [repr(float(v)) for v in fm.y_q],
        "fingerprints": fm.fingerprints,
    }
    buf = io.StringIO()
    writer = csv.writer(buf)
    for row in fm.X[:, dense_cols]:
        writer.writerow([repr(float(v)) for v in row])
    coo = io.StringIO()
    writer = csv.writer(coo)
    writer.writerow(["row", "col", "value"])
    for r, c in zip(*np.nonzero(fm.X[:, token_cols] if token_cols else np.zeros((0, 0)))):
        writer.writerow([int(r), token_cols[int(c)], repr(float(fm.X[r, token_cols[int(c)]]))])

    import json

    atomic_write_text(directory / "header.json", json.dumps(header, sort_keys=True, indent=2) + "\n")
    atomic_write_text(directory / "dense.csv", buf.getvalue())
    atomic_write_text(directory / "tokens.coo.csv", coo.getvalue())


def load_feature_matrix(directory) -> FeatureMatrix:
    from pathlib import Path

    directory = Path(directory)
    header = read_json(directory / "header.json")
    if header.get("format_version") != 1:
        raise DataError("unsupported feature matrix format")
    n_rows, n_cols = header["n_rows"], header["n_cols"]
    X = np.zeros((n_rows, n_cols))
    dense_cols = header["dense_columns"]
    with open(directory / "dense.csv", newline="", encoding="utf-8") as fh:
        for r, row in enumerate(csv.reader(fh)):
            for c, value in zip(dense_cols, row):
                X[r, c] = float(value)
    with open(directory / "tokens.coo.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)  # header row
        for row in reader:
            X[int(row[0]), int(row[1])] = float(row[2])
    return FeatureMatrix(
        X=X,
        y=list(header["labels"]),
        y_q=np.array([float(v) for v in header["y_q"]]),
        thread_ids=list(header["thread_ids"]),
        group_map={k: tuple(v) for k, v in header["group_map"].items()},
        feature_names=tuple(header["feature_names"]),
        strategy=header["strategy"],
        fingerprints=dict(header.get("fingerprints", {})),
    )
