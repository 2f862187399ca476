"""Forum corpus handling: JSONL ingestion, label resolution, prediction windows.

Each post carries a probabilistic label ``p_green`` (likelihood that its author
is out of distress) and, optionally, a manual annotation. Posts sharing a
``thread_id`` form a thread ordered by ``(timestamp, post_id)``; the thread's
initiator is the author of its first post. All structures are immutable after
loading, so they are safe to share across workers.
"""

import json
import warnings
from dataclasses import dataclass

from .errors import DataError

FLAGGED = "flagged"
GREEN = "green"
LABELS = (FLAGGED, GREEN)

POST_FIELDS = (
    "post_id",
    "thread_id",
    "author_id",
    "timestamp",
    "board",
    "body",
    "is_moderator",
    "p_green",
    "manual_label",
)
_OPTIONAL = frozenset({"p_green", "manual_label"})


@dataclass(frozen=True)
class Post:
    post_id: str
    thread_id: str
    author_id: str
    timestamp: int
    board: str
    body: str
    is_moderator: bool
    p_green: float | None = None
    manual_label: str | None = None

    def to_record(self) -> dict:
        return {name: getattr(self, name) for name in POST_FIELDS}


@dataclass(frozen=True)
class Thread:
    """A nonempty post sequence sorted by (timestamp, post_id)."""

    thread_id: str
    posts: tuple[Post, ...]

    @property
    def initiator_id(self) -> str:
        return self.posts[0].author_id


@dataclass(frozen=True)
class LabelingConfig:
    """How probabilistic and manual labels are turned into binary states."""

    tau: float = 0.7751
    prefer_manual: bool = True

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise DataError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class PostPartition:
    """A prediction window split into initiator posts and everyone else's."""

    target_posts: tuple[Post, ...]
    participant_posts: tuple[Post, ...]

    def window(self) -> tuple[Post, ...]:
        """All window posts back in thread order."""
        merged = sorted(
            self.target_posts + self.participant_posts,
            key=lambda p: (p.timestamp, p.post_id),
        )
        return tuple(merged)


class Corpus:
    """Threads indexed by id."""

    def __init__(self, threads: dict[str, Thread]):
        self.threads = threads

    @property
    def n_threads(self) -> int:
        return len(self.threads)

    @property
    def n_posts(self) -> int:
        return sum(len(t.posts) for t in self.threads.values())

    def iter_posts(self):
        for tid in sorted(self.threads):
            yield from self.threads[tid].posts

    def to_jsonl(self) -> str:
        """Canonical serialization: threads by id, posts in thread order."""
        lines = [json.dumps(p.to_record(), ensure_ascii=False) for p in self.iter_posts()]
        return "\n".join(lines) + ("\n" if lines else "")


def _parse_record(obj: dict, line_no: int, strict: bool) -> Post:
    missing = [f for f in POST_FIELDS if f not in obj and f not in _OPTIONAL]
    if missing:
        raise DataError(f"line {line_no}: missing required field(s): {', '.join(missing)}")
    unknown = sorted(set(obj) - set(POST_FIELDS))
    if unknown:
        msg = f"line {line_no}: unknown field(s): {', '.join(unknown)}"
        if strict:
            raise DataError(msg)
        warnings.warn(msg, stacklevel=3)

    def need(name, typ):
        value = obj.get(name)
        if isinstance(value, bool) is not (typ is bool) or not isinstance(value, typ):
            raise DataError(f"line {line_no}: field {name!r} has invalid type")
        return value

    post_id = need("post_id", str)
    p_green = obj.get("p_green")
    if p_green is not None:
        if isinstance(p_green, bool) or not isinstance(p_green, (int, float)):
            raise DataError(f"line {line_no}: post {post_id}: p_green must be a number")
        if not 0.0 <= p_green <= 1.0:
            raise DataError(
                f"line {line_no}: post {post_id}: label out of range: p_green={p_green}"
            )
        p_green = float(p_green)
    manual = obj.get("manual_label")
    if manual is not None and manual not in LABELS:
        raise DataError(f"line {line_no}: post {post_id}: bad manual_label {manual!r}")
    return Post(
        post_id=post_id,
        thread_id=need("thread_id", str),
        author_id=need("author_id", str),
        timestamp=need("timestamp", int),
        board=need("board", str),
        body=need("body", str),
        is_moderator=need("is_moderator", bool),
        p_green=p_green,
        manual_label=manual,
    )


def load_corpus(lines, strict: bool = False) -> Corpus:
    """Parse line-delimited post records into a thread-indexed corpus.

    Aborts with a DataError (naming the offending line or post) on malformed
    JSON, missing fields, out-of-range labels, or duplicate post ids.
    """
    seen: set[str] = set()
    by_thread: dict[str, list[Post]] = {}
    for line_no, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {line_no}: malformed JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise DataError(f"line {line_no}: record is not an object")
        post = _parse_record(obj, line_no, strict)
        if post.post_id in seen:
            raise DataError(f"line {line_no}: duplicate post_id: {post.post_id}")
        seen.add(post.post_id)
        by_thread.setdefault(post.thread_id, []).append(post)

    threads = {}
    for tid, posts in by_thread.items():
        posts.sort(key=lambda p: (p.timestamp, p.post_id))
        threads[tid] = Thread(thread_id=tid, posts=tuple(posts))
    return Corpus(threads)


def load_corpus_file(path, strict: bool = False) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return load_corpus(fh, strict=strict)


def resolve_label(post: Post, cfg: LabelingConfig) -> tuple[str, float]:
    """Resolve a post to a binary state plus the probability mass behind it.

    Manual labels (when preferred and present) map to the degenerate
    probabilities 1.0 / 0.0 so every labeled post carries a usable q.
    Probabilistic labels binarize strictly: green only when p_green > tau,
    which keeps boundary cases on the at-risk side.
    """
    manual = post.manual_label
    if cfg.prefer_manual and manual is not None:
        return manual, (1.0 if manual == GREEN else 0.0)
    if post.p_green is not None:
        label = GREEN if post.p_green > cfg.tau else FLAGGED
        return label, post.p_green
    if manual is not None:
        return manual, (1.0 if manual == GREEN else 0.0)
    raise DataError(f"post {post.post_id} is unlabelable: no p_green or manual_label")


def partition_window(thread: Thread, prediction_index: int) -> PostPartition:
    """Split posts[0:prediction_index) by authorship; the predicted post is excluded."""
    if not 0 < prediction_index < len(thread.posts):
        raise DataError(
            f"thread {thread.thread_id}: prediction_index {prediction_index} out of range"
        )
    predicted = thread.posts[prediction_index]
    if predicted.author_id != thread.initiator_id:
        raise DataError(
            f"thread {thread.thread_id}: post at index {prediction_index} "
            f"not authored by initiator"
        )
    window = thread.posts[:prediction_index]
    target = tuple(p for p in window if p.author_id == thread.initiator_id)
    participants = tuple(p for p in window if p.author_id != thread.initiator_id)
    return PostPartition(target_posts=target, participant_posts=participants)
