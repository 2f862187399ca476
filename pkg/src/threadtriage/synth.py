"""Seeded synthetic forum corpora with planted dynamics and topic structure.

Each thread starts with a distressed initiator. Replies arrive with a
configurable chance of being supportive; after each block of replies the
initiator posts again, and that post is green with probability

    (base_green_transition + supportive_boost * supportive_fraction_of_block)
    * LENGTH_ATTENUATION ** (n_replies - 1)

so heavily engaged (long) threads trend flagged, mirroring the negative
engagement/outcome relationship the pipeline is meant to detect. Post bodies
mix words from disjoint-support planted topics conditioned on role and state;
the distress topic is shared between distressed initiator posts and
supportive replies (empathy mirrors distress vocabulary), which plants an
asymmetric signal that only separate target/participant features preserve.

Emitted probabilistic labels are the true state indicator, flipped with
probability label_noise, then jittered uniformly within its side of the
binarization threshold.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .corpus import FLAGGED, GREEN
from .errors import DataError

# Fixed generator constants (not part of the public config surface).
LENGTH_ATTENUATION = 0.90  # green-transition decay per reply beyond the first
TARGET_FOLLOWUP_RATE = 0.45  # chance a reply gap hosts an intermediate target post
NEUTRAL_FLAGGED_RATE = 0.25  # neutral repliers occasionally sound distressed too
MODERATOR_RATE = 0.15
PRIMARY_TOPIC_WEIGHT = 0.70
SUPPORTIVE_TOPIC_SPLIT = 0.60  # supportive replies: 60% distress vocab, 35% support vocab
BODY_LENGTH_MIN = 6
BODY_LENGTH_MEAN_EXTRA = 14.0
BOARDS = ("Tough Times", "Wellbeing", "Hang out", "Introduction")
BOARD_WEIGHTS = (0.45, 0.35, 0.12, 0.08)

_DISTRESS_WORDS = [
    "scared", "alone", "tired", "hurting", "hopeless", "crying", "panic",
    "worthless", "empty", "afraid", "anxious", "numb", "dark", "worse",
    "overwhelmed", "stuck",
]
_RECOVERY_WORDS = [
    "thanks", "better", "hope", "calmer", "proud", "relieved", "brighter",
    "stronger", "grateful", "managing", "progress", "lighter", "easier",
    "hopeful", "okay", "improving",
]
_SUPPORT_WORDS = [
    "here", "listening", "welcome", "support", "care", "together", "gentle",
    "breathe", "reach", "safe", "kind", "understand", "sharing", "community",
    "courage", "beside",
]
_GENERIC_WORDS = [
    "school", "work", "music", "weather", "weekend", "game", "movie", "study",
    "sleep", "coffee", "family", "home", "walk", "book", "friend", "team",
]
_SEED_WORDS = (_DISTRESS_WORDS, _RECOVERY_WORDS, _SUPPORT_WORDS, _GENERIC_WORDS)

ROLE_TARGET = "target"
ROLE_SUPPORTIVE = "participant-supportive"
ROLE_NEUTRAL = "participant-neutral"


@dataclass(frozen=True)
class SynthConfig:
    n_threads: int = 1000
    vocab_size: int = 180
    n_planted_topics: int = 3
    base_green_transition: float = 0.15
    supportive_boost: float = 0.80
    supportive_rate: float = 0.50
    mean_replies: float = 5.0
    label_noise: float = 0.05
    seed: int = 42

    def __post_init__(self):
        if self.n_threads < 1:
            raise DataError(f"invalid config field n_threads={self.n_threads}")
        if self.n_planted_topics < 2:
            raise DataError(f"invalid config field n_planted_topics={self.n_planted_topics}")
        if self.vocab_size < 2 * self.n_planted_topics:
            raise DataError(f"invalid config field vocab_size={self.vocab_size}")
        if not 0.0 < self.base_green_transition < 1.0:
            raise DataError(
                f"invalid config field base_green_transition={self.base_green_transition}"
            )
        if self.supportive_boost < 0.0:
            raise DataError(f"invalid config field supportive_boost={self.supportive_boost}")
        if self.base_green_transition + self.supportive_boost > 1.0:
            raise DataError(
                "invalid config field supportive_boost: "
                "base_green_transition + supportive_boost exceeds 1"
            )
        if not 0.0 <= self.supportive_rate <= 1.0:
            raise DataError(f"invalid config field supportive_rate={self.supportive_rate}")
        if self.mean_replies <= 0.0:
            raise DataError(f"invalid config field mean_replies={self.mean_replies}")
        if not 0.0 <= self.label_noise <= 0.3:
            raise DataError(f"invalid config field label_noise={self.label_noise}")


@dataclass(frozen=True)
class GroundTruth:
    post_rows: tuple[tuple[str, str, str], ...]  # (post_id, role, state)
    thread_final: dict[str, str]  # thread_id -> final target state

    def posts_csv(self) -> str:
        lines = ["post_id,role,state"]
        lines.extend(f"{pid},{role},{state}" for pid, role, state in self.post_rows)
        return "\n".join(lines) + "\n"

    def threads_csv(self) -> str:
        lines = ["thread_id,final_state"]
        lines.extend(f"{tid},{self.thread_final[tid]}" for tid in sorted(self.thread_final))
        return "\n".join(lines) + "\n"


def planted_topic_vocab(vocab_size: int, n_topics: int) -> list[list[str]]:
    """Disjoint word supports per topic, seeded with themed English words."""
    base = vocab_size // n_topics
    sizes = [base + (1 if t < vocab_size % n_topics else 0) for t in range(n_topics)]
    supports = []
    for t in range(n_topics):
        words = list(_SEED_WORDS[t % len(_SEED_WORDS)]) if t < len(_SEED_WORDS) else []
        words = words[: sizes[t]]
        idx = 0
        while len(words) < sizes[t]:
            words.append(f"w{t}x{idx:03d}")
            idx += 1
        supports.append(words)
    flat = [w for s in supports for w in s]
    assert len(flat) == len(set(flat)), "planted topic supports must be disjoint"
    return supports


def expected_green_prevalence(cfg: SynthConfig) -> float:
    """Closed-form expectation of the final-state green rate.

    The final target post is green with probability
    (base + boost * F) * a^(r-1) where F has mean supportive_rate for any
    block size and r - 1 is Poisson with mean (mean_replies - 1), so the
    expectation factorizes to
    (base + boost * supportive_rate) * exp(-(mean_replies - 1) * (1 - a)).
    """
    lam = max(0.0, cfg.mean_replies - 1.0)
    return (cfg.base_green_transition + cfg.supportive_boost * cfg.supportive_rate) * math.exp(
        -lam * (1.0 - LENGTH_ATTENUATION)
    )


def _body(rng, supports, primary: int | None, secondary: int | None, n_topics: int) -> str:
    length = BODY_LENGTH_MIN + int(rng.poisson(BODY_LENGTH_MEAN_EXTRA))
    words = []
    for _ in range(length):
        u = rng.random()
        if primary is None:
            topic = int(rng.integers(0, n_topics))
        elif secondary is None:
            topic = primary if u < PRIMARY_TOPIC_WEIGHT else int(rng.integers(0, n_topics))
        elif u < SUPPORTIVE_TOPIC_SPLIT:
            topic = primary
        elif u < SUPPORTIVE_TOPIC_SPLIT + 0.35:
            topic = secondary
        else:
            topic = int(rng.integers(0, n_topics))
        support = supports[topic]
        words.append(support[int(rng.integers(0, len(support)))])
    return " ".join(words)


def _emit_q(rng, state: str, label_noise: float, tau: float) -> float:
    emitted = state
    if label_noise > 0.0 and rng.random() < label_noise:
        emitted = GREEN if state == FLAGGED else FLAGGED
    if emitted == GREEN:
        return tau + (1.0 - tau) * (1.0 - rng.random())  # (tau, 1]
    return tau * rng.random()  # [0, tau)


def generate_corpus(cfg: SynthConfig, tau: float = 0.7751) -> tuple[str, GroundTruth]:
    """Generate a posts.jsonl payload plus its ground truth; byte-stable per seed."""
    rng = np.random.default_rng(cfg.seed)
    supports = planted_topic_vocab(cfg.vocab_size, cfg.n_planted_topics)
    n_topics = cfg.n_planted_topics
    topic_green = 1 % n_topics
    topic_support = 2 % n_topics
    lam = max(0.0, cfg.mean_replies - 1.0)

    lines: list[str] = []
    truth_rows: list[tuple[str, str, str]] = []
    thread_final: dict[str, str] = {}

    for i in range(cfg.n_threads):
        thread_id = f"t{i:05d}"
        target_id = f"u{i:05d}_t"
        board = BOARDS[int(rng.choice(len(BOARDS), p=BOARD_WEIGHTS))]
        n_replies = 1 + int(rng.poisson(lam))
        n_participants = 1 + int(rng.binomial(n_replies - 1, 0.6))
        moderator = [rng.random() < MODERATOR_RATE for _ in range(n_participants)]
        reply_author = [int(rng.integers(0, n_participants)) for _ in range(n_replies)]
        supportive = [rng.random() < cfg.supportive_rate for _ in range(n_replies)]
        extra_targets = int(rng.binomial(n_replies - 1, TARGET_FOLLOWUP_RATE))
        if extra_targets > 0:
            gaps = sorted(
                int(g) for g in rng.choice(np.arange(1, n_replies), size=extra_targets,
                                           replace=False)
            )
        else:
            gaps = []
        attenuation = LENGTH_ATTENUATION ** (n_replies - 1)

        # Interleave: initial target post, reply blocks, target posts after
        # chosen gaps, final target post after the last reply.
        events: list[tuple[str, object]] = [("target", None)]
        for r in range(1, n_replies + 1):
            events.append(("reply", r - 1))
            if r in gaps:
                events.append(("target", None))
        events.append(("target", None))

        t0 = 1_600_000_000 + i * 86400
        block_supportive: list[bool] = []
        state = FLAGGED
        first_target = True
        post_no = 0
        for kind, payload in events:
            post_id = f"p{i:05d}_{post_no:03d}"
            timestamp = t0 + post_no * 600
            if kind == "target":
                if first_target:
                    state = FLAGGED
                    first_target = False
                else:
                    frac = (
                        sum(block_supportive) / len(block_supportive)
                        if block_supportive
                        else 0.0
                    )
                    p_step = (cfg.base_green_transition
                              + cfg.supportive_boost * frac) * attenuation
                    state = GREEN if rng.random() < p_step else FLAGGED
                block_supportive = []
                primary = topic_green if state == GREEN else 0
                body = _body(rng, supports, primary, None, n_topics)
                author, is_mod, role = target_id, False, ROLE_TARGET
            else:
                r_idx = payload
                is_supportive = supportive[r_idx]
                block_supportive.append(is_supportive)
                if is_supportive:
                    post_state = GREEN
                    body = _body(rng, supports, 0, topic_support, n_topics)
                    role = ROLE_SUPPORTIVE
                else:
                    post_state = FLAGGED if rng.random() < NEUTRAL_FLAGGED_RATE else GREEN
                    body = _body(rng, supports, None, None, n_topics)
                    role = ROLE_NEUTRAL
                author = f"u{i:05d}_p{reply_author[r_idx]}"
                is_mod = moderator[reply_author[r_idx]]
            post_state_final = state if kind == "target" else post_state
            record = {
                "post_id": post_id,
                "thread_id": thread_id,
                "author_id": author,
                "timestamp": timestamp,
                "board": board,
                "body": body,
                "is_moderator": is_mod,
                "p_green": _emit_q(rng, post_state_final, cfg.label_noise, tau),
                "manual_label": None,
            }
            lines.append(json.dumps(record, ensure_ascii=False))
            truth_rows.append((post_id, role, post_state_final))
            post_no += 1
        thread_final[thread_id] = state

    jsonl = "\n".join(lines) + "\n"
    return jsonl, GroundTruth(post_rows=tuple(truth_rows), thread_final=thread_final)


def planted_topic_docs(
    n_docs: int,
    n_topics: int = 3,
    words_per_topic: int = 20,
    mean_doc_len: float = 25.0,
    purity: float = 0.8,
    seed: int = 0,
):
    """Documents with one dominant planted topic each; returns (docs, supports).

    Used to score topic recovery: supports are disjoint, so learned topics can
    be aligned to planted ones without ambiguity.
    """
    rng = np.random.default_rng(seed)
    supports = planted_topic_vocab(words_per_topic * n_topics, n_topics)
    docs = []
    for i in range(n_docs):
        dominant = i % n_topics
        length = max(3, int(rng.poisson(mean_doc_len)))
        doc = []
        for _ in range(length):
            topic = dominant if rng.random() < purity else int(rng.integers(0, n_topics))
            support = supports[topic]
            doc.append(support[int(rng.integers(0, len(support)))])
        docs.append(doc)
    return docs, supports
