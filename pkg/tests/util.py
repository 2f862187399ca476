"""Shared test helpers: fixture builders and independent oracles."""

import numpy as np

from threadtriage.corpus import (
    FLAGGED,
    GREEN,
    LabelingConfig,
    Post,
    Thread,
    partition_window,
)
from threadtriage.threadex import FlaggedThread


def make_post(post_id, thread_id="t0", author="u0", ts=0, body="", p_green=0.5,
              manual=None, moderator=False, board="Tough Times"):
    return Post(
        post_id=post_id,
        thread_id=thread_id,
        author_id=author,
        timestamp=ts,
        board=board,
        body=body,
        is_moderator=moderator,
        p_green=p_green,
        manual_label=manual,
    )


def make_thread(authors, qs=None, bodies=None, moderators=None, thread_id="t0"):
    """Thread from per-post author tags ('T' = initiator, else participant id)."""
    n = len(authors)
    qs = qs if qs is not None else [0.5] * n
    bodies = bodies if bodies is not None else [""] * n
    moderators = moderators if moderators is not None else [False] * n
    posts = []
    for i, tag in enumerate(authors):
        author = "target" if tag == "T" else f"part_{tag}"
        posts.append(
            make_post(
                f"{thread_id}_p{i:02d}",
                thread_id=thread_id,
                author=author,
                ts=i,
                body=bodies[i],
                p_green=qs[i],
                moderator=moderators[i],
            )
        )
    return Thread(thread_id=thread_id, posts=tuple(posts))


def make_flagged_thread(authors, qs=None, bodies=None, moderators=None,
                        thread_id="t0", cfg=None):
    """FlaggedThread whose prediction index is the last 'T' position."""
    cfg = cfg or LabelingConfig()
    thread = make_thread(authors, qs=qs, bodies=bodies, moderators=moderators,
                         thread_id=thread_id)
    k = max(i for i, a in enumerate(authors) if a == "T")
    from threadtriage.corpus import resolve_label

    y, y_q = resolve_label(thread.posts[k], cfg)
    return FlaggedThread(
        thread=thread,
        target_user_id="target",
        prediction_index=k,
        y_q=y_q,
        y=y,
        partition=partition_window(thread, k),
        label_cfg=cfg,
    )


def brute_force_category_rates(tokens, lexicon):
    """Scan every entry per token; independent of the engine's lookup tables."""
    pos = lexicon.category_position()
    counts = np.zeros(lexicon.n_categories)
    for token in tokens:
        cats = None
        if token in lexicon.exact_entries:
            cats = lexicon.exact_entries[token]
        else:
            best_len = -1
            for prefix, pc in lexicon.prefix_entries.items():
                if token.startswith(prefix) and len(prefix) > best_len:
                    best_len = len(prefix)
                    cats = pc
        for c in cats or ():
            counts[pos[c]] += 1
    return counts / len(tokens) if tokens else counts


def concordance_auc(scores, q):
    """Expected pairwise concordance over all ordered pairs, ties at half weight."""
    scores = np.asarray(scores, dtype=float)
    q = np.asarray(q, dtype=float)
    num = 0.0
    for i in range(len(scores)):
        for j in range(len(scores)):
            if scores[i] > scores[j]:
                num += q[i] * (1.0 - q[j])
            elif scores[i] == scores[j]:
                num += 0.5 * q[i] * (1.0 - q[j])
    return num / (q.sum() * (1.0 - q).sum())


def greedy_topic_alignment(model, supports, top_n=10):
    """Match learned topics to planted supports by best top-N term overlap.

    Returns the mean overlap fraction across matched pairs.
    """
    top_terms = []
    phi = model.phi
    for k in range(model.n_topics):
        order = np.argsort(-phi[k])[:top_n]
        top_terms.append({model.vocab[i] for i in order})
    remaining = set(range(len(supports)))
    total = 0.0
    for k in range(model.n_topics):
        best, best_t = -1.0, None
        for t in remaining:
            overlap = len(top_terms[k] & set(supports[t])) / top_n
            if overlap > best:
                best, best_t = overlap, t
        remaining.discard(best_t)
        total += best
        if not remaining:
            break
    return total / min(model.n_topics, len(supports))
