"""Seeded synthetic thread corpora.

Threads are grown one comment at a time.  Each new comment picks what it
answers: the post with probability ``p_root``, else the tip of the one
running conversation with probability ``p_follow``, else an existing comment
(uniformly or preferentially by replies received).  The author is a
reply-back from the grandparent comment's author, a returning user, or a
newcomer.  ``revisit_scope="thread"`` draws returning users from everyone
weighted by activity; ``"star"`` only lets top-level commenters come back,
and only to answer another top-level comment.

Timestamps follow one of two clocks.  ``timing="delay"`` stamps a comment at
``parent time + Exp(mean)`` with separate star and periphery means;
``timing="arrival"`` lets comments arrive as a Poisson stream with mean gap
``mean_gap``.  Voting comments are slower to write by ``vote_slowdown``.

Randomness comes from a counter-based Philox stream keyed by the thread seed;
thread ``i`` of a corpus uses key ``seed + i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .ingest import (
    VOTING_LABELS,
    RawMessage,
    ThreadRecord,
    build_thread,
    validate_record,
)

BASE_TIME = 1_600_000_000

_FILLER = (
    "honestly she was out of line here and you did nothing wrong "
    "but maybe talk to him about it before the party next week because "
    "family stuff like this never goes away on its own so be kind"
).split()


@dataclass(frozen=True)
class GeneratorParams:
    n_comments: int = 300
    p_root: float = 0.6
    attachment: str = "preferential"
    p_vote_star: float = 0.8
    p_vote_periphery: float = 0.3
    label_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    mean_delay_star: float = 3 * 3600.0
    mean_delay_periphery: float = 3 * 3600.0
    p_follow: float = 0.0
    p_revisit: float = 0.2
    revisit_scope: str = "thread"
    p_reply_back: float = 0.0
    p_unsure: float = 0.0
    vote_slowdown: float = 1.0
    timing: str = "delay"
    mean_gap: float = 60.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_comments < 2:
            raise ValueError("n_comments must be >= 2")
        for name in ("p_root", "p_follow", "p_vote_star", "p_vote_periphery", "p_revisit", "p_reply_back", "p_unsure"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} is not a probability")
        if self.revisit_scope not in ("thread", "star"):
            raise ValueError(f"revisit_scope must be 'thread' or 'star', got {self.revisit_scope!r}")
        if self.attachment not in ("uniform", "preferential"):
            raise ValueError(f"attachment must be 'uniform' or 'preferential', got {self.attachment!r}")
        w = np.asarray(self.label_weights, dtype=float)
        if w.shape != (6,) or (w < 0).any() or w.sum() <= 0:
            raise ValueError("label_weights must be 6 non-negative weights, not all zero")
        if self.mean_delay_star <= 0 or self.mean_delay_periphery <= 0:
            raise ValueError("mean delays must be positive")
        if self.timing not in ("delay", "arrival"):
            raise ValueError(f"timing must be 'delay' or 'arrival', got {self.timing!r}")
        if self.mean_gap <= 0:
            raise ValueError("mean_gap must be positive")
        if self.vote_slowdown <= 0:
            raise ValueError("vote_slowdown must be positive")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed % 2**64))


def _body(rng: np.random.Generator, label_idx: list[int]) -> str:
    n = int(rng.integers(3, 40))
    words = [_FILLER[i] for i in rng.integers(0, len(_FILLER), size=n)]
    for idx in label_idx:
        words.insert(int(rng.integers(0, len(words) + 1)), VOTING_LABELS[idx].value)
    return " ".join(words)


def _revisit_pool(params, author_urn, star_urn, depth):
    if params.revisit_scope == "thread":
        return author_urn
    # top-level commenters coming back to argue with another top-level verdict
    return star_urn if depth == 2 else []


def generate_thread(params: GeneratorParams) -> ThreadRecord:
    params.validate()
    rng = _rng(params.seed)
    tid = f"g{params.seed:x}"
    weights = np.asarray(params.label_weights, dtype=float)
    weights = weights / weights.sum()

    root = RawMessage(
        id=f"{tid}_root",
        parent_id=None,
        thread_id=tid,
        author="op",
        created_at=BASE_TIME + int(rng.integers(0, 10**7)),
        body="AITA for something that happened at a family dinner?",
        score=int(rng.integers(100, 50_000)),
    )
    # per comment: id, parent index (-1 = root), depth, author, time
    ids: list[str] = []
    parents: list[int] = []
    depths: list[int] = []
    authors: list[str] = []
    times: list[int] = []
    bodies: list[str] = []
    scores: list[int] = []
    target_urn: list[int] = []
    author_urn: list[str] = []
    star_urn: list[str] = []
    n_users = 0
    clock = float(root.created_at)
    last_reply = -1

    for i in range(params.n_comments):
        followed = False
        if not ids or rng.random() < params.p_root:
            parent = -1
        elif last_reply >= 0 and rng.random() < params.p_follow:
            parent = last_reply
            followed = True
        elif params.attachment == "uniform":
            parent = int(rng.integers(0, len(ids)))
        else:
            parent = target_urn[int(rng.integers(0, len(target_urn)))]
        depth = 1 if parent < 0 else depths[parent] + 1
        parent_author = root.author if parent < 0 else authors[parent]
        parent_time = root.created_at if parent < 0 else times[parent]

        # reply-backs come from the author of the grandparent comment (not the post)
        grandparent_author = None
        if parent >= 0 and parents[parent] >= 0:
            grandparent_author = authors[parents[parent]]
        if grandparent_author is not None and grandparent_author != parent_author and rng.random() < params.p_reply_back:
            author = grandparent_author
        elif (pool := _revisit_pool(params, author_urn, star_urn, depth)) and rng.random() < params.p_revisit:
            author = pool[int(rng.integers(0, len(pool)))]
        else:
            n_users += 1
            author = f"user{n_users}"

        p_vote = params.p_vote_star if depth == 1 else params.p_vote_periphery
        label_idx: list[int] = []
        if rng.random() < p_vote:
            first = int(rng.choice(6, p=weights))
            label_idx = [first]
            if rng.random() < params.p_unsure:
                other = int(rng.integers(0, 5))
                label_idx.append(other if other < first else other + 1)
        if params.timing == "arrival":
            clock += rng.exponential(params.mean_gap)
            t = max(math.ceil(clock), parent_time + 1)
            if label_idx:
                t += math.ceil(rng.exponential(params.mean_gap * max(params.vote_slowdown - 1, 0.0)))
        else:
            mean = params.mean_delay_star if depth == 1 else params.mean_delay_periphery
            if label_idx:
                mean *= params.vote_slowdown
            t = parent_time + max(1, math.ceil(rng.exponential(mean)))

        ids.append(f"{tid}_{i:06d}")
        parents.append(parent)
        depths.append(depth)
        authors.append(author)
        times.append(t)
        bodies.append(_body(rng, label_idx))
        scores.append(int(rng.geometric(0.05)) - 1)
        target_urn.append(i)
        if parent >= 0:
            target_urn.append(parent)
        author_urn.append(author)
        if depth == 1:
            star_urn.append(author)
        if followed or (parent >= 0 and last_reply < 0):
            last_reply = i

    # whole-second stamps, made strictly increasing in time order
    order = sorted(range(len(ids)), key=lambda j: (times[j], j))
    last = root.created_at
    for j in order:
        if times[j] <= last:
            times[j] = last + 1
        last = times[j]

    msgs = [root]
    for j in range(len(ids)):
        msgs.append(
            RawMessage(
                id=ids[j],
                parent_id=root.id if parents[j] < 0 else ids[parents[j]],
                thread_id=tid,
                author=authors[j],
                created_at=times[j],
                body=bodies[j],
                score=scores[j],
            )
        )
    record = build_thread(msgs)
    validate_record(record)
    return record


def generate_corpus(
    params: GeneratorParams | list[GeneratorParams],
    count: int,
    seed: int = 0,
) -> list[ThreadRecord]:
    """``count`` threads per parameter set; thread ``i`` overall gets seed ``seed + i``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    plist = [params] if isinstance(params, GeneratorParams) else list(params)
    for p in plist:
        p.validate()
    out = []
    i = 0
    for p in plist:
        for _ in range(count):
            out.append(generate_thread(replace(p, seed=seed + i)))
            i += 1
    return out


# label weights concentrated on NTA, roughly like the verdict mix of a
# judgment subreddit
AITA_LABELS = (0.12, 0.02, 0.70, 0.03, 0.06, 0.07)

AITA_LIKE = GeneratorParams(
    n_comments=300,
    p_root=0.65,
    attachment="preferential",
    p_follow=0.5,
    p_vote_star=0.85,
    p_vote_periphery=0.3,
    label_weights=AITA_LABELS,
    p_revisit=1.0,
    revisit_scope="star",
    p_reply_back=0.0,
    p_unsure=0.03,
    vote_slowdown=3.0,
    timing="arrival",
    mean_gap=60.0,
)

UNIFORM = GeneratorParams(
    n_comments=300,
    p_root=0.15,
    attachment="uniform",
    p_vote_star=0.3,
    p_vote_periphery=0.3,
    label_weights=(1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    mean_delay_star=3 * 3600.0,
    mean_delay_periphery=3 * 3600.0,
    p_revisit=0.25,
    p_reply_back=0.1,
    timing="arrival",
)


def coupled_params(levels: int = 10, base: GeneratorParams = AITA_LIKE) -> list[GeneratorParams]:
    """Parameter sweep where label dispersion rises together with discussion.

    Level 0 votes almost unanimously and rarely replies back; the last level
    spreads votes evenly, votes less often in the periphery, replies back
    more and writes more multi-label comments.
    """
    unanimous = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    even = np.full(6, 1 / 6)
    out = []
    for i in range(levels):
        lam = i / max(levels - 1, 1)
        w = (1 - lam) * unanimous + lam * even
        out.append(
            replace(
                base,
                label_weights=tuple(float(x) for x in w),
                p_vote_periphery=0.6 - 0.5 * lam,
                p_reply_back=0.02 + 0.4 * lam,
                p_unsure=0.1 * lam,
            )
        )
    return out


PRESETS = {
    "aita-like": [AITA_LIKE],
    "uniform": [UNIFORM],
    "coupled": coupled_params(),
}
