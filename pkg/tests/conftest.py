import json

import pytest

from threadnet.ingest import RawMessage, build_thread

T0 = 1_600_000_000


def make_thread(comments, tid="t1", op="op", root_time=T0):
    """comments: (id, parent id or None for the post, author, seconds after the post, body)."""
    msgs = [RawMessage(f"{tid}_root", None, tid, op, root_time, "AITA for this?")]
    for cid, parent, author, dt, body in comments:
        parent = f"{tid}_root" if parent is None else parent
        msgs.append(RawMessage(cid, parent, tid, author, root_time + dt, body))
    return build_thread(msgs)


def dump_lines(records):
    return [json.dumps(r) + "\n" for r in records]


@pytest.fixture
def small_thread():
    # op <- a, op <- b, a <- c (reply to a's comment), b <- op
    return make_thread(
        [
            ("c1", None, "a", 10, "NTA obviously"),
            ("c2", None, "b", 20, "YTA"),
            ("c3", "c1", "c", 30, "why do you say that"),
            ("c4", "c2", "op", 40, "thanks for the input"),
        ]
    )


def graph_from_pairs(pairs, root="op", tid="g"):
    """Temporal multigraph with one edge per (source, target) pair, in order.

    Edges into ``root`` are depth 1, others depth 2.
    """
    from threadnet.graph import TemporalMultigraph, TimedEdge
    from threadnet.ingest import JudgmentLabel

    edges = []
    verts = {root: []}
    for i, (s, t) in enumerate(pairs):
        edges.append(TimedEdge(s, t, T0 + i + 1, f"m{i}", 1 if t == root else 2, JudgmentLabel.NONE, T0))
        verts.setdefault(s, []).append(JudgmentLabel.NONE)
        verts.setdefault(t, [])
    return TemporalMultigraph(tid, root, T0, {v: tuple(ls) for v, ls in verts.items()}, tuple(edges))
