import io

from threadnet.generator import GeneratorParams, generate_corpus, generate_thread
from threadnet.graph import from_thread, replay, split_star_periphery, write_edgelist

from .conftest import graph_from_pairs, make_thread


def test_star_thread():
    g = from_thread(make_thread([("c1", None, "a", 1, ""), ("c2", None, "b", 2, ""), ("c3", None, "c", 3, "")]))
    assert g.n_vertices == 4 and len(g.edges) == 3
    assert all(e.is_star and e.target == "op" for e in g.edges)


def test_parallel_comments():
    g = from_thread(make_thread([("c1", None, "a", 1, ""), ("c2", None, "a", 2, "")]))
    assert len(g.edges) == 2
    assert g.simple_directed().number_of_edges() == 1


def test_self_reply_kept_in_multigraph_only():
    g = from_thread(make_thread([("c1", None, "a", 1, ""), ("c2", "c1", "a", 2, "")]))
    assert ("a", "a") in [(e.source, e.target) for e in g.edges]
    assert not any(u == v for u, v in g.simple_directed().edges)
    assert g.simple_undirected().number_of_edges() == 1


def test_root_author_present_without_comments():
    g = from_thread(make_thread([("c1", None, "a", 1, ""), ("c2", "c1", "b", 2, "")]))
    assert "op" in g.vertices and g.vertices["op"] == ()


def test_edge_fields(small_thread):
    g = from_thread(small_thread)
    e = g.edges[2]
    assert (e.source, e.target, e.depth) == ("c", "a", 2)
    assert e.response_time == 20 and not e.is_star
    assert [x.t for x in g.edges] == sorted(x.t for x in g.edges)


def test_replay_cadence():
    g = graph_from_pairs([("a", "op"), ("b", "op"), ("c", "a"), ("d", "b"), ("e", "op")])
    assert [s.k for s in replay(g, 1)] == [1, 2, 3, 4, 5]
    assert [s.k for s in replay(g, 2)] == [2, 4, 5]
    assert list(replay(graph_from_pairs([]), 1)) == []


def test_replay_cumulative_and_stride_consistent():
    g = from_thread(generate_thread(GeneratorParams(n_comments=120, seed=8)))
    full = {s.k: s for s in replay(g, 1)}
    sizes = [s.n_vertices for s in full.values()]
    assert sizes == sorted(sizes)
    for s in replay(g, 7):
        assert s == full[s.k]
    prev = None
    for s in full.values():
        if prev is not None:
            assert prev.vertices <= s.vertices and prev.undirected <= s.undirected
        prev = s


def test_split_examples():
    g = from_thread(make_thread([("c1", None, "a", 1, ""), ("c2", "c1", "b", 2, ""), ("c3", None, "c", 3, "")]))
    star, per = split_star_periphery(g)
    assert [e.message_id for e in star.edges] == ["c1", "c3"]
    assert [e.message_id for e in per.edges] == ["c2"]
    pure = from_thread(make_thread([("c1", None, "a", 1, ""), ("c2", None, "b", 2, "")]))
    assert split_star_periphery(pure)[1].edges == ()


def test_split_partitions_edges():
    for r in generate_corpus(GeneratorParams(n_comments=80), 5, seed=2):
        g = from_thread(r)
        star, per = split_star_periphery(g)
        assert len(star.edges) + len(per.edges) == len(g.edges)
        assert set(star.edges).isdisjoint(per.edges)


def test_full_thread_is_connected():
    import networkx as nx

    for r in generate_corpus(GeneratorParams(n_comments=100, p_revisit=0.5), 5, seed=3):
        assert nx.is_connected(from_thread(r).simple_undirected())


def test_star_share_of_users():
    users = star = 0
    for r in generate_corpus(GeneratorParams(n_comments=300, p_root=0.6), 20, seed=40):
        entry = from_thread(r).entry_subgraph()
        users += len(entry)
        star += sum(v == "star" for v in entry.values())
    assert 0.55 <= star / users <= 0.65


def test_edgelist_format(small_thread):
    buf = io.StringIO()
    write_edgelist(from_thread(small_thread), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == f"a\top\t{small_thread.root.created_at + 10}\t1\tNTA"
    assert len(lines) == 4 and all(len(line.split("\t")) == 5 for line in lines)
