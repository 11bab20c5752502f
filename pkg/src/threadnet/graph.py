"""Directed temporal multigraph of user interactions within one thread.

Every comment becomes one edge from its author to the author of the message it
answers.  Parallel edges and self-loops are kept here; the simple projections
used by the structural metrics drop both.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, TextIO

import networkx as nx

from .ingest import JudgmentLabel, ThreadRecord


@dataclass(frozen=True)
class TimedEdge:
    source: str
    target: str
    t: int
    message_id: str
    depth: int
    label: JudgmentLabel
    parent_t: int

    @property
    def is_star(self) -> bool:
        return self.depth == 1

    @property
    def response_time(self) -> int:
        return self.t - self.parent_t


@dataclass(frozen=True)
class TemporalMultigraph:
    thread_id: str
    root_author: str
    root_time: int
    # user -> labels of every comment the user wrote, in edge order
    vertices: dict[str, tuple[JudgmentLabel, ...]]
    edges: tuple[TimedEdge, ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def __len__(self) -> int:
        return len(self.edges)

    def simple_directed(self) -> nx.DiGraph:
        G = nx.DiGraph()
        G.add_nodes_from(self.vertices)
        G.add_edges_from((e.source, e.target) for e in self.edges if e.source != e.target)
        return G

    def simple_undirected(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(self.vertices)
        G.add_edges_from((e.source, e.target) for e in self.edges if e.source != e.target)
        return G

    def entry_subgraph(self) -> dict[str, str]:
        """Where each commenting user first appeared: ``"star"`` or ``"periphery"``."""
        out: dict[str, str] = {}
        for e in self.edges:
            out.setdefault(e.source, "star" if e.is_star else "periphery")
        return out


def from_thread(record: ThreadRecord) -> TemporalMultigraph:
    authors = record.message_authors()
    times = record.message_times()
    labels: dict[str, list[JudgmentLabel]] = {record.root.author: []}
    edges = []
    for c in record.comments:
        edges.append(
            TimedEdge(
                source=c.author,
                target=authors[c.parent_id],
                t=c.created_at,
                message_id=c.id,
                depth=c.depth,
                label=c.label,
                parent_t=times[c.parent_id],
            )
        )
        labels.setdefault(c.author, []).append(c.label)
    edges.sort(key=lambda e: (e.t, e.message_id))
    return TemporalMultigraph(
        thread_id=record.thread_id,
        root_author=record.root.author,
        root_time=record.root.created_at,
        vertices={v: tuple(ls) for v, ls in labels.items()},
        edges=tuple(edges),
    )


def undirected_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Snapshot:
    """The graph after the first ``k`` multigraph edges."""

    k: int
    t: int
    vertices: frozenset[str]
    directed: frozenset[tuple[str, str]]
    undirected: frozenset[tuple[str, str]]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


def replay(g: TemporalMultigraph, stride: int = 1) -> Iterator[Snapshot]:
    """Yield cumulative snapshots after every ``stride``-th edge and after the last one."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    vertices = {g.root_author}
    directed: set[tuple[str, str]] = set()
    undirected: set[tuple[str, str]] = set()
    n = len(g.edges)
    for k, e in enumerate(g.edges, start=1):
        vertices.add(e.source)
        vertices.add(e.target)
        if e.source != e.target:
            directed.add((e.source, e.target))
            undirected.add(undirected_key(e.source, e.target))
        if k % stride == 0 or k == n:
            yield Snapshot(k, e.t, frozenset(vertices), frozenset(directed), frozenset(undirected))


def _subgraph(g: TemporalMultigraph, edges: list[TimedEdge]) -> TemporalMultigraph:
    labels: dict[str, list[JudgmentLabel]] = {}
    for e in edges:
        labels.setdefault(e.source, []).append(e.label)
        labels.setdefault(e.target, [])
    return TemporalMultigraph(
        thread_id=g.thread_id,
        root_author=g.root_author,
        root_time=g.root_time,
        vertices={v: tuple(ls) for v, ls in labels.items()},
        edges=tuple(edges),
    )


def split_star_periphery(g: TemporalMultigraph) -> tuple[TemporalMultigraph, TemporalMultigraph]:
    star = [e for e in g.edges if e.is_star]
    periphery = [e for e in g.edges if not e.is_star]
    return _subgraph(g, star), _subgraph(g, periphery)


def write_edgelist(g: TemporalMultigraph, fh: TextIO) -> None:
    """One line per multigraph edge: ``from\\tto\\tt\\tdepth\\tlabel``."""
    for e in g.edges:
        fh.write(f"{e.source}\t{e.target}\t{e.t}\t{e.depth}\t{e.label.value}\n")
