"""Structural metrics of growing thread graphs.

Density is taken on the simple directed projection; clustering, shortest path
length and diameter on the simple undirected projection, with path metrics
restricted to the largest connected component.  When two components tie for
largest, the one holding the lexicographically smallest user id wins.

Three ways to get a trace:

``exact-incremental``
    A dense all-pairs distance table is relaxed on each new simple edge and
    triangle/triplet counters are updated in place.  Exact, O(n^2) memory.
``landmark-approx``
    Clustering stays exact; ASPL and diameter come from BFS out of a seeded
    sample of source vertices.
``oracle``
    Everything recomputed from scratch on every snapshot.  Slow; used to check
    the other two.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .graph import Snapshot, TemporalMultigraph, replay

EXACT = "exact-incremental"
LANDMARK = "landmark-approx"
ORACLE = "oracle"
AUTO = "auto"
MODES = (EXACT, LANDMARK, ORACLE, AUTO)

DEFAULT_VERTEX_CAP = 8192
DEFAULT_LANDMARKS = 64

_INF = np.iinfo(np.uint16).max


@dataclass(frozen=True)
class MetricSample:
    k: int
    t: int
    n_vertices: int
    n_edges: int
    density: float | None
    gcc: float
    aspl: float | None
    diameter: int | None


@dataclass
class MetricTrace:
    thread_id: str
    mode: str
    samples: list[MetricSample] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        """Metric values as a float array, absent values as NaN."""
        return np.array(
            [np.nan if getattr(s, name) is None else getattr(s, name) for s in self.samples],
            dtype=float,
        )

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "t", "n", "m", "density", "gcc", "aspl", "diameter"])
        for s in self.samples:
            w.writerow(
                [
                    s.k,
                    s.t,
                    s.n_vertices,
                    s.n_edges,
                    _fmt(s.density),
                    _fmt(s.gcc),
                    _fmt(s.aspl),
                    "" if s.diameter is None else s.diameter,
                ]
            )


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


# --------------------------------------------------------------------------
# from-scratch metrics on a single snapshot


def density(snapshot: Snapshot) -> float | None:
    n = snapshot.n_vertices
    if n < 2:
        return None
    return len(snapshot.directed) / (n * (n - 1))


def _adjacency(snapshot: Snapshot) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {v: set() for v in snapshot.vertices}
    for u, v in snapshot.undirected:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def gcc(snapshot: Snapshot) -> float:
    """Transitivity by enumerating every connected triplet."""
    adj = _adjacency(snapshot)
    closed = triplets = 0
    for v, nbrs in adj.items():
        ns = sorted(nbrs)
        for i, a in enumerate(ns):
            for b in ns[i + 1 :]:
                triplets += 1
                if b in adj[a]:
                    closed += 1
    return closed / triplets if triplets else 0.0


def _lcc_path_stats(snapshot: Snapshot) -> tuple[int, int, int] | None:
    """(sum of distances over unordered pairs, number of pairs, max distance) in the LCC."""
    names = sorted(snapshot.vertices)
    n = len(names)
    if n < 2:
        return None
    index = {v: i for i, v in enumerate(names)}
    rows = [index[u] for u, _ in snapshot.undirected]
    cols = [index[v] for _, v in snapshot.undirected]
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    _, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    # names are sorted, so the first index of a component is its smallest id
    first = {}
    for i, lab in enumerate(labels):
        first.setdefault(lab, i)
    best = min(first, key=lambda lab: (-sizes[lab], first[lab]))
    members = np.flatnonzero(labels == best)
    c = len(members)
    if c < 2:
        return None
    dist = shortest_path(adj, directed=False, unweighted=True, indices=members)[:, members]
    dist = dist.astype(np.int64)
    return int(dist.sum()) // 2, c * (c - 1) // 2, int(dist.max())


def aspl(snapshot: Snapshot) -> float | None:
    stats = _lcc_path_stats(snapshot)
    if stats is None:
        return None
    total, pairs, _ = stats
    return total / pairs


def diameter(snapshot: Snapshot) -> int | None:
    stats = _lcc_path_stats(snapshot)
    return None if stats is None else stats[2]


def oracle_sample(snapshot: Snapshot) -> MetricSample:
    stats = _lcc_path_stats(snapshot)
    return MetricSample(
        k=snapshot.k,
        t=snapshot.t,
        n_vertices=snapshot.n_vertices,
        n_edges=snapshot.k,
        density=density(snapshot),
        gcc=gcc(snapshot),
        aspl=None if stats is None else stats[0] / stats[1],
        diameter=None if stats is None else stats[2],
    )


# --------------------------------------------------------------------------
# incremental engine


def _hist_add(*hists: np.ndarray) -> np.ndarray:
    size = max(len(h) for h in hists)
    out = np.zeros(size, dtype=np.int64)
    for h in hists:
        out[: len(h)] += h
    return out


class IncrementalMetrics:
    """Metric state for one growing graph, fed one multigraph edge at a time.

    In exact mode ``dist`` is a symmetric ``uint16`` table with 65535 standing
    for "unreachable".  Each component also keeps a histogram of its pairwise
    distances, so the LCC's distance sum and maximum are read off without a
    scan.
    """

    def __init__(
        self,
        capacity: int,
        exact: bool = True,
        landmarks: int = DEFAULT_LANDMARKS,
        seed: int = 0,
    ):
        self.exact = exact
        self.landmarks = landmarks
        self.seed = seed
        self.capacity = capacity
        self.index: dict[str, int] = {}
        self.names: list[str] = []
        self.adj: list[set[int]] = []
        self.directed: set[tuple[int, int]] = set()
        self.triangles = 0
        self.triplets = 0
        self.comp = np.zeros(capacity, dtype=np.int64)
        self.comp_size: dict[int, int] = {}
        self.comp_min: dict[int, str] = {}
        self.comp_hist: dict[int, np.ndarray] = {}
        self.n_edges = 0
        if exact:
            self.dist = np.full((capacity, capacity), _INF, dtype=np.uint16)
        else:
            self._eu: list[int] = []
            self._ev: list[int] = []

    @property
    def n_vertices(self) -> int:
        return len(self.names)

    def add_vertex(self, name: str) -> int:
        idx = self.index.get(name)
        if idx is not None:
            return idx
        idx = len(self.names)
        if idx >= self.capacity:
            raise ValueError(f"vertex capacity {self.capacity} exceeded")
        self.index[name] = idx
        self.names.append(name)
        self.adj.append(set())
        self.comp[idx] = idx
        self.comp_size[idx] = 1
        self.comp_min[idx] = name
        self.comp_hist[idx] = np.zeros(1, dtype=np.int64)
        if self.exact:
            self.dist[idx, idx] = 0
        return idx

    def add_edge(self, source: str, target: str) -> None:
        """Account for one multigraph edge (a comment)."""
        self.n_edges += 1
        u = self.add_vertex(source)
        v = self.add_vertex(target)
        if u == v:
            return
        self.directed.add((u, v))
        if v in self.adj[u]:
            return
        # new undirected simple edge
        self.triangles += len(self.adj[u] & self.adj[v])
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.triplets += len(self.adj[u]) - 1 + len(self.adj[v]) - 1
        cu, cv = self.comp[u], self.comp[v]
        if cu != cv:
            self._merge(u, v, cu, cv)
        elif self.exact:
            self._relax(u, v, cu)
        if not self.exact:
            self._eu.append(u)
            self._ev.append(v)

    def _merge(self, u: int, v: int, cu: int, cv: int) -> None:
        n = self.n_vertices
        A = np.flatnonzero(self.comp[:n] == cu)
        B = np.flatnonzero(self.comp[:n] == cv)
        if self.exact:
            # the new edge is a bridge: cross distances go through it, nothing else changes
            du = self.dist[u, A].astype(np.int64)
            dv = self.dist[v, B].astype(np.int64)
            block = du[:, None] + 1 + dv[None, :]
            self.dist[np.ix_(A, B)] = block
            self.dist[np.ix_(B, A)] = block.T
            hist = _hist_add(self.comp_hist[cu], self.comp_hist[cv], np.bincount(block.ravel()))
        else:
            hist = self.comp_hist[cu]
        keep, drop, moved = (cu, cv, B) if len(A) >= len(B) else (cv, cu, A)
        self.comp[moved] = keep
        self.comp_size[keep] = len(A) + len(B)
        self.comp_min[keep] = min(self.comp_min[cu], self.comp_min[cv])
        self.comp_hist[keep] = hist
        del self.comp_size[drop], self.comp_min[drop], self.comp_hist[drop]

    def _relax(self, u: int, v: int, c: int) -> None:
        # A pair (x, y) can only shorten via x..u-v..y, which needs
        # d(x,u)+1 < d(x,v) and d(v,y)+1 < d(u,y); the mirrored case is the
        # same unordered pair seen from the other side.
        n = self.n_vertices
        du = self.dist[u, :n].astype(np.int64)
        dv = self.dist[v, :n].astype(np.int64)
        X = np.flatnonzero(du + 1 < dv)
        Y = np.flatnonzero(dv + 1 < du)
        if len(X) == 0 or len(Y) == 0:
            return
        old = self.dist[np.ix_(X, Y)].astype(np.int64)
        new = np.minimum(old, du[X][:, None] + 1 + dv[Y][None, :])
        changed = new < old
        if not changed.any():
            return
        hist = _hist_add(self.comp_hist[c], np.bincount(new[changed]))
        lost = np.bincount(old[changed])
        hist[: len(lost)] -= lost
        self.comp_hist[c] = hist
        self.dist[np.ix_(X, Y)] = new
        self.dist[np.ix_(Y, X)] = new.T

    def largest_component(self) -> int:
        return min(self.comp_size, key=lambda c: (-self.comp_size[c], self.comp_min[c]))

    def _path_stats(self, k: int) -> tuple[float | None, int | None]:
        c = self.largest_component()
        size = self.comp_size[c]
        if size < 2:
            return None, None
        if self.exact:
            hist = self.comp_hist[c]
            nz = np.flatnonzero(hist)
            total = int(np.dot(np.arange(len(hist), dtype=np.int64), hist))
            return total / (size * (size - 1) // 2), int(nz[-1])
        return self._landmark_stats(c, size, k)

    def _landmark_stats(self, c: int, size: int, k: int) -> tuple[float, int]:
        n = self.n_vertices
        members = np.flatnonzero(self.comp[:n] == c)
        rng = np.random.default_rng([self.seed, k])
        s = min(self.landmarks, size)
        sources = members if s == size else np.sort(rng.choice(members, size=s, replace=False))
        adj = coo_matrix(
            (np.ones(len(self._eu)), (self._eu, self._ev)), shape=(n, n)
        ).tocsr()
        dist = shortest_path(adj, directed=False, unweighted=True, indices=sources)
        reach = dist[:, members]
        return float(reach.sum()) / (s * (size - 1)), int(reach.max())

    def sample(self, k: int, t: int) -> MetricSample:
        n = self.n_vertices
        aspl_value, diam = self._path_stats(k)
        return MetricSample(
            k=k,
            t=t,
            n_vertices=n,
            n_edges=self.n_edges,
            density=len(self.directed) / (n * (n - 1)) if n >= 2 else None,
            gcc=3 * self.triangles / self.triplets if self.triplets else 0.0,
            aspl=aspl_value,
            diameter=diam,
        )

    def distance(self, a: str, b: str) -> float:
        """Current exact distance between two users (``inf`` if disconnected)."""
        d = self.dist[self.index[a], self.index[b]]
        return math.inf if d == _INF else int(d)


def trace(
    g: TemporalMultigraph,
    stride: int = 1,
    mode: str = EXACT,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
    landmarks: int = DEFAULT_LANDMARKS,
    seed: int = 0,
) -> MetricTrace:
    """Replay ``g`` edge by edge and sample the metrics every ``stride`` edges.

    ``auto`` picks exact-incremental up to ``vertex_cap`` vertices and
    landmark-approx beyond it.
    """
    if mode not in MODES:
        raise ValueError(f"unknown metric mode {mode!r}; choose from {MODES}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if mode == AUTO:
        mode = EXACT if g.n_vertices <= vertex_cap else LANDMARK
    out = MetricTrace(thread_id=g.thread_id, mode=mode)
    if mode == ORACLE:
        out.samples = [oracle_sample(s) for s in replay(g, stride)]
        return out
    if mode == EXACT and g.n_vertices > vertex_cap:
        raise ValueError(
            f"thread {g.thread_id!r} has {g.n_vertices} vertices, above the exact-mode cap "
            f"of {vertex_cap}; use mode={LANDMARK!r}"
        )
    engine = IncrementalMetrics(g.n_vertices, exact=(mode == EXACT), landmarks=landmarks, seed=seed)
    engine.add_vertex(g.root_author)
    n = len(g.edges)
    for k, e in enumerate(g.edges, start=1):
        engine.add_edge(e.source, e.target)
        if k % stride == 0 or k == n:
            out.samples.append(engine.sample(k, e.t))
    return out


def mean_traces(traces: Iterable[MetricTrace], metric: str) -> np.ndarray:
    """Mean of one metric across traces, aligned on sample position; NaNs skipped."""
    cols = [t.column(metric) for t in traces]
    if not cols:
        return np.array([])
    width = max(len(c) for c in cols)
    stacked = np.full((len(cols), width), np.nan)
    for i, c in enumerate(cols):
        stacked[i, : len(c)] = c
    with np.errstate(invalid="ignore"):
        return np.nanmean(stacked, axis=0)

