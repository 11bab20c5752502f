"""Growth speed of the star and periphery subgraphs, and response times.

Speed over an interval is the number of multigraph edges the subgraph gained
in it divided by the interval length in minutes.  Intervals are anchored at
the thread's first edge; an interval with no new edges has speed 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .graph import TemporalMultigraph, split_star_periphery

DELTAS = (1, 10, 60)
STAR = "star"
PERIPHERY = "periphery"
WHOLE = "whole"


@dataclass(frozen=True)
class SpeedProfile:
    subgraph: str
    delta_m: int
    counts: np.ndarray  # edges gained per interval, exact
    unit: str = "edges"

    @property
    def speeds(self) -> np.ndarray:
        return self.counts / self.delta_m

    @property
    def mean_speed(self) -> float:
        return float(self.speeds.mean()) if len(self.counts) else 0.0

    def __len__(self) -> int:
        return len(self.counts)


def growth_speed(
    times: Sequence[int],
    delta_m: int,
    anchor: int | None = None,
    subgraph: str = WHOLE,
    unit: str = "edges",
) -> SpeedProfile:
    """Per-interval speed of a sorted event timeline (seconds).

    ``anchor`` defaults to the first event.  The profile runs up to the
    interval holding the last event.
    """
    if delta_m not in DELTAS:
        raise ValueError(f"delta_m must be one of {DELTAS}")
    t = np.asarray(times, dtype=np.int64)
    if len(t) == 0:
        return SpeedProfile(subgraph, delta_m, np.zeros(0, dtype=np.int64), unit)
    if anchor is None:
        anchor = int(t[0])
    if (t < anchor).any():
        raise ValueError("events before the anchor time")
    idx = (t - anchor) // (60 * delta_m)
    return SpeedProfile(subgraph, delta_m, np.bincount(idx).astype(np.int64), unit)


def _node_times(edges) -> list[int]:
    seen = set()
    out = []
    for e in edges:
        if e.source not in seen:
            seen.add(e.source)
            out.append(e.t)
    return out


def thread_speeds(
    g: TemporalMultigraph, delta_m: int, unit: str = "edges"
) -> dict[str, SpeedProfile]:
    """Star, periphery and whole-graph profiles sharing the thread's first-edge anchor.

    ``unit="nodes"`` counts users joining the subgraph (first comment in it)
    instead of edges.
    """
    if unit not in ("edges", "nodes"):
        raise ValueError("unit must be 'edges' or 'nodes'")
    if not g.edges:
        return {
            name: growth_speed([], delta_m, subgraph=name, unit=unit)
            for name in (STAR, PERIPHERY, WHOLE)
        }
    anchor = g.edges[0].t
    star, periphery = split_star_periphery(g)
    out = {}
    for name, sub in ((STAR, star), (PERIPHERY, periphery), (WHOLE, g)):
        times = [e.t for e in sub.edges] if unit == "edges" else _node_times(sub.edges)
        out[name] = growth_speed(times, delta_m, anchor=anchor, subgraph=name, unit=unit)
    return out


def duration(g: TemporalMultigraph) -> int:
    """Seconds between the first and the last edge."""
    return g.edges[-1].t - g.edges[0].t if g.edges else 0


# --------------------------------------------------------------------------
# response times


@dataclass(frozen=True)
class ResponseTimeSummary:
    subgraph: str
    vote_class: str
    raw: tuple[int, ...]
    mean: float | None
    std: float | None
    filtered_mean: float | None
    n_filtered: int


def summarize_response_times(subgraph: str, vote_class: str, values: Sequence[float]) -> ResponseTimeSummary:
    """Mean after dropping values outside mean +/- 2 population std."""
    raw = tuple(values)
    if not raw:
        return ResponseTimeSummary(subgraph, vote_class, raw, None, None, None, 0)
    x = np.asarray(raw, dtype=float)
    mu = float(x.mean())
    if len(x) < 2:
        return ResponseTimeSummary(subgraph, vote_class, raw, mu, None, mu, len(x))
    sigma = float(x.std())
    kept = x[(x >= mu - 2 * sigma) & (x <= mu + 2 * sigma)]
    return ResponseTimeSummary(subgraph, vote_class, raw, mu, sigma, float(kept.mean()), len(kept))


def response_times(g: TemporalMultigraph) -> list[ResponseTimeSummary]:
    """Four summaries: (star, periphery) x (voting, non-voting)."""
    cells: dict[tuple[str, str], list[int]] = {
        (s, v): [] for s in (STAR, PERIPHERY) for v in ("voting", "non-voting")
    }
    for e in g.edges:
        sub = STAR if e.is_star else PERIPHERY
        cls = "voting" if e.label.is_vote else "non-voting"
        cells[(sub, cls)].append(e.response_time)
    return [summarize_response_times(s, v, vals) for (s, v), vals in cells.items()]


# --------------------------------------------------------------------------
# duration bins


@dataclass
class ThreadSpeeds:
    thread_id: str
    duration: int
    star: SpeedProfile
    periphery: SpeedProfile


@dataclass
class DurationBins:
    delta_m: int
    edges: np.ndarray
    fence: float
    members: list[list[str]]
    star_mean: list[float | None]
    periphery_mean: list[float | None]
    ratio: list[float | None]
    star_profile: list[np.ndarray | None] = field(default_factory=list)
    periphery_profile: list[np.ndarray | None] = field(default_factory=list)
    outliers: list[str] = field(default_factory=list)

    @property
    def n_bins(self) -> int:
        return len(self.members)

    def write_profiles_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "subgraph", "delta_m", "interval_index", "speed"])
        for b in range(self.n_bins):
            for name, prof in ((STAR, self.star_profile[b]), (PERIPHERY, self.periphery_profile[b])):
                if prof is None:
                    continue
                for i, s in enumerate(prof):
                    w.writerow([b, name, self.delta_m, i, repr(float(s))])

    def write_summary_csv(self, fh: TextIO, label: str | None = None) -> None:
        w = csv.writer(fh, lineterminator="\n")
        head = ["bin", "lo", "hi", "n_threads", "star_mean", "periphery_mean", "ratio"]
        w.writerow(head if label is None else ["corpus", *head])
        for b in range(self.n_bins):
            row = [
                b,
                repr(float(self.edges[b])),
                repr(float(self.edges[b + 1])),
                len(self.members[b]),
                _fmt(self.star_mean[b]),
                _fmt(self.periphery_mean[b]),
                _fmt(self.ratio[b]),
            ]
            w.writerow(row if label is None else [label, *row])


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _mean_profile(profiles: list[SpeedProfile]) -> np.ndarray:
    width = max((len(p) for p in profiles), default=0)
    acc = np.zeros(width)
    for p in profiles:
        acc[: len(p)] += p.speeds
    return acc / len(profiles)


def bin_and_average(
    threads: Iterable[ThreadSpeeds],
    n_bins: int = 10,
    binning: str = "width",
) -> DurationBins:
    """Drop very long threads, group the rest by duration, average speeds per group.

    Threads above the Tukey upper fence (Q3 + 1.5 IQR) of the duration
    distribution are dropped.  ``binning="width"`` splits the remaining
    duration range into equal-width bins, ``"quantile"`` into equal-count bins.
    A bin's ratio is its mean star speed over its mean periphery speed.
    """
    threads = list(threads)
    if not threads:
        raise ValueError("no threads to bin")
    delta = threads[0].star.delta_m
    dur = np.array([t.duration for t in threads], dtype=float)
    q1, q3 = np.percentile(dur, [25, 75])
    fence = q3 + 1.5 * (q3 - q1)
    kept = [t for t in threads if t.duration <= fence]
    outliers = [t.thread_id for t in threads if t.duration > fence]
    if len(kept) < n_bins:
        raise ValueError(
            f"only {len(kept)} threads left after removing long outliers; "
            f"need at least {n_bins} (lower the bin count)"
        )
    kd = np.array([t.duration for t in kept], dtype=float)
    if binning == "width":
        edges = np.linspace(kd.min(), kd.max(), n_bins + 1)
    elif binning == "quantile":
        edges = np.quantile(kd, np.linspace(0, 1, n_bins + 1))
    else:
        raise ValueError("binning must be 'width' or 'quantile'")
    if kd.min() == kd.max():
        which = np.zeros(len(kept), dtype=int)
    else:
        which = np.clip(np.searchsorted(edges, kd, side="right") - 1, 0, n_bins - 1)

    out = DurationBins(delta, edges, float(fence), [], [], [], [], outliers=outliers)
    for b in range(n_bins):
        group = [t for t, w in zip(kept, which) if w == b]
        out.members.append([t.thread_id for t in group])
        if not group:
            out.star_mean.append(None)
            out.periphery_mean.append(None)
            out.ratio.append(None)
            out.star_profile.append(None)
            out.periphery_profile.append(None)
            continue
        s = float(np.mean([t.star.mean_speed for t in group]))
        p = float(np.mean([t.periphery.mean_speed for t in group]))
        out.star_mean.append(s)
        out.periphery_mean.append(p)
        out.ratio.append(s / p if p > 0 else None)
        out.star_profile.append(_mean_profile([t.star for t in group]))
        out.periphery_profile.append(_mean_profile([t.periphery for t in group]))
    return out


def corpus_speeds(graphs: Iterable[TemporalMultigraph], delta_m: int = 1, unit: str = "edges") -> list[ThreadSpeeds]:
    out = []
    for g in graphs:
        prof = thread_speeds(g, delta_m, unit)
        out.append(ThreadSpeeds(g.thread_id, duration(g), prof[STAR], prof[PERIPHERY]))
    return out


def median_ratio(bins: DurationBins) -> float:
    vals = [r for r in bins.ratio if r is not None]
    return float(np.median(vals)) if vals else math.nan
