"""Thread-level statistics: disagreement, reciprocity, degree power laws,
rewiring null models and rank correlation reports."""

from __future__ import annotations

import csv
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

import networkx as nx
import numpy as np
from scipy import optimize, special
from scipy import stats as sps

from .graph import TemporalMultigraph
from .ingest import VOTING_LABELS, JudgmentLabel, ThreadRecord
from .metrics import MetricSample

logger = logging.getLogger(__name__)

MAX_ENTROPY = math.log2(len(VOTING_LABELS))
BAND_CUTS = (0.65, 1.3, 1.95)
BANDS = ("low", "medium-low", "medium-high", "high")


@dataclass(frozen=True)
class DisagreementReport:
    counts: dict[JudgmentLabel, int]
    n_votes: int
    entropy: float | None
    band: str | None

    @property
    def probabilities(self) -> dict[JudgmentLabel, float]:
        if not self.n_votes:
            return {}
        return {lab: c / self.n_votes for lab, c in self.counts.items()}


def entropy_band(h: float) -> str:
    """Cut points 0.65 / 1.3 / 1.95; a value on a cut goes to the upper band."""
    for cut, name in zip(BAND_CUTS, BANDS):
        if h < cut:
            return name
    return BANDS[-1]


def disagreement_entropy(labels: Iterable[JudgmentLabel]) -> DisagreementReport:
    """Shannon entropy in bits of the voting-label distribution.

    UNSURE and NONE comments are not votes for any side and are left out.
    """
    tally = Counter(lab for lab in labels if lab in VOTING_LABELS)
    counts = {lab: tally.get(lab, 0) for lab in VOTING_LABELS}
    n = sum(counts.values())
    if n == 0:
        return DisagreementReport(counts, 0, None, None)
    h = 0.0
    for c in counts.values():
        if c:
            p = c / n
            h -= p * math.log2(p)
    h = max(h, 0.0)
    return DisagreementReport(counts, n, h, entropy_band(h))


def reciprocity(G: nx.DiGraph) -> float:
    """Fraction of directed edges whose reverse edge is also present."""
    m = G.number_of_edges()
    if m == 0:
        return 0.0
    mutual = sum(1 for u, v in G.edges() if u != v and G.has_edge(v, u))
    return mutual / m


# --------------------------------------------------------------------------
# power-law fitting


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    xmin: int
    ks: float
    p_value: float
    n_tail: int
    n: int


def degree_sample(G: nx.DiGraph, kind: str = "total") -> list[int]:
    """Positive degrees of ``G``: ``total`` (in+out), ``in`` or ``out``."""
    if kind == "total":
        deg = (d for _, d in G.degree())
    elif kind == "in":
        deg = (d for _, d in G.in_degree())
    elif kind == "out":
        deg = (d for _, d in G.out_degree())
    else:
        raise ValueError("kind must be 'total', 'in' or 'out'")
    return [int(d) for d in deg if d > 0]


def powerlaw_cdf(x: np.ndarray, gamma: float, xmin: int) -> np.ndarray:
    """P(X <= x) of the discrete power law p(k) ~ k^-gamma on k >= xmin."""
    x = np.asarray(x, dtype=float)
    return 1.0 - special.zeta(gamma, x + 1) / special.zeta(gamma, xmin)


def ks_distance(empirical_cdf: np.ndarray, model_cdf: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(empirical_cdf) - np.asarray(model_cdf))))


def _empirical_cdf(tail: np.ndarray, support: np.ndarray) -> np.ndarray:
    return np.searchsorted(tail, support, side="right") / len(tail)


def _mle_gamma(tail: np.ndarray, xmin: int) -> float:
    n = len(tail)
    logsum = float(np.log(tail).sum())

    def nll(g: float) -> float:
        return n * math.log(special.zeta(g, xmin)) + g * logsum

    res = optimize.minimize_scalar(nll, bounds=(1.0 + 1e-6, 20.0), method="bounded", options={"xatol": 1e-7})
    return float(res.x)


def _fit_at(tail: np.ndarray, xmin: int) -> tuple[float, float]:
    gamma = _mle_gamma(tail, xmin)
    support = np.arange(xmin, int(tail[-1]) + 1)
    ks = ks_distance(_empirical_cdf(tail, support), powerlaw_cdf(support, gamma, xmin))
    return gamma, ks


def fit_power_law(
    degrees: Sequence[int],
    xmin: int | None = None,
    min_samples: int = 50,
    min_tail: int = 10,
) -> PowerLawFit:
    """Discrete maximum-likelihood power-law fit with KS-selected lower cutoff.

    With ``xmin=None`` every observed value leaving at least ``min_tail``
    samples (and two distinct values) above it is tried, and the cutoff with
    the smallest KS distance wins.  The p-value is the asymptotic one-sample
    Kolmogorov distribution at ``sqrt(n_tail) * KS``; it ignores that the
    parameters were fitted to the same data, so it errs on the generous side.
    """
    x = np.sort(np.asarray(degrees, dtype=np.int64))
    if len(x) < min_samples:
        raise ValueError(f"need at least {min_samples} degrees, got {len(x)}")
    if x[0] < 1:
        raise ValueError("degrees must be positive integers")
    if x[0] == x[-1]:
        raise ValueError("degenerate sample: all degrees are equal")

    if xmin is not None:
        candidates = [int(xmin)]
    else:
        candidates = []
        for v in np.unique(x):
            tail = x[x >= v]
            if len(tail) >= min_tail and tail[0] != tail[-1]:
                candidates.append(int(v))
        if not candidates:
            candidates = [int(x[0])]

    best = None
    for v in candidates:
        tail = x[x >= v]
        if len(tail) == 0:
            raise ValueError(f"no samples at or above xmin={v}")
        gamma, ks = _fit_at(tail, v)
        if best is None or ks < best[2]:
            best = (v, gamma, ks, len(tail))
    v, gamma, ks, n_tail = best
    p = float(sps.kstwobign.sf(math.sqrt(n_tail) * ks))
    return PowerLawFit(gamma=gamma, xmin=v, ks=ks, p_value=p, n_tail=n_tail, n=len(x))


def write_fits_csv(fits: Mapping[str, PowerLawFit], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["thread_id", "gamma", "xmin", "ks", "p", "n"])
    for tid, f in fits.items():
        w.writerow([tid, repr(f.gamma), f.xmin, repr(f.ks), repr(f.p_value), f.n_tail])


# --------------------------------------------------------------------------
# null model


def rewire(G: nx.DiGraph, fraction: float, seed: int = 0, max_tries: int | None = None) -> nx.DiGraph:
    """Degree-preserving randomisation by directed double-edge swaps.

    Swaps ``(a, b), (c, d) -> (a, d), (c, b)`` are applied until
    ``ceil(fraction * |E|)`` distinct original edges have been displaced.
    Swaps that would create a self-loop or a duplicate edge are rejected.
    If the target is not reached within ``max_tries`` attempts the partial
    result is returned; the number of rejected attempts is stored in
    ``H.graph["rejected_swaps"]``.
    """
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must be in [0, 1]")
    edges = sorted((u, v) for u, v in G.edges() if u != v)
    m = len(edges)
    target = math.ceil(fraction * m)
    H = nx.DiGraph()
    H.add_nodes_from(sorted(G.nodes()))
    if target == 0 or m < 2:
        H.add_edges_from(edges)
        H.graph.update(swaps=0, displaced=0, rejected_swaps=0)
        return H

    rng = random.Random(seed)
    present = set(edges)
    original = set(edges)
    displaced: set[tuple[str, str]] = set()
    swaps = rejected = 0
    tries = max_tries if max_tries is not None else 100 * m
    for _ in range(tries):
        if len(displaced) >= target:
            break
        i, j = rng.sample(range(m), 2)
        a, b = edges[i]
        c, d = edges[j]
        if a == d or c == b or (a, d) in present or (c, b) in present:
            rejected += 1
            continue
        present.difference_update(((a, b), (c, d)))
        present.update(((a, d), (c, b)))
        edges[i], edges[j] = (a, d), (c, b)
        for e in ((a, b), (c, d)):
            if e in original:
                displaced.add(e)
        swaps += 1
    if len(displaced) < target:
        logger.warning(
            "rewiring stopped after %d tries with %d/%d edges displaced (%d rejected swaps)",
            tries, len(displaced), target, rejected,
        )
    H.add_edges_from(edges)
    H.graph.update(swaps=swaps, displaced=len(displaced), rejected_swaps=rejected)
    return H


# --------------------------------------------------------------------------
# rank correlation


def spearman(xs: Sequence[float], ys: Sequence[float]) -> tuple[float | None, float | None]:
    """Spearman's rho with average ranks for ties and a t-approximation p-value.

    Returns ``(None, None)`` when either series is constant.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d sequences of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 pairs")
    rx = sps.rankdata(x) - (n + 1) / 2
    ry = sps.rankdata(y) - (n + 1) / 2
    sxx = float(np.dot(rx, rx))
    syy = float(np.dot(ry, ry))
    if sxx == 0 or syy == 0:
        return None, None
    rho = float(np.dot(rx, ry)) / math.sqrt(sxx * syy)
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1 - rho * rho))
    return rho, float(2 * sps.t.sf(abs(t), n - 2))


# --------------------------------------------------------------------------
# per-thread features and the correlation report

REWIRE_FRACTIONS = (0.2, 0.5, 0.9)


def rewired_key(f: float) -> str:
    return f"reciprocity_rand{round(f * 100)}"


def feature_names(fractions: Sequence[float] = REWIRE_FRACTIONS) -> list[tuple[str, str]]:
    """(column key, display name) pairs in report order."""
    return [
        ("aspl", "ASPL"),
        ("gcc", "GCC"),
        ("one_comment_pct", "only one comment (%)"),
        ("reciprocity", "reciprocity"),
        *[(rewired_key(f), f"reciprocity (rand {round(f * 100)}%)") for f in fractions],
        ("comments", "comments per thread"),
        ("non_voters_pct", "non-voters (%)"),
        ("comment_words", "comment length (avg)"),
        ("comment_score", "comment score (avg)"),
        ("duration", "thread duration"),
        ("frequency", "comment frequency"),
        ("sentiment", "post sentiment"),
        ("unsure_pct", "unsure voters"),
    ]


def thread_features(
    record: ThreadRecord,
    g: TemporalMultigraph,
    final: MetricSample | None,
    votes: Iterable[JudgmentLabel],
    fractions: Sequence[float] = REWIRE_FRACTIONS,
    seed: int = 0,
) -> dict[str, float | None]:
    """Entropy plus every correlation feature for one thread.

    ``final`` is the last sample of the thread's metric trace; ``votes`` the
    labels that count toward its entropy.
    """
    per_user: dict[str, list[JudgmentLabel]] = {}
    for c in record.comments:
        per_user.setdefault(c.author, []).append(c.label)
    n_users = len(per_user)
    voters = [u for u, ls in per_user.items() if any(lab.is_vote for lab in ls)]
    unsure = [u for u in voters if JudgmentLabel.UNSURE in per_user[u]]
    scores = [c.score for c in record.comments if c.score is not None]
    dur = g.edges[-1].t - g.edges[0].t if g.edges else 0
    D = g.simple_directed()

    row: dict[str, float | None] = {
        "entropy": disagreement_entropy(votes).entropy,
        "aspl": None if final is None else final.aspl,
        "gcc": None if final is None else final.gcc,
        "one_comment_pct": 100.0 * sum(len(ls) == 1 for ls in per_user.values()) / n_users,
        "reciprocity": reciprocity(D),
        "comments": float(len(record.comments)),
        "non_voters_pct": 100.0 * (n_users - len(voters)) / n_users,
        "comment_words": float(np.mean([len(c.body.split()) for c in record.comments])),
        "comment_score": float(np.mean(scores)) if scores else None,
        "duration": float(dur),
        "frequency": len(g.edges) / (dur / 60) if dur > 0 else None,
        "sentiment": record.root.sentiment,
        "unsure_pct": 100.0 * len(unsure) / len(voters) if voters else None,
    }
    for i, f in enumerate(fractions):
        row[rewired_key(f)] = reciprocity(rewire(D, f, seed=seed + i))
    return row


@dataclass(frozen=True)
class CorrelationRow:
    feature: str
    name: str
    rho: float | None
    p_value: float | None
    n: int
    status: str  # ok | undefined | insufficient


@dataclass
class CorrelationReport:
    rows: list[CorrelationRow]

    def get(self, feature: str) -> CorrelationRow:
        for r in self.rows:
            if r.feature == feature:
                return r
        raise KeyError(feature)

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "rho", "p", "n", "status"])
        for r in self.rows:
            w.writerow([r.feature, "" if r.rho is None else repr(r.rho), "" if r.p_value is None else repr(r.p_value), r.n, r.status])

    def render(self) -> str:
        width = max(len(r.name) for r in self.rows) if self.rows else 10
        lines = [f"{'Feature':<{width}}  {'rho':>12}  {'sig':<3}  {'n':>6}"]
        for r in self.rows:
            if r.rho is None:
                lines.append(f"{r.name:<{width}}  {r.status:>12}  {'':<3}  {r.n:>6}")
                continue
            stars = "***" if r.p_value is not None and r.p_value < 0.001 else ""
            lines.append(f"{r.name:<{width}}  {r.rho:>12.3f}  {stars:<3}  {r.n:>6}")
        return "\n".join(lines) + "\n"


def _valid(v) -> bool:
    return v is not None and not (isinstance(v, float) and math.isnan(v))


def correlation_report(
    rows: Sequence[Mapping[str, float | None]],
    fractions: Sequence[float] = REWIRE_FRACTIONS,
) -> CorrelationReport:
    """Spearman correlation of thread entropy against each feature."""
    out = []
    has_sentiment = any(_valid(r.get("sentiment")) for r in rows)
    for key, name in feature_names(fractions):
        if key == "sentiment" and not has_sentiment:
            continue
        pairs = [(r["entropy"], r[key]) for r in rows if _valid(r.get("entropy")) and _valid(r.get(key))]
        n = len(pairs)
        if n < 3:
            out.append(CorrelationRow(key, name, None, None, n, "insufficient"))
            continue
        rho, p = spearman([a for a, _ in pairs], [b for _, b in pairs])
        out.append(CorrelationRow(key, name, rho, p, n, "ok" if rho is not None else "undefined"))
    return CorrelationReport(out)
