import io
import math
import random

import networkx as nx
import numpy as np
import pytest
from scipy import stats as sps

from threadnet import stats
from threadnet.generator import AITA_LIKE, coupled_params, generate_corpus
from threadnet.graph import from_thread
from threadnet.ingest import JudgmentLabel as L
from threadnet.ingest import vote_labels

# --- entropy


def test_entropy_examples():
    r = stats.disagreement_entropy([L.NTA] * 5)
    assert r.entropy == 0.0 and r.band == "low"
    r = stats.disagreement_entropy([L.YTA, L.YWBTA, L.NTA, L.YWNBTA, L.ESH, L.NAH])
    assert r.entropy == pytest.approx(math.log2(6), abs=1e-12)
    r = stats.disagreement_entropy([L.NTA] * 3 + [L.YTA])
    assert r.entropy == pytest.approx(0.8112781244591328, abs=1e-12) and r.band == "medium-low"


def test_entropy_ignores_unsure_and_none():
    r = stats.disagreement_entropy([L.NTA, L.UNSURE, L.NONE, L.NONE])
    assert r.n_votes == 1 and r.entropy == 0.0
    empty = stats.disagreement_entropy([L.NONE, L.UNSURE])
    assert empty.entropy is None and empty.band is None and empty.probabilities == {}


def test_entropy_probabilities_sum_to_one():
    r = stats.disagreement_entropy([L.NTA, L.ESH, L.ESH, L.NAH])
    assert sum(r.probabilities.values()) == pytest.approx(1.0)


def test_entropy_permutation_invariant_and_max_at_uniform():
    rng = random.Random(1)
    votes = [rng.choice(stats.VOTING_LABELS) for _ in range(60)]
    h = stats.disagreement_entropy(votes).entropy
    rng.shuffle(votes)
    assert stats.disagreement_entropy(votes).entropy == pytest.approx(h)
    perm = dict(zip(stats.VOTING_LABELS, reversed(stats.VOTING_LABELS)))
    assert stats.disagreement_entropy([perm[v] for v in votes]).entropy == pytest.approx(h)
    assert h <= stats.MAX_ENTROPY


@pytest.mark.parametrize(
    "h,band",
    [(0.0, "low"), (0.64, "low"), (0.65, "medium-low"), (1.3, "medium-high"), (1.95, "high"), (2.5, "high")],
)
def test_bands(h, band):
    assert stats.entropy_band(h) == band


# --- reciprocity


def test_reciprocity_examples():
    assert stats.reciprocity(nx.DiGraph([("a", "b"), ("b", "a")])) == 1.0
    assert stats.reciprocity(nx.DiGraph([("a", "b")])) == 0.0
    assert stats.reciprocity(nx.DiGraph([("a", "b"), ("b", "a"), ("a", "c"), ("c", "d")])) == 0.5
    assert stats.reciprocity(nx.DiGraph()) == 0.0


def test_reciprocity_relabel_and_reverse():
    G = nx.gnp_random_graph(40, 0.1, seed=3, directed=True)
    r = stats.reciprocity(G)
    assert stats.reciprocity(G.reverse()) == r
    assert stats.reciprocity(nx.relabel_nodes(G, {v: f"n{99 - v}" for v in G})) == r


# --- power law


def powerlaw_sample(gamma, n, seed, kmax=10**6):
    k = np.arange(1, kmax + 1, dtype=float)
    cdf = np.cumsum(k**-gamma)
    cdf /= cdf[-1]
    u = np.random.default_rng(seed).random(n)
    return (np.searchsorted(cdf, u) + 1).tolist()


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_power_law_recovery(seed):
    fit = stats.fit_power_law(powerlaw_sample(2.5, 10_000, seed), xmin=1)
    assert 2.4 <= fit.gamma <= 2.6


def test_power_law_recovery_selected_xmin():
    fit = stats.fit_power_law(powerlaw_sample(2.5, 10_000, 4))
    assert 2.4 <= fit.gamma <= 2.6 and fit.xmin >= 1


def test_self_fit_ks_zero():
    support = np.arange(1, 200)
    model = stats.powerlaw_cdf(support, 2.5, 1)
    # independent evaluation of the same cdf by direct summation
    k = np.arange(1, 10**6 + 1, dtype=float)
    pmf = k**-2.5 / np.sum(k**-2.5)
    direct = np.cumsum(pmf)[: len(support)]
    assert stats.ks_distance(model, model) == 0.0
    assert stats.ks_distance(direct, model) < 1e-8


def test_fit_invariants_and_order():
    x = powerlaw_sample(2.2, 2000, 7)
    fit = stats.fit_power_law(x)
    assert fit.gamma > 1 and fit.xmin >= 1 and 0 <= fit.ks <= 1
    assert stats.fit_power_law(list(reversed(x))) == fit
    assert stats.fit_power_law(sorted(x)) == fit


def test_fit_refusals():
    with pytest.raises(ValueError):
        stats.fit_power_law([3] * 100)
    with pytest.raises(ValueError):
        stats.fit_power_law([1, 2, 3])


def test_degree_sample_kinds():
    G = nx.DiGraph([("a", "b"), ("c", "b"), ("b", "a")])
    assert sorted(stats.degree_sample(G)) == [1, 2, 3]
    assert sorted(stats.degree_sample(G, "in")) == [1, 2]
    assert sorted(stats.degree_sample(G, "out")) == [1, 1, 1]


def test_fits_csv():
    buf = io.StringIO()
    stats.write_fits_csv({"t1": stats.PowerLawFit(2.5, 1, 0.01, 0.9, 80, 100)}, buf)
    assert buf.getvalue() == "thread_id,gamma,xmin,ks,p,n\nt1,2.5,1,0.01,0.9,80\n"


# --- rewiring


def degrees(G):
    return sorted(G.in_degree()), sorted(G.out_degree())


@pytest.mark.parametrize("f", [0.2, 0.5, 0.9])
def test_rewire_preserves_degrees(f):
    for r in generate_corpus(AITA_LIKE, 3, seed=30):
        G = from_thread(r).simple_directed()
        H = stats.rewire(G, f, seed=1)
        assert degrees(H) == degrees(G)
        assert H.number_of_edges() == G.number_of_edges() and H.number_of_nodes() == G.number_of_nodes()
        assert not any(u == v for u, v in H.edges())
        assert H.graph["displaced"] >= math.ceil(f * G.number_of_edges())


def test_rewire_zero_is_identity_and_seeded():
    G = nx.gnp_random_graph(30, 0.15, seed=1, directed=True)
    assert set(stats.rewire(G, 0.0).edges()) == set(G.edges())
    a, b = stats.rewire(G, 0.5, seed=4), stats.rewire(G, 0.5, seed=4)
    assert list(a.edges()) == list(b.edges())


def test_rewire_without_legal_swaps():
    G = nx.DiGraph([("a", "b"), ("b", "a")])
    H = stats.rewire(G, 0.5, max_tries=50)
    assert set(H.edges()) == set(G.edges())
    assert H.graph["swaps"] == 0 and H.graph["rejected_swaps"] == 50


# --- spearman


def brute_ranks(xs):
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def brute_pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    return cov / math.sqrt(sum((x - ma) ** 2 for x in a) * sum((y - mb) ** 2 for y in b))


def test_spearman_examples():
    assert stats.spearman([1, 2, 3, 4], [10, 20, 30, 45])[0] == 1.0
    assert stats.spearman([1, 2, 3, 4], [4, 3, 2, 1])[0] == -1.0
    # rank differences -1, 1, -1, 1, 0: rho = 1 - 6*4 / (5*24) = 0.8
    rho, _ = stats.spearman([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
    assert abs(rho - 0.8) <= 1e-12
    assert abs(rho - brute_pearson(brute_ranks([1, 2, 3, 4, 5]), brute_ranks([2, 1, 4, 3, 5]))) <= 1e-12


def test_spearman_constant_series():
    assert stats.spearman([1, 1, 1], [1, 2, 3]) == (None, None)


def test_spearman_against_brute_force_with_ties():
    rng = random.Random(99)
    for _ in range(1000):
        n = rng.randint(3, 30)
        xs = [rng.randint(0, 5) for _ in range(n)]
        ys = [rng.randint(0, 5) for _ in range(n)]
        rho, p = stats.spearman(xs, ys)
        rx, ry = brute_ranks(xs), brute_ranks(ys)
        if len(set(xs)) == 1 or len(set(ys)) == 1:
            assert rho is None
            continue
        assert abs(rho - brute_pearson(rx, ry)) <= 1e-12
        assert stats.spearman(rx, ry)[0] == pytest.approx(rho, abs=1e-12)
        ref = sps.spearmanr(xs, ys)
        assert p == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)


# --- report


def test_constant_entropy_report_undefined():
    rows = [{"entropy": 0.5, **{k: float(i + j) for j, (k, _) in enumerate(stats.feature_names())}} for i in range(6)]
    rep = stats.correlation_report(rows)
    assert all(r.status == "undefined" for r in rep.rows)


def test_insufficient_and_sentiment_row():
    rows = [{"entropy": float(i), **{k: float(i) for k, _ in stats.feature_names()}} for i in range(5)]
    for r in rows:
        r["sentiment"] = None
    rows[0]["gcc"] = rows[1]["gcc"] = rows[2]["gcc"] = None
    rep = stats.correlation_report(rows)
    assert "sentiment" not in [r.feature for r in rep.rows]
    assert rep.get("gcc").status == "insufficient"
    assert rep.get("aspl").rho == 1.0
    rows[0]["sentiment"] = 0.1
    rep = stats.correlation_report(rows)
    assert rep.get("sentiment").status == "insufficient"


def test_report_rendering():
    rows = [{"entropy": float(i), **{k: float(i * i) for k, _ in stats.feature_names()}} for i in range(30)]
    rep = stats.correlation_report(rows)
    text = rep.render()
    assert "***" in text and "reciprocity (rand 50%)" in text
    buf = io.StringIO()
    rep.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == "feature,rho,p,n,status"


def test_coupled_corpus_non_voters_positive():
    rows = []
    for r in generate_corpus(coupled_params(), 8, seed=70):
        g = from_thread(r)
        rows.append(stats.thread_features(r, g, None, vote_labels(r), fractions=()))
    rep = stats.correlation_report(rows, fractions=())
    assert rep.get("non_voters_pct").rho > 0


def test_thread_features_keys(small_thread):
    g = from_thread(small_thread)
    row = stats.thread_features(small_thread, g, None, vote_labels(small_thread))
    assert set(row) == {"entropy", *(k for k, _ in stats.feature_names())}
    assert row["one_comment_pct"] == 100.0
    assert row["reciprocity"] == pytest.approx(2 / 4)
    assert row["entropy"] == 1.0
