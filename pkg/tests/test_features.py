import numpy as np
import pytest

from nftmarket.features import (
    FEATURE_SETS,
    build_feature_rows,
    degree_centrality,
    median_collection_price,
    p_resale,
    pagerank,
)
from nftmarket.ingest import SECONDS_PER_DAY, Category
from nftmarket.market import sale_timelines
from nftmarket.networks import build_trader_network

from helpers import graph_from_edges, trade

DAY = SECONDS_PER_DAY


class TestDegreeCentrality:
    def test_distinct_neighbours(self):
        g = graph_from_edges(
            [("x", "s1", 5), ("x", "s2", 1), ("x", "s3", 2), ("b1", "x", 1), ("b2", "x", 9)]
        )
        assert degree_centrality(g, "x") == 5

    def test_repeat_trades_count_once(self):
        g = graph_from_edges([("x", "s1", 100)])
        assert degree_centrality(g, "x") == 1

    def test_absent_node_zero(self):
        assert degree_centrality(graph_from_edges([("a", "b", 1)]), "new") == 0


def dense_pagerank_oracle(graph, damping=0.85):
    """Stationary vector of the dense Google matrix (eigen solve)."""
    nodes = sorted(graph.out_adj)
    n = len(nodes)
    idx = {node: i for i, node in enumerate(nodes)}
    P = np.zeros((n, n))
    for src in nodes:
        out = graph.out_strength(src)
        if out == 0:
            P[:, idx[src]] = 1.0 / n
        else:
            for dst, w in graph.out_adj[src].items():
                P[idx[dst], idx[src]] = w / out
    G = damping * P + (1 - damping) / n
    vals, vecs = np.linalg.eig(G)
    lead = np.argmin(np.abs(vals - 1.0))
    v = np.real(vecs[:, lead])
    v = v / v.sum()
    return {node: v[idx[node]] for node in nodes}


class TestPagerank:
    def test_two_node_cycle(self):
        scores = pagerank(graph_from_edges([("a", "b", 1), ("b", "a", 1)]))
        assert scores["a"] == pytest.approx(0.5, abs=1e-9)
        assert scores["b"] == pytest.approx(0.5, abs=1e-9)

    def test_star_matches_dense_oracle(self):
        g = graph_from_edges([(f"leaf{i}", "hub", i + 1) for i in range(4)])
        got = pagerank(g)
        want = dense_pagerank_oracle(g)
        for node in got:
            assert got[node] == pytest.approx(want[node], abs=1e-8)

    def test_scores_sum_to_one(self):
        rng = np.random.default_rng(0)
        from helpers import random_graph

        g = random_graph(rng, 50, 200)
        assert sum(pagerank(g).values()) == pytest.approx(1.0, abs=1e-9)

    def test_weight_scale_invariant(self):
        g1 = graph_from_edges([("a", "b", 1), ("b", "c", 2), ("c", "a", 3), ("a", "c", 1)])
        g7 = graph_from_edges([("a", "b", 7), ("b", "c", 14), ("c", "a", 21), ("a", "c", 7)])
        s1 = pagerank(g1)
        s7 = pagerank(g7)
        for node in s1:
            assert abs(s1[node] - s7[node]) < 1e-9

    def test_weighted_transitions_matter(self):
        g = graph_from_edges([("a", "b", 9), ("a", "c", 1), ("b", "a", 1), ("c", "a", 1)])
        scores = pagerank(g)
        assert scores["b"] > scores["c"]

    def test_empty_graph_error(self):
        from nftmarket.networks import TradeGraph

        with pytest.raises(ValueError):
            pagerank(TradeGraph())


class TestPResale:
    def test_first_in_collection(self):
        assert p_resale(0, 0) == 0.5

    def test_formula_value(self):
        # 0.5/5 + (4/5)(2/4) = 0.1 + 0.4
        assert p_resale(4, 2) == pytest.approx(0.5, abs=1e-15)

    def test_limit_matches_ratio(self):
        assert p_resale(10_000_000, 2_000_000) == pytest.approx(0.2, abs=1e-5)

    def test_exact_match_on_random_pairs(self):
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            n = int(rng.integers(0, 1000))
            s = int(rng.integers(0, n + 1))
            got = p_resale(n, s)
            want = 0.5 if n == 0 else 0.5 / (n + 1) + (n / (n + 1)) * (s / n)
            assert got == want
            assert 0.0 < got <= 1.0

    def test_s_greater_than_n_error(self):
        with pytest.raises(ValueError):
            p_resale(3, 4)


class TestMedianCollectionPrice:
    def test_median_of_priors(self):
        t_s = 10 * DAY + 500
        trades = [
            trade(nft="p1", ts=8 * DAY, price=1.0),
            trade(nft="p2", ts=8 * DAY + 9, price=2.0),
            trade(nft="p3", ts=9 * DAY, price=3.0),
            trade(nft="me", ts=t_s, price=50.0),
        ]
        assert median_collection_price(trades, "Colx", t_s, "1w") == 2.0

    def test_no_prior_sales_missing(self):
        assert median_collection_price([trade(nft="me", ts=5 * DAY)], "Colx", 5 * DAY, "1w") is None

    def test_same_day_sales_excluded(self):
        t_s = 10 * DAY + 500
        trades = [trade(nft="p1", ts=10 * DAY + 100, price=9.0), trade(nft="me", ts=t_s, price=1.0)]
        assert median_collection_price(trades, "Colx", t_s, "1w") is None

    def test_window_cutoff(self):
        t_s = 100 * DAY
        trades = [
            trade(nft="p1", ts=t_s - 8 * DAY, price=1.0),
            trade(nft="p2", ts=t_s - 2 * DAY, price=7.0),
        ]
        assert median_collection_price(trades, "Colx", t_s, "1w") == 7.0
        assert median_collection_price(trades, "Colx", t_s, "1m") == 4.0
        assert median_collection_price(trades, "Colx", t_s, "all") == 4.0


def small_market():
    """Three collections, staggered days, some resales."""
    trades = []
    rng = np.random.default_rng(42)
    collections = [("Cola", Category.ART), ("Colb", Category.GAMES), ("Colc", Category.ART)]
    nft = 0
    for day in range(2, 40):
        for c, (coll, cat) in enumerate(collections):
            if (day + c) % 2:
                continue
            buyer = f"t{rng.integers(0, 12)}"
            seller = f"t{rng.integers(12, 24)}"
            price = float(rng.uniform(1, 20))
            trades.append(
                trade(
                    buyer=buyer,
                    seller=seller,
                    nft=f"n{nft}",
                    ts=day * DAY + int(rng.integers(0, 1000)),
                    collection=coll,
                    category=cat,
                    price=price,
                    url=f"obj{nft}",
                )
            )
            if rng.random() < 0.5:
                trades.append(
                    trade(
                        buyer=f"t{rng.integers(0, 24)}",
                        seller=buyer,
                        nft=f"n{nft}",
                        ts=(day + int(rng.integers(1, 10))) * DAY,
                        collection=coll,
                        category=cat,
                        price=price * float(rng.uniform(0.5, 2.0)),
                        url=f"obj{nft}",
                    )
                )
            nft += 1
    return trades


def replay_feature_row(trades, row, median_window="1w"):
    """Recompute a feature row from scratch using only trades before
    the UTC day of its primary sale."""
    day_start = row.t_s - row.t_s % DAY
    prior = [t for t in trades if t.ts < day_start]
    graph = build_trader_network(prior)
    timelines = sale_timelines(trades)
    ordered = sorted(
        (t for t in trades if t.nft_id == row.nft_id),
        key=lambda t: (t.ts, t.price_usd if t.price_usd is not None else -1.0, t.buyer),
    )
    sale = ordered[0]
    scores = pagerank(graph) if graph.n_nodes() else {}
    n = 0
    s = 0
    for tl in timelines.values():
        if tl.collection == row.collection and tl.primary_ts < day_start:
            n += 1
            if tl.n_secondary > 0 and tl.timestamps[1] < day_start:
                s += 1
    return {
        "k_buyer": float(degree_centrality(graph, sale.buyer)),
        "k_seller": float(degree_centrality(graph, sale.seller)),
        "pr_buyer": scores.get(sale.buyer, 0.0),
        "pr_seller": scores.get(sale.seller, 0.0),
        "p_resale": p_resale(n, s),
        "median_price": median_collection_price(prior, row.collection, row.t_s, median_window),
    }


class TestBuildFeatureRows:
    def test_one_row_per_nft(self):
        trades = small_market()
        rows = build_feature_rows(trades)
        assert len(rows) == len({t.nft_id for t in trades})

    def test_anti_leakage_replay(self):
        trades = small_market()
        rows = build_feature_rows(trades)
        rng = np.random.default_rng(7)
        sample = rng.choice(len(rows), size=12, replace=False)
        for i in sample:
            row = rows[i]
            want = replay_feature_row(trades, row)
            assert row.k_buyer == want["k_buyer"], row.nft_id
            assert row.k_seller == want["k_seller"]
            assert row.pr_buyer == pytest.approx(want["pr_buyer"], abs=1e-12)
            assert row.pr_seller == pytest.approx(want["pr_seller"], abs=1e-12)
            assert row.p_resale == want["p_resale"]
            if want["median_price"] is None:
                assert row.median_price is None
            else:
                assert row.median_price == pytest.approx(want["median_price"], abs=1e-12)

    def test_first_day_rows_are_cold(self):
        trades = small_market()
        rows = build_feature_rows(trades)
        first_day = min(r.t_s // DAY for r in rows)
        for row in rows:
            if row.t_s // DAY == first_day:
                assert row.k_buyer == 0 and row.pr_buyer == 0.0
                assert row.p_resale == 0.5
                assert row.median_price is None

    def test_vis_scores_mapped_by_url(self):
        trades = small_market()
        scores = {t.url: np.arange(5, dtype=float) + hash(t.url) % 3 for t in trades}
        rows = build_feature_rows(trades, pca_scores=scores)
        for row in rows:
            assert row.vis_pca is not None
            assert row.value("vis_pca_1") == row.vis_pca[0]

    def test_feature_sets_cover_all_names(self):
        assert set(FEATURE_SETS["all"]) == set(
            FEATURE_SETS["centrality"] + FEATURE_SETS["visual"] + FEATURE_SETS["history"]
        )
