"""Per-NFT predictors assembled strictly from data before the UTC day
of each NFT's primary sale: trader-network centralities, collection
sale history, and visual-embedding principal components."""

from __future__ import annotations

from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix

from nftmarket.ingest import SECONDS_PER_DAY, TradeRecord
from nftmarket.market import SaleTimeline, sale_timelines
from nftmarket.networks import TradeGraph

FEATURE_NAMES = (
    "k_buyer",
    "k_seller",
    "pr_buyer",
    "pr_seller",
    "p_resale",
    "median_price",
    "vis_pca_1",
    "vis_pca_2",
    "vis_pca_3",
    "vis_pca_4",
    "vis_pca_5",
)

FEATURE_SETS = {
    "centrality": ("k_buyer", "k_seller", "pr_buyer", "pr_seller"),
    "visual": ("vis_pca_1", "vis_pca_2", "vis_pca_3", "vis_pca_4", "vis_pca_5"),
    "history": ("p_resale", "median_price"),
}
FEATURE_SETS["centrality+visual"] = FEATURE_SETS["centrality"] + FEATURE_SETS["visual"]
FEATURE_SETS["centrality+history"] = FEATURE_SETS["centrality"] + FEATURE_SETS["history"]
FEATURE_SETS["visual+history"] = FEATURE_SETS["visual"] + FEATURE_SETS["history"]
FEATURE_SETS["all"] = tuple(FEATURE_NAMES)

WINDOWS_DAYS = {"1w": 7, "1m": 30, "6m": 183, "1y": 365, "2y": 730, "all": None}


def degree_centrality(graph: TradeGraph, node: str) -> int:
    """Distinct in-neighbours plus distinct out-neighbours; absent node = 0."""
    if not graph.has_node(node):
        return 0
    return len(graph.in_adj[node]) + len(graph.out_adj[node])


def pagerank(graph: TradeGraph, damping: float = 0.85, tol: float = 1e-9, max_iter: int = 1000) -> dict[str, float]:
    """Stationary distribution of a weighted random walk with teleport.

    Power iteration on the weight-proportional transition matrix;
    dangling mass is redistributed uniformly. Scores sum to one.
    """
    nodes = sorted(graph.out_adj)
    if not nodes:
        raise ValueError("pagerank undefined on an empty graph")
    n = len(nodes)
    idx = {node: i for i, node in enumerate(nodes)}
    rows, cols, vals = [], [], []
    out_strength = np.zeros(n)
    for src in nodes:
        out_strength[idx[src]] = graph.out_strength(src)
    for src, dst, w in graph.edges():
        i = idx[src]
        rows.append(idx[dst])
        cols.append(i)
        vals.append(w / out_strength[i])
    P = csr_matrix((vals, (rows, cols)), shape=(n, n))
    dangling = out_strength == 0
    v = np.full(n, 1.0 / n)
    teleport = (1.0 - damping) / n
    for _ in range(max_iter):
        dangling_mass = v[dangling].sum()
        new_v = damping * (P @ v) + damping * dangling_mass / n + teleport
        if np.abs(new_v - v).sum() < tol:
            v = new_v
            break
        v = new_v
    v = v / v.sum()
    return {node: float(v[idx[node]]) for node in nodes}


def p_resale(n: int, s: int) -> float:
    """Smoothed prior that a collection's next NFT sees a secondary sale.

    n = prior NFTs with a primary sale in the collection, s = those with
    at least one secondary sale. A collection's first NFT gets 0.5.
    """
    if n < 0 or s < 0:
        raise ValueError("counts must be non-negative")
    if s > n:
        raise ValueError(f"s={s} exceeds n={n}")
    if n == 0:
        return 0.5
    return 0.5 / (n + 1) + (n / (n + 1)) * (s / n)


def median_collection_price(
    trades: Sequence[TradeRecord],
    collection: str,
    t_s: int,
    window_before: str = "1w",
) -> float | None:
    """Median USD price of the collection's sales in [t_s - window, day(t_s)).

    Returns None when the collection has no priced prior sales in the
    window.
    """
    if window_before not in WINDOWS_DAYS:
        raise ValueError(f"unknown window {window_before!r}")
    days = WINDOWS_DAYS[window_before]
    day_start = t_s - t_s % SECONDS_PER_DAY
    lo = t_s - days * SECONDS_PER_DAY if days is not None else None
    prices = [
        t.price_usd
        for t in trades
        if t.collection == collection
        and t.price_usd is not None
        and t.ts < day_start
        and (lo is None or t.ts >= lo)
    ]
    if not prices:
        return None
    return float(np.median(prices))


@dataclass
class FeatureRow:
    """Predictors for one NFT at its primary sale."""

    nft_id: str
    t_s: int
    collection: str
    category: str
    k_buyer: float
    k_seller: float
    pr_buyer: float
    pr_seller: float
    p_resale: float
    median_price: float | None
    vis_pca: np.ndarray | None

    def value(self, name: str) -> float | None:
        if name.startswith("vis_pca_"):
            if self.vis_pca is None:
                return None
            return float(self.vis_pca[int(name.rsplit("_", 1)[1]) - 1])
        return getattr(self, name)


class _SnapshotGraph:
    """Incrementally grown trader graph exposing the snapshot queries."""

    def __init__(self):
        self.out_adj: dict[str, dict[str, int]] = defaultdict(dict)
        self.in_adj: dict[str, dict[str, int]] = defaultdict(dict)

    def add_trade(self, buyer: str, seller: str) -> None:
        if buyer == seller:
            return
        self.out_adj[buyer][seller] = self.out_adj[buyer].get(seller, 0) + 1
        self.in_adj[seller][buyer] = self.in_adj[seller].get(buyer, 0) + 1

    def degree(self, node: str) -> int:
        return len(self.out_adj.get(node, ())) + len(self.in_adj.get(node, ()))

    def to_trade_graph(self) -> TradeGraph:
        g = TradeGraph()
        for src, nbrs in self.out_adj.items():
            for dst, w in nbrs.items():
                g.add_edge(src, dst, w)
        return g


class _CollectionHistory:
    """Per-collection primary/secondary counts and price windows."""

    def __init__(self, trades: Sequence[TradeRecord], timelines: Mapping[str, SaleTimeline]):
        self.primary_ts: dict[str, list[int]] = defaultdict(list)
        self.second_ts: dict[str, list[float]] = defaultdict(list)
        per_coll: dict[str, list[SaleTimeline]] = defaultdict(list)
        for tl in timelines.values():
            per_coll[tl.collection].append(tl)
        for coll, tls in per_coll.items():
            tls.sort(key=lambda tl: (tl.primary_ts, tl.nft_id))
            self.primary_ts[coll] = [tl.primary_ts for tl in tls]
            self.second_ts[coll] = [
                tl.timestamps[1] if tl.n_secondary > 0 else np.inf for tl in tls
            ]
        self.sale_ts: dict[str, list[int]] = defaultdict(list)
        self.sale_price: dict[str, list[float]] = defaultdict(list)
        for t in sorted(trades, key=lambda t: t.ts):
            if t.price_usd is not None:
                self.sale_ts[t.collection].append(t.ts)
                self.sale_price[t.collection].append(t.price_usd)

    def resale_counts(self, collection: str, before_ts: int) -> tuple[int, int]:
        """(n, s): primaries before the cutoff and those already resold."""
        primaries = self.primary_ts[collection]
        n = bisect_left(primaries, before_ts)
        seconds = self.second_ts[collection][:n]
        s = sum(1 for ts in seconds if ts < before_ts)
        return n, s

    def median_price(self, collection: str, t_s: int, window: str) -> float | None:
        days = WINDOWS_DAYS[window]
        day_start = t_s - t_s % SECONDS_PER_DAY
        ts_list = self.sale_ts[collection]
        hi = bisect_left(ts_list, day_start)
        lo = 0 if days is None else bisect_left(ts_list, t_s - days * SECONDS_PER_DAY)
        if hi <= lo:
            return None
        return float(np.median(self.sale_price[collection][lo:hi]))


def build_feature_rows(
    trades: Sequence[TradeRecord],
    pca_scores: Mapping[str, np.ndarray] | None = None,
    object_of_nft: Mapping[str, str] | None = None,
    median_window: str = "1w",
    damping: float = 0.85,
    pagerank_tol: float = 1e-9,
) -> list[FeatureRow]:
    """Assemble one FeatureRow per NFT.

    The trader-network snapshot for an NFT sold first at t_s contains
    exactly the trades with timestamp before the UTC day of t_s; daily
    snapshots are shared across NFTs sold the same day. Visual scores
    come from ``pca_scores`` keyed by object id (the trade url unless
    ``object_of_nft`` overrides the mapping).
    """
    timelines = sale_timelines(trades)
    history = _CollectionHistory(trades, timelines)
    if object_of_nft is None:
        object_of_nft = {}
        for t in trades:
            if t.url is not None:
                object_of_nft.setdefault(t.nft_id, t.url)

    primary_of: dict[str, TradeRecord] = {}
    for t in sorted(trades, key=lambda t: (t.ts, t.price_usd if t.price_usd is not None else -1.0, t.buyer)):
        if t.nft_id not in primary_of:
            primary_of[t.nft_id] = t

    by_day: dict[int, list[str]] = defaultdict(list)
    for nft_id, t in primary_of.items():
        by_day[t.ts // SECONDS_PER_DAY].append(nft_id)

    ordered_trades = sorted(trades, key=lambda t: t.ts)
    snapshot = _SnapshotGraph()
    pointer = 0
    rows: list[FeatureRow] = []
    for day in sorted(by_day):
        day_start = day * SECONDS_PER_DAY
        while pointer < len(ordered_trades) and ordered_trades[pointer].ts < day_start:
            t = ordered_trades[pointer]
            snapshot.add_trade(t.buyer, t.seller)
            pointer += 1
        graph = snapshot.to_trade_graph()
        scores = pagerank(graph, damping=damping, tol=pagerank_tol) if graph.n_nodes() else {}
        for nft_id in sorted(by_day[day]):
            sale = primary_of[nft_id]
            tl = timelines[nft_id]
            n, s = history.resale_counts(sale.collection, day_start)
            vis = None
            obj = object_of_nft.get(nft_id)
            if pca_scores is not None and obj is not None and obj in pca_scores:
                vis = np.asarray(pca_scores[obj], dtype=np.float64)
            rows.append(
                FeatureRow(
                    nft_id=nft_id,
                    t_s=sale.ts,
                    collection=sale.collection,
                    category=tl.category,
                    k_buyer=float(snapshot.degree(sale.buyer)),
                    k_seller=float(snapshot.degree(sale.seller)),
                    pr_buyer=scores.get(sale.buyer, 0.0),
                    pr_seller=scores.get(sale.seller, 0.0),
                    p_resale=p_resale(n, s),
                    median_price=history.median_price(sale.collection, sale.ts, median_window),
                    vis_pca=vis,
                )
            )
    rows.sort(key=lambda r: (r.t_s, r.nft_id))
    return rows
