"""Trader and NFT trade networks: construction, metrics, and null models.

The trader network links buyers to sellers with purchase-count weights.
The NFT network links assets purchased in consecutive events by the same
buyer: purchases are grouped into events by identical timestamp, and a
directed link runs from every item in one event to every item in the
immediately following event (no intra-event links).
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from nftmarket.ingest import SECONDS_PER_DAY, TradeRecord


class TradeGraph:
    """Directed graph with positive integer edge weights."""

    def __init__(self):
        self.out_adj: dict[str, dict[str, int]] = {}
        self.in_adj: dict[str, dict[str, int]] = {}
        self.node_meta: dict[str, dict] = {}
        self.build_stats: dict[str, int] = {}

    def add_node(self, node: str) -> None:
        if node not in self.out_adj:
            self.out_adj[node] = {}
            self.in_adj[node] = {}

    def add_edge(self, src: str, dst: str, weight: int = 1) -> None:
        if weight <= 0:
            raise ValueError("edge weight must be positive")
        self.add_node(src)
        self.add_node(dst)
        self.out_adj[src][dst] = self.out_adj[src].get(dst, 0) + weight
        self.in_adj[dst][src] = self.in_adj[dst].get(src, 0) + weight

    @property
    def nodes(self) -> list[str]:
        return list(self.out_adj)

    def n_nodes(self) -> int:
        return len(self.out_adj)

    def n_edges(self) -> int:
        return sum(len(d) for d in self.out_adj.values())

    def total_weight(self) -> int:
        return sum(w for d in self.out_adj.values() for w in d.values())

    def edges(self) -> Iterable[tuple[str, str, int]]:
        for src in self.out_adj:
            for dst, w in self.out_adj[src].items():
                yield src, dst, w

    def sorted_edges(self) -> list[tuple[str, str, int]]:
        return sorted(self.edges())

    def out_strength(self, node: str) -> int:
        return sum(self.out_adj[node].values())

    def in_strength(self, node: str) -> int:
        return sum(self.in_adj[node].values())

    def has_node(self, node: str) -> bool:
        return node in self.out_adj

    def __eq__(self, other) -> bool:
        if not isinstance(other, TradeGraph):
            return NotImplemented
        return self.out_adj == other.out_adj

    def copy(self) -> "TradeGraph":
        g = TradeGraph()
        for node in self.out_adj:
            g.add_node(node)
        for src, dst, w in self.edges():
            g.add_edge(src, dst, w)
        g.node_meta = {k: dict(v) for k, v in self.node_meta.items()}
        return g


def strength(graph: TradeGraph, node: str) -> int:
    """Total weight of incident edges (in-strength + out-strength)."""
    if not graph.has_node(node):
        raise KeyError(f"unknown node {node!r}")
    return graph.in_strength(node) + graph.out_strength(node)


def build_trader_network(trades: Sequence[TradeRecord]) -> TradeGraph:
    """Buyer->seller graph; weight = items bought from that seller.

    Self-trades (buyer == seller) are dropped and counted in
    ``build_stats['self_trades_dropped']``. Node metadata carries each
    trader's top collection and count of distinct active days.
    """
    graph = TradeGraph()
    dropped = 0
    collections: dict[str, Counter] = defaultdict(Counter)
    days: dict[str, set[int]] = defaultdict(set)
    for t in trades:
        day = t.ts // SECONDS_PER_DAY
        for who in (t.buyer, t.seller):
            collections[who][t.collection] += 1
            days[who].add(day)
        if t.buyer == t.seller:
            dropped += 1
            continue
        graph.add_edge(t.buyer, t.seller, 1)
    graph.build_stats["self_trades_dropped"] = dropped
    for node in graph.out_adj:
        top = min(collections[node].items(), key=lambda kv: (-kv[1], kv[0]))[0]
        graph.node_meta[node] = {"top_collection": top, "active_days": len(days[node])}
    return graph


def purchase_events(trades: Sequence[TradeRecord], buyer: str | None = None) -> dict[str, list[list[str]]]:
    """Group each buyer's purchases into timestamp-ordered events.

    An event is the multiset of NFTs bought at one identical timestamp.
    """
    per_buyer: dict[str, list[TradeRecord]] = defaultdict(list)
    for t in trades:
        if buyer is None or t.buyer == buyer:
            per_buyer[t.buyer].append(t)
    events: dict[str, list[list[str]]] = {}
    for b, ts_list in per_buyer.items():
        ts_list.sort(key=lambda t: (t.ts, t.nft_id))
        groups: list[list[str]] = []
        last_ts: int | None = None
        for t in ts_list:
            if t.ts != last_ts:
                groups.append([])
                last_ts = t.ts
            groups[-1].append(t.nft_id)
        events[b] = groups
    return events


def build_nft_network(trades: Sequence[TradeRecord]) -> TradeGraph:
    """Sequential-purchase NFT graph.

    For each buyer, every NFT in one purchase event links to every NFT
    in the immediately following event; repeated pairs accumulate
    weight. Buyers with a single event contribute nothing, so their
    NFTs are excluded unless reached through other buyers.
    """
    graph = TradeGraph()
    meta: dict[str, tuple[str, str]] = {}
    for t in trades:
        meta.setdefault(t.nft_id, (t.collection, t.category.value))
    for groups in purchase_events(trades).values():
        for prev, cur in zip(groups, groups[1:]):
            for i in prev:
                for j in cur:
                    graph.add_edge(i, j, 1)
    for node in graph.out_adj:
        collection, category = meta[node]
        graph.node_meta[node] = {"collection": collection, "category": category}
    return graph


def active_days(trades: Sequence[TradeRecord]) -> dict[str, int]:
    """Distinct UTC days with at least one trade, per trader address."""
    days: dict[str, set[int]] = defaultdict(set)
    for t in trades:
        day = t.ts // SECONDS_PER_DAY
        days[t.buyer].add(day)
        days[t.seller].add(day)
    return {who: len(d) for who, d in days.items()}


def strength_activity_slope(graph: TradeGraph, activity: Mapping[str, int]) -> float:
    """OLS slope of log(strength) on log(active days) over active nodes."""
    xs, ys = [], []
    for node in graph.out_adj:
        d = activity.get(node, 0)
        s = strength(graph, node)
        if d >= 1 and s >= 1:
            xs.append(math.log(d))
            ys.append(math.log(s))
    if len(xs) < 10:
        raise ValueError(f"need at least 10 active nodes, got {len(xs)}")
    x = np.array(xs)
    y = np.array(ys)
    var = x.var()
    if var == 0:
        raise ValueError("degenerate activity: all nodes share one active-day count")
    return float(np.cov(x, y, bias=True)[0, 1] / var)


def specialization(trades: Sequence[TradeRecord], trader: str) -> tuple[float, float, str]:
    """Share of a trader's transactions in their top one and top two collections."""
    counts = Counter()
    for t in trades:
        if t.buyer == trader or t.seller == trader:
            counts[t.collection] += 1
    if not counts:
        raise ValueError(f"trader {trader!r} has no trades")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    total = sum(counts.values())
    top_share = ranked[0][1] / total
    top2_share = (ranked[0][1] + ranked[1][1]) / total if len(ranked) > 1 else top_share
    return top_share, top2_share, ranked[0][0]


def assortativity(graph: TradeGraph) -> float:
    """Pearson correlation of out-strength vs out-neighbours' mean in-strength."""
    xs, ys = [], []
    for node in graph.out_adj:
        nbrs = graph.out_adj[node]
        if not nbrs:
            continue
        xs.append(graph.out_strength(node))
        ys.append(sum(graph.in_strength(v) for v in nbrs) / len(nbrs))
    if len(xs) < 3:
        raise ValueError(f"need at least 3 nodes with out-neighbours, got {len(xs)}")
    x = np.array(xs, dtype=np.float64)
    y = np.array(ys, dtype=np.float64)
    if x.std() == 0 or y.std() == 0:
        raise ValueError("degenerate assortativity: zero variance")
    return float(np.corrcoef(x, y)[0, 1])


def modularity(graph: TradeGraph, partition: Mapping[str, str]) -> float:
    """Directed weighted modularity of a node partition.

    Q = (1/W) * sum_ij [A_ij - s_i_out * s_j_in / W] * delta(c_i, c_j)
    where W is the total edge weight. Bounded in [-0.5, 1].
    """
    W = graph.total_weight()
    if W == 0:
        raise ValueError("modularity undefined on an empty graph")
    missing = [n for n in graph.out_adj if n not in partition]
    if missing:
        raise ValueError(f"partition does not cover {len(missing)} nodes (e.g. {missing[0]!r})")
    internal = 0
    for src, dst, w in graph.edges():
        if partition[src] == partition[dst]:
            internal += w
    out_by_comm: dict[str, int] = defaultdict(int)
    in_by_comm: dict[str, int] = defaultdict(int)
    for node in graph.out_adj:
        c = partition[node]
        out_by_comm[c] += graph.out_strength(node)
        in_by_comm[c] += graph.in_strength(node)
    expected = sum(out_by_comm[c] * in_by_comm.get(c, 0) for c in out_by_comm) / W
    return (internal - expected) / W


def scc(graph: TradeGraph) -> list[list[str]]:
    """Strongly connected components, largest first (iterative Tarjan)."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[list[str]] = []
    counter = 0

    for root in graph.out_adj:
        if root in index:
            continue
        work: list[tuple[str, Iterable]] = [(root, iter(graph.out_adj[root]))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, nbrs = work[-1]
            advanced = False
            for nbr in nbrs:
                if nbr not in index:
                    index[nbr] = lowlink[nbr] = counter
                    counter += 1
                    stack.append(nbr)
                    on_stack.add(nbr)
                    work.append((nbr, iter(graph.out_adj[nbr])))
                    advanced = True
                    break
                if nbr in on_stack:
                    lowlink[node] = min(lowlink[node], index[nbr])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                components.append(comp)
    components.sort(key=lambda c: (-len(c), sorted(c)[0]))
    return components


def scc_fractions(graph: TradeGraph) -> tuple[float, float]:
    """Sizes of the two largest SCCs as fractions of graph nodes."""
    comps = scc(graph)
    n = graph.n_nodes()
    if n == 0:
        return 0.0, 0.0
    first = len(comps[0]) / n if comps else 0.0
    second = len(comps[1]) / n if len(comps) > 1 else 0.0
    return first, second


def randomize(graph: TradeGraph, seed: int) -> TradeGraph:
    """Strength-preserving randomization by target swaps.

    Edges enter a pool with multiplicity equal to their weight. For E
    attempts (E = total weight) two pool entries are drawn uniformly;
    when all four endpoints differ, their targets are exchanged. Every
    node keeps its exact in- and out-strength.
    """
    if graph.n_edges() < 2:
        raise ValueError("need at least 2 weighted edges to randomize")
    srcs: list[str] = []
    dsts: list[str] = []
    for src, dst, w in graph.sorted_edges():
        srcs.extend([src] * w)
        dsts.extend([dst] * w)
    E = len(srcs)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, E, size=(E, 2))
    applied = 0
    for a, b in zip(picks[:, 0].tolist(), picks[:, 1].tolist()):
        sa, da = srcs[a], dsts[a]
        sb, db = srcs[b], dsts[b]
        if sa != sb and sa != db and da != sb and da != db:
            dsts[a], dsts[b] = db, da
            applied += 1
    out = TradeGraph()
    for node in graph.out_adj:
        out.add_node(node)
    weights = Counter(zip(srcs, dsts))
    for (src, dst), w in sorted(weights.items()):
        out.add_edge(src, dst, w)
    out.node_meta = {k: dict(v) for k, v in graph.node_meta.items()}
    out.build_stats["swap_attempts"] = E
    out.build_stats["swaps_applied"] = applied
    return out


@dataclass
class NullModelResult:
    """Modularity of strength-preserving randomizations of one graph."""

    values: list[float]
    mean: float
    sem: float
    std: float
    n_realizations: int


def realization_seed(seed: int, index: int) -> int:
    """RNG seed of one null-model realization (stable across n_jobs)."""
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


class _NullPool:
    """Weight-expanded edge pool with integer-encoded communities.

    Equivalent to modularity(randomize(graph, s), partition) for each
    realization, but avoids rebuilding an aggregated graph: swaps keep
    every strength fixed, so the expected-weight term is a constant and
    the internal weight is a same-community count over pool entries.
    """

    def __init__(self, graph: TradeGraph, partition: Mapping[str, str]):
        nodes = sorted(graph.out_adj)
        idx = {node: i for i, node in enumerate(nodes)}
        self.pool_src: list[int] = []
        self.pool_dst: list[int] = []
        for src, dst, w in graph.sorted_edges():
            self.pool_src.extend([idx[src]] * w)
            self.pool_dst.extend([idx[dst]] * w)
        self.E = len(self.pool_src)
        labels: dict[str, int] = {}
        self.comm = np.empty(len(nodes), dtype=np.int64)
        for i, node in enumerate(nodes):
            self.comm[i] = labels.setdefault(partition[node], len(labels))
        out_by_comm = np.zeros(len(labels))
        in_by_comm = np.zeros(len(labels))
        for node in nodes:
            c = self.comm[idx[node]]
            out_by_comm[c] += graph.out_strength(node)
            in_by_comm[c] += graph.in_strength(node)
        self.expected = float(out_by_comm @ in_by_comm) / self.E

    def realization_q(self, rng_seed: int) -> float:
        rng = np.random.default_rng(rng_seed)
        picks = rng.integers(0, self.E, size=(self.E, 2))
        srcs = self.pool_src.copy()
        dsts = self.pool_dst.copy()
        for a, b in zip(picks[:, 0].tolist(), picks[:, 1].tolist()):
            sa = srcs[a]
            da = dsts[a]
            sb = srcs[b]
            db = dsts[b]
            if sa != sb and sa != db and da != sb and da != db:
                dsts[a] = db
                dsts[b] = da
        internal = int(np.count_nonzero(self.comm[np.array(srcs)] == self.comm[np.array(dsts)]))
        return (internal - self.expected) / self.E


def _null_worker(args) -> float:
    pool, rng_seed = args
    return pool.realization_q(rng_seed)


def null_modularity(
    graph: TradeGraph,
    partition: Mapping[str, str],
    n: int = 100,
    seed: int = 0,
    n_jobs: int = 1,
) -> NullModelResult:
    """Modularity distribution over n independent randomizations.

    Per-realization seeds derive from (seed, index), so results do not
    depend on n_jobs; each value equals
    modularity(randomize(graph, realization_seed(seed, i)), partition).
    """
    if graph.n_edges() < 2:
        raise ValueError("need at least 2 weighted edges to randomize")
    missing = [node for node in graph.out_adj if node not in partition]
    if missing:
        raise ValueError(f"partition does not cover {len(missing)} nodes (e.g. {missing[0]!r})")
    pool = _NullPool(graph, partition)
    seeds = [realization_seed(seed, i) for i in range(n)]
    if n_jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=n_jobs) as executor:
            values = list(executor.map(_null_worker, [(pool, s) for s in seeds]))
    else:
        values = [pool.realization_q(s) for s in seeds]
    arr = np.array(values)
    std = float(arr.std(ddof=1)) if n > 1 else 0.0
    return NullModelResult(
        values=values,
        mean=float(arr.mean()),
        sem=std / math.sqrt(n) if n > 1 else 0.0,
        std=std,
        n_realizations=n,
    )


def collection_partition_traders(graph: TradeGraph) -> dict[str, str]:
    """Partition traders by the top collection recorded at build time."""
    return {node: graph.node_meta[node]["top_collection"] for node in graph.out_adj}


def collection_partition_nfts(graph: TradeGraph) -> dict[str, str]:
    """Partition NFTs by their collection."""
    return {node: graph.node_meta[node]["collection"] for node in graph.out_adj}
