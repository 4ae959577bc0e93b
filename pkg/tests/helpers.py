"""Brute-force oracles and tiny builders shared across test modules."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from nftmarket.ingest import Category, Source, TradeRecord
from nftmarket.networks import TradeGraph


def trade(
    buyer="a",
    seller="b",
    ts=86400,
    nft="n1",
    collection="Colx",
    category=Category.ART,
    price=1.0,
    currency="ETH",
    url=None,
) -> TradeRecord:
    return TradeRecord(
        buyer=buyer,
        seller=seller,
        ts=ts,
        collection_raw=collection,
        nft_id=nft,
        url=url if url is not None else f"obj-{nft}",
        currency=currency,
        amount=price,
        source=Source.OPENSEA,
        collection=collection,
        category=category,
        price_usd=price,
    )


def graph_from_edges(edges) -> TradeGraph:
    g = TradeGraph()
    for src, dst, w in edges:
        g.add_edge(src, dst, w)
    return g


def random_graph(rng: np.random.Generator, n_nodes: int, n_edges: int, max_weight: int = 4) -> TradeGraph:
    g = TradeGraph()
    nodes = [f"v{i}" for i in range(n_nodes)]
    for node in nodes:
        g.add_node(node)
    for _ in range(n_edges):
        src, dst = rng.choice(n_nodes, size=2, replace=True)
        g.add_edge(nodes[src], nodes[dst], int(rng.integers(1, max_weight + 1)))
    return g


def brute_force_modularity(graph: TradeGraph, partition) -> float:
    """Plain double sum over all ordered node pairs."""
    nodes = graph.nodes
    W = graph.total_weight()
    q = 0.0
    for i in nodes:
        for j in nodes:
            a_ij = graph.out_adj[i].get(j, 0)
            expected = graph.out_strength(i) * graph.in_strength(j) / W
            if partition[i] == partition[j]:
                q += a_ij - expected
    return q / W


def brute_force_scc(graph: TradeGraph) -> list[frozenset]:
    """Pairwise-reachability components."""
    nodes = graph.nodes

    def reachable(start: str) -> set[str]:
        seen = {start}
        frontier = [start]
        while frontier:
            cur = frontier.pop()
            for nxt in graph.out_adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen

    reach = {node: reachable(node) for node in nodes}
    comps: dict[str, set[str]] = {}
    for node in nodes:
        comp = {other for other in reach[node] if node in reach[other]}
        comps[min(comp)] = comp
    return sorted((frozenset(c) for c in comps.values()), key=lambda c: (-len(c), min(c)))


def brute_force_nft_edges(event_sequences: dict[str, list[list[str]]]) -> dict[tuple[str, str], int]:
    """Literal sequential-purchase link rule: every item of one event
    links to every item of the next event of the same buyer."""
    weights: dict[tuple[str, str], int] = defaultdict(int)
    for events in event_sequences.values():
        for prev, cur in zip(events, events[1:]):
            for i in prev:
                for j in cur:
                    weights[(i, j)] += 1
    return dict(weights)


def strengths_by_node(graph: TradeGraph) -> dict[str, tuple[int, int]]:
    return {node: (graph.in_strength(node), graph.out_strength(node)) for node in graph.out_adj}
