"""Descriptive market statistics: rolling activity series, price
percentiles, per-NFT sale timelines, and resale-timing curves."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np

from nftmarket.ingest import SECONDS_PER_DAY, TradeRecord

TOTAL_GROUP = "Total"


@dataclass
class TimeSeriesReport:
    """Day-indexed rolling market activity, per category and total.

    volume_usd and n_transactions are rolling means of daily totals;
    n_traders and n_collections are distinct counts over the window.
    """

    days: list[int]
    window_days: int
    volume_usd: dict[str, np.ndarray]
    n_transactions: dict[str, np.ndarray]
    n_traders: dict[str, np.ndarray]
    n_collections: dict[str, np.ndarray]

    @property
    def groups(self) -> list[str]:
        return sorted(self.volume_usd)


def _rolling_mean(daily: np.ndarray, window: int) -> np.ndarray:
    csum = np.concatenate([[0.0], np.cumsum(daily)])
    out = np.empty(len(daily))
    for i in range(len(daily)):
        lo = max(0, i - window + 1)
        out[i] = (csum[i + 1] - csum[lo]) / window
    return out


def _rolling_distinct(per_day_items: list[set], window: int) -> np.ndarray:
    """Distinct-count over a trailing window via enter/leave bookkeeping."""
    counts = Counter()
    out = np.empty(len(per_day_items))
    for i, items in enumerate(per_day_items):
        for item in items:
            counts[item] += 1
        leaving = i - window + 1 - 1
        if leaving >= 0:
            for item in per_day_items[leaving]:
                counts[item] -= 1
                if counts[item] == 0:
                    del counts[item]
        out[i] = len(counts)
    return out


def rolling_series(trades: Sequence[TradeRecord], window_days: int = 30) -> TimeSeriesReport:
    """Rolling daily activity per category and overall.

    Volume uses only trades with a USD price; transaction, trader, and
    collection counts use every trade. Days span the full data range.
    """
    if not trades:
        return TimeSeriesReport([], window_days, {}, {}, {}, {})
    day_min = min(t.ts for t in trades) // SECONDS_PER_DAY
    day_max = max(t.ts for t in trades) // SECONDS_PER_DAY
    n_days = day_max - day_min + 1
    groups = sorted({t.category.value for t in trades}) + [TOTAL_GROUP]

    volume = {g: np.zeros(n_days) for g in groups}
    txs = {g: np.zeros(n_days) for g in groups}
    traders: dict[str, list[set]] = {g: [set() for _ in range(n_days)] for g in groups}
    colls: dict[str, list[set]] = {g: [set() for _ in range(n_days)] for g in groups}

    for t in trades:
        i = t.ts // SECONDS_PER_DAY - day_min
        for g in (t.category.value, TOTAL_GROUP):
            if t.price_usd is not None:
                volume[g][i] += t.price_usd
            txs[g][i] += 1
            traders[g][i].add(t.buyer)
            traders[g][i].add(t.seller)
            colls[g][i].add(t.collection)

    days = [(day_min + i) * SECONDS_PER_DAY for i in range(n_days)]
    return TimeSeriesReport(
        days=days,
        window_days=window_days,
        volume_usd={g: _rolling_mean(volume[g], window_days) for g in groups},
        n_transactions={g: _rolling_mean(txs[g], window_days) for g in groups},
        n_traders={g: _rolling_distinct(traders[g], window_days) for g in groups},
        n_collections={g: _rolling_distinct(colls[g], window_days) for g in groups},
    )


PERCENTILES = (50, 75, 99, 100)


def lower_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Type-1 (lower-value) quantile of pre-sorted data."""
    if len(sorted_values) == 0:
        raise ValueError("empty sample")
    if q >= 100:
        return float(sorted_values[-1])
    k = int(np.ceil(len(sorted_values) * q / 100.0))
    return float(sorted_values[max(k, 1) - 1])


def price_percentiles(trades: Sequence[TradeRecord]) -> dict[str, dict[int, float]]:
    """Percentiles of per-NFT mean sale price, per category and total.

    NFTs whose sales all lack USD prices are skipped.
    """
    sums: dict[str, float] = defaultdict(float)
    counts: dict[str, int] = defaultdict(int)
    group_of: dict[str, str] = {}
    for t in trades:
        if t.price_usd is None:
            continue
        sums[t.nft_id] += t.price_usd
        counts[t.nft_id] += 1
        group_of.setdefault(t.nft_id, t.category.value)
    by_group: dict[str, list[float]] = defaultdict(list)
    for nft, total in sums.items():
        mean = total / counts[nft]
        by_group[group_of[nft]].append(mean)
        by_group[TOTAL_GROUP].append(mean)
    table: dict[str, dict[int, float]] = {}
    for group, values in sorted(by_group.items()):
        arr = np.sort(np.array(values))
        table[group] = {p: lower_quantile(arr, p) for p in PERCENTILES}
    return table


@dataclass
class SaleTimeline:
    """Chronologically ordered sales of one NFT.

    The first entry is the primary sale; price ratios compare each sale
    to the one before it (None when the prior price is zero or missing).
    """

    nft_id: str
    collection: str
    category: str
    timestamps: list[int]
    prices: list[float | None]

    @property
    def primary_ts(self) -> int:
        return self.timestamps[0]

    @property
    def primary_price(self) -> float | None:
        return self.prices[0]

    @property
    def n_secondary(self) -> int:
        return len(self.timestamps) - 1

    def change_ratios(self) -> list[float | None]:
        out: list[float | None] = []
        for prev, cur in zip(self.prices, self.prices[1:]):
            if prev is None or cur is None or prev == 0:
                out.append(None)
            else:
                out.append(cur / prev)
        return out


def sale_timelines(trades: Sequence[TradeRecord]) -> dict[str, SaleTimeline]:
    """Per-NFT ordered sale history.

    Same-timestamp sales of one NFT are tie-broken by (price, buyer) so
    ordering is deterministic.
    """
    per_nft: dict[str, list[TradeRecord]] = defaultdict(list)
    for t in trades:
        per_nft[t.nft_id].append(t)
    out: dict[str, SaleTimeline] = {}
    for nft_id, records in per_nft.items():
        records.sort(key=lambda t: (t.ts, t.price_usd if t.price_usd is not None else -1.0, t.buyer))
        out[nft_id] = SaleTimeline(
            nft_id=nft_id,
            collection=records[0].collection,
            category=records[0].category.value,
            timestamps=[t.ts for t in records],
            prices=[t.price_usd for t in records],
        )
    return out


def resale_fraction_curve(
    timelines: Mapping[str, SaleTimeline],
    horizons: Sequence[int],
    dataset_end: int | None = None,
) -> dict[int, float]:
    """Fraction of NFTs first resold within n days of their primary sale.

    For each horizon only NFTs observable for at least n days before
    the dataset end enter the denominator.
    """
    if any(h <= 0 for h in horizons):
        raise ValueError("horizons must be positive day counts")
    if dataset_end is None:
        dataset_end = max((tl.timestamps[-1] for tl in timelines.values()), default=0)
    out: dict[int, float] = {}
    for n in horizons:
        cutoff = dataset_end - n * SECONDS_PER_DAY
        eligible = 0
        resold = 0
        for tl in timelines.values():
            if tl.primary_ts > cutoff:
                continue
            eligible += 1
            if tl.n_secondary > 0 and tl.timestamps[1] - tl.primary_ts <= n * SECONDS_PER_DAY:
                resold += 1
        out[n] = resold / eligible if eligible else 0.0
    return out


def secondary_below_primary_by_year(timelines: Mapping[str, SaleTimeline]) -> dict[int, float]:
    """Share of secondary sales priced below their NFT's primary sale, by year."""
    below: Counter = Counter()
    total: Counter = Counter()
    for tl in timelines.values():
        primary = tl.primary_price
        if primary is None:
            continue
        for ts, price in zip(tl.timestamps[1:], tl.prices[1:]):
            if price is None:
                continue
            year = datetime.fromtimestamp(ts, tz=timezone.utc).year
            total[year] += 1
            if price < primary:
                below[year] += 1
    return {year: below[year] / total[year] for year in sorted(total)}
