"""Synthetic market generator with known ground truth.

Collection sizes, per-NFT sale counts, and trader activity weights are
drawn from discrete power laws; traders have home collections and trade
inside them with a configurable specialization probability; prices are
log-normal per collection; embeddings form per-collection Gaussian
clusters. Output uses the exact ingest/rates/config/embedding file
formats, so the whole toolkit can be exercised end to end.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from nftmarket.embeddings import EmbeddingMatrix, write_embeddings
from nftmarket.ingest import (
    SECONDS_PER_DAY,
    Category,
    CategoryMap,
    CollectionConfig,
    ExchangeRates,
    RawTrade,
    Source,
    TRADE_FIELDS,
)

_CATEGORY_CYCLE = (
    Category.ART,
    Category.COLLECTIBLE,
    Category.GAMES,
    Category.METAVERSE,
    Category.UTILITY,
    Category.OTHER,
)

_CURRENCY_BASE = {"ETH": 2000.0, "WAX": 0.1}


@dataclass
class SynthConfig:
    seed: int = 7
    n_collections: int = 200
    n_traders: int = 4000
    collection_size_exponent: float = -1.5
    collection_size_max: int = 10_000
    sales_exponent: float = -1.4
    sales_max: int = 50
    trader_weight_exponent: float = -1.85
    trader_weight_max: int = 1_000_000
    specialization: float = 0.8
    price_mu_range: tuple[float, float] = (1.0, 5.0)
    price_sigma: float = 0.5
    start_ts: int = 1_577_836_800  # 2020-01-01 UTC
    span_days: int = 365
    resale_gap_p: float = 0.05
    embedding_dim: int = 4096
    embedding_center_scale: float = 5.0
    embedding_spread: float = 1.0

    def validate(self) -> None:
        if self.n_collections < 1 or self.n_traders < 2:
            raise ValueError("need at least 1 collection and 2 traders")
        if self.n_traders < 2 * self.n_collections:
            raise ValueError(
                "need at least 2 traders per collection "
                f"({self.n_traders} traders for {self.n_collections} collections)"
            )
        for name in ("collection_size_exponent", "sales_exponent", "trader_weight_exponent"):
            if getattr(self, name) >= -1:
                raise ValueError(f"{name} must be < -1")
        if not 0.0 <= self.specialization <= 1.0:
            raise ValueError("specialization must lie in [0, 1]")
        if not 0.0 < self.resale_gap_p <= 1.0:
            raise ValueError("resale_gap_p must lie in (0, 1]")
        if self.span_days < 1 or self.embedding_dim < 1:
            raise ValueError("span_days and embedding_dim must be positive")


def sample_discrete_power_law(
    exponent: float,
    size: int,
    x_max: int = 1_000_000,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Draw integers with pmf P(x) ~ x**exponent on 1..x_max.

    Inverse-CDF sampling on the precomputed truncated normalization.
    """
    if exponent >= -1:
        raise ValueError("exponent must be < -1")
    rng = rng or np.random.default_rng()
    values = np.arange(1, x_max + 1, dtype=np.float64)
    pmf = values ** float(exponent)
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(size), side="left") + 1


def _letters(idx: int) -> str:
    """Alphabetic index encoding free of repeated-character runs."""
    digits = []
    n = idx
    while True:
        digits.append(n % 13)
        n //= 13
        if n == 0:
            break
    out = []
    for pos, d in enumerate(reversed(digits)):
        base = ord("a") if pos % 2 == 0 else ord("n")
        out.append(chr(base + d))
    return "".join(out)


def collection_name(idx: int) -> str:
    return "Col" + _letters(idx)


@dataclass
class SynthMarket:
    """In-memory market plus the planted ground truth."""

    config: SynthConfig
    trades: list[RawTrade]
    rates: ExchangeRates
    rate_rows: list[tuple[str, str, float]]
    collection_config: CollectionConfig
    embeddings: EmbeddingMatrix
    collection_sizes: np.ndarray
    sales_counts: np.ndarray
    trader_home: dict[str, str]
    trader_weight: dict[str, float]

    def ground_truth(self) -> dict:
        cfg = asdict(self.config)
        return {
            "seed": self.config.seed,
            "config": cfg,
            "n_trades": len(self.trades),
            "n_nfts": int(self.sales_counts.size),
            "collection_sizes": self.collection_sizes.tolist(),
            "sales_counts": self.sales_counts.tolist(),
            "trader_home": self.trader_home,
        }


def _weighted_picker(weights: np.ndarray):
    cum = np.cumsum(weights)
    total = cum[-1]

    def pick(u: float) -> int:
        return int(np.searchsorted(cum, u * total, side="right"))

    return pick


def generate_market(config: SynthConfig) -> SynthMarket:
    """Deterministically generate a market for the given config."""
    config.validate()
    rng = np.random.default_rng(config.seed)

    names = [collection_name(i) for i in range(config.n_collections)]
    categories = {names[i]: _CATEGORY_CYCLE[i % len(_CATEGORY_CYCLE)] for i in range(config.n_collections)}
    currencies = {
        names[i]: ("ETH" if rng.random() < 0.7 else "WAX") for i in range(config.n_collections)
    }
    sizes = sample_discrete_power_law(
        config.collection_size_exponent, config.n_collections, config.collection_size_max, rng
    )
    price_mu = rng.uniform(*config.price_mu_range, size=config.n_collections)

    traders = [f"t{idx:06d}" for idx in range(config.n_traders)]
    weights = sample_discrete_power_law(
        config.trader_weight_exponent, config.n_traders, config.trader_weight_max, rng
    ).astype(np.float64)
    # Two guaranteed home traders per collection so a fully specialized
    # market never needs out-of-pool draws; the rest follow size.
    home_idx = np.empty(config.n_traders, dtype=np.int64)
    seeded = np.repeat(np.arange(config.n_collections), 2)
    home_idx[: len(seeded)] = seeded
    home_idx[len(seeded):] = rng.choice(
        config.n_collections, size=config.n_traders - len(seeded), p=sizes / sizes.sum()
    )
    trader_home = {traders[t]: names[home_idx[t]] for t in range(config.n_traders)}

    pools: list[np.ndarray] = [np.flatnonzero(home_idx == c) for c in range(config.n_collections)]
    pool_pickers = [_weighted_picker(weights[pool]) for pool in pools]
    global_picker = _weighted_picker(weights)

    nft_collection: list[int] = []
    for c, size in enumerate(sizes):
        nft_collection.extend([c] * int(size))
    n_nfts = len(nft_collection)
    sales_counts = sample_discrete_power_law(config.sales_exponent, n_nfts, config.sales_max, rng)
    n_trades = int(sales_counts.sum())

    primary_ts = config.start_ts + rng.integers(0, config.span_days * SECONDS_PER_DAY, size=n_nfts)
    gap_draws = rng.geometric(config.resale_gap_p, size=n_trades)
    jitter = rng.integers(0, 3600, size=n_trades)
    theta_u = rng.random((n_trades, 2))
    pick_u = rng.random((n_trades, 2))
    price_noise = rng.standard_normal(n_trades)

    trades: list[RawTrade] = []
    rate_days: set[int] = set()
    k = 0
    for j in range(n_nfts):
        c = nft_collection[j]
        coll = names[c]
        currency = currencies[coll]
        nft_id = f"nft-{c}-{j}"
        url = f"obj-{c}-{j}"
        ts = int(primary_ts[j])
        for _ in range(int(sales_counts[j])):
            picker = pool_pickers[c]
            pool = pools[c]
            if theta_u[k, 0] < config.specialization:
                buyer_idx = int(pool[picker(pick_u[k, 0])])
            else:
                buyer_idx = global_picker(pick_u[k, 0])
            if theta_u[k, 1] < config.specialization:
                pos = picker(pick_u[k, 1])
                seller_idx = int(pool[pos])
                if seller_idx == buyer_idx:  # cyclic nudge stays in the pool
                    seller_idx = int(pool[(pos + 1) % len(pool)])
            else:
                seller_idx = global_picker(pick_u[k, 1])
                if seller_idx == buyer_idx:
                    seller_idx = (seller_idx + 1) % config.n_traders
            buyer = traders[buyer_idx]
            seller = traders[seller_idx]
            price_usd = float(np.exp(price_mu[c] + config.price_sigma * price_noise[k]))
            trades.append(
                RawTrade(
                    buyer=buyer,
                    seller=seller,
                    ts=ts,
                    collection_raw=coll,
                    nft_id=nft_id,
                    url=url,
                    currency=currency,
                    amount=price_usd,  # converted to currency units below
                    source=Source.ATOMIC if currency == "WAX" else Source.OPENSEA,
                )
            )
            rate_days.add(ts // SECONDS_PER_DAY)
            ts += int(gap_draws[k]) * SECONDS_PER_DAY + int(jitter[k])
            k += 1

    # Resale chains walk forward in time; calendar rendering (rates file,
    # datetime) supports dates up to year 9999 only.
    if max(rate_days) * SECONDS_PER_DAY > 250_000_000_000:
        raise ValueError(
            "infeasible config: resale chains overrun the calendar; "
            "lower sales_max or raise resale_gap_p"
        )
    # Daily exchange rates as a log random walk around each base value.
    day_lo, day_hi = min(rate_days), max(rate_days)
    days = np.arange(day_lo, day_hi + 1)
    rates = ExchangeRates()
    rate_rows: list[tuple[str, str, float]] = []
    for currency, base in sorted(_CURRENCY_BASE.items()):
        walk = np.cumsum(rng.normal(0.0, 0.01, size=len(days)))
        for day, w in zip(days, walk):
            rate = base * float(np.exp(w))
            rates.put(currency, int(day), rate)
            date = datetime.fromtimestamp(int(day) * SECONDS_PER_DAY, tz=timezone.utc).strftime("%Y-%m-%d")
            rate_rows.append((date, currency, rate))
    trades = [
        RawTrade(
            buyer=t.buyer,
            seller=t.seller,
            ts=t.ts,
            collection_raw=t.collection_raw,
            nft_id=t.nft_id,
            url=t.url,
            currency=t.currency,
            amount=t.amount / rates.get(t.currency, t.ts),
            source=t.source,
        )
        for t in trades
    ]
    trades.sort(key=lambda t: (t.ts, t.nft_id, t.buyer))

    centers = np.abs(rng.standard_normal((config.n_collections, config.embedding_dim))) * config.embedding_center_scale
    vectors = np.empty((n_nfts, config.embedding_dim), dtype=np.float32)
    ids = []
    for j in range(n_nfts):
        c = nft_collection[j]
        noise = rng.standard_normal(config.embedding_dim) * config.embedding_spread
        vectors[j] = np.maximum(centers[c] + noise, 0.0)
        ids.append(f"obj-{c}-{j}")

    collection_config = CollectionConfig(CategoryMap(dict(sorted(categories.items()))))
    return SynthMarket(
        config=config,
        trades=trades,
        rates=rates,
        rate_rows=rate_rows,
        collection_config=collection_config,
        embeddings=EmbeddingMatrix(ids=ids, vectors=vectors),
        collection_sizes=sizes,
        sales_counts=sales_counts,
        trader_home=trader_home,
        trader_weight={traders[t]: float(weights[t]) for t in range(config.n_traders)},
    )


def write_market(market: SynthMarket, outdir: str | Path) -> dict[str, Path]:
    """Write trades.csv, rates.csv, collections.ini, embeddings.emb1,
    and ground_truth.json; returns the path of each artifact."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trades": outdir / "trades.csv",
        "rates": outdir / "rates.csv",
        "collections": outdir / "collections.ini",
        "embeddings": outdir / "embeddings.emb1",
        "ground_truth": outdir / "ground_truth.json",
    }
    with open(paths["trades"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRADE_FIELDS)
        for t in market.trades:
            writer.writerow(
                [t.buyer, t.seller, t.ts, t.collection_raw, t.nft_id, t.url, t.currency, repr(t.amount), t.source.value]
            )
    with open(paths["rates"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "currency", "usd_rate"])
        for date, currency, rate in sorted(market.rate_rows):
            writer.writerow([date, currency, repr(rate)])
    with open(paths["collections"], "w", encoding="utf-8") as fh:
        fh.write("[categories]\n")
        for name, category in sorted(market.collection_config.category_map.mapping.items()):
            fh.write(f"{name} = {category.value}\n")
        fh.write("\n[merge_prefixes]\n\n[generic_names]\n")
        for g in sorted(market.collection_config.generic_names):
            fh.write(f"{g}\n")
    write_embeddings(paths["embeddings"], market.embeddings)
    with open(paths["ground_truth"], "w", encoding="utf-8") as fh:
        json.dump(market.ground_truth(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
