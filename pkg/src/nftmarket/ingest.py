"""Parse, clean, deduplicate, convert, and categorize raw trade exports.

Raw exports are line-delimited (CSV or JSONL) with fields
``buyer, seller, ts, collection, nft_id, url, currency, amount, source``.
Cleaning normalizes collection names, collapses duplicate records mirrored
by multiple data sources, converts amounts to USD with daily exchange
rates, and assigns each collection to a category.
"""

from __future__ import annotations

import csv
import json
import re
from configparser import ConfigParser
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

TRADE_FIELDS = ("buyer", "seller", "ts", "collection", "nft_id", "url", "currency", "amount", "source")
REQUIRED_FIELDS = ("buyer", "seller", "ts", "collection", "nft_id", "currency", "amount", "source")

STORE_FIELDS = TRADE_FIELDS + ("category", "price_usd")

SECONDS_PER_DAY = 86400


class Source(Enum):
    NONFUNGIBLE = "NonFungible"
    CRYPTOKITTIES_SALES = "CryptoKittiesSales"
    GODS_UNCHAINED = "GodsUnchained"
    DECENTRALAND = "Decentraland"
    OPENSEA = "OpenSea"
    ATOMIC = "Atomic"
    OTHER = "Other"


# Lower rank wins when mirrored records collide on the duplicate key.
SOURCE_PRIORITY = {
    Source.NONFUNGIBLE: 0,
    Source.CRYPTOKITTIES_SALES: 1,
    Source.GODS_UNCHAINED: 2,
    Source.DECENTRALAND: 3,
    Source.OPENSEA: 4,
    Source.ATOMIC: 5,
    Source.OTHER: 6,
}


class Category(Enum):
    ART = "Art"
    COLLECTIBLE = "Collectible"
    GAMES = "Games"
    METAVERSE = "Metaverse"
    UTILITY = "Utility"
    OTHER = "Other"


@dataclass(frozen=True)
class RawTrade:
    buyer: str
    seller: str
    ts: int
    collection_raw: str
    nft_id: str
    url: str | None
    currency: str
    amount: float
    source: Source


@dataclass(frozen=True)
class TradeRecord:
    buyer: str
    seller: str
    ts: int
    collection_raw: str
    nft_id: str
    url: str | None
    currency: str
    amount: float
    source: Source
    collection: str
    category: Category
    price_usd: float | None  # None = exchange rate missing for the trade day

    def day(self) -> int:
        """UTC day index (seconds since epoch floored to midnight)."""
        return self.ts - self.ts % SECONDS_PER_DAY


class ParseError(ValueError):
    """Raised in strict mode when a row cannot be decoded."""

    def __init__(self, row_number: int, reason: str):
        super().__init__(f"row {row_number}: {reason}")
        self.row_number = row_number
        self.reason = reason


@dataclass
class ParseResult:
    records: list[RawTrade]
    dropped_missing: int = 0
    dropped_malformed: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_missing + self.dropped_malformed


def _coerce_raw(row: dict, row_number: int) -> RawTrade | None:
    """Build a RawTrade from a decoded row. None = required field empty."""
    for field in REQUIRED_FIELDS:
        value = row.get(field)
        if value is None or str(value).strip() == "":
            return None
    ts = int(row["ts"])
    amount = float(row["amount"])
    if ts <= 0:
        raise ParseError(row_number, f"non-positive timestamp {ts}")
    if amount < 0:
        raise ParseError(row_number, f"negative amount {amount}")
    try:
        source = Source(str(row["source"]))
    except ValueError:
        raise ParseError(row_number, f"unknown source {row['source']!r}") from None
    url = row.get("url")
    url = str(url) if url not in (None, "") else None
    return RawTrade(
        buyer=str(row["buyer"]),
        seller=str(row["seller"]),
        ts=ts,
        collection_raw=str(row["collection"]),
        nft_id=str(row["nft_id"]),
        url=url,
        currency=str(row["currency"]),
        amount=amount,
        source=source,
    )


def _iter_rows(stream: Iterable[str], schema: str) -> Iterator[tuple[int, dict | None]]:
    """Yield (row_number, decoded dict) pairs; None marks an undecodable row."""
    if schema == "csv":
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            return
        if tuple(h.strip() for h in header) != TRADE_FIELDS:
            raise ValueError(f"unexpected CSV header {header!r}, want {list(TRADE_FIELDS)}")
        for i, row in enumerate(reader, start=2):
            if len(row) != len(TRADE_FIELDS):
                yield i, None
                continue
            yield i, dict(zip(TRADE_FIELDS, row))
    elif schema == "jsonl":
        for i, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                yield i, None
                continue
            yield i, obj if isinstance(obj, dict) else None
    else:
        raise ValueError(f"unknown schema {schema!r}, want 'csv' or 'jsonl'")


def parse_trades(stream: Iterable[str] | str | Path, schema: str = "csv", strict: bool = False) -> ParseResult:
    """Parse a raw trade export into RawTrades, in input order.

    Rows with any required field empty (url exempt) are dropped and
    counted; rows that cannot be decoded at all are counted separately
    and skipped, or abort with the row number in strict mode.
    """
    if isinstance(stream, (str, Path)):
        with open(stream, "r", encoding="utf-8", newline="") as fh:
            return parse_trades(fh, schema=schema, strict=strict)
    result = ParseResult(records=[])
    for row_number, row in _iter_rows(stream, schema):
        if row is None:
            if strict:
                raise ParseError(row_number, "undecodable row")
            result.dropped_malformed += 1
            continue
        try:
            record = _coerce_raw(row, row_number)
        except ParseError:
            if strict:
                raise
            result.dropped_malformed += 1
            continue
        except (TypeError, ValueError):
            if strict:
                raise ParseError(row_number, "unparseable field value")
            result.dropped_malformed += 1
            continue
        if record is None:
            result.dropped_missing += 1
            continue
        result.records.append(record)
    return result


_RUN_RE = re.compile(r"(.)\1{3,}")
_NON_ALNUM_RE = re.compile(r"[^0-9A-Za-z]+")
_DIGIT_RE = re.compile(r"[0-9]+")

DEFAULT_GENERIC_NAMES = frozenset({"Stuff", "Misc", "Items", "Assets", "Tokens", "Things"})


def normalize_collection(
    raw: str,
    merge_prefixes: Sequence[str] = (),
    generic_names: Iterable[str] = DEFAULT_GENERIC_NAMES,
) -> str:
    """Normalize a raw collection name.

    Digits, non-alphanumeric characters, and runs of four or more
    identical characters are removed; the result is capitalized. Names
    starting with a merge prefix collapse onto that prefix; names that
    are empty after stripping, or that appear in the generic list, map
    to ``Miscellanea``.
    """
    s = _DIGIT_RE.sub("", raw)
    s = _NON_ALNUM_RE.sub("", s)
    s = _RUN_RE.sub("", s)
    if not s:
        return "Miscellanea"
    s = s.capitalize()
    for prefix in merge_prefixes:
        if s.startswith(prefix.capitalize()):
            s = prefix.capitalize()
            break
    if s in {g.capitalize() for g in generic_names}:
        return "Miscellanea"
    return s


def _dup_key(record: RawTrade) -> tuple:
    return (record.nft_id, record.ts, record.buyer, record.seller)


def deduplicate(records: Sequence[RawTrade]) -> list[RawTrade]:
    """Collapse records mirrored by several sources.

    Records sharing (nft_id, ts, buyer, seller) reduce to the single
    record from the highest-priority source; first occurrence order of
    keys is preserved.
    """
    best: dict[tuple, RawTrade] = {}
    order: list[tuple] = []
    for record in records:
        key = _dup_key(record)
        kept = best.get(key)
        if kept is None:
            best[key] = record
            order.append(key)
        elif SOURCE_PRIORITY[record.source] < SOURCE_PRIORITY[kept.source]:
            best[key] = record
    return [best[key] for key in order]


class ExchangeRates:
    """Daily USD rates keyed by (currency, UTC day)."""

    def __init__(self, rates: dict[tuple[str, int], float] | None = None):
        self._rates = dict(rates or {})

    @classmethod
    def from_csv(cls, path: str | Path) -> "ExchangeRates":
        """Load a ``date,currency,usd_rate`` file (date = YYYY-MM-DD)."""
        rates: dict[tuple[str, int], float] = {}
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                day = datetime.strptime(row["date"], "%Y-%m-%d")
                day_index = int(day.replace(tzinfo=timezone.utc).timestamp()) // SECONDS_PER_DAY
                rate = float(row["usd_rate"])
                if rate <= 0:
                    raise ValueError(f"non-positive usd_rate for {row['currency']} on {row['date']}")
                rates[(row["currency"], day_index)] = rate
        return cls(rates)

    def get(self, currency: str, ts: int) -> float | None:
        return self._rates.get((currency, ts // SECONDS_PER_DAY))

    def put(self, currency: str, day_index: int, rate: float) -> None:
        self._rates[(currency, day_index)] = rate

    def __len__(self) -> int:
        return len(self._rates)


def to_usd(record: RawTrade, rates: ExchangeRates) -> float | None:
    """USD value at the trade's UTC calendar day; None if no rate exists."""
    rate = rates.get(record.currency, record.ts)
    if rate is None:
        return None
    return record.amount * rate


class CategoryMap:
    """Total mapping from normalized collection names to categories."""

    def __init__(self, mapping: dict[str, Category] | None = None, default: Category = Category.OTHER):
        self.mapping = dict(mapping or {})
        self.default = default

    def get(self, collection: str) -> Category:
        return self.mapping.get(collection, self.default)


def categorize(collection: str, category_map: CategoryMap) -> Category:
    """Category of a normalized collection name; unmapped names fall to Other."""
    return category_map.get(collection)


@dataclass
class CollectionConfig:
    """Collection-name cleaning and categorization settings."""

    category_map: CategoryMap
    merge_prefixes: tuple[str, ...] = ()
    generic_names: frozenset[str] = DEFAULT_GENERIC_NAMES

    @classmethod
    def from_ini(cls, path: str | Path) -> "CollectionConfig":
        """Load from an INI file with [categories], [merge_prefixes], [generic_names]."""
        parser = ConfigParser(allow_no_value=True, delimiters=("=",))
        parser.optionxform = str  # keep collection-name case
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
        mapping = {}
        if parser.has_section("categories"):
            for name, value in parser.items("categories"):
                mapping[name] = Category(value)
        prefixes = tuple(parser.options("merge_prefixes")) if parser.has_section("merge_prefixes") else ()
        generic = (
            frozenset(parser.options("generic_names"))
            if parser.has_section("generic_names")
            else DEFAULT_GENERIC_NAMES
        )
        return cls(CategoryMap(mapping), prefixes, generic)


@dataclass
class CleanStats:
    parsed: int = 0
    kept: int = 0
    dropped_missing: int = 0
    dropped_malformed: int = 0
    duplicates_removed: int = 0
    missing_rate: int = 0


def clean_trades(
    parsed: ParseResult,
    rates: ExchangeRates,
    config: CollectionConfig,
) -> tuple[list[TradeRecord], CleanStats]:
    """Run the full cleaning pipeline on parsed records.

    Deduplicates by source priority, normalizes collection names,
    assigns categories, and converts amounts to USD (records whose
    trade-day rate is missing keep price_usd=None and stay usable for
    count-based analyses).
    """
    stats = CleanStats(
        parsed=len(parsed.records) + parsed.dropped,
        dropped_missing=parsed.dropped_missing,
        dropped_malformed=parsed.dropped_malformed,
    )
    deduped = deduplicate(parsed.records)
    stats.duplicates_removed = len(parsed.records) - len(deduped)
    norm_cache: dict[str, str] = {}
    out: list[TradeRecord] = []
    for record in deduped:
        collection = norm_cache.get(record.collection_raw)
        if collection is None:
            collection = normalize_collection(
                record.collection_raw, config.merge_prefixes, config.generic_names
            )
            norm_cache[record.collection_raw] = collection
        price = to_usd(record, rates)
        if price is None:
            stats.missing_rate += 1
        out.append(
            TradeRecord(
                buyer=record.buyer,
                seller=record.seller,
                ts=record.ts,
                collection_raw=record.collection_raw,
                nft_id=record.nft_id,
                url=record.url,
                currency=record.currency,
                amount=record.amount,
                source=record.source,
                collection=collection,
                category=categorize(collection, config.category_map),
                price_usd=price,
            )
        )
    stats.kept = len(out)
    return out, stats


def write_trade_store(trades: Sequence[TradeRecord], path: str | Path) -> None:
    """Write the canonical cleaned-trade store (sorted, fixed column order)."""
    rows = sorted(trades, key=lambda t: (t.ts, t.nft_id, t.buyer, t.seller))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STORE_FIELDS)
        for t in rows:
            writer.writerow(
                [
                    t.buyer,
                    t.seller,
                    t.ts,
                    t.collection,
                    t.nft_id,
                    t.url or "",
                    t.currency,
                    repr(t.amount),
                    t.source.value,
                    t.category.value,
                    "" if t.price_usd is None else repr(t.price_usd),
                ]
            )


def read_trade_store(path: str | Path) -> list[TradeRecord]:
    """Read a canonical trade store written by :func:`write_trade_store`."""
    out: list[TradeRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != STORE_FIELDS:
            raise ValueError(f"unexpected store header {reader.fieldnames!r}")
        for row in reader:
            out.append(
                TradeRecord(
                    buyer=row["buyer"],
                    seller=row["seller"],
                    ts=int(row["ts"]),
                    collection_raw=row["collection"],
                    nft_id=row["nft_id"],
                    url=row["url"] or None,
                    currency=row["currency"],
                    amount=float(row["amount"]),
                    source=Source(row["source"]),
                    collection=row["collection"],
                    category=Category(row["category"]),
                    price_usd=float(row["price_usd"]) if row["price_usd"] else None,
                )
            )
    return out
