"""Batch analytics toolkit for NFT trade logs.

Pipeline stages: ingest raw trade exports, compute market statistics,
build trader/NFT networks with null models, analyse visual embeddings,
and fit price-regression / resale-classification models. A synthetic
market generator with known ground truth makes every estimator testable
without proprietary data.
"""

__version__ = "0.1.0"

from nftmarket.ingest import (
    Category,
    Source,
    RawTrade,
    TradeRecord,
    parse_trades,
    normalize_collection,
    deduplicate,
    to_usd,
    categorize,
    clean_trades,
)
from nftmarket.powerlaw import PowerLawFit, fit_power_law
from nftmarket.networks import TradeGraph, build_trader_network, build_nft_network
from nftmarket.visual import EmbeddingPca, cosine_distance
from nftmarket.models import AdaBoostStumps, FeatureTransform, OlsRegression

__all__ = [
    "Category",
    "Source",
    "RawTrade",
    "TradeRecord",
    "parse_trades",
    "normalize_collection",
    "deduplicate",
    "to_usd",
    "categorize",
    "clean_trades",
    "PowerLawFit",
    "fit_power_law",
    "TradeGraph",
    "build_trader_network",
    "build_nft_network",
    "EmbeddingPca",
    "cosine_distance",
    "AdaBoostStumps",
    "FeatureTransform",
    "OlsRegression",
    "__version__",
]
