"""Prediction experiments: assemble feature matrices, derive price or
resale targets, and run the regression / classification tasks over
feature-set, window, and category grids."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from nftmarket.features import FEATURE_SETS, FeatureRow, WINDOWS_DAYS
from nftmarket.ingest import SECONDS_PER_DAY
from nftmarket.market import SaleTimeline
from nftmarket.models import (
    AdaBoostStumps,
    ClassifierReport,
    FeatureTransform,
    RegressionReport,
    ols_fit,
    evaluate_classifier,
    random_oversample,
    temporal_split,
)


def feature_matrix(rows: Sequence[FeatureRow], feature_names: Sequence[str]) -> np.ndarray:
    """Stack the named features; rows with any missing value are callers' concern."""
    out = np.empty((len(rows), len(feature_names)))
    for i, row in enumerate(rows):
        for j, name in enumerate(feature_names):
            value = row.value(name)
            out[i, j] = np.nan if value is None else value
    return out


def complete_rows(rows: Sequence[FeatureRow], feature_names: Sequence[str]) -> list[FeatureRow]:
    """Rows with every requested feature present."""
    return [r for r in rows if all(r.value(name) is not None for name in feature_names)]


def regression_targets(
    timelines: Mapping[str, SaleTimeline],
    mode: str = "secondary_median",
    window_after: str = "1m",
    dataset_end: int | None = None,
) -> dict[str, float]:
    """Raw USD regression target per eligible NFT.

    mode='primary': the primary sale price. mode='secondary_median':
    median price of secondary sales inside (t_s, t_s + window]; NFTs
    without such a sale, or first sold within one window of the dataset
    end, are excluded so every target spans a full window.
    """
    if mode == "primary":
        return {
            nft: tl.primary_price
            for nft, tl in timelines.items()
            if tl.primary_price is not None
        }
    if mode != "secondary_median":
        raise ValueError(f"unknown mode {mode!r}")
    days = WINDOWS_DAYS[window_after]
    if days is None:
        raise ValueError("secondary_median needs a bounded window")
    if dataset_end is None:
        dataset_end = max(tl.timestamps[-1] for tl in timelines.values())
    horizon = days * SECONDS_PER_DAY
    out: dict[str, float] = {}
    for nft, tl in timelines.items():
        if tl.primary_ts > dataset_end - horizon:
            continue
        prices = [
            p
            for ts, p in zip(tl.timestamps[1:], tl.prices[1:])
            if p is not None and ts <= tl.primary_ts + horizon
        ]
        if prices:
            out[nft] = float(np.median(prices))
    return out


def resale_labels(
    timelines: Mapping[str, SaleTimeline],
    window_after: str = "1y",
    dataset_end: int | None = None,
) -> dict[str, int]:
    """1 if the NFT has any secondary sale within the window, else 0.

    NFTs first sold within one window of the dataset end are excluded.
    """
    days = WINDOWS_DAYS[window_after]
    if days is None:
        raise ValueError("resale label needs a bounded window")
    if dataset_end is None:
        dataset_end = max(tl.timestamps[-1] for tl in timelines.values())
    horizon = days * SECONDS_PER_DAY
    out: dict[str, int] = {}
    for nft, tl in timelines.items():
        if tl.primary_ts > dataset_end - horizon:
            continue
        resold = tl.n_secondary > 0 and tl.timestamps[1] <= tl.primary_ts + horizon
        out[nft] = int(resold)
    return out


@dataclass
class TargetScaler:
    """log1p + train-frozen min-max for the regression target."""

    lo: float = 0.0
    hi: float = 1.0

    def fit(self, y: np.ndarray) -> "TargetScaler":
        z = np.log1p(y)
        self.lo = float(z.min())
        self.hi = float(z.max())
        if self.hi == self.lo:
            raise ValueError("constant regression target")
        return self

    def transform(self, y: np.ndarray) -> np.ndarray:
        z = np.log1p(y)
        return np.clip((z - self.lo) / (self.hi - self.lo), 0.0, 1.0)


def run_regression(
    rows: Sequence[FeatureRow],
    timelines: Mapping[str, SaleTimeline],
    mode: str = "secondary_median",
    window_after: str = "1m",
    feature_set: str = "all",
    category: str | None = None,
    dataset_end: int | None = None,
) -> RegressionReport:
    """OLS fit of transformed features on the transformed price target."""
    names = FEATURE_SETS[feature_set]
    targets = regression_targets(timelines, mode, window_after, dataset_end)
    usable = [
        r
        for r in complete_rows(rows, names)
        if r.nft_id in targets and (category is None or r.category == category)
    ]
    if len(usable) <= len(names) + 1:
        raise ValueError(f"not enough samples ({len(usable)}) for {len(names)} features")
    X_raw = feature_matrix(usable, names)
    y_raw = np.array([targets[r.nft_id] for r in usable])
    transform = FeatureTransform(names).fit(X_raw)
    X = transform.transform(X_raw)
    y = TargetScaler().fit(y_raw).transform(y_raw)
    spec = f"{mode}({window_after})" if mode != "primary" else "primary"
    report = ols_fit(X, y, feature_names=list(transform.kept_columns_), target_spec=spec)
    report.n_collections = len({r.collection for r in usable})
    return report


def run_classification(
    rows: Sequence[FeatureRow],
    timelines: Mapping[str, SaleTimeline],
    window_after: str = "1y",
    feature_set: str = "all",
    category: str | None = None,
    dataset_end: int | None = None,
    train_frac: float = 0.95,
    n_estimators: int = 100,
    learning_rate: float = 1.0,
    seed: int = 0,
) -> ClassifierReport:
    """Temporal-split AdaBoost resale prediction with oversampled training."""
    names = FEATURE_SETS[feature_set]
    labels = resale_labels(timelines, window_after, dataset_end)
    usable = [
        r
        for r in complete_rows(rows, names)
        if r.nft_id in labels and (category is None or r.category == category)
    ]
    if len(usable) < 20:
        raise ValueError(f"not enough labelled samples ({len(usable)})")
    train_rows, test_rows = temporal_split(usable, train_frac)
    if not test_rows:
        raise ValueError("empty test split")
    transform = FeatureTransform(names).fit(feature_matrix(train_rows, names))
    X_train = transform.transform(feature_matrix(train_rows, names))
    X_test = transform.transform(feature_matrix(test_rows, names))
    y_train = np.array([labels[r.nft_id] for r in train_rows])
    y_test = np.array([labels[r.nft_id] for r in test_rows])
    X_bal, y_bal = random_oversample(X_train, y_train, seed=seed)
    model = AdaBoostStumps(n_estimators=n_estimators, learning_rate=learning_rate).fit(X_bal, y_bal)
    return evaluate_classifier(model, X_test, y_test, window=window_after, feature_set=feature_set)


def regression_grid(
    rows: Sequence[FeatureRow],
    timelines: Mapping[str, SaleTimeline],
    mode: str,
    window_after: str,
    feature_sets: Sequence[str],
    categories: Sequence[str | None],
    dataset_end: int | None = None,
) -> dict[tuple[str, str | None], RegressionReport | None]:
    """Adjusted-R^2 grid over feature sets and categories; None marks
    cells with too few samples."""
    grid: dict[tuple[str, str | None], RegressionReport | None] = {}
    for fs in feature_sets:
        for cat in categories:
            try:
                grid[(fs, cat)] = run_regression(
                    rows, timelines, mode, window_after, fs, cat, dataset_end
                )
            except ValueError:
                grid[(fs, cat)] = None
    return grid
