"""Plot-ready CSV / JSON report writers and the output manifest.

All writers are deterministic: fixed column orders, sorted iteration,
repr() float formatting, and no wall-clock timestamps, so re-running a
pipeline stage reproduces byte-identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from nftmarket.market import SaleTimeline, TimeSeriesReport
from nftmarket.models import ClassifierReport, RegressionReport
from nftmarket.networks import TradeGraph
from nftmarket.visual import DistanceSummary

MANIFEST_NAME = "manifest.json"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def timeseries_rows(report: TimeSeriesReport):
    for i, day in enumerate(report.days):
        for group in report.groups:
            yield (
                day,
                group,
                report.volume_usd[group][i],
                report.n_transactions[group][i],
                int(report.n_traders[group][i]),
                int(report.n_collections[group][i]),
            )


def write_timeseries_csv(report: TimeSeriesReport, path: str | Path) -> None:
    write_csv(
        path,
        ["day_ts", "group", "volume_usd", "n_transactions", "n_traders", "n_collections"],
        timeseries_rows(report),
    )


def write_percentiles_csv(table: Mapping[str, Mapping[int, float]], path: str | Path) -> None:
    rows = []
    for group in sorted(table):
        for pct in sorted(table[group]):
            rows.append((group, pct, table[group][pct]))
    write_csv(path, ["group", "percentile", "mean_price_usd"], rows)


def write_timelines_csv(timelines: Mapping[str, SaleTimeline], path: str | Path) -> None:
    def rows():
        for nft_id in sorted(timelines):
            tl = timelines[nft_id]
            ratios = [None] + tl.change_ratios()
            for i, (ts, price) in enumerate(zip(tl.timestamps, tl.prices)):
                yield (nft_id, tl.collection, tl.category, i, ts, price, ratios[i])

    write_csv(
        path,
        ["nft_id", "collection", "category", "sale_index", "ts", "price_usd", "change_ratio"],
        rows(),
    )


def write_resale_curve_csv(curve: Mapping[int, float], path: str | Path) -> None:
    write_csv(path, ["horizon_days", "fraction_resold"], sorted(curve.items()))


def write_below_primary_csv(shares: Mapping[int, float], path: str | Path) -> None:
    write_csv(path, ["year", "share_below_primary"], sorted(shares.items()))


def write_edges_csv(graph: TradeGraph, path: str | Path) -> None:
    write_csv(path, ["src", "dst", "weight"], graph.sorted_edges())


def write_partition_csv(partition: Mapping[str, str], path: str | Path) -> None:
    write_csv(path, ["node", "community"], sorted(partition.items()))


def write_distance_matrix_csv(summary: DistanceSummary, path: str | Path) -> None:
    def rows():
        for i, a in enumerate(summary.labels):
            for j, b in enumerate(summary.labels):
                if j < i:
                    continue
                mean = summary.mean[i, j]
                yield (
                    a,
                    b,
                    None if np.isnan(mean) else mean,
                    None if np.isnan(summary.std[i, j]) else summary.std[i, j],
                    int(summary.n_pairs[i, j]),
                )

    write_csv(path, ["group_a", "group_b", "mean_cd", "std_cd", "n_pairs"], rows())


def regression_table_rows(
    reports: Mapping[str, RegressionReport | None],
    feature_names: Sequence[str],
    columns: Sequence[str],
):
    """Coefficient-table layout: one row per term, one column per
    category; insignificant coefficients (p > 0.05) carry a ^ suffix."""

    def cell(report: RegressionReport | None, term: str) -> str:
        if report is None or term not in report.feature_names:
            return ""
        i = report.feature_names.index(term)
        flag = "^" if report.significance[i] == ">0.05" else ""
        return f"{report.beta[i]:.6g}{flag}"

    for term in ["const"] + list(feature_names):
        yield [term] + [cell(reports.get(col), term) for col in columns]
    yield ["n_nfts"] + ["" if reports.get(c) is None else reports[c].n_samples for c in columns]
    yield ["n_collections"] + ["" if reports.get(c) is None else reports[c].n_collections for c in columns]
    yield ["r2_adj"] + ["" if reports.get(c) is None else f"{reports[c].r2_adj:.6g}" for c in columns]


def write_regression_table_csv(
    reports: Mapping[str, RegressionReport | None],
    feature_names: Sequence[str],
    columns: Sequence[str],
    path: str | Path,
) -> None:
    write_csv(path, ["feature"] + list(columns), regression_table_rows(reports, feature_names, columns))


def write_r2_grid_csv(
    grid: Mapping[tuple[str, str | None], RegressionReport | None],
    feature_sets: Sequence[str],
    categories: Sequence[str | None],
    path: str | Path,
) -> None:
    """Feature-set x category adjusted-R^2 grid."""
    header = ["feature_set"] + [c if c is not None else "All" for c in categories]
    rows = []
    for fs in feature_sets:
        row = [fs]
        for cat in categories:
            report = grid.get((fs, cat))
            row.append("" if report is None else f"{report.r2_adj:.6g}")
        rows.append(row)
    write_csv(path, header, rows)


def classifier_report_row(report: ClassifierReport, category: str) -> list:
    return [
        category,
        report.feature_set,
        report.window,
        report.f1,
        "" if report.auc is None else report.auc,
        report.tp,
        report.fp,
        report.tn,
        report.fn,
        report.n_test,
    ]


CLASSIFIER_HEADER = ["category", "feature_set", "window", "f1", "auc", "tp", "fp", "tn", "fn", "n_test"]


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(params: Mapping) -> str:
    """Hash of the canonicalized parameter mapping (paths reduced to names)."""
    def canon(value):
        if isinstance(value, Path):
            return value.name
        if isinstance(value, dict):
            return {k: canon(v) for k, v in sorted(value.items())}
        if isinstance(value, (list, tuple)):
            return [canon(v) for v in value]
        return value

    blob = json.dumps(canon(dict(params)), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def build_manifest(
    out_dir: str | Path,
    inputs: Mapping[str, str | Path],
    params: Mapping,
    seed: int,
    version: str,
) -> dict:
    """Manifest of every artifact in out_dir with content hashes.

    Input files are recorded by basename and content hash so manifests
    from runs in different directories stay byte-identical.
    """
    out_dir = Path(out_dir)
    artifacts = []
    for path in sorted(out_dir.iterdir()):
        if not path.is_file() or path.name == MANIFEST_NAME:
            continue
        artifacts.append(
            {"name": path.name, "sha256": sha256_file(path), "bytes": path.stat().st_size}
        )
    return {
        "version": version,
        "seed": seed,
        "config_hash": config_hash(params),
        "inputs": [
            {"role": role, "name": Path(p).name, "sha256": sha256_file(p)}
            for role, p in sorted(inputs.items())
        ],
        "artifacts": artifacts,
    }
