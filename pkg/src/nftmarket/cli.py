"""Command-line pipeline: synth, ingest, stats, network, visual,
predict, and report subcommands.

Every subcommand validates its input paths (exit 1 on failure), logs to
stderr with level prefixes, records the seed in its summary JSON, and
writes byte-identical artifacts when re-run on unchanged inputs.
Runtime errors exit 2; usage errors exit 64.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from configparser import ConfigParser
from pathlib import Path

import numpy as np

import nftmarket
from nftmarket import experiments, reports
from nftmarket.embeddings import read_embeddings
from nftmarket.features import FEATURE_NAMES, FEATURE_SETS, build_feature_rows
from nftmarket.ingest import (
    CategoryMap,
    CollectionConfig,
    ExchangeRates,
    clean_trades,
    parse_trades,
    read_trade_store,
    write_trade_store,
)
from nftmarket.market import (
    price_percentiles,
    resale_fraction_curve,
    rolling_series,
    sale_timelines,
    secondary_below_primary_by_year,
)
from nftmarket.networks import (
    assortativity,
    build_nft_network,
    build_trader_network,
    collection_partition_nfts,
    collection_partition_traders,
    active_days,
    null_modularity,
    modularity,
    scc_fractions,
    strength,
    strength_activity_slope,
)
from nftmarket.powerlaw import fit_power_law
from nftmarket.synth import SynthConfig, generate_market, write_market
from nftmarket.visual import EmbeddingPca, group_distance_matrix, inter_intra_ratio

logger = logging.getLogger("nftmarket")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64

THREADS_ENV = "NFTMARKET_THREADS"

DEFAULT_HORIZONS = (7, 30, 90, 183, 365, 730)


class ValidationError(Exception):
    """Bad run configuration (missing paths, malformed settings)."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _require_path(label: str, value: str | None) -> Path:
    if not value:
        raise ValidationError(f"missing required path: {label}")
    path = Path(value)
    if not path.exists():
        raise ValidationError(f"{label} path does not exist: {path}")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _n_jobs() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def load_config_file(path: str | None) -> dict:
    """Flatten a [paths]/[params] INI config into one mapping."""
    if not path:
        return {}
    ini = _require_path("config", path)
    parser = ConfigParser()
    parser.read(ini)
    merged: dict[str, str] = {}
    for section in ("paths", "params"):
        if parser.has_section(section):
            merged.update(parser.items(section))
    return merged


def _setting(args, config: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name.replace("_", "-"), config.get(name, default))


def _fit_or_error(samples, xmin=None) -> dict:
    try:
        fit = fit_power_law(samples, xmin=xmin)
        return {
            "exponent": fit.exponent,
            "xmin": fit.xmin,
            "n_tail": fit.n_tail,
            "loglik": fit.loglik,
            "discrete": fit.discrete,
        }
    except ValueError as err:
        return {"error": str(err)}


def cmd_ingest(args, config: dict) -> int:
    trades_path = _require_path("trades", _setting(args, config, "trades"))
    rates_path = _require_path("rates", _setting(args, config, "rates"))
    collections = _setting(args, config, "collections")
    if collections:
        coll_config = CollectionConfig.from_ini(_require_path("collections", collections))
    else:
        coll_config = CollectionConfig(CategoryMap())
    out = _out_dir(args)
    schema = _setting(args, config, "schema", "csv")
    parsed = parse_trades(trades_path, schema=schema, strict=bool(args.strict))
    rates = ExchangeRates.from_csv(rates_path)
    trades, stats = clean_trades(parsed, rates, coll_config)
    store = out / "trades_clean.csv"
    write_trade_store(trades, store)
    reports.write_json(
        out / "ingest_summary.json",
        {
            "seed": int(_setting(args, config, "seed", 7)),
            "parsed": stats.parsed,
            "kept": stats.kept,
            "dropped_missing": stats.dropped_missing,
            "dropped_malformed": stats.dropped_malformed,
            "duplicates_removed": stats.duplicates_removed,
            "missing_rate": stats.missing_rate,
        },
    )
    logger.info("ingest: kept %d of %d rows -> %s", stats.kept, stats.parsed, store)
    return EXIT_OK


def cmd_stats(args, config: dict) -> int:
    store = _require_path("store", _setting(args, config, "store"))
    out = _out_dir(args)
    seed = int(_setting(args, config, "seed", 7))
    window = int(_setting(args, config, "window_days", 30))
    sales_xmin = float(_setting(args, config, "sales_xmin", 10))
    trades = read_trade_store(store)
    timelines = sale_timelines(trades)

    reports.write_timeseries_csv(rolling_series(trades, window), out / "rolling_series.csv")
    reports.write_percentiles_csv(price_percentiles(trades), out / "price_percentiles.csv")
    reports.write_timelines_csv(timelines, out / "sale_timelines.csv")
    curve = resale_fraction_curve(timelines, DEFAULT_HORIZONS)
    reports.write_resale_curve_csv(curve, out / "resale_curve.csv")
    reports.write_below_primary_csv(secondary_below_primary_by_year(timelines), out / "secondary_below_primary.csv")

    sale_counts = [len(tl.timestamps) for tl in timelines.values()]
    sizes = {}
    for tl in timelines.values():
        sizes[tl.collection] = sizes.get(tl.collection, 0) + 1
    n_secondary = sum(1 for tl in timelines.values() if tl.n_secondary > 0)
    reports.write_json(
        out / "stats_summary.json",
        {
            "seed": seed,
            "window_days": window,
            "n_trades": len(trades),
            "n_nfts": len(timelines),
            "n_collections": len(sizes),
            "share_with_secondary": n_secondary / len(timelines) if timelines else 0.0,
            "sales_fit": _fit_or_error(sale_counts, xmin=sales_xmin),
            "collection_size_fit": _fit_or_error(sorted(sizes.values())),
            "resale_curve": {str(k): v for k, v in curve.items()},
        },
    )
    logger.info("stats: %d trades, %d NFTs -> %s", len(trades), len(timelines), out)
    return EXIT_OK


def cmd_network(args, config: dict) -> int:
    store = _require_path("store", _setting(args, config, "store"))
    out = _out_dir(args)
    seed = int(_setting(args, config, "seed", 7))
    null_n = int(_setting(args, config, "null_n", 100))
    n_jobs = _n_jobs()
    trades = read_trade_store(store)

    metrics: dict = {"seed": seed, "null_n": null_n}
    trader_graph = build_trader_network(trades)
    reports.write_edges_csv(trader_graph, out / "trader_edges.csv")
    trader_partition = collection_partition_traders(trader_graph)
    reports.write_partition_csv(trader_partition, out / "trader_partition.csv")
    strengths = [strength(trader_graph, node) for node in trader_graph.out_adj]
    metrics["trader"] = {
        "n_nodes": trader_graph.n_nodes(),
        "n_edges": trader_graph.n_edges(),
        "total_weight": trader_graph.total_weight(),
        "self_trades_dropped": trader_graph.build_stats.get("self_trades_dropped", 0),
        "strength_fit_lambda1": _fit_or_error(strengths),
        "scc_fractions": scc_fractions(trader_graph),
    }
    try:
        metrics["trader"]["assortativity_r"] = assortativity(trader_graph)
    except ValueError as err:
        metrics["trader"]["assortativity_r"] = None
        metrics["trader"]["assortativity_error"] = str(err)
    try:
        metrics["trader"]["strength_activity_slope_lambda2"] = strength_activity_slope(
            trader_graph, active_days(trades)
        )
    except ValueError as err:
        metrics["trader"]["strength_activity_slope_lambda2"] = None
        metrics["trader"]["slope_error"] = str(err)
    q = modularity(trader_graph, trader_partition)
    null = null_modularity(trader_graph, trader_partition, n=null_n, seed=seed, n_jobs=n_jobs)
    metrics["trader"]["modularity_q"] = q
    metrics["trader"]["null_modularity"] = {"mean": null.mean, "sem": null.sem, "std": null.std, "n": null.n_realizations}

    nft_graph = build_nft_network(trades)
    reports.write_edges_csv(nft_graph, out / "nft_edges.csv")
    if nft_graph.n_nodes():
        nft_partition = collection_partition_nfts(nft_graph)
        reports.write_partition_csv(nft_partition, out / "nft_partition.csv")
        nft_strengths = [strength(nft_graph, node) for node in nft_graph.out_adj]
        metrics["nft"] = {
            "n_nodes": nft_graph.n_nodes(),
            "n_edges": nft_graph.n_edges(),
            "total_weight": nft_graph.total_weight(),
            "strength_fit_lambda3": _fit_or_error(nft_strengths),
            "scc_fractions": scc_fractions(nft_graph),
            "modularity_q": modularity(nft_graph, nft_partition),
        }
        nft_null = null_modularity(nft_graph, nft_partition, n=null_n, seed=seed + 1, n_jobs=n_jobs)
        metrics["nft"]["null_modularity"] = {
            "mean": nft_null.mean,
            "sem": nft_null.sem,
            "std": nft_null.std,
            "n": nft_null.n_realizations,
        }
    else:
        metrics["nft"] = {"n_nodes": 0}
    reports.write_json(out / "network_metrics.json", metrics)
    logger.info(
        "network: trader %d nodes, nft %d nodes -> %s",
        trader_graph.n_nodes(),
        nft_graph.n_nodes(),
        out,
    )
    return EXIT_OK


def _collection_of_objects(trades) -> tuple[dict[str, str], dict[str, str]]:
    by_collection: dict[str, str] = {}
    by_category: dict[str, str] = {}
    for t in trades:
        if t.url is not None and t.url not in by_collection:
            by_collection[t.url] = t.collection
            by_category[t.url] = t.category.value
    return by_collection, by_category


def cmd_visual(args, config: dict) -> int:
    store = _require_path("store", _setting(args, config, "store"))
    emb_path = _require_path("embeddings", _setting(args, config, "embeddings"))
    out = _out_dir(args)
    seed = int(_setting(args, config, "seed", 7))
    k = int(_setting(args, config, "pca_k", 5))
    pairs_per_cell = int(_setting(args, config, "pairs_per_cell", 500))
    top_n = int(_setting(args, config, "top_collections", 20))

    trades = read_trade_store(store)
    emb = read_embeddings(emb_path)
    by_collection, by_category = _collection_of_objects(trades)

    pca = EmbeddingPca(n_components=k, seed=seed).fit(emb.vectors)
    pca.save(out / "pca_model.pca1")
    scores = pca.transform(emb.vectors)
    reports.write_csv(
        out / "pca_scores.csv",
        ["object_id"] + [f"pc_{i + 1}" for i in range(scores.shape[1])],
        ((emb.ids[i], *scores[i]) for i in np.argsort(emb.ids)),
    )

    counts: dict[str, int] = {}
    for obj, coll in by_collection.items():
        if obj in emb:
            counts[coll] = counts.get(coll, 0) + 1
    top = {c for c, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]}
    grouping = {obj: coll for obj, coll in by_collection.items() if coll in top}
    summary = group_distance_matrix(emb, grouping, max_pairs_per_cell=pairs_per_cell, seed=seed)
    reports.write_distance_matrix_csv(summary, out / "distance_matrix.csv")

    intra_mask = np.eye(len(summary.labels), dtype=bool)
    n_pairs = summary.n_pairs
    with np.errstate(invalid="ignore"):
        intra_vals = summary.mean[intra_mask]
        inter_vals = summary.mean[~intra_mask]
        intra_w = n_pairs[intra_mask]
        inter_w = n_pairs[~intra_mask]
    ok_intra = ~np.isnan(intra_vals)
    ok_inter = ~np.isnan(inter_vals)

    proj_ids = [i for i in emb.ids if i in by_collection]
    proj = pca.transform(np.stack([emb.get(i) for i in proj_ids]))[:, : min(3, scores.shape[1])]
    ratios: dict[str, float | None] = {}
    for label, mapping in (("collections", by_collection), ("categories", by_category)):
        try:
            ratios[label] = inter_intra_ratio(proj, [mapping[i] for i in proj_ids], seed=seed)
        except ValueError as err:
            ratios[label] = None
            ratios[f"{label}_error"] = str(err)

    reports.write_json(
        out / "visual_metrics.json",
        {
            "seed": seed,
            "n_objects": len(emb),
            "dim": emb.dim,
            "explained_variance_ratio": [float(r) for r in pca.explained_variance_ratio_],
            "intra_cd_mean": float(np.average(intra_vals[ok_intra], weights=intra_w[ok_intra]))
            if ok_intra.any()
            else None,
            "inter_cd_mean": float(np.average(inter_vals[ok_inter], weights=inter_w[ok_inter]))
            if ok_inter.any()
            else None,
            "euclidean_inter_intra_ratio": ratios,
            "top_collections": sorted(top),
        },
    )
    logger.info("visual: %d objects, %d components -> %s", len(emb), scores.shape[1], out)
    return EXIT_OK


def cmd_predict(args, config: dict) -> int:
    store = _require_path("store", _setting(args, config, "store"))
    emb_path = _require_path("embeddings", _setting(args, config, "embeddings"))
    out = _out_dir(args)
    seed = int(_setting(args, config, "seed", 7))
    k = int(_setting(args, config, "pca_k", 5))
    median_window = str(_setting(args, config, "median_window", "1w"))
    reg_window = str(_setting(args, config, "regression_window", "1m"))
    class_window = str(_setting(args, config, "class_window", "1y"))
    class_sets = str(_setting(args, config, "class_feature_sets", "all")).split(",")
    class_categories = str(_setting(args, config, "class_categories", "All")).split(",")

    trades = read_trade_store(store)
    emb = read_embeddings(emb_path)
    timelines = sale_timelines(trades)

    pca = EmbeddingPca(n_components=k, seed=seed).fit(emb.vectors)
    pca_scores = {emb.ids[i]: s for i, s in enumerate(pca.transform(emb.vectors))}
    rows = build_feature_rows(trades, pca_scores=pca_scores, median_window=median_window)
    reports.write_csv(
        out / "features.csv",
        ["nft_id", "t_s", "collection", "category"] + list(FEATURE_NAMES),
        (
            [r.nft_id, r.t_s, r.collection, r.category] + [r.value(name) for name in FEATURE_NAMES]
            for r in rows
        ),
    )

    categories = sorted({r.category for r in rows})
    columns = ["All"] + categories
    table: dict[str, object] = {}
    for col in columns:
        cat = None if col == "All" else col
        try:
            table[col] = experiments.run_regression(
                rows, timelines, "secondary_median", reg_window, "all", cat
            )
        except ValueError as err:
            logger.warning("regression (%s) skipped: %s", col, err)
            table[col] = None
    reports.write_regression_table_csv(
        table, FEATURE_NAMES, columns, out / f"regression_table_secondary_{reg_window}.csv"
    )

    feature_sets = list(FEATURE_SETS)
    cat_grid = [None] + categories
    for mode, window, name in (
        ("primary", reg_window, "regression_grid_primary.csv"),
        ("secondary_median", reg_window, f"regression_grid_secondary_{reg_window}.csv"),
    ):
        grid = experiments.regression_grid(rows, timelines, mode, window, feature_sets, cat_grid)
        reports.write_r2_grid_csv(grid, feature_sets, cat_grid, out / name)

    class_rows = []
    class_results: dict[str, dict] = {}
    for fs in class_sets:
        for col in class_categories:
            cat = None if col == "All" else col
            try:
                report = experiments.run_classification(
                    rows, timelines, class_window, fs, cat, seed=seed
                )
            except ValueError as err:
                logger.warning("classification (%s, %s) skipped: %s", fs, col, err)
                continue
            class_rows.append(reports.classifier_report_row(report, col))
            class_results[f"{fs}/{col}"] = {
                "f1": report.f1,
                "auc": report.auc,
                "n_test": report.n_test,
            }
    reports.write_csv(out / "classification_report.csv", reports.CLASSIFIER_HEADER, class_rows)

    reports.write_json(
        out / "predict_summary.json",
        {
            "seed": seed,
            "n_feature_rows": len(rows),
            "median_window": median_window,
            "regression_window": reg_window,
            "class_window": class_window,
            "classification": class_results,
        },
    )
    logger.info("predict: %d feature rows -> %s", len(rows), out)
    return EXIT_OK


def cmd_synth(args, config: dict) -> int:
    out = _out_dir(args)
    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = int(args.seed)
    for field_name in SynthConfig.__dataclass_fields__:
        if field_name in kwargs:
            continue
        value = _setting(args, config, field_name)
        if value is None:
            continue
        factory = SynthConfig.__dataclass_fields__[field_name].type
        if field_name == "price_mu_range":
            lo, hi = str(value).split(":")
            kwargs[field_name] = (float(lo), float(hi))
        elif "float" in str(factory):
            kwargs[field_name] = float(value)
        else:
            kwargs[field_name] = int(value)
    try:
        market_config = SynthConfig(**kwargs)
        market_config.validate()
    except ValueError as err:
        raise ValidationError(str(err)) from err
    market = generate_market(market_config)
    write_market(market, out)
    reports.write_json(
        out / "synth_summary.json",
        {
            "seed": market_config.seed,
            "n_trades": len(market.trades),
            "n_nfts": int(market.sales_counts.size),
            "n_collections": market_config.n_collections,
            "n_traders": market_config.n_traders,
            "specialization": market_config.specialization,
        },
    )
    logger.info("synth: %d trades, %d NFTs -> %s", len(market.trades), market.sales_counts.size, out)
    return EXIT_OK


def cmd_report(args, config: dict) -> int:
    out = _out_dir(args)
    inputs = {}
    for spec in args.input or []:
        if "=" not in spec:
            raise ValidationError(f"--input expects role=path, got {spec!r}")
        role, _, path = spec.partition("=")
        inputs[role] = _require_path(role, path)
    seed = int(_setting(args, config, "seed", 7))
    manifest = reports.build_manifest(
        out,
        inputs,
        params={"command": "report", "seed": seed, "inputs": sorted(inputs)},
        seed=seed,
        version=nftmarket.__version__,
    )
    reports.write_json(out / reports.MANIFEST_NAME, manifest)
    logger.info("report: %d artifacts -> %s", len(manifest["artifacts"]), out / reports.MANIFEST_NAME)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="nftmarket", description="NFT trade-log analytics pipeline")
    parser.add_argument("--config", help="INI config with [paths] and [params] defaults")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("ingest", help="clean a raw trade export into the canonical store")
    common(p)
    p.add_argument("--trades")
    p.add_argument("--rates")
    p.add_argument("--collections", help="collection config INI")
    p.add_argument("--schema", choices=("csv", "jsonl"), default=None)
    p.add_argument("--strict", action="store_true", help="abort on malformed rows")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="market statistics reports")
    common(p)
    p.add_argument("--store")
    p.add_argument("--window-days", dest="window_days", type=int, default=None)
    p.add_argument("--sales-xmin", dest="sales_xmin", type=float, default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("network", help="trader/NFT networks, metrics, null models")
    common(p)
    p.add_argument("--store")
    p.add_argument("--null-n", dest="null_n", type=int, default=None)
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("visual", help="embedding distance and PCA reports")
    common(p)
    p.add_argument("--store")
    p.add_argument("--embeddings")
    p.add_argument("--pca-k", dest="pca_k", type=int, default=None)
    p.add_argument("--pairs-per-cell", dest="pairs_per_cell", type=int, default=None)
    p.add_argument("--top-collections", dest="top_collections", type=int, default=None)
    p.set_defaults(func=cmd_visual)

    p = sub.add_parser("predict", help="price regressions and resale classification")
    common(p)
    p.add_argument("--store")
    p.add_argument("--embeddings")
    p.add_argument("--pca-k", dest="pca_k", type=int, default=None)
    p.add_argument("--median-window", dest="median_window", default=None)
    p.add_argument("--regression-window", dest="regression_window", default=None)
    p.add_argument("--class-window", dest="class_window", default=None)
    p.add_argument("--class-feature-sets", dest="class_feature_sets", default=None)
    p.add_argument("--class-categories", dest="class_categories", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic market")
    common(p)
    for field_name in SynthConfig.__dataclass_fields__:
        if field_name == "seed":
            continue
        p.add_argument("--" + field_name.replace("_", "-"), dest=field_name, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="bundle artifacts into a manifest")
    common(p)
    p.add_argument("--input", action="append", help="role=path input reference (repeatable)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        config = load_config_file(args.config)
        return args.func(args, config)
    except ValidationError as err:
        logger.error("%s", err)
        return EXIT_VALIDATION
    except Exception as err:  # noqa: BLE001 - CLI boundary
        logger.error("%s: %s", type(err).__name__, err)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
