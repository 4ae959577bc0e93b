"""Command-line entry: manifest CSV in, EMB1 container out."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from nftembed.extract import extract
from nftembed.manifest import ObjectManifest
from nftembed.model import PenultimateEmbedder


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nftembed", description="Extract 4096-d image embeddings to an EMB1 file")
    parser.add_argument("--manifest", required=True, help="CSV with id,path columns")
    parser.add_argument("--out", required=True, help="output EMB1 path")
    parser.add_argument("--skip-list", default=None, help="CSV of skipped ids (default: <out>.skipped.csv)")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--weights", default="pretrained", help="'pretrained', 'random', or a state-dict path")
    parser.add_argument("--seed", type=int, default=0, help="seed for --weights random")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        print(f"error: manifest not found: {manifest_path}", file=sys.stderr)
        return 1
    weights = None if args.weights == "random" else args.weights
    try:
        embedder = PenultimateEmbedder(weights=weights, seed=args.seed)
        manifest = ObjectManifest.from_csv(manifest_path)
        skip_path = args.skip_list or f"{args.out}.skipped.csv"
        extract(manifest, embedder, args.out, skip_path, batch_size=args.batch_size)
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
