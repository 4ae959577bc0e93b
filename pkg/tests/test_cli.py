import json
from pathlib import Path

from nftmarket.cli import main

SYNTH_ARGS = [
    "synth",
    "--seed",
    "5",
    "--n-collections",
    "8",
    "--n-traders",
    "80",
    "--span-days",
    "90",
    "--embedding-dim",
    "16",
    "--sales-max",
    "15",
    "--collection-size-max",
    "60",
]


def run_pipeline(out: Path, seed: str = "5") -> int:
    codes = [main(SYNTH_ARGS + ["--out", str(out)])]
    codes.append(
        main(
            [
                "ingest",
                "--trades",
                str(out / "trades.csv"),
                "--rates",
                str(out / "rates.csv"),
                "--collections",
                str(out / "collections.ini"),
                "--out",
                str(out),
                "--seed",
                seed,
            ]
        )
    )
    store = str(out / "trades_clean.csv")
    codes.append(main(["stats", "--store", store, "--out", str(out), "--seed", seed]))
    codes.append(main(["network", "--store", store, "--null-n", "10", "--out", str(out), "--seed", seed]))
    codes.append(
        main(
            [
                "predict",
                "--store",
                store,
                "--embeddings",
                str(out / "embeddings.emb1"),
                "--out",
                str(out),
                "--seed",
                seed,
                "--class-window",
                "1m",
            ]
        )
    )
    codes.append(main(["report", "--out", str(out), "--seed", seed]))
    return max(codes)


class TestExitCodes:
    def test_unknown_subcommand_64(self, capsys):
        assert main(["frobnicate"]) == 64

    def test_no_subcommand_64(self):
        assert main([]) == 64

    def test_missing_path_exit_1_names_path(self, tmp_path, caplog):
        code = main(["stats", "--store", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
        assert code == 1
        assert "absent.csv" in caplog.text

    def test_happy_path_synth_stats(self, tmp_path):
        out = tmp_path / "run"
        assert run_pipeline(out) == 0
        for name in (
            "trades_clean.csv",
            "rolling_series.csv",
            "network_metrics.json",
            "features.csv",
            "manifest.json",
        ):
            assert (out / name).exists(), name


class TestVisualCommand:
    def test_visual_outputs(self, tmp_path):
        out = tmp_path / "v"
        assert main(SYNTH_ARGS + ["--out", str(out)]) == 0
        assert (
            main(
                [
                    "ingest",
                    "--trades",
                    str(out / "trades.csv"),
                    "--rates",
                    str(out / "rates.csv"),
                    "--collections",
                    str(out / "collections.ini"),
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
        code = main(
            [
                "visual",
                "--store",
                str(out / "trades_clean.csv"),
                "--embeddings",
                str(out / "embeddings.emb1"),
                "--out",
                str(out),
                "--pairs-per-cell",
                "50",
            ]
        )
        assert code == 0
        assert (out / "distance_matrix.csv").exists()
        assert (out / "pca_model.pca1").exists()
        metrics = json.loads((out / "visual_metrics.json").read_text())
        assert metrics["seed"] == 7
        assert metrics["intra_cd_mean"] < metrics["inter_cd_mean"]


class TestDeterminism:
    def test_manifests_byte_identical_across_directories(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run_pipeline(a) == 0
        assert run_pipeline(b) == 0
        ma = (a / "manifest.json").read_bytes()
        mb = (b / "manifest.json").read_bytes()
        assert ma == mb

    def test_rerun_subcommand_byte_identical(self, tmp_path):
        out = tmp_path / "r"
        assert main(SYNTH_ARGS + ["--out", str(out)]) == 0
        main(
            [
                "ingest",
                "--trades",
                str(out / "trades.csv"),
                "--rates",
                str(out / "rates.csv"),
                "--collections",
                str(out / "collections.ini"),
                "--out",
                str(out),
            ]
        )
        store = str(out / "trades_clean.csv")
        main(["stats", "--store", store, "--out", str(out)])
        first = (out / "stats_summary.json").read_bytes()
        main(["stats", "--store", store, "--out", str(out)])
        assert (out / "stats_summary.json").read_bytes() == first


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        out = tmp_path / "c"
        assert main(SYNTH_ARGS + ["--out", str(out)]) == 0
        ini = tmp_path / "run.ini"
        ini.write_text(
            f"[paths]\ntrades = {out / 'trades.csv'}\nrates = {out / 'rates.csv'}\n"
            f"collections = {out / 'collections.ini'}\n[params]\nseed = 5\n"
        )
        assert main(["--config", str(ini), "ingest", "--out", str(out)]) == 0
        summary = json.loads((out / "ingest_summary.json").read_text())
        assert summary["seed"] == 5

    def test_manifest_references_every_artifact_once(self, tmp_path):
        out = tmp_path / "m"
        assert run_pipeline(out) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        names = [a["name"] for a in manifest["artifacts"]]
        assert len(names) == len(set(names))
        on_disk = {p.name for p in out.iterdir() if p.is_file() and p.name != "manifest.json"}
        assert set(names) == on_disk

    def test_report_records_inputs_with_hashes(self, tmp_path):
        out = tmp_path / "i"
        assert main(SYNTH_ARGS + ["--out", str(out)]) == 0
        code = main(["report", "--out", str(out), "--input", f"trades={out / 'trades.csv'}"])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["inputs"][0]["role"] == "trades"
        assert manifest["inputs"][0]["name"] == "trades.csv"
        assert len(manifest["inputs"][0]["sha256"]) == 64
        assert main(["report", "--out", str(out), "--input", "nopath"]) == 1
