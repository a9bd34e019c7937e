import json

import pytest

from windadapt.cli import main


def write_config(tmp_path, **extra):
    cfg = {
        "out_dir": str(tmp_path / "out"),
        "n_bins": 3,
        "window": 6,
        "k": 4,
        "seed": 7,
        "arch": {"c1": 4, "c2": 4, "hidden": 8},
        "train": {"max_epochs": 2, "patience": 1},
        "forest": {"n_trees": 5, "max_depth": 6},
        "domains": {
            "src": {"synth": {"n_hours": 600, "n_features": 8, "seed": 1}},
            "tgt": {"synth": {"n_hours": 600, "n_features": 8, "seed": 2, "shift": 0.5}},
        },
    }
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path, tmp_path / "out"


def run(*argv):
    return main([str(a) for a in argv])


class TestPipeline:
    def test_full_smoke(self, tmp_path, capsys):
        cfg, out = write_config(tmp_path)
        assert run("prepare", "--config", cfg, "src") == 0
        assert run("prepare", "--config", cfg, "tgt") == 0
        assert run("features", "--config", cfg, "src") == 0
        assert run("train", "--config", cfg, "src") == 0
        assert run("adapt", "--config", cfg, "tgt",
                   "--checkpoint", out / "src.ckpt", "--mode", "partial") == 0
        assert run("eval", "--config", cfg, "tgt",
                   "--checkpoint", out / "tgt_adapted_partial.ckpt") == 0
        for f in ("src_aligned.csv", "src_histogram.csv", "src_importances.csv",
                  "src_correlation.csv", "selected_features.txt", "src.ckpt",
                  "src_history.csv", "tgt_adapted_partial.ckpt",
                  "tgt_adapt_partial_history.csv", "tgt_confusion.csv"):
            assert (out / f).exists(), f
        text = capsys.readouterr().out
        assert "accuracy" in text

    def test_matrix_and_ablations(self, tmp_path):
        cfg, out = write_config(tmp_path)
        assert run("matrix", "--config", cfg) == 0
        assert (out / "matrix.csv").exists()
        assert (out / "matrix_manifest.json").exists()
        assert run("ablate", "--config", cfg, "network",
                   "--source", "src", "--target", "tgt") == 0
        assert run("ablate", "--config", cfg, "features", "--domain", "src") == 0
        assert run("curves", "--config", cfg, "--source", "src", "--target", "tgt") == 0
        assert (out / "ablate_network.csv").exists()
        assert (out / "ablate_features.csv").exists()
        assert (out / "curves_src_tgt.csv").exists()

    def test_synth_roundtrip(self, tmp_path):
        cfg, out = write_config(tmp_path)
        assert run("synth", "--config", cfg, "src") == 0
        assert run("synth", "--config", cfg, "src") == 0
        assert (out / "src_generation.csv").exists()
        assert (out / "src_weather.csv").exists()


class TestDeterminism:
    def test_prepare_twice_identical(self, tmp_path):
        cfg, out = write_config(tmp_path)
        assert run("prepare", "--config", cfg, "src") == 0
        first = (out / "src_aligned.csv").read_bytes()
        assert run("prepare", "--config", cfg, "src") == 0
        assert (out / "src_aligned.csv").read_bytes() == first

    def test_eval_twice_identical(self, tmp_path):
        cfg, out = write_config(tmp_path)
        run("prepare", "--config", cfg, "src")
        run("features", "--config", cfg, "src")
        run("train", "--config", cfg, "src")
        assert run("eval", "--config", cfg, "src", "--checkpoint", out / "src.ckpt") == 0
        first = (out / "src_confusion.csv").read_bytes()
        assert run("eval", "--config", cfg, "src", "--checkpoint", out / "src.ckpt") == 0
        assert (out / "src_confusion.csv").read_bytes() == first

    def test_train_twice_identical_checkpoint(self, tmp_path):
        cfg, out = write_config(tmp_path)
        run("prepare", "--config", cfg, "src")
        run("features", "--config", cfg, "src")
        run("train", "--config", cfg, "src")
        first = (out / "src.ckpt").read_bytes()
        run("train", "--config", cfg, "src")
        assert (out / "src.ckpt").read_bytes() == first


class TestErrors:
    def test_bins_mismatch_is_exit_2(self, tmp_path, capsys):
        cfg, out = write_config(tmp_path)
        run("features", "--config", cfg, "src")
        run("train", "--config", cfg, "src")
        code = run("adapt", "--config", cfg, "tgt",
                   "--checkpoint", out / "src.ckpt", "--bins", "6")
        assert code == 2
        assert "architecture mismatch" in capsys.readouterr().err

    def test_missing_weather_file_is_exit_2(self, tmp_path, capsys):
        missing = tmp_path / "nope_weather.csv"
        gen = tmp_path / "gen.csv"
        gen.write_text("timestamp,xx\n2020-01-01T00:00,0.5\n")
        cfg, _ = write_config(tmp_path, domains={
            "raw": {"generation_csv": str(gen), "weather_csv": str(missing),
                    "country": "xx"}})
        code = run("prepare", "--config", cfg, "raw")
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_unknown_domain_is_exit_2(self, tmp_path, capsys):
        cfg, _ = write_config(tmp_path)
        assert run("prepare", "--config", cfg, "other") == 2
        assert "other" in capsys.readouterr().err

    def test_missing_config_is_exit_2(self, tmp_path):
        assert run("prepare", "--config", tmp_path / "absent.json", "src") == 2

    def test_train_without_features_is_exit_2(self, tmp_path, capsys):
        cfg, _ = write_config(tmp_path)
        assert run("train", "--config", cfg, "src") == 2
        assert "selected-features" in capsys.readouterr().err

    def test_ablate_network_needs_domains(self, tmp_path):
        cfg, _ = write_config(tmp_path)
        assert run("ablate", "--config", cfg, "network") == 2


class TestSourceFree:
    def test_adaptation_without_source_data(self, tmp_path):
        # only the checkpoint crosses the domain boundary: once trained,
        # every source-side artifact can be removed before adapting
        cfg_path, out = write_config(tmp_path)
        run("prepare", "--config", cfg_path, "src")
        run("features", "--config", cfg_path, "src")
        run("train", "--config", cfg_path, "src")

        (out / "src_aligned.csv").unlink()
        doc = json.loads(cfg_path.read_text())
        del doc["domains"]["src"]
        cfg_path.write_text(json.dumps(doc))

        assert run("adapt", "--config", cfg_path, "tgt",
                   "--checkpoint", out / "src.ckpt", "--mode", "full") == 0
        assert (out / "tgt_adapted_full.ckpt").exists()
