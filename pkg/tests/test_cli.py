import json

import pytest

from anorank.cli import main


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "data"
    code = main([
        "gen-synth", "--rows", "100", "--cols", "16", "--anomaly-frac", "0.05",
        "--signature-size", "6", "--seed", "7", "-o", str(out),
    ])
    assert code == 0
    return out


FAST_FLAGS = ["--t", "2", "--k-query", "4", "--n0", "4",
              "--epochs-initial", "3", "--epochs-retrain", "1"]


class TestGenSynth:
    def test_writes_two_files_with_forced_anomaly_count(self, tmp_path):
        out = tmp_path / "d"
        code = main([
            "gen-synth", "--rows", "1000", "--cols", "64", "--anomaly-frac", "0.01",
            "--seed", "7", "-o", str(out),
        ])
        assert code == 0
        assert (out / "data.csv").exists() and (out / "labels.txt").exists()
        labels = [l for l in (out / "labels.txt").read_text().splitlines() if l.strip()]
        assert len(labels) == 10

    def test_deterministic(self, tmp_path):
        args = ["gen-synth", "--rows", "60", "--cols", "16", "--anomaly-frac", "0.1",
                "--signature-size", "5", "--seed", "3"]
        main(args + ["-o", str(tmp_path / "a")])
        main(args + ["-o", str(tmp_path / "b")])
        assert (tmp_path / "a/data.csv").read_bytes() == (tmp_path / "b/data.csv").read_bytes()


class TestRun:
    def test_byte_identical_history(self, synth_dir, tmp_path):
        base = ["run", "--data", str(synth_dir / "data.csv"),
                "--labels", str(synth_dir / "labels.txt"),
                "--metric", "nm1", "--strategy", "hybrid", "--seed", "1", *FAST_FLAGS]
        for name in ("h1.json", "h2.json"):
            assert main(base + ["-o", str(tmp_path / name)]) == 0
        assert (tmp_path / "h1.json").read_bytes() == (tmp_path / "h2.json").read_bytes()

    def test_history_contains_effective_config(self, synth_dir, tmp_path):
        out = tmp_path / "h.json"
        main(["run", "--data", str(synth_dir / "data.csv"),
              "--labels", str(synth_dir / "labels.txt"),
              "--metric", "cosine", "--strategy", "s1", "--seed", "5", *FAST_FLAGS,
              "-o", str(out)])
        payload = json.loads(out.read_text())
        assert payload["config"]["metric"] == "cosine"
        assert payload["config"]["strategy"] == "s1"
        assert payload["config"]["train"]["epochs_initial"] == 3
        assert len(payload["history"]) == 2
        assert payload["total_queries"] == 4 + 2 * 4

    def test_config_file_with_cli_override(self, synth_dir, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "T": 2, "k_query": 4, "n0": 4, "metric": "jaccard", "seed": 9,
            "train": {"epochs_initial": 3, "epochs_retrain": 1},
        }))
        out = tmp_path / "h.json"
        main(["run", "--data", str(synth_dir / "data.csv"),
              "--labels", str(synth_dir / "labels.txt"),
              "--config", str(cfg_path), "--metric", "nm1", "-o", str(out)])
        payload = json.loads(out.read_text())
        assert payload["config"]["metric"] == "nm1"  # CLI wins
        assert payload["config"]["seed"] == 9        # file survives

    def test_missing_data_file_is_exit_one(self, tmp_path):
        code = main(["run", "--data", str(tmp_path / "absent.csv"),
                     "--labels", str(tmp_path / "absent.txt")])
        assert code == 1


class TestGrid:
    def test_writes_three_files_with_18_columns(self, synth_dir, tmp_path):
        out = tmp_path / "grid"
        code = main(["grid", "--data", str(synth_dir / "data.csv"),
                     "--labels", str(synth_dir / "labels.txt"),
                     "--seed", "2", *FAST_FLAGS, "-o", str(out)])
        assert code == 0
        header = (out / "heatmap.csv").read_text().splitlines()[0]
        assert len(header.split(",")) == 1 + 18
        assert (out / "trajectories.csv").exists()
        assert json.loads((out / "boxplot.json").read_text())


class TestEval:
    def test_perfect_ranking_scores_one(self, tmp_path):
        (tmp_path / "r.txt").write_text("3\n1\n0\n2\n4\n")
        (tmp_path / "y.txt").write_text("3\n1\n")
        import contextlib, io

        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = main(["eval", "--ranking", str(tmp_path / "r.txt"),
                         "--labels", str(tmp_path / "y.txt"), "--k", "10"])
        assert code == 0
        assert float(buf.getvalue().strip()) == 1.0

    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
