from pathlib import Path

import numpy as np
import pytest
from typer.testing import CliRunner

from config import TOOL_VERSION
from db import load_dataset, manifest_artifacts, read_csv, read_manifest, save_dataset
from main import app
from states import Label

runner = CliRunner()


def invoke(*args):
    return runner.invoke(app, [str(arg) for arg in args])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Маленький прогон generate → train cnn/cae → eval, общий для тестов модуля."""
    out = tmp_path_factory.mktemp("pipeline")
    result = invoke("generate", "--n", 64, "--resolution", 8, "--scale", 0.05, "--seed", 1, "--out", out)
    assert result.exit_code == 0, result.output
    for model in ("cnn", "cae"):
        result = invoke("train", "--dataset", out / "dataset.jwd", "--model", model, "--max-epochs", 2,
                        "--seed", 0, "--out", out)
        assert result.exit_code == 0, result.output
    result = invoke("eval", "--dataset", out / "dataset.jwd", "--cnn", out / "cnn.ckpt", "--cae", out / "cae.ckpt",
                    "--out", out)
    assert result.exit_code == 0, result.output
    return out


class TestGenerate:

    def test_zero_window_is_usage_error(self, tmp_path):
        result = invoke("generate", "--n", 0, "--out", tmp_path)
        assert result.exit_code == 2
        assert "--n" in result.output

    def test_zero_scale_is_configuration_error(self, tmp_path):
        result = invoke("generate", "--n", 16, "--resolution", 8, "--scale", 0, "--out", tmp_path)
        assert result.exit_code == 2

    def test_counts_at_tenth_scale(self, tmp_path):
        result = invoke("generate", "--n", 32, "--resolution", 8, "--scale", 0.1, "--out", tmp_path)
        assert result.exit_code == 0, result.output
        dataset = load_dataset(tmp_path / "dataset.jwd")
        assert len(dataset) == 940
        assert int(np.count_nonzero(dataset.labels == int(Label.ATTACK))) == 400 + 30 + 40

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            result = invoke("generate", "--n", 32, "--resolution", 8, "--scale", 0.02, "--seed", 9,
                            "--out", tmp_path / name)
            assert result.exit_code == 0, result.output
        assert (tmp_path / "a" / "dataset.jwd").read_bytes() == (tmp_path / "b" / "dataset.jwd").read_bytes()

    def test_config_file_is_overridden_by_flag(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("n=48\nresolution=8\nscale=0.02\nseed=3\n")
        result = invoke("generate", "--config", config, "--n", 32, "--out", tmp_path / "out")
        assert result.exit_code == 0, result.output
        assert load_dataset(tmp_path / "out" / "dataset.jwd").n_per_bitmap == 32

    def test_bad_config_value(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("n=many\n")
        result = invoke("generate", "--config", config, "--out", tmp_path / "out")
        assert result.exit_code == 2


class TestPipeline:

    def test_history_has_one_row_per_epoch(self, pipeline):
        rows = read_csv(pipeline / "cnn-history.csv")
        assert 1 <= len(rows) <= 2
        assert list(rows[0]) == ["epoch", "train_loss", "val_loss"]

    def test_comparison_summary(self, pipeline):
        rows = read_csv(pipeline / "comparison.csv")
        models = {row["model"] for row in rows}
        assert {"cnn", "cae", "cnn_vs_cae"} <= models
        kinds = {row["kind"] for row in rows if row["model"] == "cnn"}
        assert kinds == {"uniform", "gaussian", "frame", "pooled"}
        for row in rows:
            if row["model"] != "cnn_vs_cae":
                assert -1.0 <= float(row["separation"]) <= 1.0
                assert 0.0 <= float(row["auc"]) <= 1.0

    def test_reports_per_kind(self, pipeline):
        for model in ("cnn", "cae"):
            rows = read_csv(pipeline / f"report-{model}-pooled.csv")
            assert len(rows) == 1001 + 1

    def test_manifests_list_existing_artifacts(self, pipeline):
        for name in ("generate", "train-cnn", "train-cae", "eval"):
            values = read_manifest(pipeline / f"manifest-{name}.txt")
            assert values["tool_version"] == TOOL_VERSION
            artifacts = manifest_artifacts(values)
            assert artifacts
            assert all(Path(path).exists() for path in artifacts)

    def test_eval_only_on_test_split(self, pipeline):
        result = invoke("eval", "--dataset", pipeline / "dataset.jwd", "--cnn", pipeline / "cnn.ckpt",
                        "--split", "val", "--out", pipeline / "val")
        assert result.exit_code == 2

    def test_eval_needs_a_checkpoint(self, pipeline):
        result = invoke("eval", "--dataset", pipeline / "dataset.jwd", "--out", pipeline / "none")
        assert result.exit_code == 2

    def test_checkpoint_of_wrong_architecture(self, pipeline):
        result = invoke("eval", "--dataset", pipeline / "dataset.jwd", "--cnn", pipeline / "cae.ckpt",
                        "--out", pipeline / "wrong")
        assert result.exit_code == 1

    def test_cae_without_legitimate_data(self, pipeline, tmp_path):
        dataset = load_dataset(pipeline / "dataset.jwd")
        path = save_dataset(dataset.subset(dataset.labels == int(Label.ATTACK)), tmp_path / "attack.jwd")
        result = invoke("train", "--dataset", path, "--model", "cae", "--max-epochs", 1, "--out", tmp_path)
        assert result.exit_code == 1

    def test_resolution_mismatch(self, pipeline, tmp_path):
        result = invoke("train", "--dataset", pipeline / "dataset.jwd", "--model", "cnn", "--resolution", 16,
                        "--max-epochs", 1, "--out", tmp_path)
        assert result.exit_code == 1

    def test_export_dataset_items(self, pipeline, tmp_path):
        result = invoke("export-pgm", "--dataset", pipeline / "dataset.jwd", "--index", 0, "--index", 3,
                        "--out", tmp_path)
        assert result.exit_code == 0, result.output
        assert (tmp_path / "item-0.pgm").read_text().startswith("P2\n8 8\n255\n")
        assert (tmp_path / "item-3.pgm").exists()


class TestTheorem:

    def test_unknown_toy(self, tmp_path):
        result = invoke("theorem1", "--toy", "unknown", "--out", tmp_path)
        assert result.exit_code == 2

    def test_too_few_training_points(self, tmp_path):
        result = invoke("theorem1", "--n-train", 10, "--out", tmp_path)
        assert result.exit_code == 2

    def test_glrt_against_itself(self, tmp_path):
        result = invoke("theorem1", "--toy", "gauss", "--n-train", 1000, "--glrt-vs-glrt", "--out", tmp_path)
        assert result.exit_code == 0, result.output
        assert "spearman=1.0000" in result.output
        row = read_csv(tmp_path / "equivalence-gauss.csv")[0]
        assert row["passed"] == "1"


class TestRecordings:

    def test_generate_and_export_windows(self, tmp_path):
        recording = tmp_path / "frame.jwr"
        result = invoke("generate-recording", "--scenario", "jammer_frame", "--count", 1024, "--seed", 2,
                        "--out", recording)
        assert result.exit_code == 0, result.output
        result = invoke("export-pgm", "--recording", recording, "--n", 256, "--resolution", 8, "--index", 3,
                        "--out", tmp_path / "pgm")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "pgm" / "window-3.pgm").exists()

    def test_window_index_out_of_range(self, tmp_path):
        recording = tmp_path / "empty.jwr"
        assert invoke("generate-recording", "--scenario", "empty_channel", "--count", 512,
                      "--out", recording).exit_code == 0
        result = invoke("export-pgm", "--recording", recording, "--n", 256, "--index", 2, "--out", tmp_path)
        assert result.exit_code == 1

    def test_unknown_scenario(self, tmp_path):
        result = invoke("generate-recording", "--scenario", "microwave", "--out", tmp_path / "x.jwr")
        assert result.exit_code == 2


def test_sweep_writes_summary(tmp_path):
    result = invoke("sweep", "--n", 32, "--n", 64, "--scale", 0.01, "--resolution", 8, "--max-epochs", 1,
                    "--out", tmp_path)
    assert result.exit_code == 0, result.output
    rows = read_csv(tmp_path / "sweep-summary.csv")
    assert {row["n"] for row in rows} == {"32", "64"}
    assert (tmp_path / "n32" / "cnn.ckpt").exists()


def test_version():
    result = invoke("--version")
    assert result.exit_code == 0
    assert TOOL_VERSION in result.output


def test_pipeline_is_reproducible(tmp_path):
    for name in ("first", "second"):
        out = tmp_path / name
        assert invoke("generate", "--n", 32, "--resolution", 8, "--scale", 0.02, "--seed", 5,
                      "--out", out).exit_code == 0
        assert invoke("train", "--dataset", out / "dataset.jwd", "--model", "cnn", "--max-epochs", 2,
                      "--out", out).exit_code == 0
        assert invoke("eval", "--dataset", out / "dataset.jwd", "--cnn", out / "cnn.ckpt",
                      "--out", out).exit_code == 0
    for name in ("dataset.jwd", "cnn-history.csv", "report-cnn-pooled.csv", "comparison.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes(), name
