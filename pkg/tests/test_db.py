import numpy as np
import pytest

from db import (EQUIVALENCE_HEADER, REPORT_HEADER, checkpoint_resolution, load_checkpoint, manifest_artifacts,
                read_csv, read_manifest, save_checkpoint, write_equivalence_csv, write_history_csv, write_manifest,
                write_report_csv)
from detector.curves import fa_md_curves
from exceptions import ArtifactIOError, CorruptDatasetError
from models import EquivalenceReport, RunManifest, ScoreSet, TrainHistory
from neural.architectures import CaeModel, CnnModel
from states import Architecture, ScoreSource, ToyDensity


class TestCheckpoints:

    @pytest.mark.parametrize("model_class", [CnnModel, CaeModel])
    def test_round_trip(self, model_class, tmp_path):
        model = model_class(8, rng_seed=5)
        loaded = load_checkpoint(save_checkpoint(model, tmp_path / "model.ckpt"))
        assert loaded.architecture is model.architecture
        assert all(np.array_equal(a, b) for a, b in zip(model.snapshot(), loaded.snapshot()))
        x = np.random.default_rng(0).random((2, 8, 8, 1))
        assert np.array_equal(model.forward(x), loaded.forward(x))

    def test_full_resolution_cnn(self, tmp_path):
        loaded = load_checkpoint(save_checkpoint(CnnModel(128), tmp_path / "cnn.ckpt"))
        assert loaded.parameter_count() == 281313

    def test_header_only(self, tmp_path):
        path = save_checkpoint(CaeModel(16), tmp_path / "cae.ckpt")
        assert checkpoint_resolution(path) == (Architecture.CAE, 16)

    def test_corrupted_checkpoint(self, tmp_path):
        path = save_checkpoint(CnnModel(8), tmp_path / "model.ckpt")
        data = bytearray(path.read_bytes())
        data[40] ^= 0x01
        path.write_bytes(bytes(data))
        with pytest.raises(CorruptDatasetError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            load_checkpoint(tmp_path / "absent.ckpt")


class TestCsv:

    def test_history(self, tmp_path):
        history = TrainHistory(train_loss=[0.7, 0.5], val_loss=[0.6, 0.55], best_epoch=2, stopped_epoch=2)
        rows = read_csv(write_history_csv(history, tmp_path / "history.csv"))
        assert [row["epoch"] for row in rows] == ["1", "2"]
        assert float(rows[1]["val_loss"]) == 0.55

    def test_report(self, tmp_path):
        scores = ScoreSet(scores=np.array([0.1, 0.2, 0.8, 0.9]), labels=np.array([0, 0, 1, 1]),
                          source=ScoreSource.CNN)
        report = fa_md_curves(scores, np.linspace(0, 1, 11))
        rows = read_csv(write_report_csv(report, tmp_path / "report.csv"))
        assert list(rows[0]) == REPORT_HEADER
        assert len(rows) == 12
        summary = rows[-1]
        assert summary["row"] == "summary"
        assert float(summary["separation"]) == report.separation
        assert float(summary["auc"]) == report.auc

    def test_equivalence(self, tmp_path):
        report = EquivalenceReport(toy=ToyDensity.RING, n_train=1000, spearman=float("nan"), auc_nn=0.5,
                                   auc_glrt=0.8, auc_gap=0.3, auc_lr=0.81, auc_kde=0.79, passed=False,
                                   reason="constant")
        rows = read_csv(write_equivalence_csv(report, tmp_path / "eq.csv"))
        assert list(rows[0]) == EQUIVALENCE_HEADER
        assert rows[0]["toy"] == "ring"
        assert rows[0]["passed"] == "0"


class TestManifest:

    def test_round_trip(self, tmp_path):
        artifact = tmp_path / "out.csv"
        artifact.write_text("x\n")
        manifest = RunManifest(command="jamwatch eval", config={"grid_points": "1001"}, seeds={"sim": 7},
                               artifacts=[str(artifact)])
        values = read_manifest(write_manifest(manifest, tmp_path / "manifest.txt"))
        assert values["command"] == "jamwatch eval"
        assert values["config.grid_points"] == "1001"
        assert values["seed.sim"] == "7"
        assert manifest_artifacts(values) == [str(artifact)]

    def test_missing_artifact(self, tmp_path):
        manifest = RunManifest(command="x", artifacts=[str(tmp_path / "absent.csv")])
        with pytest.raises(ArtifactIOError):
            write_manifest(manifest, tmp_path / "manifest.txt")
