import math

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from detector.scoring import (cae_calibration, classify, normalize_errors, reconstruction_errors, score_cae,
                              score_cnn, score_dataset)
from exceptions import ShapeError, UsageError
from neural.architectures import CaeModel, CnnModel
from states import Hypothesis, Label, ScoreSource, Split


class TestCaeNormalization:

    def test_endpoints(self):
        calibration = np.array([0.01, 0.02, 0.05])
        scores = normalize_errors(np.array([0.01, 0.5, 1.0]), calibration, headroom=10.0)
        assert scores[0] == 0.0
        assert math.isclose(scores[1], 1.0)
        assert scores[2] == 1.0

    def test_below_calibration_is_zero(self):
        assert normalize_errors(np.array([0.0]), np.array([0.1, 0.2]))[0] == 0.0

    @given(st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=2, max_size=40))
    @hypothesis_settings(max_examples=50, deadline=None)
    def test_monotone_in_error(self, errors):
        errors = np.sort(np.array(errors))
        scores = normalize_errors(errors, np.array([0.05, 0.1, 0.3]))
        assert np.all(np.diff(scores) >= 0)
        assert np.all((scores >= 0) & (scores <= 1))

    def test_empty_calibration(self):
        with pytest.raises(UsageError):
            normalize_errors(np.array([0.1]), np.array([]))

    def test_degenerate_calibration(self):
        scores = normalize_errors(np.array([0.0, 0.5]), np.array([0.0, 0.0]))
        assert list(scores) == [0.0, 1.0]


class TestModelScores:

    def test_zero_weight_cnn_scores_half(self):
        model = CnnModel(8)
        model.zero_weights()
        scores = score_cnn(model, np.zeros((5, 8, 8)), [0, 1, 0, 1, 0])
        assert scores.source is ScoreSource.CNN
        assert np.allclose(scores.scores, 0.5)

    def test_cnn_scorer_rejects_cae(self):
        with pytest.raises(UsageError):
            score_cnn(CaeModel(8), np.zeros((1, 8, 8)), [0])

    def test_label_count_mismatch(self):
        with pytest.raises(UsageError):
            score_cnn(CnnModel(8), np.zeros((2, 8, 8)), [0])

    def test_cae_scores_in_unit_interval(self, tiny_dataset):
        model = CaeModel(8)
        calibration = cae_calibration(model, tiny_dataset)
        assert calibration.size == int(tiny_dataset.mask(split=Split.TRAIN, label=int(Label.LEGITIMATE)).sum())
        test = tiny_dataset.mask(split=Split.TEST)
        scores = score_cae(model, tiny_dataset.pixels[test], tiny_dataset.labels[test], calibration)
        assert scores.source is ScoreSource.CAE
        assert np.all((scores.scores >= 0) & (scores.scores <= 1))

    def test_reconstruction_error_per_item(self):
        errors = reconstruction_errors(CaeModel(8), np.zeros((3, 8, 8)))
        assert errors.shape == (3,)
        assert np.all(errors > 0)

    def test_dataset_resolution_mismatch(self, tiny_dataset):
        with pytest.raises(ShapeError):
            score_dataset(CnnModel(16), tiny_dataset, tiny_dataset.mask(split=Split.TEST))

    def test_dataset_scores_keep_cases(self, tiny_dataset):
        selected = tiny_dataset.mask(split=Split.TEST)
        scores = score_dataset(CaeModel(8), tiny_dataset, selected)
        assert np.array_equal(scores.cases, tiny_dataset.cases[selected])


def test_classify_threshold_is_inclusive():
    assert classify(0.5, 0.5) is Hypothesis.H1
    assert classify(0.49, 0.5) is Hypothesis.H0
