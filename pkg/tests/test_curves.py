import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from detector.curves import error_rates, fa_md_curves, relative_gain, threshold_grid, trapezoid_auc
from detector.scoring import classify
from exceptions import UsageError
from models import ScoreSet
from states import Hypothesis, ScoreSource


def score_set(scores, labels) -> ScoreSet:
    return ScoreSet(scores=np.asarray(scores, dtype=float), labels=np.asarray(labels, dtype=np.uint8),
                    source=ScoreSource.CNN)


labeled_scores = st.lists(st.tuples(st.floats(min_value=0.0, max_value=1.0), st.integers(0, 1)), min_size=2,
                          max_size=60).filter(lambda pairs: len({label for _, label in pairs}) == 2)
coarse_scores = st.lists(st.tuples(st.integers(0, 100).map(lambda k: k / 100), st.integers(0, 1)), min_size=2,
                       max_size=60).filter(lambda pairs: len({label for _, label in pairs}) == 2)


class TestSeparableExample:

    def setup_method(self):
        self.report = fa_md_curves(score_set([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]), target_rate=0.0)

    def test_thresholds(self):
        assert math.isclose(self.report.tau_fa, 0.201, abs_tol=1e-9)
        assert math.isclose(self.report.tau_md, 0.8, abs_tol=1e-9)
        assert math.isclose(self.report.separation, 0.599, abs_tol=1e-9)

    def test_perfect_auc(self):
        assert self.report.auc == 1.0

    def test_curve_endpoints(self):
        assert self.report.fa_curve[0] == 1.0 and self.report.md_curve[0] == 0.0
        assert self.report.thresholds.size == 1001


class TestCurveProperties:

    @given(labeled_scores)
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_fa_and_md_are_monotone(self, pairs):
        scores, labels = zip(*pairs)
        report = fa_md_curves(score_set(scores, labels))
        assert np.all(np.diff(report.fa_curve) <= 0)
        assert np.all(np.diff(report.md_curve) >= 0)
        assert np.all((report.fa_curve >= 0) & (report.fa_curve <= 1))
        assert -1.0 <= report.separation <= 1.0

    @given(labeled_scores, st.floats(min_value=0.0, max_value=1.0))
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_rates_agree_with_classify(self, pairs, tau):
        scores, labels = map(np.array, zip(*pairs))
        fa, md = error_rates(score_set(scores, labels), np.array([tau]))
        decisions = np.array([classify(s, tau) is Hypothesis.H1 for s in scores])
        assert math.isclose(fa[0], decisions[labels == 0].mean())
        assert math.isclose(md[0], (~decisions[labels == 1]).mean())

    @given(coarse_scores)
    @hypothesis_settings(max_examples=100, deadline=None)
    def test_auc_invariant_under_increasing_map(self, pairs):
        scores, labels = map(np.array, zip(*pairs))
        grid = np.unique(np.concatenate([scores, [0.0, 1.0]]))
        auc = fa_md_curves(score_set(scores, labels), grid).auc
        transformed = np.sqrt(scores)
        auc_transformed = fa_md_curves(score_set(transformed, labels), np.sqrt(grid)).auc
        assert math.isclose(auc, auc_transformed, abs_tol=1e-12)


class TestEdgeCases:

    def test_single_class(self):
        with pytest.raises(UsageError):
            fa_md_curves(score_set([0.1, 0.4], [0, 0]))

    def test_random_scores_auc_near_half(self):
        rng = np.random.default_rng(0)
        scores = rng.random(20000)
        labels = rng.integers(0, 2, scores.size)
        assert abs(fa_md_curves(score_set(scores, labels)).auc - 0.5) < 0.02

    def test_unreachable_target_falls_back(self):
        report = fa_md_curves(score_set([1.0, 1.0, 0.0, 0.0], [0, 0, 1, 1]), target_rate=0.01)
        assert report.tau_fa == 1.0
        assert report.tau_md == 0.0
        assert report.separation == -1.0

    def test_decreasing_grid(self):
        with pytest.raises(UsageError):
            fa_md_curves(score_set([0.1, 0.9], [0, 1]), grid=np.array([0.5, 0.1]))

    def test_grid_points(self):
        grid = threshold_grid(11)
        assert grid[0] == 0.0 and grid[-1] == 1.0 and grid.size == 11

    def test_trapezoid_of_diagonal(self):
        fa = np.linspace(1, 0, 11)
        assert math.isclose(trapezoid_auc(fa, 1 - fa), 0.5)

    def test_trapezoid_with_vertical_step(self):
        # (0,0) -> (0.5,0.5) -> (0.5,1) -> (1,1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            area = trapezoid_auc(np.array([0.5, 0.5]), np.array([0.0, 0.5]))
        assert math.isclose(area, 0.625)

    def test_relative_gain(self):
        assert math.isclose(relative_gain(0.6, 0.4), 0.5)
        assert math.isnan(relative_gain(0.6, 0.0))

    def test_scores_outside_unit_interval(self):
        with pytest.raises(UsageError):
            score_set([1.5, 0.2], [1, 0])
