import math
from fractions import Fraction

import numpy as np
import pytest

from masksizer.benchmarks import benchmark_matrices
from masksizer.dataset import Annotation, SampleRecord
from masksizer.errors import ValidationError
from masksizer.imaging import RectRegion
from masksizer.sizing import (
    ESON,
    ConfusionMatrix,
    SizeChart,
    confusion,
    is_correct,
    make_outcome,
    manual_baseline,
    metrics,
    metrics_report,
    metrics_text,
    percent_half_up,
    tolerance_band,
    width_mm,
)


class TestWidth:
    def test_forced_arithmetic(self):
        assert width_mm((100, 200), (140, 200), 4.0) == pytest.approx(10.0, abs=1e-12)

    def test_coincident_points_zero(self):
        assert width_mm((5, 5), (5, 5), 2.0) == 0.0

    def test_coin_self_consistency(self):
        assert width_mm((0, 0), (114.6, 0), 114.6 / 28.65) == pytest.approx(28.65, abs=1e-12)

    def test_non_positive_scale_rejected(self):
        with pytest.raises(ValidationError):
            width_mm((0, 0), (1, 0), 0.0)


class TestClassify:
    @pytest.mark.parametrize(
        "width,expected",
        [(36.0, "S"), (44.0, "L"), (50.0, "TL"), (37.0, "M"), (41.0, "L"), (45.0, "TL"), (0.5, "S")],
    )
    def test_interval_membership(self, width, expected):
        assert ESON.classify(width) == expected

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            ESON.classify(float("nan"))

    def test_total_and_single_valued(self):
        rng = np.random.default_rng(0)
        for w in rng.uniform(0.01, 120.0, 500):
            name = ESON.classify(float(w))
            i = ESON.index(name)
            assert ESON.lowers[i] <= w < ESON.uppers[i]

    def test_chart_must_be_contiguous(self):
        with pytest.raises(ValidationError, match="contiguous"):
            SizeChart([("A", 0, 10), ("B", 11, math.inf)])


class TestToleranceBand:
    def test_worked_small_medium_band(self):
        low, high = tolerance_band(37.0, 0.02)
        assert low == pytest.approx(36.26, abs=1e-12)
        assert high == pytest.approx(37.74, abs=1e-12)

    def test_medium_large_band(self):
        low, high = tolerance_band(41.0, 0.02)
        assert low == pytest.approx(40.18, abs=1e-12)
        assert high == pytest.approx(41.82, abs=1e-12)

    def test_zero_fraction_degenerate(self):
        assert tolerance_band(41.0, 0.0) == (41.0, 41.0)


class TestIsCorrect:
    def test_band_member_accepts_adjacent_size(self):
        assert is_correct(36.5, "M", ESON) is True
        assert is_correct(36.5, "S", ESON) is True

    def test_outside_band_requires_exact(self):
        assert is_correct(35.0, "M", ESON) is False
        assert is_correct(35.0, "S", ESON) is True

    def test_non_adjacent_size_never_correct(self):
        assert is_correct(36.5, "L", ESON) is False

    def test_truth_classification_is_always_correct(self):
        rng = np.random.default_rng(1)
        for w in rng.uniform(1.0, 90.0, 300):
            assert is_correct(float(w), ESON.classify(float(w)), ESON)

    def test_unknown_size_rejected(self):
        with pytest.raises(ValidationError):
            is_correct(40.0, "XL", ESON)


class TestConfusion:
    def test_diagonal_recording_of_tolerance_hits(self):
        o = make_outcome("a", truth_width=36.9, predicted_width=37.6, chart=ESON)
        assert (o.truth_size, o.predicted_size) == ("S", "M")
        assert o.correct_with_tolerance
        cm = confusion([o], ESON)
        assert cm.counts[1, 1] == 1  # recorded at (M, M)
        assert cm.total == 1

    def test_plain_mismatch_stays_off_diagonal(self):
        o = make_outcome("a", truth_width=39.0, predicted_width=43.0, chart=ESON)
        cm = confusion([o], ESON)
        assert cm.counts[ESON.index("M"), ESON.index("L")] == 1

    def test_all_correct_is_diagonal(self):
        outcomes = [make_outcome(str(w), w, w, ESON) for w in (30.0, 39.0, 43.0, 50.0)]
        cm = confusion(outcomes, ESON)
        assert cm.trace == cm.total == 4

    def test_accuracy_equals_mean_correct_flag(self):
        rng = np.random.default_rng(5)
        outcomes = [
            make_outcome(str(i), float(t), float(p), ESON)
            for i, (t, p) in enumerate(zip(rng.uniform(30, 50, 120), rng.uniform(30, 50, 120)))
        ]
        cm = confusion(outcomes, ESON)
        m = metrics(cm)
        assert m.accuracy == Fraction(
            sum(o.correct_with_tolerance for o in outcomes), len(outcomes)
        )

    def test_empty_outcomes_rejected(self):
        with pytest.raises(ValidationError):
            confusion([], ESON)


class TestMetrics:
    def test_model_benchmark_matrix(self):
        cm = benchmark_matrices()["model"]
        m = metrics(cm)
        assert m.accuracy == Fraction(143, 198)
        assert m.within_one == Fraction(190, 198)
        assert percent_half_up(m.accuracy) == 72
        assert percent_half_up(m.within_one) == 96
        assert [percent_half_up(m.sensitivity[k]) for k in m.labels] == [66, 76, 81, 86]
        assert [percent_half_up(m.ppv[k]) for k in m.labels] == [87, 65, 60, 75]
        assert m.sensitivity["S"] == Fraction(61, 93)
        assert m.ppv["L"] == Fraction(21, 35)

    def test_manual_benchmark_matrix(self):
        cm = benchmark_matrices()["manual"]
        m = metrics(cm)
        assert m.accuracy == Fraction(177, 198)
        assert m.within_one == Fraction(1, 1)
        assert [percent_half_up(m.sensitivity[k]) for k in m.labels] == [87, 92, 88, 100]
        assert [percent_half_up(m.ppv[k]) for k in m.labels] == [98, 84, 85, 78]

    def test_perfect_classifier(self):
        cm = ConfusionMatrix(counts=np.diag([5, 5, 5, 5]), labels=ESON.names)
        m = metrics(cm)
        assert m.accuracy == 1
        assert all(m.sensitivity[k] == 1 and m.ppv[k] == 1 for k in m.labels)

    def test_within_one_at_least_accuracy(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            cm = ConfusionMatrix(counts=rng.integers(0, 20, (4, 4)), labels=ESON.names)
            if cm.total == 0:
                continue
            m = metrics(cm)
            assert m.within_one >= m.accuracy
            for k in m.labels:
                for v in (m.sensitivity[k], m.ppv[k]):
                    assert v is None or 0 <= v <= 1

    def test_zero_row_yields_none(self):
        counts = np.zeros((4, 4), dtype=int)
        counts[0, 0] = 3
        m = metrics(ConfusionMatrix(counts=counts, labels=ESON.names))
        assert m.sensitivity["M"] is None
        assert m.ppv["TL"] is None

    def test_half_up_rounding(self):
        assert percent_half_up(Fraction(875, 1000)) == 88
        assert percent_half_up(Fraction(865, 1000)) == 87
        assert percent_half_up(Fraction(3, 4)) == 75

    def test_report_shapes(self):
        cm = benchmark_matrices()["model"]
        report = metrics_report(cm)
        assert report["accuracy"]["fraction"] == "13/18"
        assert report["accuracy"]["percent"] == 72
        assert report["matrix"][0] == [61, 26, 5, 1]
        text = metrics_text(cm)
        assert "72.2%" in text and "96.0%" in text


def _record(sample_id, left, right, scale, alar=None):
    return SampleRecord(
        id=sample_id,
        image_path="x.pgm",
        annotation=Annotation(
            left=left,
            right=right,
            px_per_mm=scale,
            face_box=RectRegion(0, 0, 400, 400),
            nose_box=RectRegion(100, 100, 200, 150),
        ),
        caliper_alar_mm=alar,
    )


class TestManualBaseline:
    def test_plain_medium_case(self):
        r = _record("a", (120.0, 200.0), (280.0, 200.0), 4.0, alar=40.1)
        outcomes, skipped = manual_baseline([r], ESON)
        (o,) = outcomes
        assert o.predicted_width_mm == pytest.approx(40.0)
        assert o.truth_size == "M" and o.predicted_size == "M" and o.correct_with_tolerance
        assert skipped == []

    def test_tolerance_band_rescues_boundary_case(self):
        r = _record("b", (100.0, 150.0), (100.0 + 37.6 * 2.0, 150.0), 2.0, alar=36.9)
        (o,), _ = manual_baseline([r], ESON)
        assert o.predicted_size == "M" and o.truth_size == "S"
        assert o.correct_with_tolerance

    def test_missing_caliper_skipped_with_report(self):
        r1 = _record("a", (120.0, 200.0), (280.0, 200.0), 4.0, alar=40.1)
        r2 = _record("b", (120.0, 200.0), (280.0, 200.0), 4.0, alar=None)
        outcomes, skipped = manual_baseline([r1, r2], ESON)
        assert len(outcomes) == 1
        assert skipped == ["b"]
