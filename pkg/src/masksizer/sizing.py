"""Millimetre width recovery, size-chart classification with boundary
tolerance, and the confusion-matrix metrics report.

Chart intervals are half-open [lower, upper), contiguous, and cover (0, inf).
A prediction is counted correct when it matches the interval of the true
width, or when the true width sits within the tolerance band of an internal
boundary and the prediction is one of the two sizes adjacent to that
boundary.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset import SampleRecord, scale_px_per_mm
from .errors import ValidationError
from .imaging import Point

DEFAULT_TOLERANCE = 0.02

SIZE_LABELS = {"S": "Small", "M": "Medium", "L": "Large", "TL": "Too Large"}


def width_mm(p_left: Point, p_right: Point, scale: float) -> float:
    """Euclidean pixel distance divided by the pixels-per-millimetre scale.

    Points must be in original-image space (map crop-space predictions back
    first)."""
    if not (math.isfinite(scale) and scale > 0):
        raise ValidationError(f"scale must be positive and finite, got {scale}")
    return math.hypot(p_right[0] - p_left[0], p_right[1] - p_left[1]) / scale


def tolerance_band(boundary: float, fraction: float) -> tuple[float, float]:
    """Symmetric relative band around a size boundary: (b*(1-f), b*(1+f))."""
    return (boundary * (1.0 - fraction), boundary * (1.0 + fraction))


@dataclass(frozen=True)
class BoundaryBand:
    boundary: float
    low: float
    high: float
    below: str
    above: str


class SizeChart:
    """Ordered, contiguous, half-open size intervals plus a boundary
    tolerance fraction."""

    def __init__(self, intervals, tolerance: float = DEFAULT_TOLERANCE):
        if not intervals:
            raise ValidationError("size chart needs at least one interval")
        names = [name for name, _, _ in intervals]
        if len(set(names)) != len(names):
            raise ValidationError(f"size names must be unique, got {names}")
        lowers = [lo for _, lo, _ in intervals]
        uppers = [hi for _, _, hi in intervals]
        if lowers[0] != 0:
            raise ValidationError(f"first interval must start at 0, got {lowers[0]}")
        if not math.isinf(uppers[-1]):
            raise ValidationError(f"last interval must extend to infinity, got {uppers[-1]}")
        for i in range(len(intervals)):
            if not uppers[i] > lowers[i]:
                raise ValidationError(f"interval {names[i]} is empty: [{lowers[i]}, {uppers[i]})")
            if i + 1 < len(intervals) and uppers[i] != lowers[i + 1]:
                raise ValidationError(
                    f"intervals must be contiguous: {names[i]} ends at {uppers[i]}, "
                    f"{names[i + 1]} starts at {lowers[i + 1]}"
                )
        if not 0 <= tolerance < 1:
            raise ValidationError(f"tolerance fraction must be in [0, 1), got {tolerance}")
        self.names: tuple[str, ...] = tuple(names)
        self.lowers: tuple[float, ...] = tuple(float(v) for v in lowers)
        self.uppers: tuple[float, ...] = tuple(float(v) for v in uppers)
        self.tolerance = tolerance

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown size {name!r}, chart has {self.names}") from None

    def classify(self, width: float) -> str:
        """The unique size with lower <= width < upper."""
        if not math.isfinite(width):
            raise ValidationError(f"width must be finite, got {width}")
        if width < 0:
            raise ValidationError(f"width must be non-negative, got {width}")
        for name, lo, hi in zip(self.names, self.lowers, self.uppers):
            if lo <= width < hi:
                return name
        raise ValidationError(f"width {width} matched no interval")  # unreachable by construction

    def internal_boundaries(self) -> tuple[float, ...]:
        return self.uppers[:-1]

    def band_for(self, width: float) -> BoundaryBand | None:
        """The boundary tolerance band containing ``width``, if any (inclusive)."""
        for i, boundary in enumerate(self.internal_boundaries()):
            low, high = tolerance_band(boundary, self.tolerance)
            if low <= width <= high:
                return BoundaryBand(
                    boundary=boundary, low=low, high=high,
                    below=self.names[i], above=self.names[i + 1],
                )
        return None


ESON = SizeChart([("S", 0.0, 37.0), ("M", 37.0, 41.0), ("L", 41.0, 45.0), ("TL", 45.0, math.inf)])


def is_correct(truth_width: float, predicted_size: str, chart: SizeChart) -> bool:
    """Exact interval match, or band-adjacent match near an internal boundary."""
    idx = chart.index(predicted_size)  # validates membership
    if chart.classify(truth_width) == predicted_size:
        return True
    band = chart.band_for(truth_width)
    return band is not None and predicted_size in (band.below, band.above)


@dataclass(frozen=True)
class SizingOutcome:
    sample_id: str
    truth_width_mm: float
    predicted_width_mm: float
    truth_size: str
    predicted_size: str
    correct_with_tolerance: bool

    def to_dict(self) -> dict:
        return {
            "id": self.sample_id,
            "truth_width_mm": self.truth_width_mm,
            "predicted_width_mm": self.predicted_width_mm,
            "truth_size": self.truth_size,
            "predicted_size": self.predicted_size,
            "correct_with_tolerance": self.correct_with_tolerance,
        }


def make_outcome(
    sample_id: str, truth_width: float, predicted_width: float, chart: SizeChart
) -> SizingOutcome:
    truth_size = chart.classify(truth_width)
    predicted_size = chart.classify(predicted_width)
    return SizingOutcome(
        sample_id=sample_id,
        truth_width_mm=truth_width,
        predicted_width_mm=predicted_width,
        truth_size=truth_size,
        predicted_size=predicted_size,
        correct_with_tolerance=is_correct(truth_width, predicted_size, chart),
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed [actual][predicted] in chart order."""

    counts: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        k = len(self.labels)
        if c.shape != (k, k):
            raise ValidationError(f"confusion matrix shape {c.shape} != ({k}, {k})")
        if (c < 0).any():
            raise ValidationError("confusion matrix counts must be non-negative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def to_lists(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.counts]


def confusion(outcomes: list[SizingOutcome], chart: SizeChart) -> ConfusionMatrix:
    """Tally outcomes; a tolerance-correct mismatch is recorded on the
    diagonal at the predicted size, so accuracy stays trace/total."""
    if not outcomes:
        raise ValidationError("cannot build a confusion matrix from zero outcomes")
    k = len(chart.names)
    counts = np.zeros((k, k), dtype=np.int64)
    for o in outcomes:
        i = chart.index(o.truth_size)
        j = chart.index(o.predicted_size)
        if o.correct_with_tolerance and i != j:
            counts[j, j] += 1
        else:
            counts[i, j] += 1
    return ConfusionMatrix(counts=counts, labels=chart.names)


@dataclass(frozen=True)
class SizingMetrics:
    """Exact-rational accuracy figures; percentages are rounded half-up."""

    labels: tuple[str, ...]
    total: int
    accuracy: Fraction
    within_one: Fraction
    sensitivity: dict[str, Fraction | None]
    ppv: dict[str, Fraction | None]


def percent_half_up(frac: Fraction) -> int:
    return math.floor(frac * 100 + Fraction(1, 2))


def metrics(cm: ConfusionMatrix) -> SizingMetrics:
    """Accuracy, within-one-size accuracy, and per-size sensitivity and
    positive predictivity. Sizes with no actual (or predicted) examples get
    None instead of a division error."""
    total = cm.total
    if total == 0:
        raise ValidationError("metrics need a non-empty confusion matrix")
    k = len(cm.labels)
    c = cm.counts
    far = sum(int(c[i, j]) for i in range(k) for j in range(k) if abs(i - j) >= 2)
    sensitivity: dict[str, Fraction | None] = {}
    ppv: dict[str, Fraction | None] = {}
    for i, name in enumerate(cm.labels):
        row = int(c[i, :].sum())
        col = int(c[:, i].sum())
        sensitivity[name] = Fraction(int(c[i, i]), row) if row else None
        ppv[name] = Fraction(int(c[i, i]), col) if col else None
    return SizingMetrics(
        labels=cm.labels,
        total=total,
        accuracy=Fraction(cm.trace, total),
        within_one=Fraction(total - far, total),
        sensitivity=sensitivity,
        ppv=ppv,
    )


def _fraction_entry(frac: Fraction | None) -> dict | None:
    if frac is None:
        return None
    return {
        "fraction": f"{frac.numerator}/{frac.denominator}",
        "value": float(frac),
        "percent": percent_half_up(frac),
    }


def metrics_report(cm: ConfusionMatrix) -> dict:
    m = metrics(cm)
    return {
        "labels": list(m.labels),
        "matrix": cm.to_lists(),
        "total": m.total,
        "accuracy": _fraction_entry(m.accuracy),
        "within_one": _fraction_entry(m.within_one),
        "per_size": {
            name: {
                "sensitivity": _fraction_entry(m.sensitivity[name]),
                "ppv": _fraction_entry(m.ppv[name]),
            }
            for name in m.labels
        },
    }


def metrics_text(cm: ConfusionMatrix, title: str = "Sizing performance") -> str:
    """Plain-text report: the count grid plus accuracy and per-size rows."""
    m = metrics(cm)
    labels = [SIZE_LABELS.get(name, name) for name in m.labels]
    width = max(9, max(len(s) for s in labels) + 1)
    lines = [title, "=" * len(title), ""]
    header = " " * width + "".join(f"{s:>{width}}" for s in labels) + "   (predicted)"
    lines.append(header)
    for i, row_label in enumerate(labels):
        row = "".join(f"{int(v):>{width}}" for v in cm.counts[i])
        lines.append(f"{row_label:<{width}}" + row)
    lines.append("")
    lines.append(
        f"accuracy: {float(m.accuracy) * 100:.1f}% "
        f"({m.accuracy.numerator}/{m.accuracy.denominator})"
    )
    lines.append(
        f"within one size: {float(m.within_one) * 100:.1f}% "
        f"({m.within_one.numerator}/{m.within_one.denominator})"
    )
    lines.append("")
    lines.append(f"{'size':<{width}}{'sensitivity':>14}{'pos. predict.':>16}")
    for name, label in zip(m.labels, labels):

        def fmt(frac: Fraction | None) -> str:
            return "-" if frac is None else f"{percent_half_up(frac)}%"

        lines.append(f"{label:<{width}}{fmt(m.sensitivity[name]):>14}{fmt(m.ppv[name]):>16}")
    return "\n".join(lines) + "\n"


def manual_baseline(
    samples: list[SampleRecord], chart: SizeChart
) -> tuple[list[SizingOutcome], list[str]]:
    """Size every sample from its labelled landmarks and coin scale, judged
    against the caliper width. Samples without a caliper width are skipped
    and reported."""
    outcomes: list[SizingOutcome] = []
    skipped: list[str] = []
    for record in samples:
        if record.caliper_alar_mm is None:
            skipped.append(record.id)
            continue
        a = record.annotation
        predicted = width_mm(a.left, a.right, scale_px_per_mm(a))
        outcomes.append(make_outcome(record.id, record.caliper_alar_mm, predicted, chart))
    return outcomes, skipped


def size_predictions(
    samples: list[SampleRecord],
    predictions: dict[str, tuple[Point, Point]],
    chart: SizeChart,
) -> tuple[list[SizingOutcome], list[str]]:
    """Turn original-space predicted landmark pairs into sizing outcomes,
    using each sample's coin scale and caliper ground truth."""
    outcomes: list[SizingOutcome] = []
    skipped: list[str] = []
    for record in samples:
        pair = predictions.get(record.id)
        if pair is None or record.caliper_alar_mm is None:
            skipped.append(record.id)
            continue
        predicted = width_mm(pair[0], pair[1], scale_px_per_mm(record.annotation))
        outcomes.append(make_outcome(record.id, record.caliper_alar_mm, predicted, chart))
    return outcomes, skipped
