"""Bundled 198-sample benchmark confusion matrices for the sizing metrics
pipeline, used by ``masksizer evaluate --fixtures``.

``BENCHMARK_MODEL_MATRIX`` counts sizes derived from model-predicted
landmarks; ``BENCHMARK_MANUAL_MATRIX`` counts sizes measured manually from
the same images. Rows are actual sizes, columns predicted, both in
S/M/L/TL order.
"""

from .sizing import ConfusionMatrix, ESON

BENCHMARK_LABELS = ESON.names

BENCHMARK_MODEL_MATRIX = (
    (61, 26, 5, 1),
    (8, 55, 9, 0),
    (1, 3, 21, 1),
    (0, 1, 0, 6),
)

BENCHMARK_MANUAL_MATRIX = (
    (81, 12, 0, 0),
    (2, 66, 4, 0),
    (0, 1, 23, 2),
    (0, 0, 0, 7),
)


def benchmark_matrices() -> dict[str, ConfusionMatrix]:
    return {
        "model": ConfusionMatrix(counts=BENCHMARK_MODEL_MATRIX, labels=BENCHMARK_LABELS),
        "manual": ConfusionMatrix(counts=BENCHMARK_MANUAL_MATRIX, labels=BENCHMARK_LABELS),
    }
