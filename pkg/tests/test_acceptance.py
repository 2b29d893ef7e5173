"""Acceptance gate: one test per release criterion, each printing a PASS
line (run with ``pytest tests/test_acceptance.py -s``).

The big leave-one-out criterion trains 240 networks and takes a couple of
minutes on a desktop CPU; everything else is fast.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from masksizer.benchmarks import benchmark_matrices
from masksizer.dataset import DesignMatrix, load_manifest, scale_px_per_mm
from masksizer.network import (
    NetDims,
    backprop,
    draw_mask,
    forward,
    init_params,
    solve_output_pinv,
    sse,
)
from masksizer.pipeline import run_loocv
from masksizer.sizing import ESON, is_correct, metrics, percent_half_up, tolerance_band, width_mm
from masksizer.synthetic import SynthParams, corpus_difficulty, generate, write_corpus
from masksizer.training import TrainConfig, train_once

from conftest import small_params

# Corpus used by the leave-one-out criterion: geometry chosen so the nose box
# comfortably fits every drawn nose and the 100x75 crop resolves the blobs.
LOOCV_CORPUS = dict(
    count=200,
    seed=11,
    image_w=560,
    image_h=440,
    scale_min=3.0,
    scale_max=4.5,
    nose_box_frac=0.5,
    placement=0.2,
    tilt_deg=4.0,
    blob_sigma_mm=4.0,
    blob_depth=120.0,
    shade=30.0,
    noise=5.0,
)

LOOCV_CONFIG = dict(
    repetitions=4,
    max_epochs=6,
    patience=3,
    crop_w=100,
    crop_h=75,
)


def test_benchmark_fixture_reproduction():
    t0 = time.perf_counter()
    matrices = benchmark_matrices()

    model = metrics(matrices["model"])
    assert model.accuracy == Fraction(143, 198)
    assert model.within_one == Fraction(190, 198)
    assert percent_half_up(model.accuracy) == 72
    assert percent_half_up(model.within_one) == 96
    assert [percent_half_up(model.sensitivity[k]) for k in model.labels] == [66, 76, 81, 86]
    assert [percent_half_up(model.ppv[k]) for k in model.labels] == [87, 65, 60, 75]

    manual = metrics(matrices["manual"])
    assert manual.accuracy == Fraction(177, 198)
    assert float(manual.accuracy) == pytest.approx(0.8939393939393939)
    assert percent_half_up(manual.accuracy) == 89
    assert manual.within_one == Fraction(1, 1)
    assert [percent_half_up(manual.sensitivity[k]) for k in manual.labels] == [87, 92, 88, 100]
    assert [percent_half_up(manual.ppv[k]) for k in manual.labels] == [98, 84, 85, 78]

    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    print(f"\nACCEPTANCE PASS: benchmark fixtures reproduced exactly ({elapsed * 1000:.0f} ms)")


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(20240)
    checked = 0
    worst = 0.0
    while checked < 100:
        dims = NetDims(
            int(rng.integers(1, 9)), int(rng.integers(1, 6)), int(rng.integers(1, 4))
        )
        params = init_params(dims, int(rng.integers(1 << 30)))
        params.w_hidden = rng.uniform(-0.8, 0.8, params.w_hidden.shape)
        params.w_out = rng.uniform(-0.8, 0.8, params.w_out.shape)
        x = rng.uniform(-1, 1, dims.n_in)
        target = rng.uniform(-1, 1, dims.n_out)
        mask = draw_mask(rng, dims.n_hidden, 0.5) if checked % 2 else None
        analytic = backprop(params, x, target, mask=mask)
        eps = 1e-5
        numeric = np.zeros_like(analytic)
        for i in range(analytic.shape[0]):
            for j in range(analytic.shape[1]):
                w0 = params.w_hidden[i, j]
                params.w_hidden[i, j] = w0 + eps
                e_plus = sse(forward(params, x, mask=mask).output, target)
                params.w_hidden[i, j] = w0 - eps
                e_minus = sse(forward(params, x, mask=mask).output, target)
                params.w_hidden[i, j] = w0
                numeric[i, j] = (e_plus - e_minus) / (2 * eps)
        rel = np.abs(analytic - numeric) / np.maximum(
            1.0, np.maximum(np.abs(analytic), np.abs(numeric))
        )
        worst = max(worst, float(rel.max()))
        checked += 1
    assert worst <= 1e-5
    print(f"\nACCEPTANCE PASS: gradient check over {checked} networks, worst rel err {worst:.2e}")


def test_pinv_matches_ridge_oracle():
    rng = np.random.default_rng(7171)
    worst_residual = 0.0
    worst_ratio = 0.0
    for trial in range(50):
        m = int(rng.integers(8, 60))
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, 5))
        H = rng.normal(size=(m, n))
        if trial % 3 == 0 and n >= 3:
            H[:, -1] = H[:, 0]  # exact rank deficiency
        T = rng.normal(size=(m, k))
        W = solve_output_pinv(H, T)

        residual = np.linalg.norm(H.T @ (H @ W - T))
        assert residual <= 1e-6 * np.linalg.norm(H.T) * np.linalg.norm(T)
        worst_residual = max(worst_residual, residual / (np.linalg.norm(H.T) * np.linalg.norm(T)))

        # independent oracle: normal equations with a small ridge
        W_ridge = np.linalg.solve(H.T @ H + 1e-8 * np.eye(n), H.T @ T)
        ratio = np.linalg.norm(W) / np.linalg.norm(W_ridge)
        assert ratio <= 1 + 1e-4
        worst_ratio = max(worst_ratio, ratio)
    print(
        f"\nACCEPTANCE PASS: pseudo-inverse optimality on 50 systems "
        f"(worst residual {worst_residual:.2e}, worst norm ratio {worst_ratio:.10f})"
    )


def _brute_force_correct(truth: float, predicted: str, fraction: float) -> bool:
    # independent restatement of the rule with the chart written out literally
    names = ["S", "M", "L", "TL"]
    bounds = [0.0, 37.0, 41.0, 45.0, float("inf")]
    actual = None
    for idx in range(4):
        if bounds[idx] <= truth < bounds[idx + 1]:
            actual = names[idx]
            break
    if actual == predicted:
        return True
    for idx, boundary in enumerate((37.0, 41.0, 45.0)):
        if boundary * (1 - fraction) <= truth <= boundary * (1 + fraction):
            if predicted in (names[idx], names[idx + 1]):
                return True
    return False


def test_tolerance_rule():
    low, high = tolerance_band(37.0, 0.02)
    assert abs(low - 36.26) <= 1e-12
    assert abs(high - 37.74) <= 1e-12

    rng = np.random.default_rng(555)
    widths = rng.uniform(20.0, 60.0, 10_000)
    predicted = rng.choice(ESON.names, size=widths.size)
    mismatches = 0
    for w, p in zip(widths, predicted):
        got = is_correct(float(w), str(p), ESON)
        want = _brute_force_correct(float(w), str(p), 0.02)
        if got != want:
            mismatches += 1
    assert mismatches == 0
    print("\nACCEPTANCE PASS: tolerance band exact and 10k-width sweep matches brute force")


def test_learning_rate_schedule():
    rng = np.random.default_rng(0)
    n, d = 40, 12
    X = rng.uniform(-0.9, 0.9, (n, d))
    A = rng.uniform(-0.5, 0.5, (4, 4))
    Y = X[:, :4] @ A + 0.05 * rng.normal(size=(n, 4))
    matrix = DesignMatrix(X=X, Y=Y, ids=tuple(map(str, range(n))), crop_w=d, crop_h=1)
    config = TrainConfig(max_epochs=50, patience=50, n_hidden=6, crop_w=d, crop_h=1)
    result = train_once(matrix, config, seed=1)
    assert result.improvements >= 3
    expected = 0.002
    for _ in range(result.improvements):
        expected *= 0.95
    assert result.final_alpha == expected  # exact float equality of the repeated multiply
    print(
        f"\nACCEPTANCE PASS: {result.improvements} improvements, "
        f"alpha == 0.002*0.95^k exactly ({result.final_alpha:.6g})"
    )


def test_loocv_determinism(tmp_path):
    records, manifest = write_corpus(small_params(8, seed=13), tmp_path / "corpus")
    config = TrainConfig(
        max_epochs=2, patience=2, repetitions=2, base_seed=9, n_hidden=12, crop_w=48, crop_h=36
    )
    run_loocv(manifest, tmp_path / "r1", config)
    run_loocv(manifest, tmp_path / "r2", config)
    for name in ("folds.jsonl", "outcomes.jsonl", "report.json", "report.txt"):
        a = (tmp_path / "r1" / name).read_bytes()
        b = (tmp_path / "r2" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"
    print("\nACCEPTANCE PASS: identical runs produce byte-identical fold and report files")


def test_synthetic_self_consistency():
    for params in (small_params(60, seed=29), SynthParams(**LOOCV_CORPUS | {"count": 60, "seed": 31})):
        for record, _ in generate(params):
            drawn_scale = record.meta["scale_px_per_mm"]
            derived_scale = scale_px_per_mm(record.annotation)
            assert abs(derived_scale - drawn_scale) / drawn_scale <= 0.005
            w = width_mm(record.annotation.left, record.annotation.right, derived_scale)
            assert abs(w - record.caliper_alar_mm) <= 0.05
    print("\nACCEPTANCE PASS: coin scale within 0.5% and width within 0.05 mm on 120 samples")


def test_loocv_on_synthetic_corpus(tmp_path):
    t0 = time.perf_counter()
    records, manifest = write_corpus(SynthParams(**LOOCV_CORPUS), tmp_path / "corpus")
    assert len(records) == 200
    difficulty = corpus_difficulty(load_manifest(manifest)[:60])
    assert all(difficulty["per_size"][k] > 0 for k in ESON.names)

    config = TrainConfig(**LOOCV_CONFIG)
    summary = run_loocv(manifest, tmp_path / "run", config, subset=60)
    elapsed = time.perf_counter() - t0

    accuracy = summary["accuracy"]["value"]
    within_one = summary["within_one"]["value"]
    assert summary["samples"] == 60
    assert accuracy >= 0.70, f"exact-size accuracy {accuracy:.3f} below 0.70"
    assert within_one >= 0.90, f"within-one accuracy {within_one:.3f} below 0.90"
    assert elapsed <= 600.0, f"took {elapsed:.0f}s, budget is 600s"
    print(
        f"\nACCEPTANCE PASS: leave-one-out on 60/200 synthetic samples: "
        f"accuracy {accuracy:.1%}, within-one {within_one:.1%}, {elapsed:.0f}s"
    )
