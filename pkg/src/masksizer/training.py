"""Training schedule, leave-one-out evaluation, and repeated-prediction
aggregation.

Each epoch presents the training samples in a fresh shuffled order with a
fresh dropout mask per presentation, updates the hidden weights by momentum
gradient descent, then re-solves the linear output layer in closed form over
the mask-free scaled hidden activations. The learning rate shrinks by the
decay factor on every improvement of the inference-mode training error.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    DesignMatrix,
    NormStats,
    RawDesign,
    SampleRecord,
    assemble_raw,
    compute_stats,
    denormalize_targets,
    normalize_inputs,
)
from .errors import ShapeError, TrainingError, ValidationError
from .imaging import GrayImage, Point
from .network import (
    NetDims,
    NetworkParams,
    SavedModel,
    _init_from,
    inference_hidden,
    solve_output_pinv,
)


@dataclass(frozen=True)
class TrainConfig:
    alpha0: float = 0.002
    alpha_decay: float = 0.95
    mu: float = 0.95
    drop_prob: float = 0.7
    max_epochs: int = 200
    patience: int = 20
    repetitions: int = 4
    base_seed: int = 0
    stats_mode: str = "per-fold"  # or "global"
    n_hidden: int = 40
    crop_w: int = 200
    crop_h: int = 150
    batch_size: int = 1

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValidationError(f"alpha0 must be positive, got {self.alpha0}")
        if not 0 < self.alpha_decay <= 1:
            raise ValidationError(f"alpha_decay must be in (0, 1], got {self.alpha_decay}")
        if not 0 <= self.mu < 1:
            raise ValidationError(f"mu must be in [0, 1), got {self.mu}")
        if not 0 <= self.drop_prob < 1:
            raise ValidationError(f"drop_prob must be in [0, 1), got {self.drop_prob}")
        if self.repetitions < 1:
            raise ValidationError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.patience < 1:
            raise ValidationError(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs < 1:
            raise ValidationError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.stats_mode not in ("per-fold", "global"):
            raise ValidationError(f"stats_mode must be 'per-fold' or 'global', got {self.stats_mode!r}")


@dataclass
class TrainResult:
    params: NetworkParams
    epochs_run: int
    best_sse: float
    improvements: int
    final_alpha: float
    sse_history: list[float] = field(default_factory=list)


def _training_sse(params: NetworkParams, X: np.ndarray, Y: np.ndarray, drop_prob: float) -> float:
    H = inference_hidden(params, X, drop_prob)
    diff = H @ params.w_out - Y
    return 0.5 * float((diff * diff).sum())


def train_once(matrix: DesignMatrix, config: TrainConfig, seed: int) -> TrainResult:
    """Train one network on a design matrix; deterministic for a given seed."""
    n = matrix.rows
    if n < 1:
        raise TrainingError("empty training matrix")
    rng = np.random.default_rng(seed)
    dims = NetDims(n_in=matrix.cols, n_hidden=config.n_hidden, n_out=matrix.Y.shape[1])
    params = _init_from(rng, dims, seed)

    X_aug = np.hstack([matrix.X, np.ones((n, 1))])
    Y = matrix.Y
    keep_scale = 1.0 - config.drop_prob

    w_hidden = params.w_hidden
    velocity = np.zeros_like(w_hidden)
    grad = np.empty_like(w_hidden)

    alpha = config.alpha0
    best_sse = np.inf
    best: NetworkParams | None = None
    improvements = 0
    since_improve = 0
    history: list[float] = []
    epochs_run = 0

    for epoch in range(1, config.max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(n)
        if config.batch_size == 1:
            for idx in order:
                x_aug = X_aug[idx]
                keep = rng.random(config.n_hidden) >= config.drop_prob
                a = x_aug @ w_hidden
                th = np.tanh(a)
                h = th * keep
                delta = h @ params.w_out[:-1, :] + params.w_out[-1, :] - Y[idx]
                da = (params.w_out[:-1, :] @ delta) * keep * (1.0 - th * th)
                np.outer(x_aug, da, out=grad)
                velocity *= config.mu
                grad *= alpha
                velocity -= grad
                w_hidden += velocity
        else:
            for start in range(0, n, config.batch_size):
                idx = order[start : start + config.batch_size]
                xb = X_aug[idx]
                keep = rng.random((len(idx), config.n_hidden)) >= config.drop_prob
                a = xb @ w_hidden
                th = np.tanh(a)
                h = th * keep
                delta = h @ params.w_out[:-1, :] + params.w_out[-1, :] - Y[idx]
                da = (delta @ params.w_out[:-1, :].T) * keep * (1.0 - th * th)
                gb = xb.T @ da
                velocity *= config.mu
                velocity -= alpha * gb
                w_hidden += velocity

        # Closed-form output layer over the full, mask-free, scaled activations.
        H = np.tanh(X_aug @ w_hidden) * keep_scale
        H_aug = np.hstack([H, np.ones((n, 1))])
        params.w_out = solve_output_pinv(H_aug, Y)

        diff = H_aug @ params.w_out - Y
        epoch_sse = 0.5 * float((diff * diff).sum())
        history.append(epoch_sse)
        if not np.isfinite(epoch_sse):
            raise TrainingError(f"training diverged at epoch {epoch} (alpha={alpha})")

        if epoch_sse < best_sse:
            best_sse = epoch_sse
            best = params.copy()
            alpha *= config.alpha_decay
            improvements += 1
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= config.patience:
                break

    assert best is not None
    return TrainResult(
        params=best,
        epochs_run=epochs_run,
        best_sse=best_sse,
        improvements=improvements,
        final_alpha=alpha,
        sse_history=history,
    )


@dataclass(frozen=True)
class FoldResult:
    """One held-out sample's predictions: per-repetition crop-space landmarks
    (x_left, y_left, x_right, y_right) and their component-wise mean."""

    sample_id: str
    reps: tuple[tuple[float, float, float, float], ...]
    mean: tuple[float, float, float, float]
    epochs: tuple[int, ...]
    sse: tuple[float, ...]


def fold_seed(base_seed: int, fold_index: int, repetitions: int, repetition: int) -> int:
    """Every fold/repetition pair gets an independently reproducible seed."""
    return base_seed + fold_index * repetitions + repetition


def fold_design(raw: RawDesign, held_out: int, stats: NormStats | None = None):
    """Training matrix for one fold plus the normalized held-out input.

    In per-fold mode (stats=None) the statistics come from the training rows
    only; the held-out sample never contributes.
    """
    n = len(raw.ids)
    train_idx = np.array([j for j in range(n) if j != held_out])
    x_train = raw.x_raw[train_idx]
    y_train = raw.y_raw[train_idx]
    if stats is None:
        stats = compute_stats(x_train, y_train)
    matrix = DesignMatrix(
        X=x_train / stats.x_max - stats.x_mean,
        Y=y_train / stats.y_max - stats.y_mean,
        ids=tuple(raw.ids[j] for j in train_idx),
        crop_w=raw.crop_w,
        crop_h=raw.crop_h,
    )
    x_held = normalize_inputs(raw.x_raw[held_out], stats)
    return matrix, x_held, stats


def loocv(
    samples: list[SampleRecord],
    config: TrainConfig,
    image_root,
    raw: RawDesign | None = None,
) -> list[FoldResult]:
    """Leave-one-out evaluation: each sample is predicted by models trained
    on all the others, repeated ``config.repetitions`` times from fresh
    random initializations, and the landmark predictions averaged."""
    if raw is None:
        raw = assemble_raw(samples, config.crop_w, config.crop_h, image_root)
    n = len(raw.ids)
    if n < 2:
        raise ValidationError(f"leave-one-out needs at least 2 usable samples, got {n}")

    global_stats = None
    if config.stats_mode == "global":
        global_stats = compute_stats(raw.x_raw, raw.y_raw)

    results: list[FoldResult] = []
    for i in range(n):
        try:
            matrix, x_held, stats = fold_design(raw, i, stats=global_stats)
            reps: list[tuple[float, float, float, float]] = []
            epochs: list[int] = []
            sses: list[float] = []
            for r in range(config.repetitions):
                seed = fold_seed(config.base_seed, i, config.repetitions, r)
                res = train_once(matrix, config, seed)
                out = (
                    inference_hidden(res.params, x_held[None, :], config.drop_prob)
                    @ res.params.w_out
                )[0]
                crop_px = denormalize_targets(out, stats)
                reps.append(tuple(float(v) for v in crop_px))
                epochs.append(res.epochs_run)
                sses.append(res.best_sse)
            mean = tuple(float(v) for v in np.mean(np.asarray(reps), axis=0))
            results.append(
                FoldResult(
                    sample_id=raw.ids[i],
                    reps=tuple(reps),
                    mean=mean,
                    epochs=tuple(epochs),
                    sse=tuple(sses),
                )
            )
        except TrainingError as exc:
            raise TrainingError(f"fold {i} ({raw.ids[i]}): {exc}") from exc
    return results


def predict_landmarks(
    params: NetworkParams, stats: NormStats, crop_img: GrayImage, drop_prob: float = 0.0
) -> tuple[Point, Point]:
    """Predict (left, right) landmarks in crop-space pixels for one crop."""
    if crop_img.width * crop_img.height != params.dims.n_in:
        raise ShapeError(
            f"crop {crop_img.width}x{crop_img.height} does not match model n_in={params.dims.n_in}"
        )
    x = normalize_inputs(crop_img.pixels.astype(np.float64).reshape(-1), stats)
    out = (inference_hidden(params, x[None, :], drop_prob) @ params.w_out)[0]
    y = denormalize_targets(out, stats)
    return (float(y[0]), float(y[1])), (float(y[2]), float(y[3]))


def predict_landmarks_model(model: SavedModel, crop_img: GrayImage) -> tuple[Point, Point]:
    return predict_landmarks(model.params, model.stats, crop_img, drop_prob=model.drop_prob)


def fold_result_to_dict(fr: FoldResult) -> dict:
    return {
        "id": fr.sample_id,
        "reps": [list(r) for r in fr.reps],
        "mean": list(fr.mean),
        "epochs": list(fr.epochs),
        "sse": list(fr.sse),
    }


def fold_result_from_dict(d: dict) -> FoldResult:
    return FoldResult(
        sample_id=d["id"],
        reps=tuple(tuple(r) for r in d["reps"]),
        mean=tuple(d["mean"]),
        epochs=tuple(d["epochs"]),
        sse=tuple(d["sse"]),
    )


def write_fold_results(path, folds: list[FoldResult]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for fr in folds:
            fh.write(json.dumps(fold_result_to_dict(fr), sort_keys=True) + "\n")


def read_fold_results(path) -> list[FoldResult]:
    folds = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                folds.append(fold_result_from_dict(json.loads(line)))
    return folds
