"""Three-layer landmark regressor: tanh hidden layer with dropout, linear
output layer. Hidden weights learn by momentum gradient descent on the
sum-of-squares error; the output layer is solved in closed form with the
Moore-Penrose pseudo-inverse of the hidden activations.
"""

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import NormStats
from .errors import NumericError, ShapeError

INIT_RANGE = 0.05
PINV_RCOND = 1e-10
MODEL_VERSION = 1


@dataclass(frozen=True)
class NetDims:
    n_in: int
    n_hidden: int
    n_out: int

    def __post_init__(self):
        if min(self.n_in, self.n_hidden, self.n_out) < 1:
            raise ShapeError(f"all layer sizes must be >= 1, got {self}")


@dataclass
class NetworkParams:
    """Weight matrices with the bias row last: w_hidden is (n_in+1, n_hidden),
    w_out is (n_hidden+1, n_out)."""

    w_hidden: np.ndarray
    w_out: np.ndarray
    dims: NetDims
    init_seed: int

    def __post_init__(self):
        if self.w_hidden.shape != (self.dims.n_in + 1, self.dims.n_hidden):
            raise ShapeError(
                f"w_hidden shape {self.w_hidden.shape} != {(self.dims.n_in + 1, self.dims.n_hidden)}"
            )
        if self.w_out.shape != (self.dims.n_hidden + 1, self.dims.n_out):
            raise ShapeError(
                f"w_out shape {self.w_out.shape} != {(self.dims.n_hidden + 1, self.dims.n_out)}"
            )
        if not (np.isfinite(self.w_hidden).all() and np.isfinite(self.w_out).all()):
            raise NumericError("network weights must be finite")

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            w_hidden=self.w_hidden.copy(),
            w_out=self.w_out.copy(),
            dims=self.dims,
            init_seed=self.init_seed,
        )


def _init_from(rng: np.random.Generator, dims: NetDims, seed: int) -> NetworkParams:
    return NetworkParams(
        w_hidden=rng.uniform(-INIT_RANGE, INIT_RANGE, size=(dims.n_in + 1, dims.n_hidden)),
        w_out=rng.uniform(-INIT_RANGE, INIT_RANGE, size=(dims.n_hidden + 1, dims.n_out)),
        dims=dims,
        init_seed=seed,
    )


def init_params(dims: NetDims, seed: int) -> NetworkParams:
    """Seeded i.i.d. uniform initialization on [-0.05, 0.05] for both layers."""
    return _init_from(np.random.default_rng(seed), dims, seed)


@dataclass(frozen=True)
class DropoutMask:
    """Per-presentation keep flags for the hidden layer; P(drop) = drop_prob."""

    keep: np.ndarray
    drop_prob: float

    def __post_init__(self):
        if not 0 <= self.drop_prob < 1:
            raise ValueError(f"drop_prob must be in [0, 1), got {self.drop_prob}")


def draw_mask(rng: np.random.Generator, n_hidden: int, drop_prob: float) -> DropoutMask:
    if not 0 <= drop_prob < 1:
        raise ValueError(f"drop_prob must be in [0, 1), got {drop_prob}")
    return DropoutMask(keep=rng.random(n_hidden) >= drop_prob, drop_prob=drop_prob)


@dataclass(frozen=True)
class ForwardResult:
    hidden: np.ndarray
    output: np.ndarray


def _augment(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x, [1.0]])


def forward(
    params: NetworkParams,
    x: np.ndarray,
    mask: DropoutMask | None = None,
    drop_prob: float = 0.0,
) -> ForwardResult:
    """Run one input through the network.

    Training mode (mask given): dropped hidden units are zeroed. Inference
    mode (no mask): hidden activations are scaled by (1 - drop_prob) so the
    expected unit contribution matches training.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.dims.n_in,):
        raise ShapeError(f"input shape {x.shape} != ({params.dims.n_in},)")
    h = np.tanh(_augment(x) @ params.w_hidden)
    if mask is not None:
        if mask.keep.shape != (params.dims.n_hidden,):
            raise ShapeError(f"mask shape {mask.keep.shape} != ({params.dims.n_hidden},)")
        h = h * mask.keep
    else:
        h = h * (1.0 - drop_prob)
    output = _augment(h) @ params.w_out
    return ForwardResult(hidden=h, output=output)


def sse(output: np.ndarray, target: np.ndarray) -> float:
    """Sum-of-squares error with the 1/2 factor."""
    d = np.asarray(output) - np.asarray(target)
    return 0.5 * float(d @ d)


def backprop(
    params: NetworkParams,
    x: np.ndarray,
    target: np.ndarray,
    mask: DropoutMask | None = None,
    drop_prob: float = 0.0,
) -> np.ndarray:
    """Exact gradient of the sum-of-squares error w.r.t. w_hidden for the
    (possibly masked) forward pass. Dropped units contribute zero gradient."""
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if x.shape != (params.dims.n_in,):
        raise ShapeError(f"input shape {x.shape} != ({params.dims.n_in},)")
    if target.shape != (params.dims.n_out,):
        raise ShapeError(f"target shape {target.shape} != ({params.dims.n_out},)")
    x_aug = _augment(x)
    a = x_aug @ params.w_hidden
    th = np.tanh(a)
    if mask is not None:
        gate = mask.keep.astype(np.float64)
    else:
        gate = np.full(params.dims.n_hidden, 1.0 - drop_prob)
    h = th * gate
    delta = _augment(h) @ params.w_out - target
    dh = params.w_out[:-1, :] @ delta
    da = dh * gate * (1.0 - th * th)
    return np.outer(x_aug, da)


def inference_hidden(params: NetworkParams, X: np.ndarray, drop_prob: float) -> np.ndarray:
    """Mask-free hidden activations scaled by (1 - drop_prob), with the bias
    column appended: the matrix the output-layer solve operates on."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.dims.n_in:
        raise ShapeError(f"batch shape {X.shape} incompatible with n_in={params.dims.n_in}")
    ones = np.ones((X.shape[0], 1))
    h = np.tanh(np.hstack([X, ones]) @ params.w_hidden) * (1.0 - drop_prob)
    return np.hstack([h, ones])


def solve_output_pinv(H: np.ndarray, T: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Minimum-norm least-squares output weights via the SVD pseudo-inverse.

    Singular values below rcond * sigma_max are treated as zero.
    """
    H = np.asarray(H, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if not (np.isfinite(H).all() and np.isfinite(T).all()):
        raise NumericError("pseudo-inverse solve requires finite inputs")
    if H.ndim != 2 or T.ndim != 2 or H.shape[0] != T.shape[0]:
        raise ShapeError(f"incompatible shapes H{H.shape}, T{T.shape}")
    return np.linalg.pinv(H, rcond=rcond) @ T


def sgd_momentum_step(
    w: np.ndarray, velocity: np.ndarray, gradient: np.ndarray, alpha: float, mu: float
) -> tuple[np.ndarray, np.ndarray]:
    """Classical momentum update: v' = mu*v - alpha*g, w' = w + v'."""
    if w.shape != velocity.shape or w.shape != gradient.shape:
        raise ShapeError(
            f"mismatched shapes w{w.shape}, velocity{velocity.shape}, gradient{gradient.shape}"
        )
    v_next = mu * velocity - alpha * gradient
    return w + v_next, v_next


def predict_output(params: NetworkParams, x: np.ndarray, drop_prob: float = 0.0) -> np.ndarray:
    """Inference-mode output (expectation-scaled hidden layer, no mask)."""
    return forward(params, x, mask=None, drop_prob=drop_prob).output


@dataclass
class SavedModel:
    """A trained network plus everything needed to run it on a fresh crop."""

    params: NetworkParams
    drop_prob: float
    stats: NormStats
    crop_w: int
    crop_h: int
    seed: int


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode(blob: str, shape: tuple[int, int]) -> np.ndarray:
    raw = base64.b64decode(blob.encode("ascii"))
    expected = shape[0] * shape[1] * 8
    if len(raw) != expected:
        raise ShapeError(f"weight blob holds {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)


def save_model(path, model: SavedModel) -> None:
    d = model.params.dims
    doc = {
        "version": MODEL_VERSION,
        "dims": {
            "n_in": d.n_in,
            "n_hidden": d.n_hidden,
            "n_out": d.n_out,
            "crop_w": model.crop_w,
            "crop_h": model.crop_h,
        },
        "drop_prob": model.drop_prob,
        "seed": model.seed,
        "norm_stats": model.stats.to_dict(),
        "weights": {
            "hidden": _encode(model.params.w_hidden),
            "output": _encode(model.params.w_out),
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")


def load_model(path) -> SavedModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != MODEL_VERSION:
        raise ShapeError(f"unsupported model version {doc.get('version')!r}")
    dd = doc["dims"]
    dims = NetDims(n_in=dd["n_in"], n_hidden=dd["n_hidden"], n_out=dd["n_out"])
    crop_w, crop_h = dd["crop_w"], dd["crop_h"]
    if dims.n_in != crop_w * crop_h:
        raise ShapeError(f"model n_in={dims.n_in} != crop {crop_w}x{crop_h}")
    params = NetworkParams(
        w_hidden=_decode(doc["weights"]["hidden"], (dims.n_in + 1, dims.n_hidden)),
        w_out=_decode(doc["weights"]["output"], (dims.n_hidden + 1, dims.n_out)),
        dims=dims,
        init_seed=doc["seed"],
    )
    return SavedModel(
        params=params,
        drop_prob=doc["drop_prob"],
        stats=NormStats.from_dict(doc["norm_stats"]),
        crop_w=crop_w,
        crop_h=crop_h,
        seed=doc["seed"],
    )
