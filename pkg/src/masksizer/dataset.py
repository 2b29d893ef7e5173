"""Sample manifests, annotation validation, design-matrix assembly, and the
scale/center normalization statistics shared by training and inference.

The manifest is JSON Lines, one sample object per line:

    {"id": str, "image": relative-path,
     "landmarks": {"left": [x, y], "right": [x, y]},
     "coin": {"p1": [x, y], "p2": [x, y]} | {"px_per_mm": f},
     "face_box": [x, y, w, h], "nose_box": [x, y, w, h],
     "alar_mm": f?, "size": "S|M|L|TL"?, "meta": {...}?}

All coordinates are original-image pixels, origin top-left, x rightward,
y downward.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .imaging import GrayImage, Point, RectRegion, TransformChain, crop, decode_image, resize_bilinear

logger = logging.getLogger(__name__)

COIN_DIAMETER_MM = 28.65

CALIPER_MIN_MM = 10.0
CALIPER_MAX_MM = 80.0

_KNOWN_KEYS = {"id", "image", "landmarks", "coin", "face_box", "nose_box", "alar_mm", "size", "meta"}


@dataclass(frozen=True)
class Annotation:
    """Manual labels for one sample, in original-image pixels."""

    left: Point
    right: Point
    coin_p1: Point | None = None
    coin_p2: Point | None = None
    px_per_mm: float | None = None
    face_box: RectRegion | None = None
    nose_box: RectRegion | None = None

    def __post_init__(self):
        validate_landmark_pair(self.left, self.right)
        validate_coin(self.coin_p1, self.coin_p2, self.px_per_mm)


def validate_landmark_pair(left, right) -> None:
    for name, p in (("left", left), ("right", right)):
        if p is None or len(p) != 2 or not all(math.isfinite(v) for v in p):
            raise ValidationError(f"landmarks.{name}: expected a finite [x, y] pair, got {p!r}")
    if tuple(left) == tuple(right):
        raise ValidationError("landmarks: left and right nasal-wall points must be distinct")


def validate_coin(p1, p2, px_per_mm) -> None:
    has_endpoints = p1 is not None or p2 is not None
    has_scale = px_per_mm is not None
    if has_endpoints and has_scale:
        raise ValidationError("coin: give either diameter endpoints or px_per_mm, not both")
    if not has_endpoints and not has_scale:
        raise ValidationError("coin: either diameter endpoints or px_per_mm is required")
    if has_endpoints:
        if p1 is None or p2 is None:
            raise ValidationError("coin: both endpoints p1 and p2 are required")
        for name, p in (("p1", p1), ("p2", p2)):
            if len(p) != 2 or not all(math.isfinite(v) for v in p):
                raise ValidationError(f"coin.{name}: expected a finite [x, y] pair, got {p!r}")
        if tuple(p1) == tuple(p2):
            raise ValidationError("coin: diameter endpoints must be distinct")
    else:
        if not (math.isfinite(px_per_mm) and px_per_mm > 0):
            raise ValidationError(f"coin.px_per_mm: must be a positive finite value, got {px_per_mm}")


def scale_px_per_mm(annotation: Annotation) -> float:
    """Pixels-per-millimetre scale from the coin diameter endpoints or direct value."""
    if annotation.px_per_mm is not None:
        return annotation.px_per_mm
    dx = annotation.coin_p2[0] - annotation.coin_p1[0]
    dy = annotation.coin_p2[1] - annotation.coin_p1[1]
    return math.hypot(dx, dy) / COIN_DIAMETER_MM


@dataclass(frozen=True)
class SampleRecord:
    """One participant: image reference, annotation, and optional ground truth."""

    id: str
    image_path: str
    annotation: Annotation
    caliper_alar_mm: float | None = None
    ground_truth_size: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.caliper_alar_mm is not None and not (
            CALIPER_MIN_MM < self.caliper_alar_mm < CALIPER_MAX_MM
        ):
            raise ValidationError(
                f"alar_mm: {self.caliper_alar_mm} outside sanity bounds "
                f"({CALIPER_MIN_MM}, {CALIPER_MAX_MM})"
            )


def _point(obj, where: str) -> Point:
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        raise ValidationError(f"{where}: expected [x, y], got {obj!r}")
    try:
        return (float(obj[0]), float(obj[1]))
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: expected numeric [x, y], got {obj!r}") from None


def annotation_from_dict(obj: dict) -> Annotation:
    """Build and validate an Annotation from manifest-style JSON fields."""
    lm = obj.get("landmarks")
    if not isinstance(lm, dict) or "left" not in lm or "right" not in lm:
        raise ValidationError("landmarks: expected an object with 'left' and 'right'")
    coin = obj.get("coin")
    if not isinstance(coin, dict):
        raise ValidationError("coin: expected an object")
    p1 = _point(coin["p1"], "coin.p1") if "p1" in coin else None
    p2 = _point(coin["p2"], "coin.p2") if "p2" in coin else None
    px = coin.get("px_per_mm")
    if px is not None:
        px = float(px)
    boxes = {}
    for key in ("face_box", "nose_box"):
        if obj.get(key) is None:
            raise ValidationError(f"{key}: required")
        try:
            boxes[key] = RectRegion.from_list(obj[key])
        except Exception as exc:
            raise ValidationError(f"{key}: {exc}") from exc
    return Annotation(
        left=_point(lm["left"], "landmarks.left"),
        right=_point(lm["right"], "landmarks.right"),
        coin_p1=p1,
        coin_p2=p2,
        px_per_mm=px,
        face_box=boxes["face_box"],
        nose_box=boxes["nose_box"],
    )


def record_from_dict(obj: dict, chart=None) -> SampleRecord:
    for key in ("id", "image"):
        if key not in obj:
            raise ValidationError(f"{key}: required")
    unknown = set(obj) - _KNOWN_KEYS
    if unknown:
        logger.warning("sample %s: ignoring unknown manifest fields %s", obj.get("id"), sorted(unknown))
    annotation = annotation_from_dict(obj)
    alar = obj.get("alar_mm")
    size = obj.get("size")
    record = SampleRecord(
        id=str(obj["id"]),
        image_path=str(obj["image"]),
        annotation=annotation,
        caliper_alar_mm=float(alar) if alar is not None else None,
        ground_truth_size=str(size) if size is not None else None,
        meta=obj.get("meta") or {},
    )
    if chart is not None and record.ground_truth_size is not None:
        if record.ground_truth_size not in chart.names:
            raise ValidationError(f"size: {record.ground_truth_size!r} not in chart {chart.names}")
        if record.caliper_alar_mm is not None:
            expected = chart.classify(record.caliper_alar_mm)
            if expected != record.ground_truth_size:
                raise ValidationError(
                    f"size: {record.ground_truth_size!r} inconsistent with alar_mm "
                    f"{record.caliper_alar_mm} (chart says {expected!r})"
                )
    return record


def load_manifest(path, chart=None, check_images: bool = True) -> list[SampleRecord]:
    """Load and validate a JSON Lines manifest, preserving file order.

    Validation failures name the offending line and field. When
    ``check_images`` is set, each referenced image must exist relative to
    the manifest directory.
    """
    path = Path(path)
    records: list[SampleRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path.name}:{lineno}: invalid JSON: {exc}") from exc
            try:
                record = record_from_dict(obj, chart=chart)
            except ValidationError as exc:
                raise ValidationError(f"{path.name}:{lineno}: {exc}") from exc
            if check_images:
                img_path = path.parent / record.image_path
                if not img_path.is_file():
                    raise OSError(f"{path.name}:{lineno}: image file not found: {img_path}")
            records.append(record)
    return records


def write_manifest(path, records: list[SampleRecord]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(record_to_dict(r), sort_keys=True) + "\n")


def record_to_dict(r: SampleRecord) -> dict:
    a = r.annotation
    coin = (
        {"px_per_mm": a.px_per_mm}
        if a.px_per_mm is not None
        else {"p1": list(a.coin_p1), "p2": list(a.coin_p2)}
    )
    obj = {
        "id": r.id,
        "image": r.image_path,
        "landmarks": {"left": list(a.left), "right": list(a.right)},
        "coin": coin,
        "face_box": a.face_box.as_list(),
        "nose_box": a.nose_box.as_list(),
    }
    if r.caliper_alar_mm is not None:
        obj["alar_mm"] = r.caliper_alar_mm
    if r.ground_truth_size is not None:
        obj["size"] = r.ground_truth_size
    if r.meta:
        obj["meta"] = r.meta
    return obj


@dataclass(frozen=True)
class NormStats:
    """Scale-and-center statistics: divide by the maximum, subtract the
    post-division mean. One (max, mean) pair for inputs, one for targets."""

    x_max: float
    x_mean: float
    y_max: float
    y_mean: float

    def __post_init__(self):
        if not (self.x_max > 0 and self.y_max > 0):
            raise ValidationError(f"norm stats maxima must be positive, got {self.x_max}, {self.y_max}")

    def to_dict(self) -> dict:
        return {"x_max": self.x_max, "x_mean": self.x_mean, "y_max": self.y_max, "y_mean": self.y_mean}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(x_max=d["x_max"], x_mean=d["x_mean"], y_max=d["y_max"], y_mean=d["y_mean"])


def compute_stats(x_raw: np.ndarray, y_raw: np.ndarray) -> NormStats:
    x_max = float(x_raw.max())
    y_max = float(y_raw.max())
    if x_max <= 0:
        raise ValidationError("input normalization: all pixels are zero, maximum must be positive")
    if y_max <= 0:
        raise ValidationError("target normalization: coordinate maximum must be positive")
    return NormStats(
        x_max=x_max,
        x_mean=float((x_raw / x_max).mean()),
        y_max=y_max,
        y_mean=float((y_raw / y_max).mean()),
    )


def normalize_inputs(x_raw: np.ndarray, stats: NormStats) -> np.ndarray:
    return x_raw / stats.x_max - stats.x_mean


def normalize_targets(y_raw: np.ndarray, stats: NormStats) -> np.ndarray:
    return y_raw / stats.y_max - stats.y_mean


def denormalize_targets(y_norm: np.ndarray, stats: NormStats) -> np.ndarray:
    """Exact inverse of target normalization: y = (y_norm + y_mean) * y_max."""
    return (np.asarray(y_norm, dtype=np.float64) + stats.y_mean) * stats.y_max


@dataclass(frozen=True)
class DesignMatrix:
    """Normalized unwrapped crops (rows) plus 4-column landmark targets,
    ordered (x_left, y_left, x_right, y_right) in crop pixels before
    normalization."""

    X: np.ndarray
    Y: np.ndarray
    ids: tuple[str, ...]
    crop_w: int
    crop_h: int

    def __post_init__(self):
        if self.X.shape[0] != self.Y.shape[0] or self.X.shape[0] != len(self.ids):
            raise ValidationError("design matrix: row count mismatch between X, Y, and ids")
        if self.X.shape[1] != self.crop_w * self.crop_h:
            raise ValidationError(
                f"design matrix: {self.X.shape[1]} columns != crop {self.crop_w}x{self.crop_h}"
            )

    @property
    def rows(self) -> int:
        return self.X.shape[0]

    @property
    def cols(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RawDesign:
    """Unnormalized per-sample crop vectors and crop-space targets.

    Fold-independent, so leave-one-out loops can assemble it once and
    renormalize per fold.
    """

    ids: tuple[str, ...]
    x_raw: np.ndarray
    y_raw: np.ndarray
    chains: tuple[TransformChain, ...]
    excluded: tuple[tuple[str, str], ...]
    crop_w: int
    crop_h: int


def load_sample_image(record: SampleRecord, image_root) -> GrayImage:
    data = (Path(image_root) / record.image_path).read_bytes()
    return decode_image(data)


def prepare_crop(
    img: GrayImage, nose_box: RectRegion, crop_w: int, crop_h: int
) -> tuple[GrayImage, TransformChain]:
    """Crop the nose region and resize to the model input size."""
    cropped, crop_step = crop(img, nose_box)
    resized, resize_step = resize_bilinear(cropped, crop_w, crop_h)
    return resized, TransformChain((crop_step, resize_step))


def assemble_raw(
    samples: list[SampleRecord], crop_w: int, crop_h: int, image_root
) -> RawDesign:
    """Load, crop, resize, and unwrap every sample.

    Samples whose image cannot be processed or whose landmarks fall outside
    the crop after mapping are excluded and reported.
    """
    ids: list[str] = []
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    chains: list[TransformChain] = []
    excluded: list[tuple[str, str]] = []
    for record in samples:
        try:
            img = load_sample_image(record, image_root)
            resized, chain = prepare_crop(img, record.annotation.nose_box, crop_w, crop_h)
            left = chain.forward(record.annotation.left)
            right = chain.forward(record.annotation.right)
            for name, p in (("left", left), ("right", right)):
                if not (0 <= p[0] < crop_w and 0 <= p[1] < crop_h):
                    raise ValidationError(
                        f"landmark {name} maps outside the {crop_w}x{crop_h} crop: {p}"
                    )
        except Exception as exc:
            excluded.append((record.id, str(exc)))
            logger.warning("sample %s excluded: %s", record.id, exc)
            continue
        ids.append(record.id)
        xs.append(resized.pixels.astype(np.float64).reshape(-1))
        ys.append(np.array([left[0], left[1], right[0], right[1]], dtype=np.float64))
        chains.append(chain)
    n = len(ids)
    x_raw = np.vstack(xs) if n else np.empty((0, crop_w * crop_h))
    y_raw = np.vstack(ys) if n else np.empty((0, 4))
    return RawDesign(
        ids=tuple(ids),
        x_raw=x_raw,
        y_raw=y_raw,
        chains=tuple(chains),
        excluded=tuple(excluded),
        crop_w=crop_w,
        crop_h=crop_h,
    )


def normalize_design(raw: RawDesign, stats: NormStats | None = None) -> tuple[DesignMatrix, NormStats]:
    """Normalize a raw design. With fresh stats every stored value lands in [-1, 1]."""
    own_stats = stats is None
    if own_stats:
        stats = compute_stats(raw.x_raw, raw.y_raw)
    X = normalize_inputs(raw.x_raw, stats)
    Y = normalize_targets(raw.y_raw, stats)
    if own_stats and X.size:
        lo, hi = X.min(), X.max()
        if lo < -1 - 1e-9 or hi > 1 + 1e-9:
            raise ValidationError(f"normalized inputs escaped [-1, 1]: [{lo}, {hi}]")
    matrix = DesignMatrix(X=X, Y=Y, ids=raw.ids, crop_w=raw.crop_w, crop_h=raw.crop_h)
    return matrix, stats


def build_design_matrix(
    samples: list[SampleRecord],
    crop_w: int,
    crop_h: int,
    image_root,
    stats: NormStats | None = None,
) -> tuple[DesignMatrix, NormStats, tuple[TransformChain, ...], tuple[tuple[str, str], ...]]:
    """One-shot assembly: raw vectors, normalization, and per-sample chains."""
    raw = assemble_raw(samples, crop_w, crop_h, image_root)
    matrix, stats = normalize_design(raw, stats)
    return matrix, stats, raw.chains, raw.excluded
