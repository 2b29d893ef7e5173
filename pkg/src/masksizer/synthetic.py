"""Deterministic procedural generator of nose-like grayscale test images
with exactly known landmarks, coin geometry, and nose width.

Each sample is a shaded background with two dark lateral-wall blobs placed
exactly ``alar_mm * scale`` pixels apart inside the nose box, plus a bright
reference disc whose drawn diameter is exactly the coin diameter at the
sample's scale. The manifest records the true landmark pixels, the coin
diameter endpoints, and the caliper width, so every downstream measurement
can be checked against construction.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import COIN_DIAMETER_MM, SampleRecord, Annotation, record_to_dict
from .errors import GenerationError
from .imaging import GrayImage, RectRegion, save_pgm
from .sizing import ESON, SizeChart

import json


@dataclass(frozen=True)
class SynthParams:
    seed: int = 0
    count: int = 50
    image_w: int = 640
    image_h: int = 520
    alar_mm_min: float = 30.0
    alar_mm_max: float = 50.0
    scale_min: float = 2.0
    scale_max: float = 6.0
    tilt_deg: float = 6.0  # landmark-pair rotation jitter; keeps the pair distance exact
    placement: float = 0.9  # fraction of the free slack used for nose placement
    nose_box_frac: float = 0.55  # nose box width as a fraction of image width
    blob_sigma_mm: float = 2.2
    blob_depth: float = 110.0
    base_level: float = 165.0
    shade: float = 45.0  # smooth diagonal shading amplitude
    noise: float = 8.0  # additive uniform noise amplitude, grey levels
    coin_level: float = 245.0

    def __post_init__(self):
        if self.count < 0:
            raise GenerationError(f"count must be >= 0, got {self.count}")
        if not (0 < self.alar_mm_min < self.alar_mm_max):
            raise GenerationError(f"bad alar range ({self.alar_mm_min}, {self.alar_mm_max})")
        if not (0 < self.scale_min <= self.scale_max):
            raise GenerationError(f"bad scale range ({self.scale_min}, {self.scale_max})")
        if not 0 <= self.placement <= 1:
            raise GenerationError(f"placement must be in [0, 1], got {self.placement}")


def _render(params: SynthParams, rng: np.random.Generator, geometry: dict) -> np.ndarray:
    w, h = params.image_w, params.image_h
    xx = np.arange(w, dtype=np.float64)[None, :]
    yy = np.arange(h, dtype=np.float64)[:, None]
    img = params.base_level + params.shade * (xx / w + yy / h - 1.0)
    img = np.broadcast_to(img, (h, w)).copy()

    sigma = geometry["sigma"]
    win = int(math.ceil(4 * sigma)) + 1
    for px, py in (geometry["left"], geometry["right"]):
        x0 = max(0, int(px) - win)
        x1 = min(w, int(px) + win + 1)
        y0 = max(0, int(py) - win)
        y1 = min(h, int(py) + win + 1)
        gx = np.arange(x0, x1, dtype=np.float64)[None, :] - px
        gy = np.arange(y0, y1, dtype=np.float64)[:, None] - py
        img[y0:y1, x0:x1] -= params.blob_depth * np.exp(-(gx * gx + gy * gy) / (2 * sigma * sigma))

    ccx, ccy = geometry["coin_center"]
    r = geometry["coin_radius"]
    win = int(math.ceil(r)) + 2
    x0 = max(0, int(ccx) - win)
    x1 = min(w, int(ccx) + win + 1)
    y0 = max(0, int(ccy) - win)
    y1 = min(h, int(ccy) + win + 1)
    gx = np.arange(x0, x1, dtype=np.float64)[None, :] - ccx
    gy = np.arange(y0, y1, dtype=np.float64)[:, None] - ccy
    dist = np.sqrt(gx * gx + gy * gy)
    alpha = np.clip(r + 0.5 - dist, 0.0, 1.0)
    img[y0:y1, x0:x1] = img[y0:y1, x0:x1] * (1 - alpha) + params.coin_level * alpha

    if params.noise > 0:
        img += rng.uniform(-params.noise, params.noise, size=(h, w))
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def _sample_geometry(params: SynthParams, rng: np.random.Generator, sample_id: str) -> dict:
    w, h = params.image_w, params.image_h
    alar_mm = rng.uniform(params.alar_mm_min, params.alar_mm_max)
    scale = rng.uniform(params.scale_min, params.scale_max)
    alar_px = alar_mm * scale
    sigma = params.blob_sigma_mm * scale

    coin_r = COIN_DIAMETER_MM * scale / 2.0
    if 2 * coin_r + 8 > w:
        raise GenerationError(f"{sample_id}: coin (r={coin_r:.1f}) does not fit a {w}px-wide image")
    ccx = rng.uniform(coin_r + 4, w - coin_r - 4)
    ccy = coin_r + 4 + rng.uniform(0, 6)
    strip_bottom = int(math.ceil(ccy + coin_r)) + 4

    box_w = round(params.nose_box_frac * w)
    box_h = round(box_w * 0.75)
    if box_w + 4 > w or strip_bottom + box_h + 2 > h:
        raise GenerationError(
            f"{sample_id}: nose box {box_w}x{box_h} does not fit below the coin strip"
        )
    bx0 = int(rng.uniform(2, w - box_w - 2))
    by0 = int(rng.uniform(strip_bottom, h - box_h - 2))

    theta = math.radians(rng.uniform(-params.tilt_deg, params.tilt_deg))
    margin = sigma + 2.0
    hx = (alar_px / 2) * abs(math.cos(theta)) + margin
    hy = (alar_px / 2) * abs(math.sin(theta)) + margin
    if 2 * hx > box_w or 2 * hy > box_h:
        raise GenerationError(
            f"{sample_id}: nose span {alar_px:.0f}px (+margins) exceeds the {box_w}x{box_h} nose box"
        )
    cx = bx0 + box_w / 2 + rng.uniform(-1, 1) * params.placement * (box_w / 2 - hx)
    cy = by0 + box_h / 2 + rng.uniform(-1, 1) * params.placement * (box_h / 2 - hy)

    dx = (alar_px / 2) * math.cos(theta)
    dy = (alar_px / 2) * math.sin(theta)
    return {
        "alar_mm": alar_mm,
        "scale": scale,
        "sigma": sigma,
        "left": (cx - dx, cy - dy),
        "right": (cx + dx, cy + dy),
        "coin_center": (ccx, ccy),
        "coin_radius": coin_r,
        "nose_box": RectRegion(bx0, by0, box_w, box_h),
    }


def generate(params: SynthParams, chart: SizeChart = ESON) -> list[tuple[SampleRecord, GrayImage]]:
    """Generate the corpus in manifest order. Per-sample RNG streams are
    seeded as seed+index, so each sample is independent of the others."""
    out: list[tuple[SampleRecord, GrayImage]] = []
    for i in range(params.count):
        rng = np.random.default_rng(params.seed + i)
        sample_id = f"synth-{i:04d}"
        geo = _sample_geometry(params, rng, sample_id)
        pixels = _render(params, rng, geo)
        ccx, ccy = geo["coin_center"]
        r = geo["coin_radius"]
        annotation = Annotation(
            left=geo["left"],
            right=geo["right"],
            coin_p1=(ccx - r, ccy),
            coin_p2=(ccx + r, ccy),
            face_box=RectRegion(1, 1, params.image_w - 2, params.image_h - 2),
            nose_box=geo["nose_box"],
        )
        record = SampleRecord(
            id=sample_id,
            image_path=f"{sample_id}.pgm",
            annotation=annotation,
            caliper_alar_mm=geo["alar_mm"],
            ground_truth_size=chart.classify(geo["alar_mm"]),
            meta={
                "scale_px_per_mm": geo["scale"],
                "pap_user": i % 5 == 0,
            },
        )
        out.append((record, GrayImage.from_array(pixels)))
    return out


def write_corpus(params: SynthParams, out_dir, chart: SizeChart = ESON) -> tuple[list[SampleRecord], Path]:
    """Write PGM images plus the JSON Lines manifest; byte-deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    manifest_path = out_dir / "manifest.jsonl"
    with manifest_path.open("w", encoding="utf-8") as fh:
        for record, image in generate(params, chart):
            (out_dir / record.image_path).write_bytes(save_pgm(image))
            fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")
            records.append(record)
    return records, manifest_path


def corpus_difficulty(records: list[SampleRecord], chart: SizeChart = ESON) -> dict:
    """Per-size counts plus the fraction of samples inside any boundary
    tolerance band (the ones the tolerance rule will forgive)."""
    if not records:
        raise GenerationError("difficulty summary needs a non-empty manifest")
    per_size = {name: 0 for name in chart.names}
    in_band = 0
    for r in records:
        width = r.caliper_alar_mm
        if width is None:
            continue
        per_size[chart.classify(width)] += 1
        if chart.band_for(width) is not None:
            in_band += 1
    n = sum(per_size.values())
    return {
        "count": len(records),
        "per_size": per_size,
        "band_fraction": in_band / n if n else 0.0,
    }
