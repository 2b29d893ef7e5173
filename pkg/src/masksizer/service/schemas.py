"""Pydantic request/response models for the annotation service."""

from typing import Literal

from pydantic import BaseModel, Field

Point = list[float]
Box = list[int]


class LandmarksIn(BaseModel):
    left: Point = Field(min_length=2, max_length=2)
    right: Point = Field(min_length=2, max_length=2)


class CoinIn(BaseModel):
    p1: Point | None = Field(default=None, min_length=2, max_length=2)
    p2: Point | None = Field(default=None, min_length=2, max_length=2)
    px_per_mm: float | None = None


class AnnotationIn(BaseModel):
    """Manifest-style annotation fields; landmarks may be absent when the
    clinician relies on a model prediction."""

    landmarks: LandmarksIn | None = None
    coin: CoinIn | None = None
    face_box: Box | None = Field(default=None, min_length=4, max_length=4)
    nose_box: Box | None = Field(default=None, min_length=4, max_length=4)
    alar_mm: float | None = None
    size: str | None = None
    meta: dict = Field(default_factory=dict)


class SampleCreated(BaseModel):
    id: str


class SampleInfo(BaseModel):
    id: str
    content_type: str
    width: int
    height: int
    annotation_version: int | None = None
    prediction_version: int | None = None


class AnnotationOut(BaseModel):
    version: int
    annotation: dict


class PredictionOut(BaseModel):
    version: int
    landmarks: LandmarksIn
    crop_landmarks: LandmarksIn


class BoundaryBandOut(BaseModel):
    boundary: float
    low: float
    high: float
    sizes: list[str]


class SizeRequest(BaseModel):
    source: Literal["auto", "annotation", "prediction"] = "auto"


class SizeOut(BaseModel):
    width_mm: float
    size: str
    scale_px_per_mm: float
    landmarks: LandmarksIn
    source: str
    boundary_band: BoundaryBandOut | None = None


class RunRequest(BaseModel):
    seed: int = 0
    repetitions: int = 4
    max_epochs: int = 30
    patience: int = 5
    crop_w: int = 200
    crop_h: int = 150
    n_hidden: int = 40
    drop_prob: float = 0.7
    stats_mode: Literal["per-fold", "global"] = "per-fold"
    sample_ids: list[str] | None = None


class RunInfo(BaseModel):
    id: str
    status: Literal["running", "done", "failed"]
    created: float
    config: dict
    samples: int | None = None
    summary: dict | None = None
    error: str | None = None
