"""Grayscale raster handling: PGM I/O, PNG ingestion, cropping, bilinear
resizing, and the affine bookkeeping that maps processed-crop coordinates
back to original-image space.

All pixel data is 8-bit grayscale. Coordinates follow raster convention:
origin at the top-left corner, x rightward, y downward. Annotations live in
original-image coordinates; every crop/resize emits an affine step so points
can be mapped between spaces exactly.
"""

import io
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, GeometryError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
PGM_MEDIA_TYPE = "image/x-portable-graymap"
PNG_MEDIA_TYPE = "image/png"

# ITU-R 601 luma weights used when a color image arrives at ingestion.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114

_WHITESPACE = b" \t\n\r\x0b\x0c"

Point = tuple[float, float]


@dataclass(frozen=True)
class GrayImage:
    """Immutable 8-bit grayscale raster, pixels stored row-major as (height, width)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GeometryError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        px = np.array(self.pixels, dtype=np.uint8, copy=True)
        if px.shape != (self.height, self.width):
            raise GeometryError(
                f"pixel buffer shape {px.shape} does not match {self.width}x{self.height}"
            )
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "GrayImage":
        a = np.asarray(arr)
        if a.ndim != 2:
            raise GeometryError(f"expected a 2-D array, got ndim={a.ndim}")
        return cls(width=a.shape[1], height=a.shape[0], pixels=a.astype(np.uint8))


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned pixel rectangle: top-left corner plus size."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        for name in ("x0", "y0", "w", "h"):
            v = getattr(self, name)
            if isinstance(v, float):
                if not v.is_integer():
                    raise GeometryError(f"region field {name} must be an integer, got {v}")
                object.__setattr__(self, name, int(v))
            elif not isinstance(v, (int, np.integer)):
                raise GeometryError(f"region field {name} must be an integer, got {v!r}")
            else:
                object.__setattr__(self, name, int(v))
        if self.w < 1 or self.h < 1:
            raise GeometryError(f"region size must be >= 1, got {self.w}x{self.h}")

    def inside(self, width: int, height: int) -> bool:
        return (
            self.x0 >= 0
            and self.y0 >= 0
            and self.x0 + self.w <= width
            and self.y0 + self.h <= height
        )

    def as_list(self) -> list[int]:
        return [self.x0, self.y0, self.w, self.h]

    @classmethod
    def from_list(cls, values) -> "RectRegion":
        if len(values) != 4:
            raise GeometryError(f"region must be [x, y, w, h], got {values!r}")
        return cls(*values)


@dataclass(frozen=True)
class AffineStep:
    """One pipeline stage's coordinate map.

    Forward (source space -> processed space):  p' = (p - offset) * scale.
    A crop at (x0, y0) is offset=(x0, y0), scale=1; a resize records the
    per-axis output/input scale with zero offset.
    """

    scale_x: float
    scale_y: float
    offset_x: float = 0.0
    offset_y: float = 0.0

    def __post_init__(self):
        if not (self.scale_x > 0 and self.scale_y > 0):
            raise GeometryError(f"affine scales must be positive, got {self.scale_x}, {self.scale_y}")

    def forward(self, p: Point) -> Point:
        return ((p[0] - self.offset_x) * self.scale_x, (p[1] - self.offset_y) * self.scale_y)

    def inverse(self, p: Point) -> Point:
        return (p[0] / self.scale_x + self.offset_x, p[1] / self.scale_y + self.offset_y)


@dataclass(frozen=True)
class TransformChain:
    """Ordered affine steps from original-image space to processed-crop space."""

    steps: tuple[AffineStep, ...] = ()

    def then(self, step: AffineStep) -> "TransformChain":
        return TransformChain(self.steps + (step,))

    def forward(self, p: Point) -> Point:
        for step in self.steps:
            p = step.forward(p)
        return p

    def inverse(self, p: Point) -> Point:
        for step in reversed(self.steps):
            p = step.inverse(p)
        return p


def map_point(chain: TransformChain, p: Point) -> Point:
    """Map a processed-space point back to original-image space."""
    return chain.inverse(p)


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE + b"#":
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of header")
    return data[start:pos], pos


def _int_field(data: bytes, pos: int, name: str) -> tuple[int, int]:
    tok, pos = _next_token(data, pos)
    try:
        value = int(tok)
    except ValueError:
        raise FormatError(f"{name}: expected an integer, got {tok!r}") from None
    if value < 1:
        raise FormatError(f"{name}: must be >= 1, got {value}")
    return value, pos


def load_pgm(data: bytes) -> GrayImage:
    """Decode a binary (P5) 8-bit PGM. Header comments are tolerated."""
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise FormatError(f"magic: expected b'P5', got {magic!r}")
    width, pos = _int_field(data, pos, "width")
    height, pos = _int_field(data, pos, "height")
    maxval, pos = _int_field(data, pos, "maxval")
    if maxval != 255:
        raise FormatError(f"maxval: only 255 is supported, got {maxval}")
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise FormatError("header: missing whitespace before pixel payload")
    pos += 1
    need = width * height
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise FormatError(f"payload: truncated, expected {need} bytes, got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(width=width, height=height, pixels=pixels)


def save_pgm(img: GrayImage) -> bytes:
    """Encode in canonical binary P5 form (stable bytes for identical pixels)."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def load_png(data: bytes) -> GrayImage:
    """Decode a PNG, converting color to grayscale with 601 luma, rounded half-up."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                luma = _LUMA_R * rgb[..., 0] + _LUMA_G * rgb[..., 1] + _LUMA_B * rgb[..., 2]
                arr = np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
    except UnidentifiedImageError as exc:
        raise FormatError(f"png: {exc}") from exc
    return GrayImage.from_array(arr)


def decode_image(data: bytes) -> GrayImage:
    """Decode PGM (canonical) or PNG (ingestion-only) bytes."""
    if data[:2] == b"P5":
        return load_pgm(data)
    if data[: len(PNG_SIGNATURE)] == PNG_SIGNATURE:
        return load_png(data)
    raise FormatError("unrecognized image payload (expected binary PGM or PNG)")


def crop(img: GrayImage, region: RectRegion) -> tuple[GrayImage, AffineStep]:
    """Cut a sub-image; the emitted step maps crop coordinates back to the source."""
    if not region.inside(img.width, img.height):
        raise GeometryError(
            f"region {region.as_list()} not inside {img.width}x{img.height} image"
        )
    sub = img.pixels[region.y0 : region.y0 + region.h, region.x0 : region.x0 + region.w]
    step = AffineStep(scale_x=1.0, scale_y=1.0, offset_x=float(region.x0), offset_y=float(region.y0))
    return GrayImage(width=region.w, height=region.h, pixels=sub), step


def resize_bilinear(img: GrayImage, out_w: int, out_h: int) -> tuple[GrayImage, AffineStep]:
    """Bilinear resize with pixel-center sample alignment and edge clamping.

    The emitted step records the per-axis out/in scale factors.
    """
    if out_w < 1 or out_h < 1:
        raise GeometryError(f"target dimensions must be >= 1, got {out_w}x{out_h}")
    src = img.pixels.astype(np.float64)
    in_h, in_w = src.shape

    sx = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    sy = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = sx - x0
    fy = sy - y0

    p00 = src[np.ix_(y0, x0)]
    p01 = src[np.ix_(y0, x1)]
    p10 = src[np.ix_(y1, x0)]
    p11 = src[np.ix_(y1, x1)]
    wx = fx[None, :]
    wy = fy[:, None]
    out = (p00 * (1 - wx) + p01 * wx) * (1 - wy) + (p10 * (1 - wx) + p11 * wx) * wy

    pixels = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    step = AffineStep(scale_x=out_w / in_w, scale_y=out_h / in_h)
    return GrayImage(width=out_w, height=out_h, pixels=pixels), step
