"""Grayscale raster handling: load/save, bilinear down-sampling, mean
subtraction and cropping.

Images are immutable once constructed. ``GrayImage`` holds intensities in
[0, 1]; ``PixelGrid`` holds unbounded reals (typically mean-subtracted
intensities, which go negative).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np


class ImageFormatError(ValueError):
    """Raised for unreadable, unsupported, or malformed image data."""


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True, order="C")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """A width x height grayscale raster with intensities in [0, 1].

    ``pixels`` is a read-only (height, width) float64 array.
    """

    width: int
    height: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.size != self.width * self.height:
            raise ValueError(
                f"pixel count {arr.size} does not match {self.width}x{self.height}"
            )
        arr = _frozen_array(arr.reshape(self.height, self.width))
        if not np.all(np.isfinite(arr)):
            raise ValueError("pixel intensities must be finite")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("pixel intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "GrayImage":
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {a.shape}")
        return cls(width=a.shape[1], height=a.shape[0], pixels=a)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.pixels.tobytes()))


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """A width x height grid of unbounded real values (row-major)."""

    width: int
    height: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.width}x{self.height}")
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.size != self.width * self.height:
            raise ValueError(
                f"value count {arr.size} does not match {self.width}x{self.height}"
            )
        object.__setattr__(self, "values", _frozen_array(arr.reshape(self.height, self.width)))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "PixelGrid":
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {a.shape}")
        return cls(width=a.shape[1], height=a.shape[0], values=a)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelGrid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.values.tobytes()))


@dataclass(frozen=True)
class Roi:
    """A rectangle in image pixels: (x, y) top-left corner, w x h extent."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError(f"roi extent must be >= 1, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"roi origin must be >= 0, got ({self.x}, {self.y})")

    def check_within(self, width: int, height: int) -> None:
        if self.x + self.w > width:
            raise ValueError(
                f"roi right edge {self.x + self.w} exceeds image width {width}"
            )
        if self.y + self.h > height:
            raise ValueError(
                f"roi bottom edge {self.y + self.h} exceeds image height {height}"
            )


# ---------------------------------------------------------------------------
# Loading and saving

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def load_grayscale(path) -> GrayImage:
    """Load an 8-bit binary PGM (P5) or grayscale PNG as a GrayImage.

    Intensities are scaled to [0, 1]. Multi-channel inputs are reduced by
    the arithmetic mean of their color channels.
    """
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"cannot read image file {p}: {exc}") from exc
    return decode_grayscale(data, name=str(p))


def decode_grayscale(data: bytes, name: str = "<bytes>") -> GrayImage:
    """Decode raw PGM or PNG bytes into a GrayImage."""
    if data.startswith(b"P5"):
        return _decode_pgm(data, name)
    if data.startswith(_PNG_MAGIC):
        return _decode_png(data, name)
    raise ImageFormatError(f"unsupported image format in {name} (need P5 PGM or PNG)")


def _decode_pgm(data: bytes, name: str) -> GrayImage:
    # Header: "P5", width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed, then a single whitespace byte before raster data.
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise ImageFormatError(f"truncated PGM header in {name}")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tok = data[start:pos]
        if not tok.isdigit():
            raise ImageFormatError(f"malformed PGM header token {tok!r} in {name}")
        tokens.append(int(tok))
    if pos >= len(data):
        raise ImageFormatError(f"truncated PGM file {name}")
    pos += 1  # single whitespace after maxval
    width, height, maxval = tokens
    if width < 1 or height < 1:
        raise ImageFormatError(f"zero-dimension PGM image in {name}")
    if maxval < 1 or maxval > 255:
        raise ImageFormatError(f"unsupported PGM maxval {maxval} in {name} (8-bit only)")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ImageFormatError(
            f"PGM raster in {name} has {len(raster)} bytes, expected {width * height}"
        )
    arr = np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / float(maxval)
    return GrayImage(width=width, height=height, pixels=arr)


def _decode_png(data: bytes, name: str) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGB")
                mode = "RGB"
            arr = np.asarray(im)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"cannot decode PNG {name}: {exc}") from exc
    if mode == "L":
        flat = arr.astype(np.float64) / 255.0
    elif mode == "LA":
        flat = arr[..., 0].astype(np.float64) / 255.0
    elif mode == "RGB":
        flat = arr.astype(np.float64).mean(axis=2) / 255.0
    elif mode == "RGBA":
        flat = arr[..., :3].astype(np.float64).mean(axis=2) / 255.0
    else:
        raise ImageFormatError(f"unsupported PNG mode {mode!r} in {name}")
    if flat.ndim != 2 or flat.shape[0] < 1 or flat.shape[1] < 1:
        raise ImageFormatError(f"zero-dimension PNG image in {name}")
    return GrayImage.from_array(flat)


def encode_pgm(img: GrayImage) -> bytes:
    """Encode as binary 8-bit PGM, quantizing intensities to round(v * 255)."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    raster = np.rint(img.pixels * 255.0).astype(np.uint8).tobytes()
    return header + raster


def save_pgm(img: GrayImage, path) -> None:
    Path(path).write_bytes(encode_pgm(img))


# ---------------------------------------------------------------------------
# Geometry

def downsample(img: GrayImage, target_w: int, target_h: int) -> GrayImage:
    """Resample to (target_w, target_h) by bilinear interpolation.

    Sample positions use pixel-center alignment, so equal source and target
    dimensions reproduce the input exactly and constant images stay constant.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {target_w}x{target_h}")
    src = img.pixels
    sh, sw = src.shape
    ys = np.clip((np.arange(target_h) + 0.5) * (sh / target_h) - 0.5, 0.0, sh - 1.0)
    xs = np.clip((np.arange(target_w) + 0.5) * (sw / target_w) - 0.5, 0.0, sw - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    out = (
        (1.0 - fy) * (1.0 - fx) * src[np.ix_(y0, x0)]
        + (1.0 - fy) * fx * src[np.ix_(y0, x1)]
        + fy * (1.0 - fx) * src[np.ix_(y1, x0)]
        + fy * fx * src[np.ix_(y1, x1)]
    )
    return GrayImage(width=target_w, height=target_h, pixels=np.clip(out, 0.0, 1.0))


def mean_subtract(img: GrayImage) -> PixelGrid:
    """Subtract the whole-image mean intensity from every pixel."""
    return PixelGrid.from_array(img.pixels - img.pixels.mean())


def crop(img: Union[GrayImage, PixelGrid], roi: Roi) -> Union[GrayImage, PixelGrid]:
    """Extract the ROI window; the result has the same type as the input."""
    roi.check_within(img.width, img.height)
    if isinstance(img, GrayImage):
        window = img.pixels[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w]
        return GrayImage(width=roi.w, height=roi.h, pixels=window)
    if isinstance(img, PixelGrid):
        window = img.values[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w]
        return PixelGrid(width=roi.w, height=roi.h, values=window)
    raise TypeError(f"crop expects GrayImage or PixelGrid, got {type(img).__name__}")
