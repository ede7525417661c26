"""Binary image codes and their distances.

Two code families share one container:

* RBC: concatenated, median-thresholded Radon projections of a square
  down-sampled image, one fragment per angle.
* CNNC: an activation vector thresholded at zero, one bit per dimension.

Bits are stored packed (most significant bit first within each byte, the
tail zero-padded), which is also the wire layout behind the lowercase-hex
serialization and what makes Hamming scans a popcount over XOR.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .imagecore import GrayImage, downsample


class CodeKind(str, Enum):
    CNNC = "CNNC"
    RBC = "RBC"


class CodeMismatchError(ValueError):
    """Raised when two codes of different length or kind are compared."""


@dataclass(frozen=True, eq=False)
class BitCode:
    """A fixed-length bit string with a kind tag and generation parameters."""

    packed: np.ndarray = field(repr=False)  # uint8, MSB-first, zero-padded tail
    length: int
    kind: CodeKind
    source_config: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.asarray(self.packed, dtype=np.uint8)
        if self.length < 0:
            raise ValueError("bit length must be non-negative")
        nbytes = (self.length + 7) // 8
        if arr.size != nbytes:
            raise ValueError(
                f"packed size {arr.size} does not match {nbytes} bytes for {self.length} bits"
            )
        pad = nbytes * 8 - self.length
        if pad and arr.size and (arr[-1] & ((1 << pad) - 1)):
            raise ValueError("padding bits past the code length must be zero")
        arr = np.array(arr, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "packed", arr)
        object.__setattr__(self, "source_config", dict(self.source_config))

    @classmethod
    def from_bits(
        cls,
        bits: Sequence[int] | np.ndarray,
        kind: CodeKind,
        source_config: Mapping[str, Any] | None = None,
    ) -> "BitCode":
        b = np.asarray(bits, dtype=np.uint8)
        if b.ndim != 1:
            raise ValueError(f"bits must be one-dimensional, got shape {b.shape}")
        if b.size and b.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(
            packed=np.packbits(b),
            length=int(b.size),
            kind=kind,
            source_config=source_config or {},
        )

    @classmethod
    def from_hex(
        cls,
        hex_string: str,
        length: int,
        kind: CodeKind,
        source_config: Mapping[str, Any] | None = None,
    ) -> "BitCode":
        try:
            raw = bytes.fromhex(hex_string)
        except ValueError as exc:
            raise ValueError(f"invalid hex code: {exc}") from exc
        nbytes = (length + 7) // 8
        if len(raw) != nbytes:
            raise ValueError(
                f"hex code holds {len(raw)} bytes, expected {nbytes} for {length} bits"
            )
        return cls(
            packed=np.frombuffer(raw, dtype=np.uint8),
            length=length,
            kind=kind,
            source_config=source_config or {},
        )

    @property
    def bits(self) -> np.ndarray:
        """The code as a read-only array of 0/1 values."""
        out = np.unpackbits(self.packed)[: self.length]
        out.setflags(write=False)
        return out

    def to_hex(self) -> str:
        return self.packed.tobytes().hex()

    def popcount(self) -> int:
        return int(np.bitwise_count(self.packed).sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitCode):
            return NotImplemented
        return (
            self.length == other.length
            and self.kind == other.kind
            and np.array_equal(self.packed, other.packed)
        )

    def __hash__(self) -> int:
        return hash((self.length, self.kind, self.packed.tobytes()))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"BitCode(kind={self.kind.value}, length={self.length}, hex={self.to_hex()[:16]}...)"


@dataclass(frozen=True, eq=False)
class ActivationVector:
    """A real-valued feature vector, e.g. network activations (default 1000-d)."""

    values: np.ndarray = field(repr=False)
    dimension: int = 1000

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValueError(f"activations must be one-dimensional, got shape {arr.shape}")
        if arr.size != self.dimension:
            object.__setattr__(self, "dimension", int(arr.size))
        if not np.all(np.isfinite(arr)):
            raise ValueError("activations must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, values: Sequence[float] | np.ndarray) -> "ActivationVector":
        arr = np.asarray(values, dtype=np.float64)
        return cls(values=arr, dimension=int(arr.size))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActivationVector):
            return NotImplemented
        return self.dimension == other.dimension and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.dimension, self.values.tobytes()))


@dataclass(frozen=True, eq=False)
class ProjectionVector:
    """One Radon projection: line-integral bins along a given angle."""

    angle: float
    bins: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.angle < 180.0):
            raise ValueError(f"projection angle must lie in [0, 180), got {self.angle}")
        arr = np.array(self.bins, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValueError("projection bins must be one-dimensional")
        if arr.size and arr.min() < 0.0:
            raise ValueError("projection bins must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "bins", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProjectionVector):
            return NotImplemented
        return self.angle == other.angle and np.array_equal(self.bins, other.bins)

    def __hash__(self) -> int:
        return hash((self.angle, self.bins.tobytes()))


# ---------------------------------------------------------------------------
# Radon projection (rotate-then-sum)

@lru_cache(maxsize=64)
def _rotation_gather(n: int, angle: float):
    """Flat gather indices and bilinear weights for rotating an n x n image.

    The destination pixel at (row, col) samples the source at the offset
    rotated by +angle degrees about the center, which rotates the image
    content by -angle. Out-of-bounds corners carry weight zero.
    """
    center = (n - 1) / 2.0
    rad = math.radians(angle)
    ct, st = math.cos(rad), math.sin(rad)
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    dx = cols - center
    dy = rows - center
    sx = (ct * dx - st * dy + center).ravel()
    sy = (st * dx + ct * dy + center).ravel()
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    indices = []
    weights = []
    for oy, ox, w in (
        (0, 0, (1.0 - fy) * (1.0 - fx)),
        (0, 1, (1.0 - fy) * fx),
        (1, 0, fy * (1.0 - fx)),
        (1, 1, fy * fx),
    ):
        yy = y0 + oy
        xx = x0 + ox
        inside = (yy >= 0) & (yy < n) & (xx >= 0) & (xx < n)
        flat = np.clip(yy, 0, n - 1) * n + np.clip(xx, 0, n - 1)
        indices.append(flat)
        weights.append(np.where(inside, w, 0.0))
    return tuple(indices), tuple(weights)


def _rotate_bilinear(values: np.ndarray, angle: float) -> np.ndarray:
    """Rotate square image content by -angle with zero padding."""
    n = values.shape[0]
    flat = values.ravel()
    indices, weights = _rotation_gather(n, float(angle))
    out = weights[0] * flat.take(indices[0])
    for idx, w in zip(indices[1:], weights[1:]):
        out += w * flat.take(idx)
    return out.reshape(n, n)


def radon_projection(img: GrayImage, angle: float) -> ProjectionVector:
    """Project a square image along one angle by rotate-then-column-sum.

    Multiples of 90 degrees reduce to exact index permutations, so the 0
    degree projection equals the column sums and 90 degrees the row sums,
    bit for bit.
    """
    if img.width != img.height:
        raise ValueError(f"radon projection needs a square image, got {img.width}x{img.height}")
    if not (0.0 <= angle < 180.0):
        raise ValueError(f"projection angle must lie in [0, 180), got {angle}")
    if angle == 0.0:
        # Exact permutation cases: column sums of the rotated image reduce to
        # plain axis sums of the source, in canonical summation order.
        bins = img.pixels.sum(axis=0)
    elif angle == 90.0:
        bins = img.pixels.sum(axis=1)
    else:
        bins = _rotate_bilinear(img.pixels, angle).sum(axis=0)
    # Bilinear weights are non-negative; clamp the occasional -0.0.
    return ProjectionVector(angle=float(angle), bins=np.maximum(bins, 0.0))


def binarize_projection(p: ProjectionVector) -> np.ndarray:
    """Threshold one projection at the median of its strictly positive bins.

    Bins >= the median map to 1. A projection with no positive bin yields
    all zeros.
    """
    bins = p.bins
    positive = bins[bins > 0.0]
    if positive.size == 0:
        return np.zeros(bins.size, dtype=np.uint8)
    threshold = float(np.median(positive))
    return (bins >= threshold).astype(np.uint8)


def radon_barcode(img: GrayImage, side: int = 192, angle_count: int = 16) -> BitCode:
    """Concatenate thresholded projections at equally spaced angles in [0, 180).

    The image is first down-sampled to side x side; each of the angle_count
    fragments holds side bits, so the code length is angle_count * side
    (3072 at the 192 / 16 defaults).
    """
    if angle_count < 1:
        raise ValueError(f"angle_count must be >= 1, got {angle_count}")
    if side < 2:
        raise ValueError(f"side must be >= 2, got {side}")
    small = downsample(img, side, side)
    fragments = []
    for i in range(angle_count):
        angle = i * (180.0 / angle_count)
        fragments.append(binarize_projection(radon_projection(small, angle)))
    bits = np.concatenate(fragments)
    return BitCode.from_bits(
        bits, CodeKind.RBC, {"side": side, "angle_count": angle_count}
    )


def binarize_activations(v: ActivationVector) -> BitCode:
    """Threshold activations at zero: strictly positive values become 1."""
    bits = (v.values > 0.0).astype(np.uint8)
    return BitCode.from_bits(bits, CodeKind.CNNC, {"dimension": v.dimension})


def fallback_descriptor(img: GrayImage, dim_side: int = 32) -> ActivationVector:
    """Built-in activation stand-in: mean-centered down-sampled intensities.

    Down-samples to dim_side x dim_side, subtracts the global mean, and
    flattens row-major, giving dimension dim_side squared (1024 by default).
    """
    if dim_side < 1:
        raise ValueError(f"dim_side must be >= 1, got {dim_side}")
    small = downsample(img, dim_side, dim_side)
    centered = small.pixels - small.pixels.mean()
    return ActivationVector.from_values(centered.ravel())


def hamming(a: BitCode, b: BitCode) -> int:
    """Number of differing bit positions between two same-kind, same-length codes."""
    if a.kind != b.kind:
        raise CodeMismatchError(f"cannot compare {a.kind.value} against {b.kind.value}")
    if a.length != b.length:
        raise CodeMismatchError(f"code lengths differ: {a.length} vs {b.length}")
    return int(np.bitwise_count(np.bitwise_xor(a.packed, b.packed)).sum())


def pack_codes(codes: Sequence[BitCode]) -> np.ndarray:
    """Stack equal-length codes into an (n, nbytes) uint8 matrix for bulk scans."""
    if not codes:
        return np.zeros((0, 0), dtype=np.uint8)
    length = codes[0].length
    for c in codes:
        if c.length != length:
            raise CodeMismatchError(f"code lengths differ: {c.length} vs {length}")
    return np.stack([c.packed for c in codes])


def hamming_scan(matrix: np.ndarray, query: BitCode) -> np.ndarray:
    """Hamming distance from a query code to every row of a packed matrix."""
    if matrix.ndim != 2 or matrix.shape[1] != query.packed.size:
        raise CodeMismatchError(
            f"matrix row width {matrix.shape[1] if matrix.ndim == 2 else '?'} does not "
            f"match query ({query.packed.size} bytes)"
        )
    xored = np.bitwise_xor(matrix, query.packed[None, :])
    return np.bitwise_count(xored).sum(axis=1, dtype=np.int64)


def generate_barcodes(
    images: Iterable[GrayImage],
    side: int = 192,
    angle_count: int = 16,
    workers: int = 1,
) -> list[BitCode]:
    """Radon barcodes for a batch of images, optionally on a thread pool.

    Output order matches input order and is independent of worker count.
    """
    imgs = list(images)
    if workers <= 1 or len(imgs) <= 1:
        return [radon_barcode(im, side, angle_count) for im in imgs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda im: radon_barcode(im, side, angle_count), imgs))
