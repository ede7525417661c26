"""Locate a query ROI inside retrieved images by sliding-dot-product
cross-correlation of mean-subtracted intensities.

Correlation is valid-mode only: the template must fit entirely inside the
target, so a target of H x W and a template of h x w give an
(H - h + 1) x (W - w + 1) map. Peaks mark candidate placements; this is
unnormalized correlation, so bright regions can dominate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import signal

from .imagecore import GrayImage, PixelGrid, Roi, crop, mean_subtract


@dataclass(frozen=True, eq=False)
class CorrelationMap:
    """Valid-mode correlation values; dimensions follow the size formula."""

    width: int
    height: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("correlation map must be at least 1x1")
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.shape != (self.height, self.width):
            raise ValueError(
                f"value shape {arr.shape} does not match {self.height}x{self.width}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CorrelationMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class RoiMatch:
    """The best-scoring placement of the query ROI inside one target."""

    target_image_id: str
    box: Roi
    score: float


@dataclass(frozen=True)
class RoiMatchFailure:
    """A target that could not be matched (e.g. smaller than the ROI)."""

    target_image_id: str
    reason: str


def cross_correlate(target: PixelGrid, template: PixelGrid) -> CorrelationMap:
    """Sliding dot product of the template over every valid placement.

    map(r, c) = sum over (i, j) of target(r + i, c + j) * template(i, j).
    Both inputs are expected to be mean-subtracted already.
    """
    if template.width > target.width or template.height > target.height:
        raise ValueError(
            f"template {template.width}x{template.height} exceeds "
            f"target {target.width}x{target.height}"
        )
    values = signal.correlate(target.values, template.values, mode="valid")
    return CorrelationMap(
        width=target.width - template.width + 1,
        height=target.height - template.height + 1,
        values=values,
    )


def best_match(corr: CorrelationMap) -> tuple[int, int, float]:
    """Coordinates (x, y) and value of the map maximum.

    Ties resolve to the smallest row, then the smallest column (argmax of
    the row-major scan).
    """
    flat_idx = int(np.argmax(corr.values))
    y, x = divmod(flat_idx, corr.width)
    return x, y, float(corr.values[y, x])


def roi_match(
    query: GrayImage,
    roi: Roi,
    targets: Sequence[tuple[str, GrayImage]],
) -> list[Union[RoiMatch, RoiMatchFailure]]:
    """Find the most correlated ROI-sized region in each target image.

    The template is the ROI cropped out of the mean-subtracted query; each
    target is mean-subtracted independently. Targets smaller than the ROI
    yield a failure record while the rest still match. Output order follows
    input order.
    """
    roi.check_within(query.width, query.height)
    template = crop(mean_subtract(query), roi)
    results: list[Union[RoiMatch, RoiMatchFailure]] = []
    for image_id, target in targets:
        if target.width < roi.w or target.height < roi.h:
            results.append(
                RoiMatchFailure(
                    target_image_id=image_id,
                    reason=(
                        f"target {target.width}x{target.height} is smaller than "
                        f"the {roi.w}x{roi.h} ROI"
                    ),
                )
            )
            continue
        corr = cross_correlate(mean_subtract(target), template)
        x, y, score = best_match(corr)
        results.append(
            RoiMatch(
                target_image_id=image_id,
                box=Roi(x=x, y=y, w=roi.w, h=roi.h),
                score=score,
            )
        )
    return results


def matches_to_json(results: Sequence[Union[RoiMatch, RoiMatchFailure]]) -> list[dict]:
    """Wire shape: boxes with scores for successes, error strings for failures."""
    out = []
    for r in results:
        if isinstance(r, RoiMatch):
            out.append(
                {
                    "target_image_id": r.target_image_id,
                    "x": r.box.x,
                    "y": r.box.y,
                    "w": r.box.w,
                    "h": r.box.h,
                    "score": r.score,
                }
            )
        else:
            out.append({"target_image_id": r.target_image_id, "error": r.reason})
    return out
