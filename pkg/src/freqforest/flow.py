"""Directional optical-flow statistics over body subregions.

Coordinates are image coordinates: x grows right, y grows down, so a
visually upward flow vector has negative v. A bounding box around the
actor is split into five subregions (head strip on top, then torso/arm
and leg rows, each split into image-left and image-right halves), and
the flow inside each subregion is binned into six 60-degree direction
arcs. Per frame this yields, for every subregion and bin, the
proportion of vectors in the bin and their mean magnitude.

All functions are pure; per-frame computations are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .kernels import directional_stats

REGION_NAMES = ("head", "left_torso_arm", "right_torso_arm", "left_leg", "right_leg")
REGION_INDEX = {name: i for i, name in enumerate(REGION_NAMES)}

N_BINS = 6
BIN_NAMES = ("right", "upper_right", "upper_left", "left", "lower_left", "lower_right")

# Direction bins as indices into the 6-arc partition, counterclockwise
# from the rightward arc. Arcs are half-open, centered on 0, 60, ...,
# 300 degrees (y-up angles); a boundary angle belongs to the
# counterclockwise bin.
RIGHT, UPPER_RIGHT, UPPER_LEFT, LEFT, LOWER_LEFT, LOWER_RIGHT = range(N_BINS)

# Bin pairs pooled into the per-subregion series catalog.
HORIZONTAL_BINS = (RIGHT, LEFT)
DIAG_RISING_BINS = (UPPER_RIGHT, LOWER_LEFT)
DIAG_FALLING_BINS = (LOWER_RIGHT, UPPER_LEFT)

_REGION_STATS = (
    "prop_horizontal",
    "prop_diag_rising",
    "prop_diag_falling",
    "mag_horizontal",
    "mag_diag_rising",
    "mag_diag_falling",
)

OVERALL_FEATURE = "box.mag_overall"

FLOW_FEATURE_NAMES = tuple(
    f"{region}.{stat}" for region in REGION_NAMES for stat in _REGION_STATS
) + (OVERALL_FEATURE,)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in image coordinates (top-left corner + size)."""

    x: float
    y: float
    w: float
    h: float
    frame: int = 0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"bounding box must have positive size, got w={self.w} h={self.h}")


@dataclass(frozen=True)
class Rect:
    """Rectangle stored by its edges so adjacent subregions share the
    exact same float boundary (keeps rasterization gap- and
    overlap-free)."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def x(self):
        return self.x0

    @property
    def y(self):
        return self.y0

    @property
    def w(self):
        return self.x1 - self.x0

    @property
    def h(self):
        return self.y1 - self.y0


@dataclass(frozen=True)
class SubregionLayout:
    """The five body subregions of a bounding box."""

    head: Rect
    left_torso_arm: Rect
    right_torso_arm: Rect
    left_leg: Rect
    right_leg: Rect

    def rects(self) -> tuple[Rect, ...]:
        """Rectangles in REGION_NAMES order."""
        return (self.head, self.left_torso_arm, self.right_torso_arm,
                self.left_leg, self.right_leg)


class FlowField:
    """Dense per-pixel flow (u, v) in pixels/frame, shape (height, width)."""

    def __init__(self, u, v):
        u = np.ascontiguousarray(u, dtype=np.float64)
        v = np.ascontiguousarray(v, dtype=np.float64)
        if u.ndim != 2 or v.shape != u.shape:
            raise ValueError(f"u and v must be matching 2-D grids, got {u.shape} and {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DataError("flow field contains non-finite components")
        self.u = u
        self.v = v

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


def partition_bbox(bbox: BoundingBox) -> SubregionLayout:
    """Split a bounding box into the five body subregions.

    The head strip spans the full width and the top 1/5 of the height;
    the torso/arm and leg rows are 2/5 of the height each and are split
    evenly into image-left and image-right halves.
    """
    x0 = float(bbox.x)
    y0 = float(bbox.y)
    x1 = x0 + float(bbox.w)
    y1 = y0 + float(bbox.h)
    xm = x0 + float(bbox.w) / 2.0
    y_head = y0 + float(bbox.h) / 5.0
    y_legs = y0 + 3.0 * float(bbox.h) / 5.0
    return SubregionLayout(
        head=Rect(x0, y0, x1, y_head),
        left_torso_arm=Rect(x0, y_head, xm, y_legs),
        right_torso_arm=Rect(xm, y_head, x1, y_legs),
        left_leg=Rect(x0, y_legs, xm, y1),
        right_leg=Rect(xm, y_legs, x1, y1),
    )


def bin_direction(u: float, v: float) -> int:
    """Direction bin index (RIGHT..LOWER_RIGHT) of a nonzero flow vector.

    The angle is measured y-up (v is negated), and the six arcs are
    half-open and centered on the axis directions: right covers
    [330, 360) + [0, 30), upper_right [30, 90), and so on. Zero vectors
    have no direction and must be skipped by the caller.
    """
    if u == 0.0 and v == 0.0:
        raise ValueError("zero vector has no direction bin")
    deg = math.degrees(math.atan2(-v, u)) + 30.0
    if deg < 0.0:
        deg += 360.0
    b = int(deg / 60.0)
    return 5 if b > 5 else b


def _iround(value: float) -> int:
    return int(math.floor(value + 0.5))


def rasterize_layout(layout: SubregionLayout, width: int, height: int) -> np.ndarray:
    """Region-id grid for a flow field: -1 outside, else REGION_NAMES
    index. Rectangle edges are rounded to the nearest integer pixel and
    clipped to the field."""
    grid = np.full((height, width), -1, dtype=np.int32)
    for idx, rect in enumerate(layout.rects()):
        px0 = min(max(_iround(rect.x0), 0), width)
        px1 = min(max(_iround(rect.x1), 0), width)
        py0 = min(max(_iround(rect.y0), 0), height)
        py1 = min(max(_iround(rect.y1), 0), height)
        if px0 < px1 and py0 < py1:
            grid[py0:py1, px0:px1] = idx
    return grid


@dataclass(frozen=True)
class FlowStats:
    """Per-frame directional statistics for the five subregions.

    ``proportions[r, b]`` is the share of the subregion's nonzero
    vectors falling in bin ``b`` (zeros when the subregion has no
    nonzero vectors); ``mean_magnitudes[r, b]`` the mean magnitude of
    the bin's vectors. The raw counts and magnitude sums are kept so
    bins can be pooled exactly.
    """

    counts: np.ndarray          # (5, 6) int64, nonzero vectors per bin
    magnitude_sums: np.ndarray  # (5, 6) float64
    pixels: np.ndarray          # (5,) int64, all pixels incl. zero vectors
    proportions: np.ndarray     # (5, 6) float64
    mean_magnitudes: np.ndarray  # (5, 6) float64
    overall_magnitude: float    # mean over every pixel in the box

    @property
    def nonzero(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def proportion(self, region: str, bin_index: int) -> float:
        return float(self.proportions[REGION_INDEX[region], bin_index])

    def mean_magnitude(self, region: str, bin_index: int) -> float:
        return float(self.mean_magnitudes[REGION_INDEX[region], bin_index])


def flow_stats(flow: FlowField, layout: SubregionLayout) -> FlowStats:
    """Bin the flow inside each subregion and summarize it.

    Zero vectors are excluded from binning (their direction is
    undefined) but still count toward the overall box mean magnitude.
    Subregions partially outside the field are clipped; a layout with
    no pixels inside the field at all is a data error.
    """
    grid = rasterize_layout(layout, flow.width, flow.height)
    pixels, counts, mag_sums = directional_stats(flow.u, flow.v, grid, len(REGION_NAMES))
    if int(pixels.sum()) == 0:
        raise DataError("subregion layout lies entirely outside the flow field")

    nonzero = counts.sum(axis=1)
    denom = np.where(nonzero > 0, nonzero, 1).astype(np.float64)
    proportions = counts / denom[:, None]
    mean_mags = np.divide(mag_sums, counts, out=np.zeros_like(mag_sums), where=counts > 0)
    overall = float(mag_sums.sum() / pixels.sum())
    return FlowStats(
        counts=counts,
        magnitude_sums=mag_sums,
        pixels=pixels,
        proportions=proportions,
        mean_magnitudes=mean_mags,
        overall_magnitude=overall,
    )


def _pooled_magnitude(stats: FlowStats, region_idx: int, bins: tuple[int, int]) -> float:
    n = int(stats.counts[region_idx, bins[0]] + stats.counts[region_idx, bins[1]])
    if n == 0:
        return 0.0
    total = stats.magnitude_sums[region_idx, bins[0]] + stats.magnitude_sums[region_idx, bins[1]]
    return float(total / n)


def frame_flow_features(stats: FlowStats) -> dict[str, float]:
    """The 31 scalar flow features of one frame, keyed by series name."""
    out: dict[str, float] = {}
    for r, region in enumerate(REGION_NAMES):
        prop = stats.proportions[r]
        out[f"{region}.prop_horizontal"] = float(prop[RIGHT] + prop[LEFT])
        out[f"{region}.prop_diag_rising"] = float(prop[UPPER_RIGHT] + prop[LOWER_LEFT])
        out[f"{region}.prop_diag_falling"] = float(prop[LOWER_RIGHT] + prop[UPPER_LEFT])
        out[f"{region}.mag_horizontal"] = _pooled_magnitude(stats, r, HORIZONTAL_BINS)
        out[f"{region}.mag_diag_rising"] = _pooled_magnitude(stats, r, DIAG_RISING_BINS)
        out[f"{region}.mag_diag_falling"] = _pooled_magnitude(stats, r, DIAG_FALLING_BINS)
    out[OVERALL_FEATURE] = stats.overall_magnitude
    return out


def flow_feature_series(flows, boxes) -> dict[str, np.ndarray]:
    """Per-frame flow statistics assembled into the 31 named series.

    ``flows`` and ``boxes`` must be equal-length per-frame lists aligned
    by index. Every returned series has one value per frame.
    """
    if len(flows) != len(boxes):
        raise ValueError(f"frame mismatch: {len(flows)} flow fields but {len(boxes)} boxes")
    if len(flows) == 0:
        raise ValueError("no frames")
    values = np.zeros((len(flows), len(FLOW_FEATURE_NAMES)))
    for t, (flow, box) in enumerate(zip(flows, boxes)):
        feats = frame_flow_features(flow_stats(flow, partition_bbox(box)))
        values[t] = [feats[name] for name in FLOW_FEATURE_NAMES]
    return {name: values[:, i].copy() for i, name in enumerate(FLOW_FEATURE_NAMES)}
