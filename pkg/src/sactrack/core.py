"""Geometry primitives and the shared entity model used across the tracker."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Appearance embeddings are plain float arrays; the dimension is fixed per run.
Embedding = np.ndarray

ACTIVE = "active"
DROPPED = "dropped"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, top-left corner plus extents, in pixel units.

    Coordinates are continuous reals: interpolation and Kalman smoothing
    produce fractional positions. Zero-area boxes are legal, negative
    extents are not.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box extents: w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def diagonal(self) -> float:
        return math.hypot(self.w, self.h)

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)


@dataclass(frozen=True)
class Detection:
    """One detector output box; confidence is clamped to [0, 1] at ingestion."""

    frame: int
    box: BoundingBox
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "confidence", min(1.0, max(0.0, self.confidence)))


@dataclass
class Tracklet:
    """One tracked identity: per-frame boxes, quality, appearance record.

    `template` is the appearance reference the short-term tracker searches
    for; `embedding_history` stores one embedding per recorded frame so
    long-term features are extracted at most once per (tracklet, frame).
    """

    id: int
    positions: dict[int, BoundingBox] = field(default_factory=dict)
    quality: float = 1.0
    template: Embedding | None = None
    embedding_history: dict[int, Embedding] = field(default_factory=dict)
    state: str = ACTIVE

    def frames(self) -> list[int]:
        return sorted(self.positions)

    def first_frame(self) -> int:
        return min(self.positions)

    def last_frame(self) -> int:
        return max(self.positions)

    def box_at(self, frame: int) -> BoundingBox | None:
        return self.positions.get(frame)

    @property
    def is_active(self) -> bool:
        return self.state == ACTIVE


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when the union has no area."""
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def clip_box(b: BoundingBox, frame_w: float, frame_h: float) -> BoundingBox:
    """Intersect a box with the frame rectangle; may collapse to zero area."""
    x1 = min(max(b.x, 0.0), frame_w)
    y1 = min(max(b.y, 0.0), frame_h)
    x2 = min(max(b.x2, 0.0), frame_w)
    y2 = min(max(b.y2, 0.0), frame_h)
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)
