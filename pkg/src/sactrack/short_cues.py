"""Short-term cues: single-object-tracker interface, the IoU feature between
tracked and detected boxes, and the tracking-quality update dynamics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .core import BoundingBox, Embedding, Tracklet, iou


class MissingTemplate(Exception):
    """Raised when a tracklet has no appearance template to search for."""


@dataclass(frozen=True)
class ShortTermResult:
    """Predicted location of a target in the next frame plus the tracker score."""

    track_box: BoundingBox
    score: float

    def __post_init__(self):
        object.__setattr__(self, "score", min(1.0, max(0.0, self.score)))


@dataclass(frozen=True)
class QualityParams:
    """Quality-update hyperparameters; defaults follow the reference setup."""

    decay: float = 0.95
    k: int = 16
    drop_threshold: float = 0.1
    output_threshold: float = 0.5


@dataclass(frozen=True)
class FrameContext:
    """Per-frame environment handed to a short-term provider.

    `embedder` maps (frame, box) to an appearance embedding; the simulator
    and any real feature extractor both fit this signature. Frame dimensions
    are advisory for providers that clip their search region.
    """

    frame: int
    embedder: Callable[[int, BoundingBox], Embedding]
    frame_w: float = float("inf")
    frame_h: float = float("inf")


class ShortTermProvider(Protocol):
    """Anything that can locate a tracklet's template in the next frame."""

    def track(self, tracklet: Tracklet, frame_ctx: FrameContext) -> ShortTermResult: ...


def short_feature(track_box: BoundingBox, det_box: BoundingBox) -> float:
    """Short-term affinity between the tracker-predicted box and a detection."""
    return iou(track_box, det_box)


def update_quality(
    q: float, matched: bool, iou_td: float, p: float, params: QualityParams
) -> float:
    """Advance the overall tracking quality by one frame.

    Matched targets move halfway toward iou_td * p; unmatched targets decay
    multiplicatively, with the tracker score raised to a high power so that
    low-confidence misses annihilate quality quickly.
    """
    p = min(1.0, max(0.0, p))
    iou_td = min(1.0, max(0.0, iou_td))
    if matched:
        q = (q + iou_td * p) / 2.0
    else:
        q = q * params.decay * p**params.k
    return min(1.0, max(0.0, q))


def reference_track(tracklet: Tracklet, frame_ctx: FrameContext) -> ShortTermResult:
    """Deterministic short-term stand-in: constant-velocity motion prediction
    scored by cosine similarity between the template and the appearance
    sampled at the predicted box.
    """
    if tracklet.template is None:
        raise MissingTemplate(f"tracklet {tracklet.id} has no template")
    frames = tracklet.frames()
    if not frames:
        raise ValueError(f"tracklet {tracklet.id} has no recorded positions")
    last = tracklet.positions[frames[-1]]
    if len(frames) >= 2:
        prev = tracklet.positions[frames[-2]]
        step = frames[-1] - frames[-2]
        dt = frame_ctx.frame - frames[-1]
        vx = (last.cx - prev.cx) / step
        vy = (last.cy - prev.cy) / step
        track_box = last.translated(vx * dt, vy * dt)
    else:
        track_box = last

    emb = frame_ctx.embedder(frame_ctx.frame, track_box)
    score = _cosine_clamped(tracklet.template, emb)
    return ShortTermResult(track_box=track_box, score=score)


class ReferenceTracker:
    """Stateless provider wrapper around reference_track; queries for
    distinct tracklets are safe to run concurrently."""

    def track(self, tracklet: Tracklet, frame_ctx: FrameContext) -> ShortTermResult:
        return reference_track(tracklet, frame_ctx)


def _cosine_clamped(a: Embedding, b: Embedding) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(np.dot(a, b)) / (na * nb)))
