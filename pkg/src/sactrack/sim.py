"""Deterministic synthetic scenarios: lane-based targets with scheduled
crossings, corrupted detections, and prototype-mixture appearance embeddings.

The generator stands in for video, detector, and feature-extraction CNNs.
Everything derives from (config, seed): per-frame detector corruption from
one master stream, per-query embedding noise from a stream keyed by (seed,
frame, quantized box), so any box query is reproducible in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import BoundingBox, Detection, Embedding, Tracklet, clip_box, iou

# Half-width in frames of the lane detour that realizes one crossing.
CROSSING_WINDOW = 10


class InvalidConfig(Exception):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n_targets: int = 5
    n_frames: int = 100
    frame_w: float = 640.0
    frame_h: float = 480.0
    speed_min: float = 1.0
    speed_max: float = 4.0
    crossings: int = 0
    fn_rate: float = 0.0
    fp_rate: float = 0.0
    jitter_sigma: float = 0.0
    conf_noise_sigma: float = 0.0
    embedding_dim: int = 32
    appearance_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_targets < 1 or self.n_frames < 1:
            raise InvalidConfig("need at least one target and one frame")
        for name in ("fn_rate", "fp_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1], got {v}")
        if self.jitter_sigma < 0 or self.conf_noise_sigma < 0 or self.appearance_noise_sigma < 0:
            raise InvalidConfig("noise sigmas must be non-negative")
        if not 0 < self.speed_min <= self.speed_max:
            raise InvalidConfig("need 0 < speed_min <= speed_max")
        if self.embedding_dim < self.n_targets + 1:
            raise InvalidConfig(
                f"embedding_dim {self.embedding_dim} cannot hold "
                f"{self.n_targets} orthonormal prototypes plus background"
            )
        if self.crossings > 0 and self.n_targets < 2:
            raise InvalidConfig("crossings need at least two targets")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")


@dataclass
class Scenario:
    cfg: ScenarioConfig
    gt: list[Tracklet]
    detections: dict[int, list[Detection]]
    prototypes: np.ndarray  # (n_targets + 1, dim); last row is background
    visibility: dict[tuple[int, int], float] = field(default_factory=dict)

    def embedder(self) -> Callable[[int, BoundingBox], Embedding]:
        return lambda frame, box: embedding_at(self, frame, box)

    def quality_scorer(self) -> Callable[[int, BoundingBox], float]:
        return lambda frame, box: oracle_quality(self, frame, box)


def _reflect(x: float, lo: float, hi: float, v: float) -> tuple[float, float]:
    if x < lo:
        return lo + (lo - x), -v
    if x > hi:
        return hi - (x - hi), -v
    return x, v


def _anchored_walk(
    anchor_f: int, anchor_x: float, v: float, lo: float, hi: float, n_frames: int
) -> dict[int, float]:
    """1-D constant-speed motion through (anchor_f, anchor_x), reflecting at
    [lo, hi], extended over frames 1..n_frames."""
    xs = {anchor_f: anchor_x}
    x, vv = anchor_x, v
    for f in range(anchor_f + 1, n_frames + 1):
        x, vv = _reflect(x + vv, lo, hi, vv)
        xs[f] = x
    x, vv = anchor_x, v
    for f in range(anchor_f - 1, 0, -1):
        x, vv = _reflect(x - vv, lo, hi, vv)
        xs[f] = x
    return xs


def _visibility_at(boxes: dict[int, BoundingBox], tid: int) -> float:
    """1 - largest fraction of this box covered by any nearer target; a
    target is nearer when its bottom edge is lower (ties to larger id)."""
    box = boxes[tid]
    if box.area <= 0:
        return 0.0
    worst = 0.0
    for oid, other in boxes.items():
        if oid == tid:
            continue
        if (other.y2, oid) <= (box.y2, tid):
            continue
        ix = min(box.x2, other.x2) - max(box.x, other.x)
        iy = min(box.y2, other.y2) - max(box.y, other.y)
        if ix > 0 and iy > 0:
            worst = max(worst, ix * iy / box.area)
    return 1.0 - min(worst, 1.0)


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Build ground truth, corrupted detections, prototypes, and visibility.

    Targets live in disjoint horizontal lanes (so zero scheduled crossings
    means no box ever overlaps another); each crossing sends one target
    through a partner's lane around a scheduled frame. At most
    n_targets // 2 crossings get a distinct mover; extra ones are dropped.
    """
    rng = np.random.default_rng(cfg.seed)
    n, F = cfg.n_targets, cfg.n_frames
    pad = 10.0

    # Orthonormal prototypes: n identities + 1 background row.
    gauss = rng.normal(size=(cfg.embedding_dim, n + 1))
    q, _ = np.linalg.qr(gauss)
    prototypes = np.ascontiguousarray(q[:, : n + 1].T)

    lane_h = (cfg.frame_h - 2 * pad) / n
    widths = rng.uniform(24.0, 40.0, size=n)
    heights = rng.uniform(min(30.0, lane_h * 0.5), max(lane_h * 0.8, 31.0), size=n)
    heights = np.minimum(heights, lane_h * 0.9)
    speeds = rng.uniform(cfg.speed_min, cfg.speed_max, size=n)
    dirs = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    x0 = rng.uniform(pad, cfg.frame_w - pad - widths)

    lane_y = [pad + i * lane_h + (lane_h - heights[i]) / 2.0 for i in range(n)]
    xs = [
        _anchored_walk(1, float(x0[i]), float(speeds[i] * dirs[i]), pad,
                       cfg.frame_w - pad - float(widths[i]), F)
        for i in range(n)
    ]
    ys: list[dict[int, float]] = [{f: lane_y[i] for f in range(1, F + 1)} for i in range(n)]

    n_cross = min(cfg.crossings, n // 2)
    cross_frames = [
        min(max(round((k + 1) * F / (n_cross + 1)), CROSSING_WINDOW + 2),
            F - CROSSING_WINDOW - 1)
        for k in range(n_cross)
    ]
    for k, fc in enumerate(cross_frames):
        a, b = 2 * k, 2 * k + 1
        # Mover b passes through a's position at fc with its own speed.
        bx = xs[a][fc] + 0.25 * float(widths[a])
        xs[b] = _anchored_walk(fc, bx, float(speeds[b] * dirs[b]), pad,
                               cfg.frame_w - pad - float(widths[b]), F)
        y_home, y_target = lane_y[b], lane_y[a] + 0.25 * float(heights[a])
        for f in range(max(1, fc - CROSSING_WINDOW), min(F, fc + CROSSING_WINDOW) + 1):
            frac = 1.0 - abs(f - fc) / CROSSING_WINDOW
            ys[b][f] = y_home + (y_target - y_home) * frac

    gt = []
    for i in range(n):
        positions = {
            f: BoundingBox(xs[i][f], ys[i][f], float(widths[i]), float(heights[i]))
            for f in range(1, F + 1)
        }
        gt.append(Tracklet(id=i + 1, positions=positions))

    visibility: dict[tuple[int, int], float] = {}
    for f in range(1, F + 1):
        frame_boxes = {tr.id: tr.positions[f] for tr in gt}
        for tid in frame_boxes:
            visibility[(f, tid)] = _visibility_at(frame_boxes, tid)

    detections: dict[int, list[Detection]] = {}
    for f in range(1, F + 1):
        dets = []
        for tr in gt:
            vis = visibility[(f, tr.id)]
            p_drop = min(1.0, cfg.fn_rate * (2.0 - vis))
            if rng.uniform() < p_drop:
                continue
            b = tr.positions[f]
            if cfg.jitter_sigma > 0:
                dx, dy, dw, dh = rng.normal(0.0, cfg.jitter_sigma, size=4)
                b = BoundingBox(
                    b.x + dx, b.y + dy, max(b.w + 0.5 * dw, 4.0), max(b.h + 0.5 * dh, 4.0)
                )
                b = clip_box(b, cfg.frame_w, cfg.frame_h)
            conf = vis
            if cfg.conf_noise_sigma > 0:
                conf += rng.normal(0.0, cfg.conf_noise_sigma)
            dets.append(Detection(frame=f, box=b, confidence=min(1.0, max(0.0, conf))))
        for _ in range(n):
            if rng.uniform() < cfg.fp_rate:
                w = rng.uniform(20.0, 50.0)
                h = rng.uniform(30.0, 60.0)
                x = rng.uniform(0.0, cfg.frame_w - w)
                y = rng.uniform(0.0, cfg.frame_h - h)
                conf = rng.uniform(0.3, 0.8)
                dets.append(Detection(frame=f, box=BoundingBox(x, y, w, h), confidence=conf))
        detections[f] = dets

    return Scenario(cfg=cfg, gt=gt, detections=detections,
                    prototypes=prototypes, visibility=visibility)


def _query_rng(s: Scenario, frame: int, box: BoundingBox) -> np.random.Generator:
    # 2-decimal quantization keeps embeddings stable across file round-trips;
    # boxes arrive clipped, so every key entry is a non-negative int.
    key = [
        s.cfg.seed,
        frame,
        int(round(box.x * 100)),
        int(round(box.y * 100)),
        int(round(box.w * 100)),
        int(round(box.h * 100)),
    ]
    return np.random.default_rng(key)


def embedding_at(s: Scenario, frame: int, box: BoundingBox) -> Embedding:
    """Prototype mixture weighted by overlap, noise scaled by occlusion.

    The mixture over identity prototypes is weighted by each identity's
    overlap fraction of the query box, normalized to unit length; Gaussian
    noise is added with sigma * (1 - visibility of the dominant identity).
    A box covering no identity returns the background prototype, treated as
    fully unoccluded-less (visibility 0, so full noise).
    """
    box = clip_box(box, s.cfg.frame_w, s.cfg.frame_h)
    weights = []
    for tr in s.gt:
        gt_box = tr.positions.get(frame)
        if gt_box is None or box.area <= 0:
            weights.append(0.0)
            continue
        ix = min(box.x2, gt_box.x2) - max(box.x, gt_box.x)
        iy = min(box.y2, gt_box.y2) - max(box.y, gt_box.y)
        weights.append(max(ix, 0.0) * max(iy, 0.0) / box.area)

    w = np.asarray(weights)
    if w.sum() <= 0.0:
        mix = s.prototypes[-1].copy()
        vis = 0.0
    else:
        mix = w @ s.prototypes[:-1]
        mix = mix / np.linalg.norm(mix)
        dominant = int(np.argmax(w))
        vis = s.visibility[(frame, s.gt[dominant].id)]

    sigma = s.cfg.appearance_noise_sigma * (1.0 - vis)
    if sigma > 0:
        mix = mix + _query_rng(s, frame, box).normal(0.0, sigma, size=mix.size)
    return mix


def oracle_quality(s: Scenario, frame: int, box: BoundingBox) -> float:
    """Best IoU-times-visibility against any identity; 0 on background."""
    box = clip_box(box, s.cfg.frame_w, s.cfg.frame_h)
    best = 0.0
    for tr in s.gt:
        gt_box = tr.positions.get(frame)
        if gt_box is None:
            continue
        best = max(best, iou(box, gt_box) * s.visibility[(frame, tr.id)])
    return best
