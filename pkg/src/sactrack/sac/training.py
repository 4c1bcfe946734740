"""Training-set generation: align tracker hypotheses with ground truth by
per-frame Hungarian matching on IoU, then emit labeled pair features."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..core import BoundingBox, Detection, Embedding, Tracklet, iou
from ..long_cues import (
    HistoryConfig,
    QualityScorer,
    long_features,
    passthrough_quality,
    select_history,
)
from .features import TrainingSample, assemble_features, find_switcher, swap_halves

IOU_GATE = 0.6


def hungarian_match(profit) -> dict[int, int]:
    """Max-total-profit partial assignment rows -> columns.

    Entries <= 0 are inadmissible and never assigned; callers encode their
    admissibility threshold by zeroing entries below it.
    """
    P = np.atleast_2d(np.asarray(profit, dtype=np.float64))
    if P.size == 0:
        return {}
    rows, cols = linear_sum_assignment(np.maximum(P, 0.0), maximize=True)
    return {int(r): int(c) for r, c in zip(rows, cols) if P[r, c] > 0.0}


def _match_ids(
    boxes_a: Sequence[BoundingBox], boxes_b: Sequence[BoundingBox], gate: float
) -> dict[int, int]:
    """Index assignment a -> b admitting only pairs with IoU strictly above gate."""
    if not boxes_a or not boxes_b:
        return {}
    profit = np.zeros((len(boxes_a), len(boxes_b)))
    for i, ba in enumerate(boxes_a):
        for j, bb in enumerate(boxes_b):
            v = iou(ba, bb)
            if v > gate:
                profit[i, j] = v
    return hungarian_match(profit)


def _predict_box(tracklet: Tracklet, t: int, target: int) -> BoundingBox:
    """Constant-velocity extrapolation of the tracklet to frame `target`
    using its last two recorded frames at or before t."""
    frames = [f for f in tracklet.frames() if f <= t]
    last = tracklet.positions[frames[-1]]
    if len(frames) < 2:
        return last
    prev = tracklet.positions[frames[-2]]
    step = frames[-1] - frames[-2]
    dt = target - frames[-1]
    vx = (last.cx - prev.cx) / step
    vy = (last.cy - prev.cy) / step
    return last.translated(vx * dt, vy * dt)


def build_training_set(
    tracker_output: Sequence[Tracklet],
    gt: Sequence[Tracklet],
    cfg: HistoryConfig,
    detections_by_frame: Mapping[int, Sequence[Detection]],
    embedder: Callable[[int, BoundingBox], Embedding],
    quality: QualityScorer = passthrough_quality,
    iou_gate: float = IOU_GATE,
    gating_scale: float = 2.0,
    sample_mode: str = "all",
    seed: int = 0,
) -> list[TrainingSample]:
    """Emit (features, label) pairs from a baseline tracker run.

    Per frame t, hypotheses and GT are matched by IoU (admissible above
    iou_gate). A hypothesis is usable when its K anchor frames
    {t, t-delta, ..., t-(K-1)delta} agree on one GT id with at most one
    anchor unassociated. For each usable hypothesis, detections at t+1
    within gating_scale box diagonals of the predicted position yield one
    sample each (label 1 iff the detection covers the hypothesis' GT id);
    sample_mode="random" keeps a single seeded choice instead. Every
    positive sample also emits its target/switcher-swapped half as a
    negative when a switcher is present.
    """
    if sample_mode not in ("all", "random"):
        raise ValueError(f"unknown sample_mode {sample_mode!r}")
    rng = np.random.default_rng(seed)

    gt_list = sorted(gt, key=lambda tr: tr.id)
    hyp_list = sorted(tracker_output, key=lambda tr: tr.id)

    assoc_cache: dict[int, dict[int, int]] = {}

    def hyp_gt_at(frame: int) -> dict[int, int]:
        """hyp id -> gt id at this frame."""
        if frame not in assoc_cache:
            hyps = [tr for tr in hyp_list if frame in tr.positions]
            gts = [tr for tr in gt_list if frame in tr.positions]
            idx = _match_ids(
                [tr.positions[frame] for tr in hyps],
                [tr.positions[frame] for tr in gts],
                iou_gate,
            )
            assoc_cache[frame] = {hyps[i].id: gts[j].id for i, j in idx.items()}
        return assoc_cache[frame]

    samples: list[TrainingSample] = []
    det_frames = sorted(detections_by_frame)
    hist_cache: dict[tuple[int, int], object] = {}

    def history_at(tr: Tracklet, t: int):
        key = (tr.id, t)
        if key not in hist_cache:
            hist_cache[key] = select_history(tr, t, cfg, quality)
        return hist_cache[key]

    for next_frame in det_frames:
        t = next_frame - 1
        dets = detections_by_frame[next_frame]
        if not dets:
            continue
        det_gt = _match_ids(
            [d.box for d in dets],
            [tr.positions[t + 1] for tr in gt_list if (t + 1) in tr.positions],
            iou_gate,
        )
        gt_at_next = [tr.id for tr in gt_list if (t + 1) in tr.positions]
        det_gt_ids = {d: gt_at_next[j] for d, j in det_gt.items()}

        alive = [tr for tr in hyp_list if t in tr.positions]
        for target in alive:
            anchor_frames = [t - i * cfg.delta for i in range(cfg.K)]
            anchor_ids = [hyp_gt_at(f).get(target.id) for f in anchor_frames]
            matched = [a for a in anchor_ids if a is not None]
            if not matched or len(matched) < cfg.K - 1 or len(set(matched)) != 1:
                continue
            target_gt = matched[0]

            pred_box = _predict_box(target, t, t + 1)
            radius = gating_scale * target.positions[t].diagonal
            cand = [
                (d_idx, det)
                for d_idx, det in enumerate(dets)
                if math.hypot(det.box.cx - pred_box.cx, det.box.cy - pred_box.cy) <= radius
            ]
            if not cand:
                continue
            if sample_mode == "random":
                cand = [cand[int(rng.integers(len(cand)))]]

            switch = find_switcher(target, alive, t)
            hist_t = history_at(target, t)
            if switch.present:
                pred_box_s = _predict_box(switch.switcher, t, t + 1)
                hist_s = history_at(switch.switcher, t)

            for d_idx, det in cand:
                det_emb = embedder(t + 1, det.box)
                target_fs = iou(pred_box, det.box)
                target_long = long_features(hist_t, det_emb)
                if switch.present:
                    f = assemble_features(
                        target_fs,
                        target_long,
                        iou(pred_box_s, det.box),
                        long_features(hist_s, det_emb),
                    )
                else:
                    f = assemble_features(target_fs, target_long, None, None)
                label = int(det_gt_ids.get(d_idx) == target_gt)
                samples.append(TrainingSample(features=f, label=label))
                if label == 1 and switch.present:
                    samples.append(TrainingSample(features=swap_halves(f), label=0))
    return samples
