"""CLEAR-style tracking metrics plus globally-assigned identity scores.

Correspondence follows the usual protocol: pairs from the previous frame
persist while they stay above the IoU threshold, remaining boxes re-match by
Hungarian assignment on IoU, and an identity switch is counted whenever a
ground-truth object's matched prediction id differs from its last known one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import BoundingBox, Tracklet, iou
from .sac.training import hungarian_match


class OverlappingIds(Exception):
    """Raised when one id carries two boxes in the same frame."""


@dataclass(frozen=True)
class EvalReport:
    mota: float
    motp: float
    idf1: float
    idp: float
    idr: float
    fp: int
    fn: int
    ids: int
    gt_count: int

    def as_text(self) -> str:
        head = f"{'MOTA':>8} {'MOTP':>8} {'IDF1':>8} {'IDP':>8} {'IDR':>8} {'FP':>6} {'FN':>6} {'IDS':>6} {'GT':>6}"
        row = (
            f"{self.mota:>8.3f} {self.motp:>8.3f} {self.idf1:>8.3f} "
            f"{self.idp:>8.3f} {self.idr:>8.3f} {self.fp:>6d} {self.fn:>6d} "
            f"{self.ids:>6d} {self.gt_count:>6d}"
        )
        return head + "\n" + row

    def as_kv(self) -> str:
        return "\n".join(
            f"{k} = {getattr(self, k)}"
            for k in ("mota", "motp", "idf1", "idp", "idr", "fp", "fn", "ids", "gt_count")
        )


def _frame_boxes(tracklets: Sequence[Tracklet]) -> dict[int, dict[int, BoundingBox]]:
    out: dict[int, dict[int, BoundingBox]] = {}
    for tr in tracklets:
        for f, box in tr.positions.items():
            per = out.setdefault(f, {})
            if tr.id in per:
                raise OverlappingIds(f"id {tr.id} has two boxes in frame {f}")
            per[tr.id] = box
    return out


def clear_mot(
    gt: Sequence[Tracklet], pred: Sequence[Tracklet], iou_threshold: float = 0.5
) -> EvalReport:
    """MOTA / MOTP / FP / FN / IDS; identity fields are filled by evaluate()."""
    fp, fn, ids, gt_count, motp = _clear_counts(gt, pred, iou_threshold)
    mota = 1.0 - (fp + fn + ids) / gt_count
    return EvalReport(
        mota=mota, motp=motp, idf1=0.0, idp=0.0, idr=0.0,
        fp=fp, fn=fn, ids=ids, gt_count=gt_count,
    )


def _clear_counts(
    gt: Sequence[Tracklet], pred: Sequence[Tracklet], iou_threshold: float
) -> tuple[int, int, int, int, float]:
    gt_frames = _frame_boxes(gt)
    pred_frames = _frame_boxes(pred)
    gt_count = sum(len(v) for v in gt_frames.values())
    if gt_count == 0:
        raise ValueError("ground truth is empty")

    fp = fn = ids = 0
    dists: list[float] = []
    corr: dict[int, int] = {}
    last_pid: dict[int, int] = {}
    for f in sorted(set(gt_frames) | set(pred_frames)):
        g = gt_frames.get(f, {})
        p = pred_frames.get(f, {})

        pairs: dict[int, int] = {}
        for gid, pid in corr.items():
            if gid in g and pid in p and iou(g[gid], p[pid]) >= iou_threshold:
                pairs[gid] = pid
        rem_g = [gid for gid in sorted(g) if gid not in pairs]
        taken = set(pairs.values())
        rem_p = [pid for pid in sorted(p) if pid not in taken]
        if rem_g and rem_p:
            profit = [
                [
                    iou(g[gid], p[pid]) if iou(g[gid], p[pid]) >= iou_threshold else 0.0
                    for pid in rem_p
                ]
                for gid in rem_g
            ]
            for i, j in hungarian_match(profit).items():
                pairs[rem_g[i]] = rem_p[j]

        for gid, pid in pairs.items():
            if gid in last_pid and last_pid[gid] != pid:
                ids += 1
            last_pid[gid] = pid
            dists.append(1.0 - iou(g[gid], p[pid]))
        fp += len(p) - len(pairs)
        fn += len(g) - len(pairs)
        corr = pairs
    motp = sum(dists) / len(dists) if dists else 0.0
    return fp, fn, ids, gt_count, motp


def identity_metrics(
    gt: Sequence[Tracklet], pred: Sequence[Tracklet], iou_threshold: float = 0.5
) -> tuple[float, float, float]:
    """(IDF1, IDP, IDR) under the globally optimal id-to-id assignment."""
    gt_frames = _frame_boxes(gt)
    pred_frames = _frame_boxes(pred)
    gt_ids = sorted({tr.id for tr in gt})
    pred_ids = sorted({tr.id for tr in pred})
    total_gt = sum(len(v) for v in gt_frames.values())
    total_pred = sum(len(v) for v in pred_frames.values())

    idtp = 0
    if gt_ids and pred_ids:
        counts = [[0.0] * len(pred_ids) for _ in gt_ids]
        gpos = {g: i for i, g in enumerate(gt_ids)}
        ppos = {p: j for j, p in enumerate(pred_ids)}
        for f, g in gt_frames.items():
            p = pred_frames.get(f, {})
            for gid, gbox in g.items():
                for pid, pbox in p.items():
                    if iou(gbox, pbox) >= iou_threshold:
                        counts[gpos[gid]][ppos[pid]] += 1.0
        for i, j in hungarian_match(counts).items():
            idtp += int(counts[i][j])

    idp = idtp / total_pred if total_pred else 0.0
    idr = idtp / total_gt if total_gt else 0.0
    denom = total_gt + total_pred
    idf1 = 2.0 * idtp / denom if denom else 0.0
    return idf1, idp, idr


def evaluate(
    gt: Sequence[Tracklet], pred: Sequence[Tracklet], iou_threshold: float = 0.5
) -> EvalReport:
    """Full report: CLEAR counts plus identity metrics."""
    fp, fn, ids, gt_count, motp = _clear_counts(gt, pred, iou_threshold)
    idf1, idp, idr = identity_metrics(gt, pred, iou_threshold)
    return EvalReport(
        mota=1.0 - (fp + fn + ids) / gt_count,
        motp=motp,
        idf1=idf1,
        idp=idp,
        idr=idr,
        fp=fp,
        fn=fn,
        ids=ids,
        gt_count=gt_count,
    )
