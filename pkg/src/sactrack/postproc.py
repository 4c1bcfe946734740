"""Detection pre-filtering and batch-mode identity clustering.

The offline pass splits each trajectory into appearance-consistent slices
(connected components under cosine distance), greedily re-merges slices
across trajectories from most to least similar under temporal and spatial
gates, and finally fills frame gaps by linear interpolation. Interpolated
frames carry no embeddings; when re-clustered they follow whichever
neighboring embedded frame is closest, which keeps the whole pass
idempotent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BoundingBox, Detection, Embedding, Tracklet, iou
from .long_cues import QualityScorer


@dataclass(frozen=True)
class ClusterConfig:
    sim_threshold: float = 0.3
    merge_feature_threshold: float = 0.3
    merge_max_frame_overlap: int = 0
    merge_max_gap: int = 30
    merge_max_center_dist: float = 1.0

    def __post_init__(self):
        if self.sim_threshold <= 0 or self.merge_feature_threshold <= 0:
            raise ValueError("similarity thresholds must be positive")
        if self.merge_max_frame_overlap < 0 or self.merge_max_gap <= 0:
            raise ValueError("frame gates out of range")
        if self.merge_max_center_dist <= 0:
            raise ValueError("merge_max_center_dist must be positive")


@dataclass
class Slice:
    """A run of frames from one tracklet that share appearance."""

    frames: list[int]
    boxes: dict[int, BoundingBox]
    embeddings: dict[int, Embedding]
    mean_embedding: Embedding

    @property
    def start(self) -> int:
        return self.frames[0]

    @property
    def end(self) -> int:
        return self.frames[-1]


def strict_nms(dets: Sequence[Detection], iou_threshold: float = 0.4) -> list[Detection]:
    """Greedy suppression, highest confidence first; a box overlapping any
    kept box above the threshold is dropped. Input order breaks score ties."""
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
    kept: list[Detection] = []
    for i in order:
        if all(iou(dets[i].box, k.box) <= iou_threshold for k in kept):
            kept.append(dets[i])
    return kept


def refine_confidence(dets: Sequence[Detection], scorer: QualityScorer) -> list[Detection]:
    """Replace each confidence with the scorer's view of the box, clamped."""
    out = []
    for d in dets:
        c = min(1.0, max(0.0, float(scorer(d.frame, d.box))))
        out.append(Detection(frame=d.frame, box=d.box, confidence=c))
    return out


def _normalized_mean(embs: Sequence[Embedding]) -> Embedding:
    m = np.mean(np.stack(embs), axis=0)
    n = float(np.linalg.norm(m))
    return m / n if n > 0 else m


def _cos_dist(a: Embedding, b: Embedding) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 1.0
    return 1.0 - float(np.dot(a, b)) / (na * nb)


def split_tracklet(t: Tracklet, cfg: ClusterConfig) -> list[Slice]:
    """Connected components of the tracklet's frames under embedding cosine
    distance < sim_threshold, ordered by earliest frame. Frames without an
    embedding (interpolated ones) join the component of the nearest embedded
    frame, earlier frame on ties."""
    anchors = sorted(f for f in t.positions if f in t.embedding_history)
    if not anchors:
        raise ValueError(f"tracklet {t.id} has no embeddings to cluster")
    E = np.stack([np.asarray(t.embedding_history[f], dtype=np.float64) for f in anchors])
    norms = np.linalg.norm(E, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    En = E / norms
    close = (1.0 - En @ En.T) < cfg.sim_threshold

    comp = [-1] * len(anchors)
    n_comp = 0
    for i in range(len(anchors)):
        if comp[i] >= 0:
            continue
        stack = [i]
        comp[i] = n_comp
        while stack:
            u = stack.pop()
            for v in range(len(anchors)):
                if comp[v] < 0 and close[u, v]:
                    comp[v] = n_comp
                    stack.append(v)
        n_comp += 1

    members: dict[int, list[int]] = {c: [] for c in range(n_comp)}
    for i, f in enumerate(anchors):
        members[comp[i]].append(f)
    for f in sorted(t.positions):
        if f in t.embedding_history:
            continue
        nearest = min(anchors, key=lambda a: (abs(a - f), a))
        members[comp[anchors.index(nearest)]].append(f)

    slices = []
    for c in sorted(members, key=lambda c: min(members[c])):
        frames = sorted(members[c])
        embs = {f: t.embedding_history[f] for f in frames if f in t.embedding_history}
        slices.append(
            Slice(
                frames=frames,
                boxes={f: t.positions[f] for f in frames},
                embeddings=embs,
                mean_embedding=_normalized_mean(list(embs.values())),
            )
        )
    return slices


@dataclass
class _Group:
    slices: list[Slice]
    frames: set[int]
    embs: list[Embedding]
    mean: Embedding


def _nearest_frames(a: _Group, b: _Group) -> tuple[int, int]:
    """The (frame in a, frame in b) pair with minimal separation; ties to the
    earliest frames."""
    fa = sorted(a.frames)
    fb = sorted(b.frames)
    best = (math.inf, fa[0], fb[0])
    j = 0
    for f in fa:
        while j + 1 < len(fb) and fb[j + 1] <= f:
            j += 1
        for cand in (fb[j], fb[j + 1] if j + 1 < len(fb) else None):
            if cand is None:
                continue
            key = (abs(f - cand), f, cand)
            if key < best:
                best = key
    return best[1], best[2]


def _gates_ok(a: _Group, b: _Group, cfg: ClusterConfig) -> bool:
    if len(a.frames & b.frames) > cfg.merge_max_frame_overlap:
        return False
    fa, fb = _nearest_frames(a, b)
    gap = abs(fa - fb)
    if gap > cfg.merge_max_gap:
        return False
    box_a = next(s.boxes[fa] for s in a.slices if fa in s.boxes)
    box_b = next(s.boxes[fb] for s in b.slices if fb in s.boxes)
    dist = math.hypot(box_a.cx - box_b.cx, box_a.cy - box_b.cy)
    diag = (box_a.diagonal + box_b.diagonal) / 2.0
    return dist <= cfg.merge_max_center_dist * diag * max(gap, 1)


def merge_slices(slices: Sequence[Slice], cfg: ClusterConfig) -> list[list[Slice]]:
    """Greedy agglomeration in ascending mean-embedding distance under the
    frame-overlap, gap, and spatial gates; leftovers stay as their own
    identities. Returns groups of the input slices."""
    groups = [
        _Group(
            slices=[s],
            frames=set(s.frames),
            embs=list(s.embeddings.values()),
            mean=s.mean_embedding,
        )
        for s in slices
    ]
    while True:
        best = None
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                d = _cos_dist(groups[i].mean, groups[j].mean)
                if d >= cfg.merge_feature_threshold:
                    continue
                if not _gates_ok(groups[i], groups[j], cfg):
                    continue
                if best is None or (d, i, j) < best:
                    best = (d, i, j)
        if best is None:
            break
        _, i, j = best
        a, b = groups[i], groups[j]
        merged = _Group(
            slices=a.slices + b.slices,
            frames=a.frames | b.frames,
            embs=a.embs + b.embs,
            mean=_normalized_mean(a.embs + b.embs),
        )
        groups[i] = merged
        del groups[j]
    return [g.slices for g in groups]


def interpolate(t: Tracklet) -> Tracklet:
    """Fill missing frames between recorded ones by per-coordinate linear
    interpolation; recorded frames pass through untouched."""
    frames = t.frames()
    out = Tracklet(
        id=t.id,
        positions=dict(t.positions),
        quality=t.quality,
        template=t.template,
        embedding_history=dict(t.embedding_history),
        state=t.state,
    )
    for f0, f1 in zip(frames, frames[1:]):
        if f1 - f0 <= 1:
            continue
        b0, b1 = t.positions[f0], t.positions[f1]
        for f in range(f0 + 1, f1):
            a = (f - f0) / (f1 - f0)
            out.positions[f] = BoundingBox(
                b0.x + (b1.x - b0.x) * a,
                b0.y + (b1.y - b0.y) * a,
                b0.w + (b1.w - b0.w) * a,
                b0.h + (b1.h - b0.h) * a,
            )
    return out


def postprocess(tracklets: Sequence[Tracklet], cfg: ClusterConfig) -> list[Tracklet]:
    """Split every trajectory into appearance slices, re-merge them into
    identities, renumber, and interpolate the result."""
    slices: list[Slice] = []
    for tr in sorted(tracklets, key=lambda tr: tr.id):
        slices.extend(split_tracklet(tr, cfg))
    groups = merge_slices(slices, cfg)
    groups.sort(key=lambda g: min(s.start for s in g))

    out = []
    for new_id, group in enumerate(groups, start=1):
        positions: dict[int, BoundingBox] = {}
        embeddings: dict[int, Embedding] = {}
        for s in sorted(group, key=lambda s: s.start):
            for f in s.frames:
                if f not in positions:
                    positions[f] = s.boxes[f]
            for f, e in s.embeddings.items():
                embeddings.setdefault(f, e)
        tr = Tracklet(id=new_id, positions=positions, embedding_history=embeddings)
        out.append(interpolate(tr))
    return out
