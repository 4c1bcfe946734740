"""Pair-feature assembly for the switcher-aware classifier.

A (tracklet, detection) pair is described by two identical halves: the
target's short-term feature followed by its K long-term features, then the
same layout for the potential switcher. A missing switcher contributes a
zero half.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..core import Tracklet, iou

# Halves per vector; full length is FEATURE_PARTS * (K + 1).
FEATURE_PARTS = 2


class LengthMismatch(Exception):
    """Raised when a long-feature list does not have exactly K entries."""


@dataclass(frozen=True)
class SwitcherQuery:
    """The other target most likely to steal this identity, if any overlaps."""

    switcher: Tracklet | None
    overlap: float

    @property
    def present(self) -> bool:
        return self.switcher is not None


@dataclass(frozen=True)
class TrainingSample:
    features: np.ndarray
    label: int


def feature_length(K: int) -> int:
    return FEATURE_PARTS * (K + 1)


def find_switcher(target: Tracklet, others: Iterable[Tracklet], t: int) -> SwitcherQuery:
    """Among the candidates, the one whose box at frame t overlaps the
    target's most. Absent when nothing overlaps; IoU ties go to the smallest
    tracklet id (candidates scanned in id order, strict improvement required).

    Callers choose the candidate set: the online pipeline passes currently
    active tracklets, offline training passes whatever was alive at t.
    """
    box = target.positions.get(t)
    if box is None:
        raise ValueError(f"target {target.id} has no position at frame {t}")
    best: Tracklet | None = None
    best_iou = 0.0
    for cand in sorted(others, key=lambda tr: tr.id):
        if cand.id == target.id:
            continue
        cbox = cand.positions.get(t)
        if cbox is None:
            continue
        overlap = iou(box, cbox)
        if overlap > best_iou:
            best, best_iou = cand, overlap
    return SwitcherQuery(switcher=best, overlap=best_iou)


def assemble_features(
    target_fs: float,
    target_long: Sequence[float],
    switcher_fs: float | None,
    switcher_long: Sequence[float] | None,
) -> np.ndarray:
    """[target_fs, target_long..., switcher_fs, switcher_long...] as float64.

    Both long lists must have the same length K; an absent switcher half is
    filled with zeros.
    """
    K = len(target_long)
    if switcher_long is not None and len(switcher_long) != K:
        raise LengthMismatch(
            f"switcher long features have length {len(switcher_long)}, expected {K}"
        )
    out = np.zeros(feature_length(K), dtype=np.float64)
    out[0] = target_fs
    out[1 : K + 1] = target_long
    if switcher_fs is not None:
        out[K + 1] = switcher_fs
    if switcher_long is not None:
        out[K + 2 :] = switcher_long
    return out


def swap_halves(features: np.ndarray) -> np.ndarray:
    """Exchange the target and switcher halves of a feature vector."""
    if features.size % FEATURE_PARTS != 0:
        raise LengthMismatch(f"feature length {features.size} is not even")
    half = features.size // FEATURE_PARTS
    return np.concatenate([features[half:], features[:half]])
