"""Long-term cues: quality-aware selection of history frames from a tracklet
and cosine appearance features against a candidate detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BoundingBox, Embedding, Tracklet


class EmptyTracklet(Exception):
    """Raised when history selection is asked about a tracklet with no
    recorded frame at or before the query frame."""


class ZeroVector(Exception):
    """Raised on cosine similarity with a zero-norm operand."""


# Maps (frame, box) to a quality score in [0, 1]. Deterministic for fixed
# inputs; the simulator's visibility oracle and a constant 1.0 both qualify.
QualityScorer = Callable[[int, BoundingBox], float]


def passthrough_quality(frame: int, box: BoundingBox) -> float:
    return 1.0


@dataclass(frozen=True)
class HistoryConfig:
    """How many history frames to keep (K) and the window stride (delta).

    delta is meaningful from roughly 10 to 20 frames at video rate; the
    defaults are what the rest of the system is tuned against.
    """

    K: int = 3
    delta: int = 15

    def __post_init__(self):
        if self.K < 1 or self.delta < 1:
            raise ValueError(f"K and delta must be >= 1, got K={self.K} delta={self.delta}")


@dataclass(frozen=True)
class TrackletHistory:
    """Selected history frame indices (most recent window first) and their
    embeddings, one per index."""

    indices: tuple[int, ...]
    embeddings: tuple[Embedding, ...]


def select_history(
    tracklet: Tracklet, t: int, cfg: HistoryConfig, q: QualityScorer
) -> TrackletHistory:
    """Pick one frame per window (t - i*delta, t - (i-1)*delta], i = 1..K,
    maximizing the quality score within each window.

    Windows older than the tracklet are padded by repeating the oldest frame
    that was actually selected, so the result always has exactly K entries.
    Ties inside a window resolve to the more recent frame.
    """
    frames = [f for f in tracklet.frames() if f <= t]
    if not frames:
        raise EmptyTracklet(f"tracklet {tracklet.id} has no frames at or before {t}")

    picks: list[int | None] = []
    for i in range(1, cfg.K + 1):
        lo = t - i * cfg.delta
        hi = t - (i - 1) * cfg.delta
        window = [f for f in frames if lo < f <= hi]
        if window:
            best = max(window, key=lambda f: (q(f, tracklet.positions[f]), f))
            picks.append(best)
        else:
            picks.append(None)

    selected = [p for p in picks if p is not None]
    pad = min(selected) if selected else frames[-1]
    indices = tuple(p if p is not None else pad for p in picks)
    embeddings = []
    for f in indices:
        emb = tracklet.embedding_history.get(f)
        if emb is None:
            raise EmptyTracklet(
                f"tracklet {tracklet.id} has no stored embedding for frame {f}"
            )
        embeddings.append(emb)
    return TrackletHistory(indices=indices, embeddings=tuple(embeddings))


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for zero-norm vectors")
    return float(np.dot(a, b)) / (na * nb)


def long_features(history: TrackletHistory, det_emb: Embedding) -> list[float]:
    """Cosine similarity of the detection against each selected history
    embedding, in history order."""
    return [cosine_similarity(emb, det_emb) for emb in history.embeddings]
