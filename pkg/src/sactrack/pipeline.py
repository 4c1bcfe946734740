"""The online tracker: per-frame cue extraction, switcher-aware scoring,
flow matching, tracklet lifecycle, and Kalman-smoothed emission.

Matching always runs on raw boxes; the Kalman filter only smooths what gets
emitted, so association semantics stay untouched by the smoother.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .assoc import AssociationResult, edges_from_scores, solve_matching
from .core import ACTIVE, DROPPED, BoundingBox, Detection, Embedding, Tracklet, iou
from .long_cues import HistoryConfig, QualityScorer, long_features, passthrough_quality, select_history
from .sac import BoostedModel, assemble_features, classify_batch, find_switcher
from .short_cues import (
    FrameContext,
    QualityParams,
    ReferenceTracker,
    ShortTermProvider,
    ShortTermResult,
    update_quality,
)

INITIAL_VELOCITY_VAR = 100.0


class NonMonotonicFrame(Exception):
    """Raised when track_step is called with a non-increasing frame index."""


@dataclass(frozen=True)
class KalmanParams:
    """Constant-velocity filter over [cx, cy, w, h, vcx, vcy].

    Process noise drives size and velocity only; positions move strictly
    through velocity, which is what makes the filter lock onto a constant
    velocity exactly in the noise-free limit.
    """

    process_noise: float = 1.0
    measurement_noise: float = 1.0

    def __post_init__(self):
        if self.process_noise <= 0 or self.measurement_noise <= 0:
            raise ValueError("Kalman noise parameters must be positive")


@dataclass
class KalmanState:
    x: np.ndarray
    P: np.ndarray


_F = np.eye(6)
_F[0, 4] = 1.0
_F[1, 5] = 1.0
_H = np.zeros((4, 6))
_H[0, 0] = _H[1, 1] = _H[2, 2] = _H[3, 3] = 1.0


def _box_to_obs(box: BoundingBox) -> np.ndarray:
    return np.array([box.cx, box.cy, box.w, box.h])


def _obs_to_box(z: np.ndarray) -> BoundingBox:
    w, h = max(float(z[2]), 0.0), max(float(z[3]), 0.0)
    return BoundingBox(float(z[0]) - w / 2.0, float(z[1]) - h / 2.0, w, h)


def kalman_init(box: BoundingBox, params: KalmanParams) -> KalmanState:
    x = np.zeros(6)
    x[:4] = _box_to_obs(box)
    P = np.zeros((6, 6))
    P[4, 4] = P[5, 5] = INITIAL_VELOCITY_VAR
    return KalmanState(x=x, P=P)


def kalman_smooth(
    k: KalmanState, observation: BoundingBox | None, params: KalmanParams
) -> tuple[KalmanState, BoundingBox]:
    """One predict step, plus an update when an observation is supplied."""
    q = params.process_noise**2
    Q = np.diag([0.0, 0.0, q, q, q, q])
    x = _F @ k.x
    P = _F @ k.P @ _F.T + Q
    if observation is not None:
        z = _box_to_obs(observation)
        R = np.eye(4) * params.measurement_noise**2
        S = _H @ P @ _H.T + R
        K = P @ _H.T @ np.linalg.inv(S)
        x = x + K @ (z - _H @ x)
        P = (np.eye(6) - K @ _H) @ P
    return KalmanState(x=x, P=P), _obs_to_box(x[:4])


@dataclass(frozen=True)
class TrackerConfig:
    quality: QualityParams = QualityParams()
    history: HistoryConfig = HistoryConfig()
    zeta_m: float = 0.05
    birth_confidence: float = 0.4
    birth_max_iou: float = 0.3
    kalman: KalmanParams = KalmanParams()
    # Inference-time cue masks for ablation runs: disabling long cues zeroes
    # the history-similarity columns, disabling the switcher zeroes its half.
    use_long_cues: bool = True
    use_switcher: bool = True


@dataclass
class Providers:
    """Cue sources the tracker runs against: a short-term tracker, an
    embedding query, and a quality scorer for history selection."""

    short: ShortTermProvider
    embedder: Callable[[int, BoundingBox], Embedding]
    quality: QualityScorer = passthrough_quality


def baseline_scorer(features: np.ndarray) -> float:
    """Bootstrap pair scorer used before any model exists: the short-term
    feature itself, kept inside (0, 1)."""
    return float(min(max(float(features[0]), 1e-6), 1.0 - 1e-6))


@dataclass
class TrackerState:
    tracklets: dict[int, Tracklet] = field(default_factory=dict)
    kalman: dict[int, KalmanState] = field(default_factory=dict)
    next_id: int = 1
    last_frame: int | None = None

    def active(self) -> list[Tracklet]:
        return [self.tracklets[i] for i in sorted(self.tracklets) if self.tracklets[i].is_active]


def _pair_scores(classifier, X: np.ndarray) -> np.ndarray:
    if classifier is None:
        classifier = baseline_scorer
    if isinstance(classifier, BoostedModel):
        return classify_batch(classifier, X)
    return np.array([float(classifier(row)) for row in X])


def track_step(
    state: TrackerState,
    frame: int,
    detections: Sequence[Detection],
    providers: Providers,
    classifier,
    cfg: TrackerConfig,
) -> list[tuple[int, BoundingBox]]:
    """Advance one frame; returns (tracklet id, smoothed box) emissions.

    classifier is a trained model, any callable mapping a feature vector to
    a score in (0, 1), or None for the bootstrap short-feature scorer.
    """
    if state.last_frame is not None and frame <= state.last_frame:
        raise NonMonotonicFrame(f"frame {frame} after {state.last_frame}")
    prev_frame = state.last_frame
    state.last_frame = frame

    # One embedding extraction per distinct (frame, box) query.
    memo: dict[tuple[int, BoundingBox], Embedding] = {}

    def embed(f: int, box: BoundingBox) -> Embedding:
        key = (f, box)
        if key not in memo:
            memo[key] = providers.embedder(f, box)
        return memo[key]

    ctx = FrameContext(frame=frame, embedder=embed)
    active = state.active()
    tids = [tr.id for tr in active]
    short_results = {tr.id: providers.short.track(tr, ctx) for tr in active}

    K = cfg.history.K
    edges = []
    if active and detections:
        histories = {
            tr.id: select_history(tr, frame, cfg.history, providers.quality) for tr in active
        }
        det_embs = [embed(frame, d.box) for d in detections]
        switchers = (
            {tr.id: find_switcher(tr, active, prev_frame) for tr in active}
            if prev_frame is not None
            else {}
        )

        rows = []
        for tr in active:
            sr = short_results[tr.id]
            sw = switchers.get(tr.id)
            s_tr = sw.switcher if sw is not None and sw.present else None
            for j, det in enumerate(detections):
                target_fs = iou(sr.track_box, det.box)
                target_long = long_features(histories[tr.id], det_embs[j])
                if s_tr is not None:
                    f = assemble_features(
                        target_fs,
                        target_long,
                        iou(short_results[s_tr.id].track_box, det.box),
                        long_features(histories[s_tr.id], det_embs[j]),
                    )
                else:
                    f = assemble_features(target_fs, target_long, None, None)
                rows.append(f)
        X = np.asarray(rows)
        if not cfg.use_long_cues:
            X[:, 1 : K + 1] = 0.0
            X[:, K + 2 :] = 0.0
        if not cfg.use_switcher:
            X[:, K + 1 :] = 0.0
        scores = _pair_scores(classifier, X).reshape(len(active), len(detections))
        edges = edges_from_scores(tids, scores, cfg.zeta_m)

    assoc = solve_matching(edges, tracklet_ids=tids, detection_indices=range(len(detections)))
    update_lifecycle(state, frame, assoc, short_results, detections, embed, cfg)

    out = []
    for tr in state.active():
        obs = tr.positions[frame]
        if tr.id in state.kalman:
            state.kalman[tr.id], smoothed = kalman_smooth(state.kalman[tr.id], obs, cfg.kalman)
        else:
            state.kalman[tr.id] = kalman_init(obs, cfg.kalman)
            smoothed = obs
        if tr.quality >= cfg.quality.output_threshold:
            out.append((tr.id, smoothed))
    return out


def update_lifecycle(
    state: TrackerState,
    frame: int,
    assoc: AssociationResult,
    short_results: Mapping[int, ShortTermResult],
    detections: Sequence[Detection],
    embed: Callable[[int, BoundingBox], Embedding],
    cfg: TrackerConfig,
) -> None:
    """Apply one frame of matches: position/template/quality updates, drops
    below the quality floor, and births from unclaimed detections."""
    for tid, didx in assoc.matches:
        tr = state.tracklets[tid]
        det = detections[didx]
        sr = short_results[tid]
        tr.quality = update_quality(
            tr.quality, True, iou(sr.track_box, det.box), sr.score, cfg.quality
        )
        tr.positions[frame] = det.box
        emb = embed(frame, det.box)
        tr.embedding_history[frame] = emb
        tr.template = emb

    for tid in assoc.unmatched_tracklets:
        tr = state.tracklets[tid]
        sr = short_results[tid]
        tr.positions[frame] = sr.track_box
        tr.embedding_history[frame] = embed(frame, sr.track_box)
        tr.quality = update_quality(tr.quality, False, 0.0, sr.score, cfg.quality)
        if tr.quality < cfg.quality.drop_threshold:
            tr.state = DROPPED
            state.kalman.pop(tid, None)

    for didx in assoc.unmatched_detections:
        det = detections[didx]
        if det.confidence < cfg.birth_confidence:
            continue
        current = [tr.positions[frame] for tr in state.tracklets.values() if tr.is_active]
        if any(iou(det.box, b) >= cfg.birth_max_iou for b in current):
            continue
        tid = state.next_id
        state.next_id += 1
        emb = embed(frame, det.box)
        state.tracklets[tid] = Tracklet(
            id=tid,
            positions={frame: det.box},
            quality=det.confidence,
            template=emb,
            embedding_history={frame: emb},
            state=ACTIVE,
        )


def run_tracker_with_state(
    detections_by_frame: Mapping[int, Sequence[Detection]],
    providers: Providers,
    classifier,
    cfg: TrackerConfig,
    frames: Sequence[int] | None = None,
) -> tuple[list[Tracklet], TrackerState]:
    """Run the online tracker over a frame range; returns the emitted
    trajectories (smoothed boxes, raw-box embeddings on emitted frames) and
    the final internal state, whose raw tracklets feed training-set
    generation."""
    if frames is None:
        frames = sorted(detections_by_frame)
    state = TrackerState()
    outputs: dict[int, Tracklet] = {}
    for frame in frames:
        emitted = track_step(
            state, frame, list(detections_by_frame.get(frame, ())), providers, classifier, cfg
        )
        for tid, box in emitted:
            if tid not in outputs:
                outputs[tid] = Tracklet(id=tid)
            outputs[tid].positions[frame] = box
            emb = state.tracklets[tid].embedding_history.get(frame)
            if emb is not None:
                outputs[tid].embedding_history[frame] = emb
    return [outputs[tid] for tid in sorted(outputs)], state


def run_tracker(
    detections_by_frame: Mapping[int, Sequence[Detection]],
    providers: Providers,
    classifier,
    cfg: TrackerConfig,
    frames: Sequence[int] | None = None,
) -> list[Tracklet]:
    outputs, _ = run_tracker_with_state(detections_by_frame, providers, classifier, cfg, frames)
    return outputs


def default_providers(embedder, quality: QualityScorer = passthrough_quality) -> Providers:
    return Providers(short=ReferenceTracker(), embedder=embedder, quality=quality)
