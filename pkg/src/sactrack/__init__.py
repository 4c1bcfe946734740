"""Multi-object tracking with short/long-term cues, a switcher-aware
boosted-tree matcher, min-cost-flow association, and offline clustering."""

from .core import BoundingBox, Detection, Embedding, Tracklet, clip_box, iou
from .long_cues import HistoryConfig, TrackletHistory, cosine_similarity, long_features, select_history
from .metrics import EvalReport, clear_mot, evaluate, identity_metrics
from .pipeline import (
    KalmanParams,
    Providers,
    TrackerConfig,
    TrackerState,
    run_tracker,
    run_tracker_with_state,
    track_step,
)
from .postproc import ClusterConfig, interpolate, postprocess, strict_nms
from .sac import BoostedModel, TrainConfig, TrainingSample, build_training_set, classify, train
from .short_cues import QualityParams, ReferenceTracker, ShortTermResult, update_quality
from .sim import Scenario, ScenarioConfig, embedding_at, generate_scenario, oracle_quality

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "Detection",
    "Embedding",
    "Tracklet",
    "clip_box",
    "iou",
    "HistoryConfig",
    "TrackletHistory",
    "cosine_similarity",
    "long_features",
    "select_history",
    "EvalReport",
    "clear_mot",
    "evaluate",
    "identity_metrics",
    "KalmanParams",
    "Providers",
    "TrackerConfig",
    "TrackerState",
    "run_tracker",
    "run_tracker_with_state",
    "track_step",
    "ClusterConfig",
    "interpolate",
    "postprocess",
    "strict_nms",
    "BoostedModel",
    "TrainConfig",
    "TrainingSample",
    "build_training_set",
    "classify",
    "train",
    "QualityParams",
    "ReferenceTracker",
    "ShortTermResult",
    "update_quality",
    "Scenario",
    "ScenarioConfig",
    "embedding_at",
    "generate_scenario",
    "oracle_quality",
    "__version__",
]
