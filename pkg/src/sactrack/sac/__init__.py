"""Switcher-aware classification: pair features, a from-scratch boosted-tree
classifier, and training-set generation from tracker output vs. ground truth."""

from .boosting import (
    BoostedModel,
    DecisionTree,
    DegenerateData,
    DimensionMismatch,
    TrainConfig,
    classify,
    classify_batch,
    load_model,
    propose_splits,
    save_model,
    train,
)
from .features import (
    FEATURE_PARTS,
    LengthMismatch,
    SwitcherQuery,
    TrainingSample,
    assemble_features,
    feature_length,
    find_switcher,
    swap_halves,
)
from .training import build_training_set, hungarian_match

__all__ = [
    "BoostedModel",
    "DecisionTree",
    "DegenerateData",
    "DimensionMismatch",
    "TrainConfig",
    "classify",
    "classify_batch",
    "load_model",
    "propose_splits",
    "save_model",
    "train",
    "FEATURE_PARTS",
    "LengthMismatch",
    "SwitcherQuery",
    "TrainingSample",
    "assemble_features",
    "feature_length",
    "find_switcher",
    "swap_halves",
    "build_training_set",
    "hungarian_match",
]
