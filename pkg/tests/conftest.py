"""Shared fixtures: the crossing-heavy scenario family used by the
end-to-end comparisons, and a classifier trained on it once per session."""

from functools import lru_cache

from sactrack.long_cues import HistoryConfig
from sactrack.pipeline import TrackerConfig, default_providers, run_tracker_with_state
from sactrack.sac import TrainConfig, build_training_set, train
from sactrack.sim import ScenarioConfig, generate_scenario

TRAIN_SEEDS = (101, 102)
HELDOUT_SEED = 103


def crossing_config(seed: int) -> ScenarioConfig:
    return ScenarioConfig(
        n_targets=10,
        n_frames=150,
        crossings=5,
        fn_rate=0.1,
        jitter_sigma=2.0,
        conf_noise_sigma=0.05,
        appearance_noise_sigma=0.6,
        seed=seed,
    )


def run_baseline(scenario):
    """Bootstrap tracker pass (IoU scorer) whose raw state feeds training."""
    providers = default_providers(scenario.embedder(), scenario.quality_scorer())
    return run_tracker_with_state(scenario.detections, providers, None, TrackerConfig())


def training_samples(seed: int):
    scenario = generate_scenario(crossing_config(seed))
    _, state = run_baseline(scenario)
    return build_training_set(
        list(state.tracklets.values()),
        scenario.gt,
        HistoryConfig(),
        scenario.detections,
        scenario.embedder(),
        quality=scenario.quality_scorer(),
    )


@lru_cache(maxsize=1)
def ablation_model():
    """Classifier shared by the slow end-to-end tests; built on first use."""
    samples = []
    for seed in TRAIN_SEEDS:
        samples.extend(training_samples(seed))
    return train(samples, TrainConfig(n_trees=120, max_depth=4, learning_rate=0.1))
