import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sactrack.core import BoundingBox, Tracklet
from sactrack.short_cues import (
    FrameContext,
    MissingTemplate,
    QualityParams,
    ReferenceTracker,
    ShortTermResult,
    reference_track,
    short_feature,
    update_quality,
)

P = QualityParams()
unit = st.floats(0, 1, allow_nan=False)


def test_default_params():
    assert (P.decay, P.k, P.drop_threshold, P.output_threshold) == (0.95, 16, 0.1, 0.5)


def test_matched_update():
    assert update_quality(0.8, True, 0.5, 0.9, P) == pytest.approx(0.625, abs=0)


def test_unmatched_update():
    assert update_quality(0.8, False, 0.0, 1.0, P) == pytest.approx(0.76, abs=1e-15)


def test_drop_trace_from_full_quality():
    # two consecutive misses at p = 0.9 fall through the 0.1 retention floor
    q1 = update_quality(1.0, False, 0.0, 0.9, P)
    q2 = update_quality(q1, False, 0.0, 0.9, P)
    step = 0.95 * 0.9**16
    assert q1 == pytest.approx(step, abs=1e-12)
    assert q2 == pytest.approx(step * step, abs=1e-12)
    assert abs(q1 - 0.17604) < 1e-5
    assert abs(q2 - 0.03098) < 1e-5
    assert q1 > P.drop_threshold > q2


def test_score_clamped_before_power():
    assert update_quality(0.5, False, 0.0, 1.8, P) == pytest.approx(0.5 * 0.95)
    assert update_quality(0.5, False, 0.0, -3.0, P) == 0.0
    assert update_quality(0.5, True, 2.0, 2.0, P) == pytest.approx(0.75)


@given(unit, unit)
def test_unmatched_never_increases(q, p):
    assert update_quality(q, False, 0.0, p, P) <= q


@given(unit, unit, unit)
def test_matched_halves_distance_to_target(q, iou_td, p):
    target = iou_td * p
    out = update_quality(q, True, iou_td, p, P)
    assert abs(out - target) == pytest.approx(abs(q - target) / 2, abs=1e-12)


def test_result_score_clamped():
    b = BoundingBox(0, 0, 1, 1)
    assert ShortTermResult(b, 1.4).score == 1.0
    assert ShortTermResult(b, -0.1).score == 0.0


def test_short_feature_is_box_overlap():
    assert short_feature(BoundingBox(0, 0, 2, 2), BoundingBox(1, 1, 2, 2)) == pytest.approx(1 / 7)


def _tracklet(boxes, template):
    t = Tracklet(id=1, template=template)
    for f, b in boxes.items():
        t.positions[f] = b
    return t


def test_reference_track_constant_velocity():
    e = np.array([1.0, 0.0])
    t = _tracklet({1: BoundingBox(0, 0, 10, 10), 2: BoundingBox(5, 0, 10, 10)}, e)
    ctx = FrameContext(frame=3, embedder=lambda f, b: e)
    r = reference_track(t, ctx)
    assert r.track_box == BoundingBox(10, 0, 10, 10)
    assert r.score == 1.0
    # two-frame gap scales the step
    r = reference_track(t, FrameContext(frame=4, embedder=lambda f, b: e))
    assert r.track_box == BoundingBox(15, 0, 10, 10)


def test_reference_track_single_frame_holds_position():
    e = np.array([1.0, 0.0])
    t = _tracklet({5: BoundingBox(3, 4, 10, 10)}, e)
    r = ReferenceTracker().track(t, FrameContext(frame=6, embedder=lambda f, b: e))
    assert r.track_box == BoundingBox(3, 4, 10, 10)


def test_reference_track_score_is_clamped_cosine():
    template = np.array([1.0, 0.0])
    t = _tracklet({1: BoundingBox(0, 0, 10, 10)}, template)
    r = reference_track(t, FrameContext(frame=2, embedder=lambda f, b: np.array([1.0, 1.0])))
    assert r.score == pytest.approx(0.7071067811865475, abs=1e-12)
    # opposite appearance floors at zero rather than going negative
    r = reference_track(t, FrameContext(frame=2, embedder=lambda f, b: np.array([-1.0, 0.0])))
    assert r.score == 0.0


def test_reference_track_requires_template():
    t = _tracklet({1: BoundingBox(0, 0, 10, 10)}, None)
    with pytest.raises(MissingTemplate):
        reference_track(t, FrameContext(frame=2, embedder=lambda f, b: np.zeros(2)))
