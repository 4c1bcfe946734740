import random

import numpy as np
import pytest

from _brute import best_matching, matching_cost, random_edges
from sactrack.assoc import (
    DEFAULT_ZETA_M,
    AssociationResult,
    MatchEdge,
    build_match_graph,
    edges_from_scores,
    solve_matching,
)
from sactrack.core import BoundingBox, Detection, Tracklet


def test_edge_cost():
    assert MatchEdge(1, 2, 0.9).cost == pytest.approx(0.1)
    assert DEFAULT_ZETA_M == 0.05


def _tracklet(tid, box, frame=1):
    t = Tracklet(id=tid)
    t.positions[frame] = box
    return t


def test_build_match_graph_thresholds_scores():
    t1 = _tracklet(1, BoundingBox(0, 0, 10, 10))
    t2 = _tracklet(2, BoundingBox(40, 0, 10, 10))
    dets = [Detection(1, BoundingBox(0, 0, 10, 10), 1.0), Detection(1, BoundingBox(41, 0, 10, 10), 1.0)]
    seen = []

    def scorer(tr, det):
        seen.append((tr.id, det.box.x))
        return 0.9 if abs(tr.positions[1].x - det.box.x) < 5 else 0.03

    edges = build_match_graph([t1, t2], dets, scorer)
    assert len(seen) == 4  # every pair scored exactly once
    assert {(e.tracklet_id, e.detection_index) for e in edges} == {(1, 0), (2, 1)}


def test_edges_from_scores_matrix():
    edges = edges_from_scores([7, 9], np.array([[0.9, 0.04], [0.06, 0.5]]))
    assert [(e.tracklet_id, e.detection_index, e.score) for e in edges] == [
        (7, 0, 0.9),
        (9, 0, pytest.approx(0.06)),
        (9, 1, 0.5),
    ]


def test_solver_prefers_cardinality_over_single_cheap_edge():
    edges = [
        MatchEdge(0, 0, 0.9),
        MatchEdge(0, 1, 0.6),
        MatchEdge(1, 0, 0.85),
        MatchEdge(1, 1, 0.1),
    ]
    res = solve_matching(edges)
    # taking both cheap-looking 0.9/0.85 edges is impossible; pairing
    # (0,1)+(1,0) keeps two matches at total cost 0.55
    assert res.matches == ((0, 1), (1, 0))
    assert res.unmatched_tracklets == ()
    assert res.unmatched_detections == ()


def test_solver_reports_unmatched_universe():
    res = solve_matching([MatchEdge(0, 0, 0.9)], tracklet_ids=[0, 1], detection_indices=[0, 1])
    assert res.matches == ((0, 0),)
    assert res.unmatched_tracklets == (1,)
    assert res.unmatched_detections == (1,)


def test_solver_empty():
    res = solve_matching([])
    assert res == AssociationResult((), (), ())
    res = solve_matching([], tracklet_ids=[3], detection_indices=[5])
    assert res.unmatched_tracklets == (3,)
    assert res.unmatched_detections == (5,)


def test_solver_matches_brute_force():
    rng = np.random.default_rng(42)
    for _ in range(60):
        edges = random_edges(rng)
        res = solve_matching(edges)
        count, cost = best_matching(edges)
        assert len(res.matches) == count
        assert matching_cost(edges, res.matches) == pytest.approx(cost, abs=1e-9)
        matched_t = [m[0] for m in res.matches]
        matched_d = [m[1] for m in res.matches]
        assert len(set(matched_t)) == len(matched_t)
        assert len(set(matched_d)) == len(matched_d)


def test_solver_invariant_to_edge_order():
    rng = np.random.default_rng(9)
    py_rng = random.Random(9)
    for _ in range(25):
        edges = random_edges(rng)
        base = solve_matching(edges)
        shuffled = list(edges)
        py_rng.shuffle(shuffled)
        assert solve_matching(shuffled) == base


def test_small_perturbations_keep_cardinality():
    rng = np.random.default_rng(17)
    for _ in range(25):
        edges = random_edges(rng, zeta=0.2)
        base = solve_matching(edges)
        jittered = [
            MatchEdge(e.tracklet_id, e.detection_index,
                      min(1.0, e.score + float(rng.uniform(-0.05, 0.05))))
            for e in edges
        ]
        assert all(e.score > DEFAULT_ZETA_M for e in jittered)
        assert len(solve_matching(jittered).matches) == len(base.matches)
