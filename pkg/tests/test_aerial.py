import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from runnerpcg import RunConfig
from runnerpcg.aerial import (ScanGeometry, _row_verdict, blocked_intervals, row_passable, scan_corridor,
                              segment_count, segment_z, smooth_damp)
from runnerpcg.engine import new_run, step
from runnerpcg.geometry import Aabb, Collider, ColliderIndex, Layer
from runnerpcg.terrain import Tile

GEOM = ScanGeometry()


def world(*boxes):
    idx = ColliderIndex()
    idx.add(Tile(1, 0.0, 96.0, 0, 0).collider((-7.1, 10.55)))
    for k, (x, z, hx, hz) in enumerate(boxes, start=100):
        idx.add(Collider(Aabb((x, 1.0, z), (hx, 1.0, hz)), Layer.OBSTACLES, k, f"box{k}"))
    return idx


def test_empty_lane_is_passable_with_early_exit():
    res = scan_corridor(world(), 10.0, GEOM)
    assert res.passable and res.blockers == []
    assert res.rays == 21 * GEOM.required_run == 861
    assert res.overlap_hits == 0


def test_centre_block_is_detected():
    res = scan_corridor(world((0.0, 15.0, 0.5, 0.5)), 10.0, GEOM)
    assert not res.passable
    assert res.blocker_ids == [100]
    assert res.first_blocked_row_z == pytest.approx(14.5)
    assert res.rays <= GEOM.ray_budget


def test_edge_obstacle_leaves_a_gap():
    # covers x <= -0.9: the remaining [-0.9, 1.075] strip is narrower than 2 m
    narrow = scan_corridor(world((-2.0, 15.0, 1.1, 0.5)), 10.0, GEOM)
    assert not narrow.passable
    # covers x <= -1.2 only, outside the swept strip
    clear = scan_corridor(world((-2.5, 15.0, 1.3, 0.5)), 10.0, GEOM)
    assert clear.passable


def test_hole_in_ground_blocks():
    idx = ColliderIndex()
    idx.add(Tile(1, 0.0, 12.0, 0, 0).collider((-7.1, 10.55)))
    res = scan_corridor(idx, 10.0, GEOM)
    assert not res.passable and res.blockers == []


def test_overlap_catches_objects_between_rows():
    res = scan_corridor(world((4.0, 15.0, 0.2, 0.1), (0.0, 15.25, 0.4, 0.05)), 10.0, GEOM)
    assert 101 in res.blocker_ids and 100 not in res.blocker_ids
    assert res.overlap_hits == 1


def test_ground_masks_ignore_other_layer():
    idx = world()
    idx.add(Collider(Aabb((0.0, 1.0, 15.0), (2.0, 1.0, 2.0)), Layer.OTHER, 500))
    aerial = scan_corridor(idx, 10.0, GEOM)
    ground = scan_corridor(idx, 10.0, GEOM, agent="ground", ray_mask=Layer.GROUND | Layer.OBSTACLES,
                           blocker_mask=Layer.OBSTACLES)
    assert not aerial.passable and aerial.blocker_ids == [500]
    assert ground.passable


def test_scan_leaves_world_untouched():
    idx = world((0.0, 15.0, 0.5, 0.5))
    before = sorted(c.owner_id for c in idx)
    scan_corridor(idx, 10.0, GEOM)
    assert sorted(c.owner_id for c in idx) == before


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.floats(-1.5, 1.5), st.floats(10, 20), st.floats(0.02, 1.2), st.floats(0.05, 1)),
                max_size=6))
def test_early_exit_does_not_change_verdict(boxes):
    idx = world(*boxes)
    fast = scan_corridor(idx, 10.0, GEOM)
    full = scan_corridor(idx, 10.0, GEOM, early_exit=False)
    assert fast.passable == full.passable
    assert fast.rays <= full.rays == GEOM.ray_budget
    assert set(fast.blocker_ids) <= set(full.blocker_ids)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.booleans(), min_size=44, max_size=44))
def test_row_verdict_equals_interval_rule(row):
    xs = GEOM.ray_xs()
    ok, fired = _row_verdict(row, GEOM.required_run)
    ref = row_passable(blocked_intervals(np.array(row), xs, GEOM.x_step), (xs[0], xs[-1]), GEOM.w_clear)
    assert ok == ref
    assert 1 <= fired <= 44


def test_row_passable_basic():
    assert row_passable([], (0.0, 2.0), 2.0)
    assert not row_passable([], (0.0, 1.99), 2.0)
    assert row_passable([(1.0, 1.0)], (0.0, 2.0), 2.0)
    assert not row_passable([(0.5, 0.6)], (0.0, 2.0), 2.0)
    assert row_passable([(-5.0, 0.0), (3.0, 9.0)], (-1.0, 4.0), 3.0)
    with pytest.raises(ValueError):
        row_passable([], (0.0, 1.0), 0.0)


@settings(max_examples=300, deadline=None)
@given(st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50)),
       st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50)),
       st.tuples(st.floats(-60, 60), st.floats(-60, 60), st.floats(-60, 60)),
       st.sampled_from([0.005, 0.02, 0.05]))
def test_smooth_damp_step_is_bounded(cur, tgt, vel, dt):
    out, v = smooth_damp(cur, tgt, vel, 0.3, 50.0, dt)
    assert math.dist(out, cur) <= 50.0 * dt + 1e-9
    # never ends further from the target than the clamp allows, never passes it
    assert math.dist(out, tgt) <= math.dist(cur, tgt) + 50.0 * dt + 1e-9
    assert all(math.isfinite(c) for c in out + v)


def test_smooth_damp_converges():
    pos, vel = [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]
    for _ in range(500):
        pos, vel = smooth_damp(pos, (3.0, 15.0, 40.0), vel, 0.3, 50.0, 0.02)
    assert pos == pytest.approx([3.0, 15.0, 40.0], abs=1e-6)


def test_segment_grid():
    cfg = RunConfig(run_length=10000)
    assert segment_count(cfg) == 1000
    assert segment_z(cfg, 0) == cfg.spawn_z and segment_z(cfg, 3) == cfg.spawn_z + 30


def test_segments_scanned_once_in_order():
    cfg = RunConfig(run_length=800, dt=0.05)
    state = new_run(cfg)
    while state.distance < cfg.run_length:
        step(state)
    idx = [e.payload["segment_index"] for e in state.events
           if e.kind == "scan" and e.payload["agent"] == "aerial"]
    assert idx == list(range(len(idx)))
    assert len(idx) == 80


def test_auto_remove_clears_reported_blockers():
    cfg = RunConfig(run_length=2000, seed=3, auto_remove=True)
    state = new_run(cfg)
    while state.distance < cfg.run_length:
        step(state)
    removals = [e.payload["id"] for e in state.events if e.kind == "removal"]
    assert removals
    assert not set(removals) & set(state.objects)
    assert state.metrics.B_removed <= state.metrics.B_detected
