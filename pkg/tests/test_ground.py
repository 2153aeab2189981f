from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from runnerpcg import RunConfig
from runnerpcg import ground
from runnerpcg.aerial import GROUND_BLOCKER_MASK, GROUND_RAY_MASK, ScanGeometry, scan_corridor
from runnerpcg.engine import new_run, step
from runnerpcg.geometry import Aabb, Collider, ColliderIndex, Layer
from runnerpcg.terrain import Tile


@given(st.floats(-100, 100))
def test_speed_floor_and_boost(v):
    s = ground.compute_speed(v)
    assert s >= 15.0
    assert s == max(10.0, abs(v)) + 5.0


def agent(history, z=10.0, velocity=(0.0, 0.0, 0.0), cooldown_until=0.0):
    return ground.GroundAgentState(position=[0.0, 0.0, z], velocity=list(velocity),
                                   history=deque(history), cooldown_until=cooldown_until)


def test_stuck_needs_a_full_window():
    assert not ground.detect_stuck(agent([(0.5, 10.0)]), now=1.0)
    assert ground.detect_stuck(agent([(0.0, 10.0)]), now=1.0)


def test_progress_or_motion_is_not_stuck():
    assert not ground.detect_stuck(agent([(0.0, 9.8)]), now=1.0)
    assert not ground.detect_stuck(agent([(0.0, 10.0)], velocity=(0.0, 0.0, 0.5)), now=1.0)


def test_cooldown_suppresses_detection():
    assert not ground.detect_stuck(agent([(0.0, 10.0)], cooldown_until=1.5), now=1.0)
    assert ground.detect_stuck(agent([(0.0, 10.0)], cooldown_until=1.0), now=1.0)


def test_recovery_hops_forward_and_arms_cooldown():
    cfg = RunConfig(rebake_latency=0)
    state = new_run(cfg)
    state.ground_agent.position = [0.0, 0.0, -20.0]
    state.tick = 50
    assert ground.recover(state) == "recovered"
    ga = state.ground_agent
    assert ga.position[2] == pytest.approx(-15.0)
    assert ga.cooldown_until == pytest.approx(state.time + cfg.recovery_cooldown)
    assert state.events[-1].kind == "recovery"


def test_recovery_without_walkable_ground_idles_until_rebake():
    state = new_run(RunConfig(rebake_latency=0))
    state.ground_agent.position = [0.0, 0.0, state.nav.field.z_hi - 1.0]
    assert ground.recover(state) == "unrecoverable"
    assert state.ground_agent.idle_until_version == state.nav.bake_version
    before = list(state.ground_agent.position)
    ground.step_agent(state)
    assert state.ground_agent.position == before


def test_ground_agent_never_edits_the_world():
    cfg = RunConfig(run_length=2000, seed=3)
    state = new_run(cfg)
    while state.distance < cfg.run_length:
        step(state)
    assert not any(e.kind == "removal" for e in state.events)
    ground_blockages = [e.payload for e in state.events if e.kind == "blockage" and e.payload["agent"] == "ground"]
    assert ground_blockages and not any(p["removed"] for p in ground_blockages)


def test_recoveries_respect_cooldown_in_runs():
    cfg = RunConfig(p_spawn=0, dt_spawn_min=4, dt_spawn_max=4, run_length=1500, rebake_latency=500)
    state = new_run(cfg)
    while state.distance < cfg.run_length:
        step(state)
    ticks = [e.tick for e in state.events if e.kind == "recovery"]
    assert len(ticks) >= 2
    assert all((b - a) * cfg.dt >= cfg.recovery_cooldown - 1e-9 for a, b in zip(ticks, ticks[1:]))


def test_agents_agree_on_obstacle_layer():
    idx = ColliderIndex()
    idx.add(Tile(1, 0.0, 96.0, 0, 0).collider((-7.1, 10.55)))
    idx.add(Collider(Aabb((0.0, 1.0, 15.0), (0.5, 1.0, 0.5)), Layer.OBSTACLES, 10))
    idx.add(Collider(Aabb((0.5, 1.0, 17.0), (0.5, 1.0, 0.5)), Layer.OTHER, 11))
    geom = ScanGeometry()
    a = scan_corridor(idx, 10.0, geom)
    g = scan_corridor(idx, 10.0, geom, agent="ground", ray_mask=GROUND_RAY_MASK, blocker_mask=GROUND_BLOCKER_MASK)
    assert set(g.blocker_ids) <= set(a.blocker_ids)
    assert g.blocker_ids == [10] and a.blocker_ids == [10, 11]


def test_target_holds_when_sampling_fails():
    state = new_run(RunConfig(rebake_latency=0))
    ga = state.ground_agent
    first = ground.update_target(state)
    assert first is not None
    state.nav.field = None
    held = ground.update_target(state)
    assert held == first and ga.holding
    assert state.events[-1].kind == "target-hold"
    n = len(state.events)
    ground.update_target(state)
    assert len(state.events) == n
