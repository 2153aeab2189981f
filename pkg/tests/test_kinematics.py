import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from runnerpcg import kinematics as kin
from runnerpcg.geometry import ColliderIndex
from runnerpcg.terrain import Tile


def ground(top=0.0):
    idx = ColliderIndex()
    idx.add(Tile(1, -100.0, 400.0, 0, 0, top_y=top).collider((-7.1, 10.55)))
    return idx


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-2, 3))
def test_lerp_clamps_t(a, b, t):
    v = kin.lerp(a, b, t)
    assert min(a, b) - 1e-9 <= v <= max(a, b) + 1e-9
    if t <= 0:
        assert v == a


def test_running_sets_forward_speed():
    p = kin.PlayerState([0.0, 0.0, 0.0])
    kin.update_velocity(p, kin.PilotInput(run=True), 0.02)
    assert p.velocity[2] == 12.0 and p.running


def test_lateral_input_and_release():
    p = kin.PlayerState([0.0, 0.0, 0.0])
    kin.update_velocity(p, kin.PilotInput(h=-1), 0.02)
    assert p.velocity[0] == -6.0
    kin.update_velocity(p, kin.PilotInput(h=0), 0.02)
    assert p.velocity[0] == pytest.approx(-6.0 * math.exp(-0.04))


def test_jump_adds_forward_boost_once():
    p = kin.PlayerState([0.0, 0.0, 0.0])
    kin.update_velocity(p, kin.PilotInput(run=True, jump=True), 0.02)
    assert p.velocity[1] == 7.0 and p.velocity[2] == 14.0
    assert not p.grounded and p.jumping and p.jumps == 1
    kin.update_velocity(p, kin.PilotInput(run=True, jump=True), 0.02)
    assert p.jumps == 1
    assert p.velocity[1] == pytest.approx(7.0 - 9.81 * 0.02)


def test_landing_snaps_to_surface():
    idx = ground(0.0)
    p = kin.PlayerState([0.0, 0.1, 0.0], [0.0, -5.0, 0.0], grounded=False, jumping=True)
    kin.integrate(p, 0.05)
    assert p.position[1] < 0
    kin.settle_on_ground(p, idx, 0.05)
    assert p.grounded and not p.jumping
    assert p.position[1] == 0.0 and p.velocity[1] == 0.0


def test_rising_player_is_airborne():
    p = kin.PlayerState([0.0, 0.05, 0.0], [0.0, 3.0, 0.0])
    kin.settle_on_ground(p, ground(), 0.02)
    assert not p.grounded


def test_walking_off_the_end_falls():
    p = kin.PlayerState([0.0, 0.0, 301.0])
    kin.settle_on_ground(p, ground(), 0.02)
    assert not p.grounded
    assert not kin.ground_check(p, ground())


def test_respawn_to_target_and_score():
    p = kin.PlayerState([1.0, -9.0, 100.0], [3.0, -20.0, 12.0])
    _, out = kin.respawn_if_fallen(p, target=(0.0, 0.0, 100.0))
    assert out == "respawn"
    assert p.position == [0.0, 0.0, 100.0] and p.velocity == [0.0, 0.0, 0.0]
    assert kin.score(p) == 145.0


def test_above_fall_line_is_untouched():
    p = kin.PlayerState([0.0, -7.9, 0.0])
    assert kin.respawn_if_fallen(p) == (p, None)


@given(st.floats(-1e4, 1e4))
def test_score_never_negative(z):
    assert kin.score(kin.PlayerState([0.0, 0.0, z])) >= 0.0
