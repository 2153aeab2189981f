import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from runnerpcg import RunConfig
from runnerpcg.engine import new_run, step
from runnerpcg.terrain import ThemeState, maybe_spawn_tile, pick_next_theme, spawn_interval


@given(st.floats(0, 1000))
def test_spawn_interval_is_clamped(v):
    cfg = RunConfig()
    dt = spawn_interval(v, cfg)
    assert cfg.dt_spawn_min <= dt <= cfg.dt_spawn_max
    if v <= 0:
        assert dt == cfg.dt_spawn_max


def test_spawn_interval_shrinks_with_speed():
    cfg = RunConfig()
    assert spawn_interval(12.0, cfg) == 2.0 - 0.12
    assert spawn_interval(500.0, cfg) == 0.5


def test_tiles_are_contiguous_and_suspended_far_ahead():
    cfg = RunConfig(run_length=1500)
    state = new_run(cfg)
    while state.distance < cfg.run_length:
        step(state)
        zs = [t.z for t in state.tiles]
        assert all(b - a == cfg.tile_length for a, b in zip(zs, zs[1:]))
        # the newest tile anchor never runs more than one tile past the suspension distance
        assert zs[-1] <= state.player.position[2] + cfg.suspend_ahead + cfg.tile_length


def test_no_spawn_before_interval_elapses():
    state = new_run(RunConfig())
    state.tick = 1
    assert maybe_spawn_tile(state) is None


def test_cleanup_waits_for_the_delay():
    cfg = RunConfig(run_length=1500)
    state = new_run(cfg)
    armed, destroyed = {}, {}
    while state.distance < cfg.run_length:
        _, evs = step(state)
        for t in state.tiles:
            if t.destroy_deadline is not None:
                armed.setdefault(t.id, state.time)
        for e in evs:
            if e.kind == "tile-destroyed":
                destroyed[e.payload["tile_id"]] = state.time
    assert destroyed
    for tid, when in destroyed.items():
        assert when - armed[tid] >= cfg.cleanup_delay - 1e-9


def test_theme_never_repeats_and_cycles_through_all():
    theme = ThemeState(current_index=0, variant_count=4)
    rng = np.random.default_rng(3)
    seq = [0]
    for _ in range(40):
        nxt = pick_next_theme(theme, rng)
        assert nxt != seq[-1]
        seq.append(nxt)
        theme.current_index = nxt
    assert set(seq) == {0, 1, 2, 3}


def test_single_variant_keeps_theme():
    theme = ThemeState(current_index=0, variant_count=1)
    assert pick_next_theme(theme, np.random.default_rng(0)) == 0


def test_theme_changes_every_interval():
    cfg = RunConfig(run_length=4500)
    state = new_run(cfg)
    while state.distance < cfg.run_length:
        step(state)
    changes = [e.payload for e in state.events if e.kind == "theme-change"]
    assert [c["z"] for c in changes] == [2000.0, 4000.0]
    assert all(c["from"] != c["to"] for c in changes)
