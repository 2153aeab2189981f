"""Ground evaluator bound to the baked walkable field.

It chases a point well ahead of the player, detects when it has stopped making
progress, hops forward when stuck, and runs the corridor scan on the obstacle
layer purely for diagnosis. It never touches world objects.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .aerial import GROUND_BLOCKER_MASK, GROUND_RAY_MASK, ScanSegmentResult, scan_corridor, segment_count, segment_z
from .navsurface import sample_position

PROBE_AHEAD = 2.0
FORWARD_SEARCH_STEP = 0.25


@dataclass
class GroundAgentState:
    position: list[float]
    speed: float = 0.0
    velocity: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    target: list[float] | None = None
    holding: bool = False
    history: deque = field(default_factory=deque)  # (time, z) over the trailing stuck window
    cooldown_until: float = 0.0
    recoveries: int = 0
    unrecoverable: int = 0
    idle_until_version: int | None = None
    next_segment: int = 0
    segments_scanned: int = 0

    def to_dict(self) -> dict:
        return {"position": list(self.position), "speed": self.speed, "velocity": list(self.velocity),
                "target": None if self.target is None else list(self.target),
                "cooldown_until": self.cooldown_until, "recoveries": self.recoveries,
                "next_segment": self.next_segment}


def compute_speed(v_pz: float, v_boost: float = 5.0) -> float:
    return max(10.0, abs(v_pz)) + v_boost


def update_target(state) -> list[float] | None:
    """Look-ahead point snapped onto the field; keeps the previous target when sampling fails."""
    cfg = state.config
    ga: GroundAgentState = state.ground_agent
    px, py, pz = state.player.position
    raw = (px, cfg.tile_top_y, pz + cfg.d_lookahead_ground)
    snapped = sample_position(raw, state.nav.field, cfg.sample_radius)
    if snapped is None:
        if not ga.holding:
            state.emit("target-hold", {"requested_z": raw[2], "held": None if ga.target is None else ga.target[2]})
        ga.holding = True
        if ga.target is None:
            ga.target = list(raw)
        return ga.target
    ga.holding = False
    ga.target = list(snapped)
    return ga.target


def detect_stuck(ga: GroundAgentState, now: float, window: float = 1.0, z_threshold: float = 0.1,
                 speed_epsilon: float = 0.01) -> bool:
    """Stuck iff the trailing window is full, z moved less than the threshold, and speed is ~0, outside cooldown."""
    if now < ga.cooldown_until or not ga.history:
        return False
    t0, z0 = ga.history[0]
    if now - t0 < window - 1e-9:
        return False
    speed = sum(v * v for v in ga.velocity) ** 0.5
    return abs(ga.position[2] - z0) < z_threshold and speed < speed_epsilon


def _forward_search(field, x: float, z: float, limit: float):
    zz = z
    while zz <= limit:
        p = sample_position((x, 0.0, zz), field, FORWARD_SEARCH_STEP)
        if p is not None:
            return p
        zz += FORWARD_SEARCH_STEP
    return None


def recover(state) -> str:
    """Hop forward by the recovery step and re-snap; returns "recovered" or "unrecoverable"."""
    cfg = state.config
    ga: GroundAgentState = state.ground_agent
    field = state.nav.field
    x, y, z = ga.position
    from_z = z
    ahead = (x, y, z + cfg.recovery_step)
    p = sample_position(ahead, field, cfg.sample_radius)
    if p is None and field is not None:
        p = _forward_search(field, x, ahead[2], field.z_hi)
    ga.cooldown_until = state.time + cfg.recovery_cooldown
    ga.history.clear()
    ga.velocity = [0.0, 0.0, 0.0]
    if p is None:
        ga.unrecoverable += 1
        ga.idle_until_version = state.nav.bake_version
        state.metrics.on_recovery("unrecoverable")
        state.emit("recovery", {"status": "unrecoverable", "from_z": from_z, "to_z": from_z})
        return "unrecoverable"
    ga.position = [p[0], p[1], p[2]]
    ga.recoveries += 1
    state.metrics.on_recovery("recovered")
    state.emit("recovery", {"status": "recovered", "from_z": from_z, "to_z": p[2]})
    return "recovered"


def _steer_x(field, x: float, z_probe: float, want_x: float) -> float:
    runs = field.row_runs(z_probe)
    if not runs:
        return x
    home = [r for r in runs if r[0] <= x <= r[1]]
    if home:
        lo, hi = home[0]
    else:
        lo, hi = min(runs, key=lambda r: (min(abs(x - r[0]), abs(x - r[1])), -(r[1] - r[0])))
    margin = min(field.res / 2, (hi - lo) / 2)
    return min(max(want_x, lo + margin), hi - margin)


def step_agent(state) -> None:
    cfg = state.config
    ga: GroundAgentState = state.ground_agent
    field = state.nav.field
    now = state.time
    if ga.idle_until_version is not None:
        if state.nav.bake_version == ga.idle_until_version:
            ga.velocity = [0.0, 0.0, 0.0]
            return
        ga.idle_until_version = None
    ga.speed = compute_speed(state.player.velocity[2], cfg.v_boost_ground)
    target = update_target(state)
    x, y, z = ga.position
    budget = ga.speed * cfg.dt
    moved = (0.0, 0.0)
    if field is not None and target is not None:
        dz = min(budget, max(0.0, target[2] - z))
        want_x = _steer_x(field, x, z + PROBE_AHEAD, target[0])
        dx = max(-budget, min(budget, want_x - x))
        for cand in ((x + dx, z + dz), (x + dx, z), (x, z + dz)):
            if cand != (x, z) and field.walkable(*cand):
                moved = (cand[0] - x, cand[1] - z)
                break
    ga.position = [x + moved[0], field.surface_y(z + moved[1]) if field is not None else y, z + moved[1]]
    ga.velocity = [moved[0] / cfg.dt, 0.0, moved[1] / cfg.dt]

    hist = ga.history
    hist.append((now, ga.position[2]))
    while len(hist) > 1 and now - hist[1][0] >= cfg.stuck_window - 1e-9:
        hist.popleft()
    ahead = target is not None and target[2] - ga.position[2] > cfg.stuck_z_threshold
    if ahead and detect_stuck(ga, now, cfg.stuck_window, cfg.stuck_z_threshold, cfg.speed_epsilon):
        recover(state)


def update_ground(state) -> list[ScanSegmentResult]:
    from .aerial import classify_and_act

    cfg = state.config
    ga: GroundAgentState = state.ground_agent
    step_agent(state)
    results = []
    total = segment_count(cfg)
    while ga.next_segment < total and segment_z(cfg, ga.next_segment) <= ga.position[2]:
        k = ga.next_segment
        res = scan_corridor(state.colliders, segment_z(cfg, k), state.scan_geometry, agent="ground",
                            segment_index=k, ray_mask=GROUND_RAY_MASK, blocker_mask=GROUND_BLOCKER_MASK,
                            ground_y=cfg.tile_top_y)
        ga.next_segment += 1
        ga.segments_scanned += 1
        state.metrics.on_scan(res)
        state.emit("scan", res.event_payload())
        classify_and_act(state, res, auto_remove=False)
        results.append(res)
    return results
