from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path


class InvalidConfig(ValueError):
    """Raised when a RunConfig violates one of its invariants."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    # clock / run
    dt: float = 0.02
    run_length: float = 10000.0
    seed: int = 1
    label: str = "EndlessRunner"

    # terrain
    tile_length: float = 96.0
    x_range: tuple[float, float] = (-7.1, 10.55)
    tile_top_y: float = 0.0
    dt_spawn_min: float = 0.5
    dt_spawn_max: float = 2.0
    gamma: float = 0.01
    suspend_ahead: float = 1000.0
    cleanup_distance: float = 500.0
    cleanup_delay: float = 5.0
    theme_interval: float = 2000.0

    # spawner
    p_spawn: float = 50.0
    clear_half_width: float = 2.0
    lane_center: float = 0.0
    z_jitter: float = 3.0
    despawn_distance: float = 50.0
    attempt_factor: int = 5
    catalog_path: str | None = None

    # player / pilot
    spawn_z: float = -45.0
    run_speed: float = 12.0
    side_speed: float = 6.0
    jump_force: float = 7.0
    jump_forward_boost: float = 2.0
    gravity: float = 9.81
    damping: float = 2.0
    decel_rate: float = 10.0
    ground_ray: float = 0.3
    fall_y: float = -8.0
    max_respawns: int = 9
    respawn_mode: str = "lane"
    player_half_extents: tuple[float, float, float] = (0.4, 0.9, 0.4)
    pilot_wander: float = 0.0
    pilot_wander_period: float = 2.0
    pilot_deadband: float = 0.1

    # navigation surface
    d_ahead: float = 600.0
    d_behind: float = 50.0
    nav_interval: float = 1.0
    nav_tile_count: int = 5
    nav_move_threshold: float = 50.0
    rebake_latency: int = 25
    nav_resolution: float = 0.25
    agent_radius: float = 0.5
    sample_radius: float = 5.0

    # aerial agent
    delta_z_aerial: float = 200.0
    aerial_dx: float = 0.0
    aerial_height: float = 15.0
    aerial_smooth_time: float = 0.3
    aerial_max_speed: float = 50.0
    auto_remove: bool = False

    # corridor scan geometry (shared by both agents)
    seg_length: float = 10.0
    row_gap: float = 0.5
    x_step: float = 0.05
    sweep_width: float = 2.15
    w_clear: float = 2.0

    # ground agent
    ground_agent: bool = True
    d_lookahead_ground: float = 300.0
    v_boost_ground: float = 5.0
    stuck_window: float = 1.0
    stuck_z_threshold: float = 0.1
    speed_epsilon: float = 0.01
    recovery_step: float = 5.0
    recovery_cooldown: float = 2.0

    def __post_init__(self) -> None:
        self.x_range = tuple(float(v) for v in self.x_range)
        self.player_half_extents = tuple(float(v) for v in self.player_half_extents)
        self.validate()

    @property
    def x_min(self) -> float:
        return self.x_range[0]

    @property
    def x_max(self) -> float:
        return self.x_range[1]

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise InvalidConfig("seed", "must be a non-negative integer")
        if not self.dt > 0:
            raise InvalidConfig("dt", "must be > 0")
        if len(self.x_range) != 2:
            raise InvalidConfig("x_range", "must be [x_min, x_max]")
        if not self.x_min < self.x_max:
            raise InvalidConfig("x_range", "x_min must be < x_max")
        if not 0.0 <= self.p_spawn <= 100.0:
            raise InvalidConfig("p_spawn", "must lie in [0, 100]")
        if self.dt_spawn_min > self.dt_spawn_max:
            raise InvalidConfig("dt_spawn_min", "must be <= dt_spawn_max")
        if not self.clear_half_width < (self.x_max - self.x_min) / 2:
            raise InvalidConfig("clear_half_width", "must be < (x_max - x_min) / 2")
        if self.respawn_mode not in ("lane", "spawn"):
            raise InvalidConfig("respawn_mode", "must be 'lane' or 'spawn'")
        if self.rebake_latency < 0:
            raise InvalidConfig("rebake_latency", "must be >= 0")
        for name in ("tile_length", "seg_length", "row_gap", "x_step", "nav_resolution",
                     "aerial_smooth_time", "aerial_max_speed"):
            if not getattr(self, name) > 0:
                raise InvalidConfig(name, "must be > 0")
        for name in ("run_length", "clear_half_width", "z_jitter", "d_ahead", "d_behind",
                     "delta_z_aerial", "d_lookahead_ground", "sweep_width", "w_clear",
                     "gamma", "theme_interval", "despawn_distance", "cleanup_distance",
                     "cleanup_delay", "suspend_ahead", "dt_spawn_min", "recovery_step",
                     "recovery_cooldown", "stuck_window", "sample_radius", "agent_radius",
                     "pilot_wander", "run_speed", "side_speed", "jump_force",
                     "jump_forward_boost", "nav_interval", "nav_move_threshold"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidConfig(name, "must be a finite value >= 0")
        if self.max_respawns < 0:
            raise InvalidConfig("max_respawns", "must be >= 0")

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update(changes)
        return RunConfig.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["x_range"] = list(self.x_range)
        data["player_half_extents"] = list(self.player_half_extents)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfig(unknown[0], "unknown config field")
        kwargs = dict(data)
        for key in ("x_range", "player_half_extents"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidConfig("<root>", "config must be a JSON object")
    return RunConfig.from_dict(data)
