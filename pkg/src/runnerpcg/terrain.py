"""Tile streaming (speed-coupled spawn timer, proximity suspension, delayed cleanup) and theme cycling."""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import RunConfig
from .geometry import Aabb, Collider, Layer


@dataclass
class Tile:
    id: int
    z: float
    length: float
    theme_index: int
    spawned_tick: int
    top_y: float = 0.0
    destroy_deadline: float | None = None
    populate: bool = True

    @property
    def z_end(self) -> float:
        return self.z + self.length

    @property
    def center_z(self) -> float:
        return self.z + self.length / 2

    def collider(self, x_range: tuple[float, float], thickness: float = 1.0) -> Collider:
        lo = (x_range[0], self.top_y - thickness, self.z)
        hi = (x_range[1], self.top_y, self.z_end)
        return Collider(Aabb.from_bounds(lo, hi), Layer.GROUND, self.id, f"Ground Tile {self.id}")

    def to_dict(self) -> dict:
        return {"id": self.id, "z": self.z, "length": self.length, "theme": self.theme_index,
                "spawned_tick": self.spawned_tick, "destroy_deadline": self.destroy_deadline}


@dataclass
class ThemeState:
    current_index: int = 0
    next_change_z: float = 2000.0
    recent_stack: list[int] = field(default_factory=list)
    variant_count: int = 1
    shown: list[int] = field(default_factory=lambda: [0])

    def to_dict(self) -> dict:
        return {"current": self.current_index, "next_change_z": self.next_change_z,
                "stack": list(self.recent_stack), "variants": self.variant_count}


def spawn_interval(v_p: float, cfg: RunConfig) -> float:
    raw = cfg.dt_spawn_max - cfg.gamma * v_p
    return min(max(raw, cfg.dt_spawn_min), cfg.dt_spawn_max)


def frontier_z(state) -> float:
    """Anchor of the most recently spawned tile (z_g)."""
    return state.tiles[-1].z if state.tiles else state.config.spawn_z


def maybe_spawn_tile(state) -> Tile | None:
    cfg = state.config
    z_p = state.player.position[2]
    z_g = frontier_z(state)
    if z_g > z_p + cfg.suspend_ahead:
        return None
    if not state.time > state.last_spawn_time + spawn_interval(state.player_speed, cfg):
        return None
    tile = Tile(
        id=state.new_id(),
        z=z_g + cfg.tile_length,
        length=cfg.tile_length,
        theme_index=state.theme.current_index,
        spawned_tick=state.tick,
        top_y=cfg.tile_top_y,
    )
    state.add_tile(tile)
    state.last_spawn_time = state.time
    return tile


def cleanup_tiles(state) -> list[Tile]:
    """Arm the delayed destroy once the player is far enough past a tile; remove expired tiles."""
    cfg = state.config
    z_p = state.player.position[2]
    now = state.time
    removed = []
    for tile in list(state.tiles):
        if tile.destroy_deadline is None:
            if z_p > tile.z + cfg.cleanup_distance:
                tile.destroy_deadline = now + cfg.cleanup_delay
        elif now >= tile.destroy_deadline:
            state.remove_tile(tile)
            removed.append(tile)
            state.emit("tile-destroyed", {"tile_id": tile.id, "tile_z": tile.z})
    return removed


def pick_next_theme(theme: ThemeState, rng) -> int:
    """Uniform pick among variants not shown this cycle; never repeats the current one."""
    n = theme.variant_count
    if n <= 1:
        return theme.current_index
    if len(theme.recent_stack) >= n:
        theme.recent_stack = []
    candidates = [i for i in range(n) if i not in theme.recent_stack and i != theme.current_index]
    choice = candidates[int(rng.integers(len(candidates)))]
    theme.recent_stack.append(choice)
    return choice


def advance_theme(state) -> dict | None:
    theme: ThemeState = state.theme
    z_p = state.player.position[2]
    if z_p < theme.next_change_z:
        return None
    previous = theme.current_index
    theme.current_index = pick_next_theme(theme, state.rngs["terrain"])
    if theme.current_index not in theme.shown:
        theme.shown.append(theme.current_index)
    payload = {"from": previous, "to": theme.current_index, "z": theme.next_change_z}
    theme.next_change_z += state.config.theme_interval
    state.emit("theme-change", payload)
    return payload
