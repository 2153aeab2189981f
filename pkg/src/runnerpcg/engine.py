"""Fixed-timestep world loop, seeded RNG streams and the event log.

One tick runs the subsystems in a fixed order: pilot input, kinematics,
terrain, objects, navigation surface, aerial agent, ground agent, encounter
check, metrics. That order is part of what makes a run replayable.
"""
from __future__ import annotations

import json
import time as _time
import zlib
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable

import numpy as np

from . import aerial as aerial_mod
from . import ground as ground_mod
from . import kinematics as kin
from . import navsurface, spawner, terrain
from .config import RunConfig
from .geometry import Aabb, ColliderIndex, Layer, ground_height, overlap_box
from .metrics import MetricsAccumulator, perf_summary, summarize
from .reporter import EPOCH


@dataclass
class SimEvent:
    tick: int
    seq: int
    kind: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"tick": self.tick, "seq": self.seq, "kind": self.kind, "payload": self.payload},
                          separators=(",", ":"), allow_nan=False)


def rng_stream(seed: int, label: str, *extra: int) -> np.random.Generator:
    """Independent generator keyed by (seed, label, extra...); labels hash with crc32 for stability."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(label.encode()), *extra)))


@dataclass
class WorldState:
    config: RunConfig
    catalog: list
    clock_origin: datetime = EPOCH
    tick: int = 0
    player: kin.PlayerState = None
    tiles: list = field(default_factory=list)
    objects: dict = field(default_factory=dict)
    colliders: ColliderIndex = None
    nav: navsurface.NavWindow = field(default_factory=navsurface.NavWindow)
    aerial: aerial_mod.AerialState = None
    ground_agent: ground_mod.GroundAgentState = None
    theme: terrain.ThemeState = None
    metrics: MetricsAccumulator = field(default_factory=MetricsAccumulator)
    reports: list = field(default_factory=list)
    rngs: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    last_spawn_time: float = 0.0
    player_speed: float = 0.0
    tiles_spawned: int = 0
    pending_population: list = field(default_factory=list)
    game_over: bool = False
    end_reason: str | None = None
    finished: bool = False
    scan_geometry: aerial_mod.ScanGeometry = None
    grid_size: int = 0
    wander_offset: float = 0.0
    obstacle_layer: Layer = Layer.OBSTACLES
    _next_id: int = 0
    _seq: int = 0

    @property
    def time(self) -> float:
        return self.tick * self.config.dt

    @property
    def distance(self) -> float:
        return kin.score(self.player)

    def new_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def emit(self, kind: str, payload: dict) -> SimEvent:
        ev = SimEvent(self.tick, self._seq, kind, payload)
        self._seq += 1
        self.events.append(ev)
        return ev

    def add_tile(self, tile: terrain.Tile) -> None:
        cfg = self.config
        self.tiles.append(tile)
        self.colliders.add(tile.collider(cfg.x_range))
        self.nav.tiles_since_bake += 1
        intended = spawner.intended_count(self.grid_size, cfg.p_spawn) if tile.populate else 0
        if tile.populate:
            self.pending_population.append((tile, self.tiles_spawned))
            self.tiles_spawned += 1
            self.metrics.on_tile(tile.id, intended)
        self.emit("tile-spawned", {"tile_id": tile.id, "z": tile.z, "theme": tile.theme_index,
                                   "populate": tile.populate, "intended": intended})

    def remove_tile(self, tile: terrain.Tile) -> None:
        for obj in [o for o in self.objects.values() if o.tile_id == tile.id]:
            self.remove_object(obj.id)
            self.emit("object-despawned", {"id": obj.id, "tile_z": obj.tile_z})
        self.tiles.remove(tile)
        self.colliders.remove(tile.id)

    def remove_object(self, oid: int):
        obj = self.objects.pop(oid, None)
        if obj is not None:
            self.colliders.remove(oid)
        return obj

    def to_dict(self) -> dict:
        """Serializable snapshot of everything that determines the future of the run."""
        return {
            "config": self.config.to_dict(),
            "tick": self.tick,
            "player": self.player.to_dict(),
            "tiles": [t.to_dict() for t in self.tiles],
            "objects": [o.to_dict() for o in self.objects.values()],
            "nav": self.nav.to_dict(),
            "aerial": self.aerial.to_dict(),
            "ground_agent": self.ground_agent.to_dict(),
            "theme": self.theme.to_dict(),
            "rngs": {k: g.bit_generator.state for k, g in sorted(self.rngs.items())},
            "last_spawn_time": self.last_spawn_time,
            "events": len(self.events),
            "reports": len(self.reports),
        }


def new_run(config: RunConfig, clock_origin: datetime = EPOCH, catalog=None) -> WorldState:
    config.validate()
    catalog = catalog if catalog is not None else spawner.load_catalog(config.catalog_path)
    state = WorldState(config=config, catalog=catalog, clock_origin=clock_origin)
    state.colliders = ColliderIndex(config.tile_length)
    state.scan_geometry = aerial_mod.ScanGeometry.from_config(config)
    state.grid_size = spawner.build_grid(config.x_range, config.clear_half_width, config.lane_center).N
    state.rngs = {"terrain": rng_stream(config.seed, "terrain"), "pilot": rng_stream(config.seed, "pilot")}
    state.theme = terrain.ThemeState(current_index=0, next_change_z=config.theme_interval,
                                     variant_count=spawner.variant_count(catalog))
    spawn = (config.lane_center, config.tile_top_y, config.spawn_z)
    state.player = kin.PlayerState(position=list(spawn), spawn_point=spawn)
    state.player.score = kin.score(state.player)
    for z in (-config.tile_length, 0.0):
        state.add_tile(terrain.Tile(state.new_id(), z, config.tile_length, 0, 0, config.tile_top_y, populate=False))
    state.aerial = aerial_mod.AerialState(position=[spawn[0], config.aerial_height, spawn[2]])
    state.ground_agent = ground_mod.GroundAgentState(position=list(spawn))
    job = navsurface.begin_rebake(state, "initial")
    job.done_tick = state.tick
    navsurface.complete_rebake(state)
    return state


# --- pilot -------------------------------------------------------------------

def pilot_input(state) -> kin.PilotInput:
    cfg = state.config
    target = cfg.lane_center
    if cfg.pilot_wander > 0:
        period = max(1, round(cfg.pilot_wander_period / cfg.dt))
        if (state.tick - 1) % period == 0:
            state.wander_offset = float(state.rngs["pilot"].uniform(-cfg.pilot_wander, cfg.pilot_wander))
        target += state.wander_offset
    err = target - state.player.position[0]
    h = 0 if abs(err) <= cfg.pilot_deadband else (1 if err > 0 else -1)
    return kin.PilotInput(run=True, h=h, jump=False)


# --- safety relocation ---------------------------------------------------------

def _player_box(cfg, x: float, y: float, z: float) -> Aabb:
    hx, hy, hz = cfg.player_half_extents
    return Aabb((x, y + hy, z), (hx, hy, hz))


def safe_lane_position(state, z: float) -> tuple[float, float, float]:
    """Lane-centre point at the nearest z' >= z where the player box touches no obstacle."""
    cfg = state.config
    x = cfg.lane_center
    y = cfg.tile_top_y
    for _ in range(1000):
        hits = overlap_box(_player_box(cfg, x, y, z), state.colliders, Layer.OBSTACLES)
        if not hits:
            break
        z = max(c.hi[2] for c in hits) + cfg.player_half_extents[2] + 1e-6
    g = ground_height(x, z, state.tiles, cfg.x_range)
    return (x, cfg.tile_top_y if g is None else g, z)


# --- pipeline stages -------------------------------------------------------------

def _kinematics(state) -> None:
    cfg = state.config
    p = state.player
    z_before = p.position[2]
    kin.update_velocity(p, pilot_input(state), cfg.dt, run_speed=cfg.run_speed, side_speed=cfg.side_speed,
                        jump_force=cfg.jump_force, jump_forward_boost=cfg.jump_forward_boost,
                        gravity=cfg.gravity, damping=cfg.damping, decel_rate=cfg.decel_rate)
    kin.integrate(p, cfg.dt)
    kin.settle_on_ground(p, state.colliders, cfg.dt, cfg.ground_ray)
    if p.position[1] < cfg.fall_y:
        target = safe_lane_position(state, p.position[2]) if cfg.respawn_mode == "lane" else None
        _, outcome = kin.respawn_if_fallen(p, fall_y=cfg.fall_y, max_respawns=cfg.max_respawns, target=target)
        if outcome == "respawn":
            state.metrics.falls += 1
            state.emit("respawn", {"cause": "fall", "respawns_used": p.respawns_used, "position": list(p.position)})
        elif outcome == "game-over":
            state.game_over = True
            state.end_reason = "game-over"
            state.emit("game-over", {"respawns_used": p.respawns_used, "position": list(p.position)})
    state.player_speed = abs(p.position[2] - z_before) / cfg.dt


def _populate(state) -> None:
    cfg = state.config
    K = spawner.intended_count(state.grid_size, cfg.p_spawn)
    for tile, ordinal in state.pending_population:
        grid = spawner.build_grid(cfg.x_range, cfg.clear_half_width, cfg.lane_center)
        rng = rng_stream(cfg.seed, "spawner", ordinal)
        objs, _ = spawner.place_objects(
            grid, K, tile, tile.theme_index, state.catalog, rng,
            lambda x, z: ground_height(x, z, state.tiles, cfg.x_range),
            z_jitter=cfg.z_jitter, attempt_factor=cfg.attempt_factor, new_id=state.new_id)
        for obj in objs:
            state.objects[obj.id] = obj
            state.colliders.add(obj.collider)
            state.metrics.on_object(tile.id, obj.prefab_id)
            state.emit("object-spawned", {"id": obj.id, "prefab": obj.prefab_id, "tile_id": tile.id,
                                          "tile_z": tile.z, "cell": obj.cell_index,
                                          "position": list(obj.position), "half_extents": list(obj.half_extents),
                                          "snap": obj.y_offset})
    state.pending_population.clear()


def _encounters(state) -> None:
    cfg = state.config
    x, y, z = state.player.position
    hits = overlap_box(_player_box(cfg, x, y, z), state.colliders, Layer.OBSTACLES)
    if not hits:
        return
    obj = hits[0]
    dest = safe_lane_position(state, z)
    p = state.player
    p.position = list(dest)
    p.velocity = [0.0, 0.0, 0.0]
    p.grounded = True
    p.jumping = False
    p.score = kin.score(p)
    state.metrics.on_encounter(obj.owner_id)
    state.emit("encounter", {"object_id": obj.owner_id, "position": [x, y, z], "respawn_at": list(dest)})


def step(state: WorldState) -> tuple[WorldState, list[SimEvent]]:
    if state.finished or state.game_over:
        return state, []
    started = _time.perf_counter()
    first = len(state.events)
    cfg = state.config
    state.tick += 1

    _kinematics(state)
    if not state.game_over:
        terrain.maybe_spawn_tile(state)
        terrain.cleanup_tiles(state)
        terrain.advance_theme(state)
        _populate(state)
        spawner.despawn_objects(state)
        navsurface.update_nav(state)
        aerial_mod.update_aerial(state)
        if cfg.ground_agent:
            ground_mod.update_ground(state)
        _encounters(state)

    state.metrics.D = state.distance
    state.metrics.frame_samples.append((_time.perf_counter() - started) * 1000.0)
    return state, state.events[first:]


def finish(state: WorldState, reason: str | None = None) -> None:
    if state.finished:
        return
    state.end_reason = state.end_reason or reason or "run-length"
    state.metrics.D = state.distance
    state.emit("run-end", {"distance": state.distance, "ticks": state.tick, "reason": state.end_reason})
    state.finished = True


def run_to_completion(state: WorldState, max_ticks: int | None = None) -> tuple[dict, list[SimEvent]]:
    cfg = state.config
    while not state.game_over and state.distance < cfg.run_length:
        if max_ticks is not None and state.tick >= max_ticks:
            break
        step(state)
    finish(state, "game-over" if state.game_over else "run-length")
    return build_summary(state), state.events


def entropy_classes(catalog, shown: Iterable[int]) -> int:
    shown = set(shown)
    ids = {p.id for p in catalog if p.theme_index in shown}
    return len(ids) or len({p.id for p in catalog})


def build_summary(state: WorldState) -> dict:
    cfg = state.config
    ag, ga = state.aerial, state.ground_agent
    extra = {
        "label": cfg.label,
        "seed": cfg.seed,
        "ticks": state.tick,
        "end_reason": state.end_reason,
        "scan_budget": {
            "segments": ag.segments_scanned,
            "rows": state.scan_geometry.rows,
            "rays_per_row": state.scan_geometry.rays_per_row,
            "ray_budget": state.scan_geometry.ray_budget,
            "max_rays_segment": ag.max_rays_segment,
            "overlap_queries": ag.overlap_queries,
            "ground_segments": ga.segments_scanned,
        },
        "player": {"falls": state.metrics.falls, "respawns_used": state.player.respawns_used,
                   "game_over": state.game_over},
        "themes_shown": list(state.theme.shown),
        "nav_bakes": state.nav.bakes_completed,
        "reports": len(state.reports),
    }
    return summarize(state.metrics, entropy_classes=entropy_classes(state.catalog, state.theme.shown), extra=extra)


def recompute_metrics(events: Iterable, catalog) -> dict:
    """Offline metric groups from an event stream; matches the live summary's RQ groups exactly."""
    events = list(events)
    acc = MetricsAccumulator().fold(events)
    shown = {0}
    for ev in events:
        kind, payload = (ev["kind"], ev["payload"]) if isinstance(ev, dict) else (ev.kind, ev.payload)
        if kind == "theme-change":
            shown.add(payload["to"])
    return summarize(acc, entropy_classes=entropy_classes(catalog, shown))


def run(config: RunConfig, clock_origin: datetime = EPOCH) -> tuple[WorldState, dict]:
    state = new_run(config, clock_origin)
    summary, _ = run_to_completion(state)
    return state, summary


def write_events(events: Iterable[SimEvent], path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(ev.to_json())
            fh.write("\n")
    return path


def read_events(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def dumps_summary(summary: dict) -> str:
    return json.dumps(summary, indent=2, allow_nan=False) + "\n"


def perf_report(state: WorldState) -> dict:
    return perf_summary(state.metrics.frame_samples)
