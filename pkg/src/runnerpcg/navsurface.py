"""Windowed walkable-surface surrogate with asynchronous rebakes.

A bake rasterises a snapshot of tiles and obstacle footprints onto a boolean
grid. The snapshot is taken when the job is issued and the field is only
swapped in once the job's completion tick arrives, so the field always lags
the live world by the job latency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class BusyError(RuntimeError):
    """A bake job is already in flight."""


@dataclass(frozen=True)
class NavSnapshot:
    tick: int
    player_z: float
    z_lo: float
    z_hi: float
    tiles: tuple[tuple[float, float, float], ...]  # (z, z_end, top_y)
    obstacles: tuple[tuple[float, float, float, float, int], ...]  # (x, z, hx, hz, owner_id)


class WalkableField:
    """Boolean raster over ``x_range`` × [z_lo, z_hi]; cell (j, i) is row j along z, column i along x."""

    def __init__(self, snapshot: NavSnapshot, x_range: tuple[float, float], resolution: float,
                 agent_radius: float):
        self.snapshot = snapshot
        self.x_min, self.x_max = x_range
        self.z_lo, self.z_hi = snapshot.z_lo, snapshot.z_hi
        self.res = resolution
        self.agent_radius = agent_radius
        self.nx = max(1, math.ceil((self.x_max - self.x_min) / resolution - 1e-9))
        self.nz = max(1, math.ceil((self.z_hi - self.z_lo) / resolution - 1e-9))
        xc = self.x_min + (np.arange(self.nx) + 0.5) * resolution
        zc = self.z_lo + (np.arange(self.nz) + 0.5) * resolution
        self.x_centres, self.z_centres = xc, zc
        on_tile = np.zeros(self.nz, dtype=bool)
        self._row_top = np.full(self.nz, np.nan)
        for z0, z1, top in snapshot.tiles:
            m = (zc >= z0) & (zc <= z1)
            on_tile |= m
            self._row_top[m] = top
        grid = np.repeat(on_tile[:, None], self.nx, axis=1)
        grid &= (xc <= self.x_max)[None, :]
        r = agent_radius
        for ox, oz, hx, hz, _ in snapshot.obstacles:
            rows = np.nonzero(np.abs(zc - oz) <= hz + r)[0]
            if rows.size == 0:
                continue
            cols = np.nonzero(np.abs(xc - ox) <= hx + r)[0]
            if cols.size:
                grid[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1] = False
        self.grid = grid
        self._cells = grid.tobytes()
        self._runs: dict[int, list[tuple[float, float]]] = {}

    def in_window(self, z: float) -> bool:
        return self.z_lo <= z <= self.z_hi

    def _indices(self, v: float, lo: float, n: int) -> tuple[int, ...]:
        f = (v - lo) / self.res
        k = math.floor(f)
        if f == k:
            return tuple(i for i in (k - 1, k) if 0 <= i < n)
        return (k,) if 0 <= k < n else ()

    def cell_walkable(self, j: int, i: int) -> bool:
        return 0 <= j < self.nz and 0 <= i < self.nx and self._cells[j * self.nx + i] == 1

    def walkable(self, x: float, z: float) -> bool:
        """True if (x, z) lies in the closed square of some walkable cell."""
        if not (self.z_lo <= z <= self.z_hi and self.x_min <= x <= self.x_max):
            return False
        cells, nx = self._cells, self.nx
        for j in self._indices(z, self.z_lo, self.nz):
            for i in self._indices(x, self.x_min, nx):
                if cells[j * nx + i]:
                    return True
        return False

    def surface_y(self, z: float, default: float = 0.0) -> float:
        j = min(max(int((z - self.z_lo) / self.res), 0), self.nz - 1)
        top = self._row_top[j]
        return default if math.isnan(top) else float(top)

    def row_runs(self, z: float) -> list[tuple[float, float]]:
        """Walkable x-intervals of the cell row containing z."""
        j = math.floor((z - self.z_lo) / self.res)
        if not 0 <= j < self.nz:
            return []
        cached = self._runs.get(j)
        if cached is not None:
            return cached
        runs, start = [], None
        row = self._cells[j * self.nx:(j + 1) * self.nx]
        for i, ok in enumerate(row):
            if ok and start is None:
                start = i
            elif not ok and start is not None:
                runs.append((self.x_min + start * self.res, self.x_min + i * self.res))
                start = None
        if start is not None:
            runs.append((self.x_min + start * self.res, min(self.x_max, self.x_min + self.nx * self.res)))
        self._runs[j] = runs
        return runs

    def nearest(self, x: float, z: float, radius: float) -> tuple[float, float] | None:
        """Nearest point of the nearest walkable cell square within ``radius``; ties go to lowest (j, i)."""
        res = self.res
        j0 = max(0, math.floor((z - radius - self.z_lo) / res))
        j1 = min(self.nz - 1, math.floor((z + radius - self.z_lo) / res))
        i0 = max(0, math.floor((x - radius - self.x_min) / res))
        i1 = min(self.nx - 1, math.floor((x + radius - self.x_min) / res))
        if j0 > j1 or i0 > i1:
            return None
        sub = self.grid[j0:j1 + 1, i0:i1 + 1]
        if not sub.any():
            return None
        xs_lo = self.x_min + np.arange(i0, i1 + 1) * res
        zs_lo = self.z_lo + np.arange(j0, j1 + 1) * res
        # the last row and column may overhang the field; squares are clipped to it
        px = np.clip(x, xs_lo, np.minimum(xs_lo + res, self.x_max))
        pz = np.clip(z, zs_lo, np.minimum(zs_lo + res, self.z_hi))
        d2 = (pz - z)[:, None] ** 2 + ((px - x) ** 2)[None, :]
        d2 = np.where(sub, d2, np.inf)
        k = int(np.argmin(d2))
        if d2.flat[k] > radius * radius:
            return None
        jj, ii = divmod(k, sub.shape[1])
        return float(px[ii]), float(pz[jj])


def sample_position(p, field: WalkableField | None, radius: float = 5.0) -> tuple[float, float, float] | None:
    """Snap ``p`` onto the walkable field; None outside the window or with nothing within ``radius``."""
    if field is None:
        return None
    x, _, z = p
    if not field.in_window(z):
        return None
    if field.walkable(x, z):
        return (x, field.surface_y(z), z)
    hit = field.nearest(x, z, radius)
    if hit is None:
        return None
    return (hit[0], field.surface_y(hit[1]), hit[1])


@dataclass
class PendingJob:
    version: int
    issue_tick: int
    done_tick: int
    trigger: str
    snapshot: NavSnapshot


@dataclass
class NavWindow:
    z_lo: float = 0.0
    z_hi: float = 0.0
    bake_version: int = 0
    baked_at_player_z: float = 0.0
    tiles_since_bake: int = 0
    last_bake_time: float = 0.0
    pending_job: PendingJob | None = None
    field: WalkableField | None = None
    bakes_completed: int = 0

    def to_dict(self) -> dict:
        return {
            "z_lo": self.z_lo, "z_hi": self.z_hi, "bake_version": self.bake_version,
            "baked_at_player_z": self.baked_at_player_z, "tiles_since_bake": self.tiles_since_bake,
            "last_bake_time": self.last_bake_time,
            "pending": None if self.pending_job is None else
            {"version": self.pending_job.version, "done_tick": self.pending_job.done_tick},
        }


def take_snapshot(state) -> NavSnapshot:
    cfg = state.config
    z_p = state.player.position[2]
    z_lo, z_hi = z_p - cfg.d_behind, z_p + cfg.d_ahead
    tiles = tuple((t.z, t.z_end, t.top_y) for t in state.tiles if t.z_end >= z_lo and t.z <= z_hi)
    margin = cfg.agent_radius + 10.0
    obstacles = []
    for c in state.colliders.near(z_lo - margin, z_hi + margin, state.obstacle_layer):
        (cx, _, cz), (hx, _, hz) = c.aabb.center, c.aabb.half_extents
        obstacles.append((cx, cz, hx, hz, c.owner_id))
    return NavSnapshot(state.tick, z_p, z_lo, z_hi, tiles, tuple(obstacles))


def should_rebake(state) -> str | None:
    """Name of the first trigger that fires ("time", "count", "position"), or None."""
    nav: NavWindow = state.nav
    if nav.pending_job is not None:
        return None
    cfg = state.config
    if state.time - nav.last_bake_time >= cfg.nav_interval:
        return "time"
    moved = abs(state.player.position[2] - nav.baked_at_player_z)
    if nav.tiles_since_bake >= cfg.nav_tile_count or moved > 2 * cfg.tile_length:
        return "count"
    if moved > cfg.nav_move_threshold:
        return "position"
    return None


def begin_rebake(state, trigger: str = "manual") -> PendingJob:
    nav: NavWindow = state.nav
    if nav.pending_job is not None:
        raise BusyError(f"bake {nav.pending_job.version} still pending")
    snap = take_snapshot(state)
    job = PendingJob(nav.bake_version + 1, state.tick, state.tick + state.config.rebake_latency,
                     trigger, snap)
    nav.pending_job = job
    state.emit("rebake-begin", {"version": job.version, "trigger": trigger,
                                "window": [snap.z_lo, snap.z_hi], "done_tick": job.done_tick})
    return job


def complete_rebake(state) -> WalkableField | None:
    nav: NavWindow = state.nav
    job = nav.pending_job
    if job is None or job.done_tick > state.tick:
        return None
    cfg = state.config
    snap = job.snapshot
    nav.field = WalkableField(snap, cfg.x_range, cfg.nav_resolution, cfg.agent_radius)
    nav.z_lo, nav.z_hi = snap.z_lo, snap.z_hi
    nav.bake_version = job.version
    nav.baked_at_player_z = snap.player_z
    nav.tiles_since_bake = 0
    nav.last_bake_time = state.time
    nav.pending_job = None
    nav.bakes_completed += 1
    state.emit("rebake-done", {"version": job.version, "window": [snap.z_lo, snap.z_hi],
                               "tiles": len(snap.tiles), "obstacles": len(snap.obstacles)})
    return nav.field


def update_nav(state) -> None:
    """One tick of the rebake cycle: finish a due job, maybe issue a new one, finish it if instant."""
    complete_rebake(state)
    trigger = should_rebake(state)
    if trigger is not None:
        begin_rebake(state, trigger)
        complete_rebake(state)
