"""Adjacency-constrained obstacle placement on streamed tiles, despawning, and the saturation bound.

Each tile is split laterally into a one-dimensional grid. A placement claims its
cell and both neighbours, and cells inside the clear lane are never used, so
the number of objects a tile can hold is capped by a maximum independent set
of the remaining cells.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .geometry import Aabb, Collider, Layer

SNAP_MODES = ("snap", "sink", "float")
SINK_DEPTH = 0.3
FLOAT_HEIGHT = 0.6
MIN_CELLS = 12


@dataclass(frozen=True)
class PrefabSpec:
    id: str
    theme_index: int
    half_extents: tuple[float, float, float]
    snap_mode: str = "snap"

    def __post_init__(self) -> None:
        if any(h <= 0 for h in self.half_extents):
            raise ValueError(f"prefab {self.id}: half extents must be > 0")
        if self.snap_mode not in SNAP_MODES:
            raise ValueError(f"prefab {self.id}: unknown snap mode {self.snap_mode!r}")

    @property
    def y_offset(self) -> float:
        return {"snap": 0.0, "sink": -SINK_DEPTH, "float": FLOAT_HEIGHT}[self.snap_mode]


def load_catalog(path: str | Path | None = None) -> list[PrefabSpec]:
    if path is None:
        text = resources.files("runnerpcg").joinpath("data/prefabs.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries = json.loads(text)
    catalog = [PrefabSpec(e["id"], int(e["theme_index"]), tuple(float(v) for v in e["half_extents"]),
                          e.get("snap_mode", "snap")) for e in entries]
    if not catalog:
        raise ValueError("prefab catalog is empty")
    return catalog


def variant_count(catalog: Sequence[PrefabSpec]) -> int:
    return max(p.theme_index for p in catalog) + 1


def prefabs_for_theme(catalog: Sequence[PrefabSpec], theme: int) -> list[PrefabSpec]:
    pool = [p for p in catalog if p.theme_index == theme]
    return pool or list(catalog)


@dataclass
class TileGrid:
    x_min: float
    x_max: float
    W: float
    N: int
    cell_width: float
    clear_cells: frozenset[int]
    occupancy: list[bool] = field(default_factory=list)

    def center(self, i: int) -> float:
        return self.x_min + (i + 0.5) * self.cell_width

    @property
    def candidate_cells(self) -> list[int]:
        return [i for i in range(self.N) if i not in self.clear_cells]


def build_grid(x_range: tuple[float, float], clear_half_width: float, lane_center: float = 0.0) -> TileGrid:
    x_min, x_max = x_range
    W = x_max - x_min
    N = max(math.ceil(W), MIN_CELLS)
    cw = W / N
    clear = frozenset(i for i in range(N) if abs(x_min + (i + 0.5) * cw - lane_center) < clear_half_width)
    return TileGrid(x_min, x_max, W, N, cw, clear, [False] * N)


def intended_count(N: int, p_spawn: float) -> int:
    # the 1e-9 nudge keeps p = 100*k/N from flooring to k-1 through float error
    k = math.floor(N * p_spawn / 100.0 + 1e-9)
    return min(max(k, 0), N)


@dataclass
class SpawnedObject:
    id: int
    prefab_id: str
    position: tuple[float, float, float]
    collider: Collider
    tile_id: int
    tile_z: float
    cell_index: int
    y_offset: float = 0.0

    @property
    def half_extents(self) -> tuple[float, float, float]:
        return self.collider.aabb.half_extents

    def to_dict(self) -> dict:
        return {"id": self.id, "prefab": self.prefab_id, "position": list(self.position),
                "half_extents": list(self.half_extents), "tile_z": self.tile_z, "cell": self.cell_index}


@dataclass
class SpawnStats:
    intended: int = 0
    realized: int = 0
    attempts: int = 0
    failed_attempts: int = 0
    no_ground: int = 0


def place_objects(grid: TileGrid, K: int, tile, theme: int, catalog: Sequence[PrefabSpec],
                  rng: np.random.Generator, ground_probe: Callable[[float, float], float | None],
                  *, z_jitter: float = 3.0, attempt_factor: int = 5,
                  new_id: Callable[[], int] | None = None) -> tuple[list[SpawnedObject], SpawnStats]:
    """Draw cells at random until K objects are placed or the attempt cap is hit.

    Every attempt consumes exactly three uniforms (cell, jitter, prefab),
    whether or not it succeeds, so the draw sequence on a tile does not
    depend on K.
    """
    stats = SpawnStats(intended=K)
    objects: list[SpawnedObject] = []
    if K <= 0:
        return objects, stats
    pool = prefabs_for_theme(catalog, theme)
    max_attempts = grid.N * attempt_factor
    draws = rng.random((max_attempts, 3)).tolist()
    counter = iter(range(1, 1 << 62))
    new_id = new_id or (lambda: next(counter))
    occ = grid.occupancy
    while stats.realized < K and stats.attempts < max_attempts:
        u_cell, u_jit, u_pre = draws[stats.attempts]
        stats.attempts += 1
        i = min(int(u_cell * grid.N), grid.N - 1)
        z = tile.center_z + (2.0 * u_jit - 1.0) * z_jitter
        if i in grid.clear_cells or occ[i]:
            stats.failed_attempts += 1
            continue
        x = grid.center(i)
        ground_y = ground_probe(x, z)
        if ground_y is None:
            stats.no_ground += 1
            continue
        for j in (i - 1, i, i + 1):
            if 0 <= j < grid.N:
                occ[j] = True
        prefab = pool[min(int(u_pre * len(pool)), len(pool) - 1)]
        hx, hy, hz = prefab.half_extents
        pos = (x, ground_y + hy + prefab.y_offset, z)
        oid = new_id()
        collider = Collider(Aabb(pos, prefab.half_extents), Layer.OBSTACLES, oid, f"{prefab.id}#{oid}")
        objects.append(SpawnedObject(oid, prefab.id, pos, collider, tile.id, tile.z, i, prefab.y_offset))
        stats.realized += 1
    return objects, stats


def despawn_objects(state) -> list[SpawnedObject]:
    """Drop objects the player has passed by more than the despawn distance (strict)."""
    cfg = state.config
    z_p = state.player.position[2]
    limit = cfg.despawn_distance
    # objects are stored in tile order, so stop at the first tile that cannot qualify yet
    floor = cfg.tile_length / 2 - cfg.z_jitter
    gone = []
    for o in state.objects.values():
        if o.tile_z + floor > z_p - limit:
            break
        if z_p - o.position[2] > limit:
            gone.append(o)
    for obj in gone:
        state.remove_object(obj.id)
        state.emit("object-despawned", {"id": obj.id, "tile_z": obj.tile_z})
    return gone


def candidate_segments(grid: TileGrid) -> list[int]:
    """Lengths of the maximal runs of consecutive non-clear cells."""
    runs, current = [], 0
    for i in range(grid.N):
        if i in grid.clear_cells:
            if current:
                runs.append(current)
            current = 0
        else:
            current += 1
    if current:
        runs.append(current)
    return runs


def saturation_bound(grid: TileGrid) -> int:
    """Maximum independent set of candidate cells on the path graph: sum of ceil(n/2) per run."""
    return sum((n + 1) // 2 for n in candidate_segments(grid))


def saturation_threshold(grid: TileGrid) -> float:
    """Smallest p_spawn (percent) whose intended count reaches the saturation bound."""
    return 100.0 * saturation_bound(grid) / grid.N
