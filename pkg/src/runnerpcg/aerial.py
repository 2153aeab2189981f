"""Flying evaluator: smoothed look-ahead pursuit and segment-gated corridor scans.

The scanner shares its geometry with the ground agent's diagnostic pass, so the
row probing, passability rule and blocker identification live here as plain
functions over a collider index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DOWN, Aabb, Layer, overlap_box, raycast_batch

AERIAL_RAY_MASK = Layer.GROUND | Layer.OBSTACLES | Layer.OTHER
AERIAL_BLOCKER_MASK = Layer.OBSTACLES | Layer.OTHER
GROUND_RAY_MASK = Layer.GROUND | Layer.OBSTACLES
GROUND_BLOCKER_MASK = Layer.OBSTACLES

# How far below the scan altitude a probe ray reaches; anything deeper is a hole.
RAY_DEPTH_BELOW_GROUND = 5.0


@dataclass(frozen=True)
class ScanGeometry:
    seg_length: float = 10.0
    row_gap: float = 0.5
    x_step: float = 0.05
    sweep_width: float = 2.15
    w_clear: float = 2.0
    lane_center: float = 0.0
    y_scan: float = 15.0

    @classmethod
    def from_config(cls, cfg) -> "ScanGeometry":
        return cls(cfg.seg_length, cfg.row_gap, cfg.x_step, cfg.sweep_width, cfg.w_clear,
                   cfg.lane_center, cfg.aerial_height)

    @property
    def rows(self) -> int:
        return math.ceil(self.seg_length / self.row_gap - 1e-9) + 1

    @property
    def rays_per_row(self) -> int:
        return math.floor(self.sweep_width / self.x_step + 1e-9) + 1

    @property
    def ray_budget(self) -> int:
        return self.rows * self.rays_per_row

    @property
    def required_run(self) -> int:
        """Consecutive clear samples needed to span w_clear."""
        return math.ceil(self.w_clear / self.x_step - 1e-9) + 1

    def ray_xs(self) -> np.ndarray:
        x0 = self.lane_center - self.sweep_width / 2
        return x0 + np.arange(self.rays_per_row) * self.x_step

    def row_zs(self, segment_z: float) -> np.ndarray:
        return segment_z + np.arange(self.rows) * self.row_gap


@dataclass
class ScanSegmentResult:
    agent: str
    segment_index: int
    segment_z: float
    rows: int
    rays: int
    passable: bool
    overlap_hits: int
    blockers: list[dict] = field(default_factory=list)
    row_hits: list[int] = field(default_factory=list)
    first_blocked_row_z: float | None = None
    ray_spacing: float = 0.05
    probe_origin: tuple[float, float, float] | None = None

    @property
    def hit_count(self) -> int:
        return sum(self.row_hits)

    @property
    def blocker_ids(self) -> list[int]:
        return [b["owner_id"] for b in self.blockers]

    def event_payload(self) -> dict:
        return {"agent": self.agent, "segment_index": self.segment_index, "segment_z": self.segment_z,
                "rows": self.rows, "rays": self.rays, "passable": self.passable,
                "overlap_hits": self.overlap_hits, "blockers": self.blocker_ids}


def row_passable(hit_intervals, lane: tuple[float, float], w_clear: float) -> bool:
    """True iff the lane minus the open interiors of the hit intervals holds a closed gap >= w_clear."""
    if not w_clear > 0:
        raise ValueError("w_clear must be > 0")
    lo, hi = lane
    spans = sorted((max(a, lo), min(b, hi)) for a, b in hit_intervals if b > lo and a < hi and a < b)
    cursor = lo
    for a, b in spans:
        if a - cursor >= w_clear - 1e-9:
            return True
        cursor = max(cursor, b)
    return hi - cursor >= w_clear - 1e-9


def blocked_intervals(blocked: np.ndarray, xs: np.ndarray, step: float) -> list[tuple[float, float]]:
    """Map runs of blocked samples to x-intervals reaching to the neighbouring clear samples."""
    out = []
    k, n = 0, len(blocked)
    while k < n:
        if blocked[k]:
            k1 = k
            while k + 1 < n and blocked[k + 1]:
                k += 1
            out.append((float(xs[k1] - step), float(xs[k] + step)))
        k += 1
    return out


def _row_verdict(blocked_row: list[bool], need: int) -> tuple[bool, int]:
    """Left-to-right probing with early exit; returns (passable, rays fired)."""
    n = len(blocked_row)
    run = 0
    for k, b in enumerate(blocked_row):
        run = 0 if b else run + 1
        if run >= need:
            return True, k + 1
        if run + (n - k - 1) < need:
            return False, k + 1
    return False, n


def _describe(c) -> dict:
    h = c.aabb.half_extents
    return {"owner_id": c.owner_id, "root_name": c.root_name, "position": list(c.aabb.center),
            "size": [2 * h[0], 2 * h[1], 2 * h[2]], "layer": c.layer.name}


def scan_corridor(colliders, segment_z: float, geom: ScanGeometry, *, agent: str = "aerial",
                  segment_index: int = 0, ray_mask: Layer = AERIAL_RAY_MASK,
                  blocker_mask: Layer = AERIAL_BLOCKER_MASK, early_exit: bool = True,
                  ground_y: float = 0.0) -> ScanSegmentResult:
    """Probe one corridor segment with downward ray rows plus a single overlap box.

    A sample is blocked when its nearest hit is a blocker-layer collider or
    when the ray finds nothing at all. Read-only on ``colliders``.
    """
    xs = geom.ray_xs()
    zs = geom.row_zs(segment_z)
    half = geom.sweep_width / 2
    x_lo, x_hi = geom.lane_center - half, geom.lane_center + half
    z_lo, z_hi = segment_z, segment_z + geom.seg_length
    cands = [c for c in colliders.near(z_lo - 1.0, z_hi + 1.0, ray_mask)
             if c.hi[0] >= x_lo and c.lo[0] <= x_hi and c.hi[2] >= z_lo and c.lo[2] <= z_hi]
    nr, nx = len(zs), len(xs)
    origins = np.empty((nr * nx, 3))
    origins[:, 0] = np.tile(xs, nr)
    origins[:, 1] = geom.y_scan
    origins[:, 2] = np.repeat(zs, nx)
    reach = geom.y_scan - ground_y + RAY_DEPTH_BELOW_GROUND
    idx, _ = raycast_batch(origins, DOWN, reach, cands)
    is_blocker = np.array([bool(c.layer & blocker_mask) for c in cands] + [False], dtype=bool)
    hit_blocker = is_blocker[idx].reshape(nr, nx)  # idx -1 picks the trailing False
    blocked = (hit_blocker | (idx < 0).reshape(nr, nx))
    idx = idx.reshape(nr, nx)

    need = geom.required_run
    rays = 0
    passable = True
    row_hits: list[int] = []
    first_blocked = None
    found: dict[int, object] = {}
    for r in range(nr):
        row = blocked[r].tolist()
        if early_exit:
            ok, fired = _row_verdict(row, need)
        else:
            ok = row_passable(blocked_intervals(blocked[r], xs, geom.x_step), (xs[0], xs[-1]), geom.w_clear)
            fired = nx
        rays += fired
        hits = 0
        for k in range(fired):
            if hit_blocker[r, k]:
                hits += 1
                c = cands[idx[r, k]]
                found.setdefault(c.owner_id, c)
        row_hits.append(hits)
        if not ok:
            passable = False
            if first_blocked is None:
                first_blocked = float(zs[r])

    box = Aabb.from_bounds((x_lo, ground_y - 1.0, z_lo), (x_hi, geom.y_scan, z_hi))
    overlaps = overlap_box(box, cands, blocker_mask)
    for c in overlaps:
        found.setdefault(c.owner_id, c)
    blockers = [_describe(found[k]) for k in sorted(found)]
    probe = None if first_blocked is None else (geom.lane_center, geom.y_scan, first_blocked)
    return ScanSegmentResult(agent, segment_index, segment_z, nr, rays, passable, len(overlaps),
                             blockers, row_hits, first_blocked, geom.x_step, probe)


def smooth_damp(current, target, velocity, smooth_time: float, max_speed: float, dt: float):
    """Critically damped approach toward ``target``; returns (new_position, new_velocity).

    Mirrors the widely used game-engine recurrence (polynomial approximation
    of the exponential, change clamped to max_speed * smooth_time, overshoot
    guard) and additionally caps the per-tick displacement at max_speed * dt.
    """
    smooth_time = max(1e-4, smooth_time)
    omega = 2.0 / smooth_time
    x = omega * dt
    decay = 1.0 / (1.0 + x + 0.48 * x * x + 0.235 * x * x * x)
    cx, cy, cz = current
    gx, gy, gz = target
    vx, vy, vz = velocity
    dx, dy, dz = cx - gx, cy - gy, cz - gz
    max_change = max_speed * smooth_time
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if norm > max_change:
        f = max_change / norm
        dx, dy, dz = dx * f, dy * f, dz * f
    tx, ty, tz = (vx + omega * dx) * dt, (vy + omega * dy) * dt, (vz + omega * dz) * dt
    vel = [(vx - omega * tx) * decay, (vy - omega * ty) * decay, (vz - omega * tz) * decay]
    out = [cx - dx + (dx + tx) * decay, cy - dy + (dy + ty) * decay, cz - dz + (dz + tz) * decay]
    if (gx - cx) * (out[0] - gx) + (gy - cy) * (out[1] - gy) + (gz - cz) * (out[2] - gz) > 0:
        out = [float(gx), float(gy), float(gz)]
        vel = [0.0, 0.0, 0.0]
    sx, sy, sz = out[0] - cx, out[1] - cy, out[2] - cz
    step_norm = math.sqrt(sx * sx + sy * sy + sz * sz)
    limit = max_speed * dt
    if step_norm > limit:
        f = limit / step_norm
        out = [cx + sx * f, cy + sy * f, cz + sz * f]
        g = max_speed / step_norm
        vel = [sx * g, sy * g, sz * g]
    return out, vel


@dataclass
class AerialState:
    position: list[float]
    velocity: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    target: list[float] | None = None
    next_segment: int = 0
    last_scanned_z: float | None = None
    rays_fired_this_segment: int = 0
    segments_scanned: int = 0
    max_rays_segment: int = 0
    overlap_queries: int = 0
    first_scan_tick: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"position": list(self.position), "velocity": list(self.velocity),
                "next_segment": self.next_segment, "last_scanned_z": self.last_scanned_z,
                "segments_scanned": self.segments_scanned}


def segment_count(cfg) -> int:
    return math.ceil(cfg.run_length / cfg.seg_length - 1e-9)


def segment_z(cfg, k: int) -> float:
    return cfg.spawn_z + k * cfg.seg_length


def update_target(state) -> list[float]:
    cfg = state.config
    px, _, pz = state.player.position
    z_last = state.tiles[-1].z if state.tiles else pz
    return [px + cfg.aerial_dx, cfg.aerial_height, min(pz + cfg.delta_z_aerial, z_last)]


def classify_and_act(state, result: ScanSegmentResult, auto_remove: bool) -> list[int]:
    """File a report for a blocked segment and optionally destroy its blockers; returns removed ids."""
    from .reporter import build_report, report_blockage

    if result.passable:
        return []
    removed = []
    report = build_report(state, result, removed=bool(auto_remove and result.blockers))
    index = report_blockage(state.reports, report)
    state.metrics.on_blockage(result.agent, result.blocker_ids)
    state.emit("blockage", {"agent": result.agent, "segment_z": result.segment_z, "report_index": index,
                            "blockers": result.blocker_ids, "removed": report.removed})
    if report.removed:
        for oid in result.blocker_ids:
            if state.remove_object(oid) is not None:
                removed.append(oid)
                state.metrics.on_removal(oid)
                state.emit("removal", {"id": oid, "segment_z": result.segment_z})
    return removed


def update_aerial(state) -> list[ScanSegmentResult]:
    cfg = state.config
    ag: AerialState = state.aerial
    ag.target = update_target(state)
    ag.position, ag.velocity = smooth_damp(ag.position, ag.target, ag.velocity,
                                           cfg.aerial_smooth_time, cfg.aerial_max_speed, cfg.dt)
    results = []
    total = segment_count(cfg)
    while ag.next_segment < total and segment_z(cfg, ag.next_segment) <= ag.position[2]:
        k = ag.next_segment
        z_k = segment_z(cfg, k)
        res = scan_corridor(state.colliders, z_k, state.scan_geometry, agent="aerial", segment_index=k,
                            ray_mask=AERIAL_RAY_MASK, blocker_mask=AERIAL_BLOCKER_MASK,
                            ground_y=cfg.tile_top_y)
        ag.next_segment += 1
        ag.last_scanned_z = z_k
        ag.rays_fired_this_segment = res.rays
        ag.segments_scanned += 1
        ag.max_rays_segment = max(ag.max_rays_segment, res.rays)
        ag.overlap_queries += 1
        ag.first_scan_tick.setdefault(k, state.tick)
        state.metrics.on_scan(res)
        state.emit("scan", res.event_payload())
        classify_and_act(state, res, cfg.auto_remove)
        results.append(res)
    return results
