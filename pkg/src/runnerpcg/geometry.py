"""Physics-lite queries over axis-aligned boxes.

Every collider is an AABB. Boundaries are closed: a ray grazing a face, or two
boxes sharing a face, count as contact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Vec3 = tuple[float, float, float]

# Slack on max_distance so a ray whose length equals the gap to a face still hits.
DISTANCE_EPS = 1e-9


class Layer(enum.IntFlag):
    GROUND = 1
    OBSTACLES = 2
    AGENT = 4
    OTHER = 8


ALL_LAYERS = Layer.GROUND | Layer.OBSTACLES | Layer.AGENT | Layer.OTHER


def layer_mask(*layers: Layer) -> Layer:
    mask = Layer(0)
    for layer in layers:
        mask |= layer
    return mask


@dataclass(frozen=True, slots=True)
class Aabb:
    center: Vec3
    half_extents: Vec3

    def __post_init__(self) -> None:
        if any(h < 0 for h in self.half_extents):
            raise ValueError(f"negative half extent: {self.half_extents}")

    @property
    def min(self) -> Vec3:
        c, h = self.center, self.half_extents
        return (c[0] - h[0], c[1] - h[1], c[2] - h[2])

    @property
    def max(self) -> Vec3:
        c, h = self.center, self.half_extents
        return (c[0] + h[0], c[1] + h[1], c[2] + h[2])

    @classmethod
    def from_bounds(cls, lo: Vec3, hi: Vec3) -> "Aabb":
        center = tuple((a + b) / 2 for a, b in zip(lo, hi))
        half = tuple((b - a) / 2 for a, b in zip(lo, hi))
        return cls(center, half)

    def intersects(self, other: "Aabb") -> bool:
        c1, h1, c2, h2 = self.center, self.half_extents, other.center, other.half_extents
        return (abs(c1[0] - c2[0]) <= h1[0] + h2[0]
                and abs(c1[1] - c2[1]) <= h1[1] + h2[1]
                and abs(c1[2] - c2[2]) <= h1[2] + h2[2])

    def contains_xz(self, x: float, z: float) -> bool:
        c, h = self.center, self.half_extents
        return abs(x - c[0]) <= h[0] and abs(z - c[2]) <= h[2]


@dataclass(slots=True)
class Collider:
    aabb: Aabb
    layer: Layer
    owner_id: int
    root_name: str = ""
    lo: Vec3 = field(init=False, repr=False, compare=False)
    hi: Vec3 = field(init=False, repr=False, compare=False)
    bits: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.lo = self.aabb.min
        self.hi = self.aabb.max
        self.bits = int(self.layer)


@dataclass(frozen=True, slots=True)
class Ray:
    origin: Vec3
    direction: Vec3
    max_distance: float

    def __post_init__(self) -> None:
        norm = math.sqrt(sum(d * d for d in self.direction))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"ray direction must be unit length, got |d|={norm}")
        if not self.max_distance > 0:
            raise ValueError("max_distance must be > 0")


@dataclass(frozen=True, slots=True)
class Hit:
    collider: Collider
    point: Vec3
    distance: float


DOWN: Vec3 = (0.0, -1.0, 0.0)


class ColliderIndex:
    """Flat collider store bucketed by z so per-query work stays local."""

    def __init__(self, bucket_size: float = 96.0):
        self.bucket_size = float(bucket_size)
        self._by_id: dict[int, Collider] = {}
        self._buckets: dict[int, dict[int, Collider]] = {}

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(self._by_id.values())

    def __contains__(self, owner_id: int) -> bool:
        return owner_id in self._by_id

    def get(self, owner_id: int) -> Collider | None:
        return self._by_id.get(owner_id)

    def _bucket_range(self, z_lo: float, z_hi: float) -> range:
        return range(math.floor(z_lo / self.bucket_size), math.floor(z_hi / self.bucket_size) + 1)

    def add(self, collider: Collider) -> None:
        if collider.owner_id in self._by_id:
            raise ValueError(f"duplicate owner_id {collider.owner_id}")
        self._by_id[collider.owner_id] = collider
        for b in self._bucket_range(collider.lo[2], collider.hi[2]):
            self._buckets.setdefault(b, {})[collider.owner_id] = collider

    def remove(self, owner_id: int) -> Collider | None:
        collider = self._by_id.pop(owner_id, None)
        if collider is None:
            return None
        for b in self._bucket_range(collider.lo[2], collider.hi[2]):
            bucket = self._buckets.get(b)
            if bucket is not None:
                bucket.pop(owner_id, None)
                if not bucket:
                    del self._buckets[b]
        return collider

    def near(self, z_lo: float, z_hi: float, mask: Layer = ALL_LAYERS) -> list[Collider]:
        """Colliders whose bucket overlaps [z_lo, z_hi], filtered by mask, ordered by id."""
        m = int(mask)
        b0, b1 = math.floor(z_lo / self.bucket_size), math.floor(z_hi / self.bucket_size)
        buckets = self._buckets
        if b0 == b1:
            bucket = buckets.get(b0)
            if not bucket:
                return []
            return [bucket[k] for k in sorted(bucket) if bucket[k].bits & m]
        found: dict[int, Collider] = {}
        for b in range(b0, b1 + 1):
            bucket = buckets.get(b)
            if bucket:
                for oid, c in bucket.items():
                    if c.bits & m:
                        found[oid] = c
        return [found[k] for k in sorted(found)]


def _candidates(colliders, z_lo: float, z_hi: float, mask: Layer) -> Iterable[Collider]:
    if isinstance(colliders, ColliderIndex):
        return colliders.near(z_lo, z_hi, mask)
    m = int(mask)
    return [c for c in colliders if c.bits & m]


def _slab(o: Vec3, d: Vec3, lo: Vec3, hi: Vec3, t_max: float) -> float | None:
    t0, t1 = 0.0, t_max
    for a in range(3):
        if d[a] == 0.0:
            if o[a] < lo[a] or o[a] > hi[a]:
                return None
            continue
        inv = 1.0 / d[a]
        ta = (lo[a] - o[a]) * inv
        tb = (hi[a] - o[a]) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return None
    return t0


def raycast(ray: Ray, colliders, mask: Layer = ALL_LAYERS) -> Hit | None:
    """Nearest mask-passing hit along the ray; ties go to the lowest owner_id."""
    o, d, reach = ray.origin, ray.direction, ray.max_distance
    z_end = o[2] + d[2] * reach
    best: Collider | None = None
    best_t = math.inf
    for c in _candidates(colliders, min(o[2], z_end), max(o[2], z_end), mask):
        t = _slab(o, d, c.lo, c.hi, reach + DISTANCE_EPS)
        if t is None:
            continue
        if t < best_t or (t == best_t and best is not None and c.owner_id < best.owner_id):
            best, best_t = c, t
    if best is None:
        return None
    point = (o[0] + d[0] * best_t, o[1] + d[1] * best_t, o[2] + d[2] * best_t)
    return Hit(best, point, best_t)


def raycast_batch(origins: np.ndarray, direction: Vec3, max_distance: float,
                  colliders: Sequence[Collider]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised nearest-hit for many rays sharing one direction.

    Returns (index into ``colliders`` or -1, distance or inf) per ray. The
    caller pre-filters ``colliders`` by mask; ties resolve to the lowest
    owner_id exactly like :func:`raycast`.
    """
    n = len(origins)
    if n == 0 or not colliders:
        return np.full(n, -1, dtype=np.int64), np.full(n, np.inf)
    order = sorted(range(len(colliders)), key=lambda i: colliders[i].owner_id)
    lo = np.array([colliders[i].lo for i in order], dtype=float)  # (m, 3)
    hi = np.array([colliders[i].hi for i in order], dtype=float)
    o = np.asarray(origins, dtype=float)[:, None, :]  # (n, 1, 3)
    t0 = np.zeros((n, len(order)))
    t1 = np.full((n, len(order)), max_distance + DISTANCE_EPS)
    ok = np.ones((n, len(order)), dtype=bool)
    for a in range(3):
        da = direction[a]
        if da == 0.0:
            ok &= (o[..., a] >= lo[None, :, a]) & (o[..., a] <= hi[None, :, a])
            continue
        ta = (lo[None, :, a] - o[..., a]) / da
        tb = (hi[None, :, a] - o[..., a]) / da
        near = np.minimum(ta, tb)
        far = np.maximum(ta, tb)
        t0 = np.maximum(t0, near)
        t1 = np.minimum(t1, far)
    ok &= t0 <= t1
    dist = np.where(ok, t0, np.inf)
    # argmin returns the first minimum, i.e. the lowest owner_id among ties.
    best = np.argmin(dist, axis=1)
    best_t = dist[np.arange(n), best]
    idx = np.where(np.isfinite(best_t), np.array(order)[best], -1)
    return idx, best_t


def overlap_box(box: Aabb, colliders, mask: Layer = ALL_LAYERS) -> list[Collider]:
    lo, hi = box.min, box.max
    out = []
    for c in _candidates(colliders, lo[2], hi[2], mask):
        if (c.lo[0] <= hi[0] and lo[0] <= c.hi[0]
                and c.lo[1] <= hi[1] and lo[1] <= c.hi[1]
                and c.lo[2] <= hi[2] and lo[2] <= c.hi[2]):
            out.append(c)
    out.sort(key=lambda c: c.owner_id)
    return out


def ground_height(x: float, z: float, tiles: Iterable, x_range: tuple[float, float]) -> float | None:
    """Top surface of the tile under (x, z), or None off the ground strip."""
    if x < x_range[0] or x > x_range[1]:
        return None
    for tile in tiles:
        if tile.z <= z <= tile.z + tile.length:
            return tile.top_y
    return None
