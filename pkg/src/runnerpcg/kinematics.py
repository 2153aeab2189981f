"""Player state integration: velocity rules, gravity, damping, ground checks, respawn."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import DOWN, Layer, Ray, raycast

SCORE_OFFSET = 45.0


@dataclass
class PilotInput:
    run: bool = True
    h: int = 0
    jump: bool = False


@dataclass
class PlayerState:
    position: list[float]
    velocity: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    grounded: bool = True
    jumping: bool = False
    running: bool = False
    respawns_used: int = 0
    spawn_point: tuple[float, float, float] = (0.0, 0.0, -45.0)
    score: float = 0.0
    jumps: int = 0

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "velocity": list(self.velocity),
            "grounded": self.grounded,
            "jumping": self.jumping,
            "running": self.running,
            "respawns_used": self.respawns_used,
            "spawn_point": list(self.spawn_point),
            "score": self.score,
        }


def lerp(a: float, b: float, t: float) -> float:
    t = 0.0 if t < 0.0 else 1.0 if t > 1.0 else t
    return a + (b - a) * t


def update_velocity(p: PlayerState, inp: PilotInput, dt: float, *, run_speed: float = 12.0,
                    side_speed: float = 6.0, jump_force: float = 7.0, jump_forward_boost: float = 2.0,
                    gravity: float = 9.81, damping: float = 2.0, decel_rate: float = 10.0) -> PlayerState:
    """Apply one tick of the velocity rules in place and return ``p``.

    Components that no rule drives this tick decay by ``exp(-damping * dt)``;
    gravity is never damped.
    """
    vx, vy, vz = p.velocity
    decay = math.exp(-damping * dt)
    p.running = inp.run

    if p.grounded:
        if inp.run:
            vz = run_speed
        else:
            vz = lerp(vz, 0.0, decel_rate * dt)
    else:
        vz *= decay

    if inp.h:
        vx = inp.h * side_speed
    else:
        vx *= decay

    if inp.jump and p.grounded:
        vy = jump_force
        if inp.run:
            vz += jump_forward_boost
        p.grounded = False
        p.jumping = True
        p.jumps += 1
    elif not p.grounded:
        vy -= gravity * dt

    p.velocity = [vx, vy, vz]
    return p


def integrate(p: PlayerState, dt: float) -> PlayerState:
    pos, v = p.position, p.velocity
    p.position = [pos[0] + v[0] * dt, pos[1] + v[1] * dt, pos[2] + v[2] * dt]
    p.score = score(p)
    return p


def ground_check(p: PlayerState, colliders, ray_length: float = 0.3) -> bool:
    """Short downward probe from the feet against the Ground layer."""
    hit = raycast(Ray(tuple(p.position), DOWN, ray_length), colliders, Layer.GROUND)
    return hit is not None


def settle_on_ground(p: PlayerState, colliders, dt: float, ray_length: float = 0.3) -> PlayerState:
    """Resolve ground contact after integration, snapping the feet onto the surface on landing."""
    x, y, z = p.position
    if p.velocity[1] > 0.0:
        p.grounded = False
        return p
    # start the probe above the feet so this tick's penetration is still caught
    lift = ray_length - p.velocity[1] * dt
    hit = raycast(Ray((x, y + lift, z), DOWN, lift + ray_length), colliders, Layer.GROUND)
    if hit is None or y - hit.point[1] > ray_length:
        p.grounded = False
        return p
    if p.velocity[1] < 0.0 or y < hit.point[1]:
        p.position = [x, hit.point[1], z]
        p.velocity[1] = 0.0
    p.grounded = True
    p.jumping = False
    return p


def respawn_if_fallen(p: PlayerState, *, fall_y: float = -8.0, max_respawns: int = 9,
                      target: tuple[float, float, float] | None = None) -> tuple[PlayerState, str | None]:
    """Teleport a fallen player; returns the event kind ("respawn", "game-over") or None."""
    if p.position[1] >= fall_y:
        return p, None
    return force_respawn(p, max_respawns=max_respawns, target=target)


def force_respawn(p: PlayerState, *, max_respawns: int = 9,
                  target: tuple[float, float, float] | None = None) -> tuple[PlayerState, str | None]:
    if p.respawns_used >= max_respawns:
        return p, "game-over"
    dest = target if target is not None else p.spawn_point
    p.position = [float(dest[0]), float(dest[1]), float(dest[2])]
    p.velocity = [0.0, 0.0, 0.0]
    p.grounded = True
    p.jumping = False
    p.respawns_used += 1
    p.score = score(p)
    return p, "respawn"


def score(p: PlayerState) -> float:
    return max(0.0, p.position[2] + SCORE_OFFSET)
