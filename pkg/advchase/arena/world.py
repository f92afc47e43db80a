import math
from dataclasses import dataclass

import numpy as np

from .config import ArenaConfig
from .dynamics import ChaserState, DotBotState

__all__ = ["WorldState", "wrap_angle", "distance", "heading_error", "chaser_observe",
           "escapee_observe", "chaser_reward", "escapee_reward", "mirror_world"]


@dataclass(frozen=True)
class WorldState:
    chaser: ChaserState
    escapee: DotBotState
    t: int = 0


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2 * math.pi)


def _to_frame(x, y, heading, px, py):
    dx, dy = px - x, py - y
    c, s = math.cos(heading), math.sin(heading)
    return c * dx + s * dy, -s * dx + c * dy


def distance(world: WorldState) -> float:
    return math.hypot(world.escapee.x - world.chaser.x, world.escapee.y - world.chaser.y)


def heading_error(world: WorldState) -> float:
    """Unsigned angle between the chaser heading and the direction to the escapee."""
    c = world.chaser
    dx, dy = _to_frame(c.x, c.y, c.phi, world.escapee.x, world.escapee.y)
    return abs(math.atan2(dy, dx))


def chaser_observe(world: WorldState, cfg: ArenaConfig) -> np.ndarray:
    c = world.chaser
    dx, dy = _to_frame(c.x, c.y, c.phi, world.escapee.x, world.escapee.y)
    return np.array([c.v / cfg.v_max, c.omega / cfg.omega_max, dx, dy, math.hypot(dx, dy)])


def escapee_observe(world: WorldState) -> np.ndarray:
    e, c = world.escapee, world.chaser
    dx, dy = _to_frame(e.x, e.y, e.theta, c.x, c.y)
    return np.array([dx, dy, wrap_angle(c.phi - e.theta)])


def chaser_reward(prev_d, d, theta, caught, action, mirrored_action, cfg: ArenaConfig) -> float:
    r = math.exp(-abs(theta)) * (prev_d - d)
    if caught:
        r += cfg.w1
    if cfg.w2:
        r -= cfg.w2 * math.hypot(*(np.asarray(action) - np.asarray(cfg.reference_action)))
    if cfg.w3:
        r -= cfg.w3 * math.hypot(*(np.asarray(action) - np.asarray(mirrored_action)))
    return r


def escapee_reward(prev_d, d) -> float:
    return d - prev_d


def mirror_world(world: WorldState) -> WorldState:
    return WorldState(world.chaser.mirrored(), world.escapee.mirrored(), world.t)
