import math

import numpy as np

from .config import Circular, Cone, SpawnConfig, Zigzag
from .dynamics import ChaserState, DotBotState

__all__ = ["Spawner", "spawn_adversary", "sample_ring", "zigzag_vertices"]


def _random_heading(rng):
    return math.pi - rng.uniform(0.0, 2 * math.pi)


def sample_ring(chaser: ChaserState, half_angle, r_in, r_out, rng) -> DotBotState:
    # area-uniform radius, bearing relative to the chaser heading
    r = math.sqrt(rng.uniform(r_in * r_in, r_out * r_out))
    bearing = chaser.phi + rng.uniform(-half_angle, half_angle)
    return DotBotState(chaser.x + r * math.cos(bearing), chaser.y + r * math.sin(bearing),
                       _random_heading(rng))


def zigzag_vertices(cfg: Zigzag, chaser: ChaserState, rng):
    """Alternating-lateral vertex list in front of the chaser, world frame."""
    side = 1.0 if rng.uniform() < 0.5 else -1.0
    c, s = math.cos(chaser.phi), math.sin(chaser.phi)
    forward = 0.0
    vertices = []
    for _ in range(cfg.n_points):
        forward += cfg.advance * rng.uniform(0.75, 1.25)
        lateral = side * cfg.lateral * rng.uniform(0.75, 1.25)
        vertices.append(DotBotState(chaser.x + c * forward - s * lateral,
                                    chaser.y + s * forward + c * lateral,
                                    _random_heading(rng)))
        side = -side
    return vertices


class Spawner:
    """Per-episode escapee placement.

    Cone and circular configs sample afresh around the chaser's current pose
    on every call. Zigzag samples its vertex list when the episode starts and
    hands the vertices out in order; an exhausted list is resampled around
    the chaser's current pose.
    """

    def __init__(self, cfg: SpawnConfig, chaser: ChaserState, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self._vertices = []
        if isinstance(cfg, Zigzag):
            self._vertices = zigzag_vertices(cfg, chaser, rng)

    def __call__(self, chaser: ChaserState) -> DotBotState:
        cfg = self.cfg
        if isinstance(cfg, Cone):
            return sample_ring(chaser, cfg.half_angle, cfg.r_in, cfg.r_out, self.rng)
        if isinstance(cfg, Circular):
            return sample_ring(chaser, math.pi, cfg.r_in, cfg.r_out, self.rng)
        if isinstance(cfg, Zigzag):
            if not self._vertices:
                self._vertices = zigzag_vertices(cfg, chaser, self.rng)
            return self._vertices.pop(0)
        raise NotImplementedError(type(cfg))

    @property
    def pending(self):
        return list(self._vertices)


def spawn_adversary(cfg: SpawnConfig, chaser: ChaserState, rng: np.random.Generator):
    spawner = Spawner(cfg, chaser, rng)
    return spawner(chaser), spawner
