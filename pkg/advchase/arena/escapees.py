import math
from dataclasses import dataclass

import numpy as np

from ..policy.mlp import MlpPolicy
from .config import ArenaConfig
from .dynamics import ChaserState, DotBotState, dotbot_step, scripted_sine_target
from .world import WorldState, escapee_observe

__all__ = ["StaticEscapee", "PolicyEscapee", "SineTarget", "action_to_twist"]


def action_to_twist(action, cfg: ArenaConfig):
    return (cfg.escapee_v_max * (float(action[0]) + 1.0) / 2.0,
            cfg.escapee_omega_max * float(action[1]))


class StaticEscapee:
    """Dot-bot that never moves: the generation-0 adversary and the baselines' target."""
    scripted = False

    def initial_state(self, chaser: ChaserState, spawner) -> DotBotState:
        return spawner(chaser)

    def twist(self, world: WorldState, cfg: ArenaConfig):
        return 0.0, 0.0

    def step(self, world: WorldState, cfg: ArenaConfig) -> DotBotState:
        return world.escapee


class PolicyEscapee:
    scripted = False

    def __init__(self, policy: MlpPolicy):
        if (policy.arch.input_dim, policy.arch.output_dim) != (3, 2):
            raise ValueError(f"escapee policy must map 3 -> 2, got {policy.arch}")
        self.policy = policy

    def initial_state(self, chaser: ChaserState, spawner) -> DotBotState:
        return spawner(chaser)

    def twist(self, world: WorldState, cfg: ArenaConfig):
        return action_to_twist(self.policy.act(escapee_observe(world)), cfg)

    def step(self, world: WorldState, cfg: ArenaConfig) -> DotBotState:
        return dotbot_step(world.escapee, self.twist(world, cfg), cfg.dt,
                           cfg.escapee_v_max, cfg.escapee_omega_max)


@dataclass(frozen=True)
class SineTarget:
    """Scripted target running y = A sin(w (x - 2)) at constant speed, starting at (2, 0)."""
    A: float
    w: float
    speed: float = 2.0
    scripted = True

    def initial_state(self, chaser: ChaserState, spawner) -> DotBotState:
        return DotBotState(2.0, 0.0, math.atan2(self.A * self.w, 1.0))

    def step(self, world: WorldState, cfg: ArenaConfig) -> DotBotState:
        return scripted_sine_target(self.A, self.w, world.escapee, cfg.dt, self.speed)

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "SineTarget":
        return cls(A=float(rng.uniform(2.0, 4.0)), w=float(rng.uniform(0.1 * math.pi, math.pi)))
