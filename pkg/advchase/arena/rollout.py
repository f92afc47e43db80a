import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..policy.mirror import chaser_mirror, mirrored_actions
from .config import ArenaConfig, Mode
from .dynamics import ChaserState, DotBotState, chaser_step
from .spawn import Spawner
from .world import (WorldState, chaser_observe, chaser_reward, distance, escapee_reward,
                    heading_error)

__all__ = ["StepOutcome", "StepRecord", "EpisodeResult", "rollout", "OUTCOMES"]

logger = logging.getLogger(__name__)

OUTCOMES = ("fall", "catch", "escape")


@dataclass(frozen=True)
class StepOutcome:
    chaser_reward: float
    escapee_reward: float
    caught: bool
    fell: bool
    done: bool
    distance: float


@dataclass(frozen=True)
class StepRecord:
    t: int
    chaser: ChaserState
    escapee: DotBotState
    outcome: StepOutcome


@dataclass
class EpisodeResult:
    chaser_return: float
    escapee_return: float
    steps: int
    catches: int
    fell: bool
    escapee_escaped: bool
    outcome: str
    mean_distance: float
    mean_speed: float
    mean_heading_error: float
    seed: int = 0
    trajectory: Optional[List[StepRecord]] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "trajectory"}


def rollout(chaser, escapee, cfg: ArenaConfig, mode: Mode = Mode.CHASE_TRAINING, seed: int = 0,
            record: bool = False, d_min: Optional[float] = None) -> EpisodeResult:
    """Run one episode with undiscounted returns for both agents.

    CHASE_TRAINING ends on a chaser fall or after max_steps; a caught escapee
    is respawned through the arena's spawn rule and the episode continues.
    EVALUATION ends on the first fall, catch, escape (d > escape_distance) or
    at max_steps. ESCAPE_TRAINING always runs max_steps: a fallen chaser stays
    frozen where it fell and a caught escapee is not respawned.
    ``d_min`` overrides the catch radius (escape training perturbs it).
    """
    if (chaser.arch.input_dim, chaser.arch.output_dim) != (5, 2):
        raise ValueError(f"chaser policy must map 5 -> 2, got {chaser.arch}")
    rng = np.random.default_rng(seed)
    mirror = chaser_mirror()
    catch_radius = cfg.d_min if d_min is None else d_min

    c = ChaserState()
    spawner = Spawner(cfg.spawn, c, rng)
    world = WorldState(c, escapee.initial_state(c, spawner), 0)
    prev_d = distance(world)

    chaser_return = escapee_return = 0.0
    dist_sum = speed_sum = heading_sum = 0.0
    steps = catches = 0
    fell = frozen = False
    outcome = None
    trajectory = [] if record else None
    zero = np.zeros(2)

    for t in range(cfg.max_steps):
        if frozen:
            a = a_m = zero
        else:
            s = chaser_observe(world, cfg)
            if cfg.w3:
                a, a_m = mirrored_actions(chaser, mirror, s)
            else:
                a = a_m = chaser.act(s)

        e_next = escapee.step(world, cfg)
        if frozen:
            c_next, fell_now = world.chaser, False
        else:
            c_next, fell_now = chaser_step(world.chaser, a, cfg.dt, cfg)
        world = WorldState(c_next, e_next, t + 1)

        d = distance(world)
        caught = d <= catch_radius
        theta = heading_error(world)
        r_c = chaser_reward(prev_d, d, theta, caught, a, a_m, cfg)
        if fell_now:
            r_c -= cfg.fall_penalty
        r_e = escapee_reward(prev_d, d)
        chaser_return += r_c
        escapee_return += r_e
        dist_sum += d
        speed_sum += c_next.v
        heading_sum += theta
        steps += 1
        catches += int(caught)
        prev_d = d

        done = False
        if mode is Mode.ESCAPE_TRAINING:
            if fell_now:
                fell = frozen = True
                world = WorldState(c_next.frozen(), e_next, t + 1)
        elif mode is Mode.CHASE_TRAINING:
            if fell_now:
                fell, done = True, True
            elif caught:
                if escapee.scripted:
                    done = True
                else:
                    world = WorldState(c_next, spawner(c_next), t + 1)
                    prev_d = distance(world)
        else:
            if fell_now:
                fell, done, outcome = True, True, "fall"
            elif caught:
                done, outcome = True, "catch"
            elif cfg.escape_distance is not None and d > cfg.escape_distance:
                done, outcome = True, "escape"

        if record:
            trajectory.append(StepRecord(t + 1, c_next, e_next,
                                         StepOutcome(r_c, r_e, caught, fell_now, done, d)))
        if done:
            break

    if outcome is None:
        if fell and mode is not Mode.ESCAPE_TRAINING:
            outcome = "fall"
        else:
            outcome = "catch" if catches else "escape"

    return EpisodeResult(
        chaser_return=chaser_return,
        escapee_return=escapee_return,
        steps=steps,
        catches=catches,
        fell=fell,
        escapee_escaped=outcome == "escape",
        outcome=outcome,
        mean_distance=dist_sum / steps,
        mean_speed=speed_sum / steps,
        mean_heading_error=heading_sum / steps,
        seed=int(seed),
        trajectory=trajectory,
    )
