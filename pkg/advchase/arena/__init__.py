from .config import (ArenaConfig, Cone, Circular, Zigzag, Mode, spawn_to_dict, spawn_from_dict,
                     chaser_arch, escapee_arch)
from .dynamics import ChaserState, DotBotState, dotbot_step, chaser_step, scripted_sine_target
from .world import (WorldState, chaser_observe, escapee_observe, chaser_reward, escapee_reward,
                    mirror_world, wrap_angle)
from .spawn import Spawner, spawn_adversary
from .escapees import StaticEscapee, PolicyEscapee, SineTarget
from .rollout import StepOutcome, EpisodeResult, rollout
