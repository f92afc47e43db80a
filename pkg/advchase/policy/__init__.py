from .mlp import MlpArch, MlpPolicy, param_count, forward, encode, decode, init_params, zero_policy
from .mirror import (MirrorMap, mirror_state, mirror_action, chaser_mirror, escapee_mirror, mirrored_actions,
                     symmetry_gap)
