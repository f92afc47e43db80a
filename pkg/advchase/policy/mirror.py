import numpy as np
from dataclasses import dataclass

__all__ = ["MirrorMap", "mirror_state", "mirror_action", "chaser_mirror", "escapee_mirror",
           "mirrored_actions", "symmetry_gap"]


@dataclass(frozen=True)
class MirrorMap:
    """Sagittal reflection as per-entry sign flips.

    Sign vectors only, since every lateral quantity of the planar agents is a
    single coordinate. A mirror that permutes entries (left/right limbs of an
    articulated body) would need a permutation here as well.
    """
    state_signs: tuple
    action_signs: tuple

    def __post_init__(self):
        for name in ("state_signs", "action_signs"):
            signs = tuple(float(s) for s in getattr(self, name))
            if any(s not in (1.0, -1.0) for s in signs):
                raise ValueError(f"{name} entries must be +1 or -1, got {signs}")
            object.__setattr__(self, name, signs)


def _apply(signs, v, what):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (len(signs),):
        raise ValueError(f"{what} has shape {v.shape}, mirror map expects ({len(signs)},)")
    return v * np.asarray(signs)


def mirror_state(m: MirrorMap, s) -> np.ndarray:
    return _apply(m.state_signs, s, "state")


def mirror_action(m: MirrorMap, a) -> np.ndarray:
    return _apply(m.action_signs, a, "action")


def chaser_mirror() -> MirrorMap:
    # (v, omega, dx, dy, d) / (accel, turn)
    return MirrorMap(state_signs=(1, -1, 1, -1, 1), action_signs=(1, -1))


def escapee_mirror() -> MirrorMap:
    # (dx, dy, dtheta) / (speed, turn)
    return MirrorMap(state_signs=(1, -1, -1), action_signs=(1, -1))


def mirrored_actions(policy, m: MirrorMap, s):
    # (pi(s), Psi_a(pi(Psi_s(s)))) in one forward pass
    out = policy.act_batch(np.stack([np.asarray(s, dtype=np.float64), mirror_state(m, s)]))
    return out[0], mirror_action(m, out[1])


def symmetry_gap(policy, m: MirrorMap, s) -> float:
    """||pi(s) - Psi_a(pi(Psi_s(s)))||, the last term of the chaser reward."""
    a, a_m = mirrored_actions(policy, m, s)
    return float(np.linalg.norm(a - a_m))
