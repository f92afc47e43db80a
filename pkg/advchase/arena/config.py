import enum
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple, Union

from ..policy.mlp import MlpArch

__all__ = ["Cone", "Circular", "Zigzag", "SpawnConfig", "ArenaConfig", "Mode",
           "default_cone", "default_circular", "default_zigzag", "spawn_to_dict", "spawn_from_dict",
           "chaser_arch", "escapee_arch"]

ESCAPEE_V_MAX = 2.0
ESCAPEE_OMEGA_MAX = 2.0


class Mode(enum.Enum):
    CHASE_TRAINING = "chase"
    ESCAPE_TRAINING = "escape"
    EVALUATION = "eval"


@dataclass(frozen=True)
class Cone:
    half_angle: float = math.pi / 3
    r_in: float = 2.0
    r_out: float = 4.0

    def __post_init__(self):
        if not 0 < self.r_in <= self.r_out:
            raise ValueError(f"cone radii must satisfy 0 < r_in <= r_out, got {self.r_in}, {self.r_out}")
        if not 0 <= self.half_angle <= math.pi:
            raise ValueError(f"cone half_angle must lie in [0, pi], got {self.half_angle}")


@dataclass(frozen=True)
class Circular:
    r_in: float = 2.0
    r_out: float = 4.0

    def __post_init__(self):
        if not 0 < self.r_in <= self.r_out:
            raise ValueError(f"circular radii must satisfy 0 < r_in <= r_out, got {self.r_in}, {self.r_out}")


@dataclass(frozen=True)
class Zigzag:
    n_points: int = 8
    advance: float = 3.0
    lateral: float = 2.0

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError(f"zigzag needs n_points >= 2, got {self.n_points}")
        if self.advance <= 0 or self.lateral < 0:
            raise ValueError(f"zigzag advance must be > 0 and lateral >= 0, got {self.advance}, {self.lateral}")


SpawnConfig = Union[Cone, Circular, Zigzag]

_SPAWN_KINDS = {"cone": Cone, "circular": Circular, "zigzag": Zigzag}


def spawn_to_dict(spawn: SpawnConfig) -> dict:
    kind = {v: k for k, v in _SPAWN_KINDS.items()}[type(spawn)]
    return {"kind": kind, **asdict(spawn)}


def spawn_from_dict(d: dict) -> SpawnConfig:
    d = dict(d)
    return _SPAWN_KINDS[d.pop("kind")](**d)


def default_cone() -> Cone:
    return Cone()


def default_circular() -> Circular:
    return Circular()


def default_zigzag() -> Zigzag:
    return Zigzag()


@dataclass(frozen=True)
class ArenaConfig:
    """Physics constants, reward weights and spawn rule of one arena.

    2000 steps of 2 ms make the 4 s chase episode. The escapee limits are
    fixed; the chaser must be the faster robot.
    """
    dt: float = 0.002
    max_steps: int = 2000
    d_min: float = 0.5
    v_max: float = 2.5
    omega_max: float = 2.5
    a_max: float = 4.0
    a_lat_max: float = 4.0
    tau_omega: float = 0.1
    escapee_v_max: float = ESCAPEE_V_MAX
    escapee_omega_max: float = ESCAPEE_OMEGA_MAX
    w1: float = 10.0
    w2: float = 0.01
    w3: float = 0.05
    reference_action: Tuple[float, float] = (0.0, 0.0)
    fall_penalty: float = 10.0
    escape_distance: Optional[float] = None
    spawn: SpawnConfig = field(default_factory=default_cone)

    def __post_init__(self):
        object.__setattr__(self, "reference_action", tuple(float(a) for a in self.reference_action))
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.d_min > 0:
            raise ValueError(f"d_min must be > 0, got {self.d_min}")
        if (self.escapee_v_max, self.escapee_omega_max) != (ESCAPEE_V_MAX, ESCAPEE_OMEGA_MAX):
            raise ValueError("escapee limits are fixed at 2 m/s and 2 rad/s")
        if not self.v_max > self.escapee_v_max:
            raise ValueError(f"chaser v_max ({self.v_max}) must exceed escapee_v_max ({self.escapee_v_max})")
        if min(self.omega_max, self.a_max, self.a_lat_max, self.tau_omega) <= 0:
            raise ValueError("omega_max, a_max, a_lat_max and tau_omega must be > 0")
        if len(self.reference_action) != 2:
            raise ValueError(f"reference_action must have 2 entries, got {self.reference_action}")

    def with_spawn(self, spawn: SpawnConfig) -> "ArenaConfig":
        return replace(self, spawn=spawn)


def chaser_arch(hidden_dims=(64, 64)) -> MlpArch:
    # (v/v_max, omega/omega_max, dx, dy, d) -> (accel, turn)
    return MlpArch(input_dim=5, hidden_dims=tuple(hidden_dims), output_dim=2)


def escapee_arch(hidden_dims=(64, 64)) -> MlpArch:
    # (dx, dy, dtheta) -> (speed, turn)
    return MlpArch(input_dim=3, hidden_dims=tuple(hidden_dims), output_dim=2)
