import math
from dataclasses import dataclass

import numpy as np

from .config import ArenaConfig, ESCAPEE_V_MAX, ESCAPEE_OMEGA_MAX

__all__ = ["ChaserState", "DotBotState", "dotbot_step", "chaser_step", "clip_twist",
           "sine_curve", "scripted_sine_target"]


@dataclass(frozen=True)
class ChaserState:
    x: float = 0.0
    y: float = 0.0
    phi: float = 0.0
    v: float = 0.0
    omega: float = 0.0

    def mirrored(self) -> "ChaserState":
        return ChaserState(self.x, -self.y, -self.phi, self.v, -self.omega)

    def frozen(self) -> "ChaserState":
        return ChaserState(self.x, self.y, self.phi, 0.0, 0.0)


@dataclass(frozen=True)
class DotBotState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def mirrored(self) -> "DotBotState":
        return DotBotState(self.x, -self.y, -self.theta)


def clip_twist(v, omega, v_max=ESCAPEE_V_MAX, omega_max=ESCAPEE_OMEGA_MAX):
    return min(max(float(v), 0.0), v_max), min(max(float(omega), -omega_max), omega_max)


def dotbot_step(s: DotBotState, twist, dt: float,
                v_max=ESCAPEE_V_MAX, omega_max=ESCAPEE_OMEGA_MAX) -> DotBotState:
    # position moves along the pre-step heading
    v, omega = clip_twist(twist[0], twist[1], v_max, omega_max)
    return DotBotState(
        x=s.x + v * math.cos(s.theta) * dt,
        y=s.y + v * math.sin(s.theta) * dt,
        theta=s.theta + omega * dt,
    )


def chaser_step(s: ChaserState, action, dt: float, cfg: ArenaConfig):
    """Legged-surrogate chaser: speed integrates a bounded longitudinal accel,
    turn rate lags its command by tau_omega, and the robot falls when the
    lateral acceleration |v' * omega'| exceeds a_lat_max.

    Returns (next_state, fell).
    """
    a_cmd = min(max(float(action[0]), -1.0), 1.0)
    w_cmd = min(max(float(action[1]), -1.0), 1.0)
    v = min(max(s.v + a_cmd * cfg.a_max * dt, 0.0), cfg.v_max)
    omega = s.omega + (w_cmd * cfg.omega_max - s.omega) * min(1.0, dt / cfg.tau_omega)
    nxt = ChaserState(
        x=s.x + v * math.cos(s.phi) * dt,
        y=s.y + v * math.sin(s.phi) * dt,
        phi=s.phi + omega * dt,
        v=v,
        omega=omega,
    )
    return nxt, abs(v * omega) > cfg.a_lat_max


def sine_curve(A, w, x):
    return A * math.sin(w * (x - 2.0))


def _dx_ds(A, w, x):
    slope = A * w * math.cos(w * (x - 2.0))
    return 1.0 / math.sqrt(1.0 + slope * slope)


def scripted_sine_target(A, w, s: DotBotState, dt, speed=2.0, substeps=8) -> DotBotState:
    """Advance a target along y = A sin(w (x - 2)) by arc length speed * dt.

    dx/ds = 1 / sqrt(1 + y'(x)^2) is integrated with RK4 substeps; the
    heading is the curve tangent at the new point.
    """
    h = speed * dt / substeps
    x = s.x
    for _ in range(substeps):
        k1 = _dx_ds(A, w, x)
        k2 = _dx_ds(A, w, x + 0.5 * h * k1)
        k3 = _dx_ds(A, w, x + 0.5 * h * k2)
        k4 = _dx_ds(A, w, x + h * k3)
        x += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return DotBotState(x=x, y=sine_curve(A, w, x), theta=math.atan2(A * w * math.cos(w * (x - 2.0)), 1.0))


def arc_length(A, w, x0, x1, n=1000):
    """Arc length of the sine curve between x0 and x1 (composite Simpson)."""
    n += n % 2
    xs = np.linspace(x0, x1, n + 1)
    g = np.sqrt(1.0 + (A * w * np.cos(w * (xs - 2.0))) ** 2)
    h = (x1 - x0) / n
    return float(h / 3 * (g[0] + g[-1] + 4 * g[1:-1:2].sum() + 2 * g[2:-1:2].sum()))
