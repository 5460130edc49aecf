"""Observer guidance laws: proportional navigation and range tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bearing_angle.errors import ConfigurationError, GuidanceSingularity
from bearing_angle.geometry import rotation_matrix

GUIDANCE_KINDS = ("png", "range_tracking")


@dataclass(frozen=True)
class GuidanceLaw:
    kind: str = "png"
    navigation_gain: float = 1.0
    track_gain: float = 3.0
    desired_range: float = 3.0
    speed_limit: float = 3.0

    def __post_init__(self):
        if self.kind not in GUIDANCE_KINDS:
            raise ConfigurationError(f"guidance kind must be one of {GUIDANCE_KINDS}")
        if min(self.navigation_gain, self.track_gain, self.desired_range, self.speed_limit) <= 0:
            raise ConfigurationError("guidance gains, desired range and speed limit must be positive")


def los_rate(observer_pos, observer_vel, target_pos, target_vel) -> np.ndarray:
    """Angular-velocity vector of the line of sight, ``r x v_rel / |r|^2``."""
    r = np.asarray(target_pos, float) - np.asarray(observer_pos, float)
    r2 = float(r @ r)
    if r2 == 0.0:
        raise GuidanceSingularity("observer and target coincide")
    v_rel = np.asarray(target_vel, float) - np.asarray(observer_vel, float)
    return np.cross(r, v_rel) / r2


def png_command(observer, target, gain: float, speed: float, dt: float) -> np.ndarray:
    """Constant-speed velocity after one step of proportional navigation.

    ``observer`` and ``target`` are ``(position, velocity)`` pairs.  The
    velocity direction is rotated about the line-of-sight rate axis by
    ``gain * |los_rate| * dt``.
    """
    p_o, v_o = observer
    p_t, v_t = target
    omega = los_rate(p_o, v_o, p_t, v_t)
    v_o = np.asarray(v_o, float)
    nv = np.linalg.norm(v_o)
    heading = v_o / nv if nv > 0 else (np.asarray(p_t, float) - np.asarray(p_o, float))
    heading = heading / np.linalg.norm(heading)
    w = np.linalg.norm(omega)
    if w > 0:
        heading = rotation_matrix(omega / w, gain * w * dt) @ heading
    return speed * heading


def range_tracking_command(observer_pos, target_pos, target_vel, law: GuidanceLaw) -> np.ndarray:
    """Follow the target at ``desired_range``; magnitude clamped to ``speed_limit``."""
    rel = np.asarray(target_pos, float) - np.asarray(observer_pos, float)
    r = float(np.linalg.norm(rel))
    if r == 0.0:
        raise GuidanceSingularity("observer and target coincide")
    g = rel / r
    cmd = np.asarray(target_vel, float) + law.track_gain * (r * r - law.desired_range ** 2) / (r * r) * g
    n = float(np.linalg.norm(cmd))
    if n > law.speed_limit:
        cmd = cmd * (law.speed_limit / n)
    return cmd


def initial_heading_velocity(observer_pos, target_pos, speed: float) -> np.ndarray:
    d = np.asarray(target_pos, float) - np.asarray(observer_pos, float)
    return speed * d / math.sqrt(float(d @ d))
