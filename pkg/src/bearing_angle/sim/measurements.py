"""Measurement synthesis: bearing rotation noise, angle noise, size profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bearing_angle.errors import ConfigurationError
from bearing_angle.geometry import Measurement, subtended_angle_exact

# per step: rotation axis (3 normals), rotation angle, angle noise
DRAWS_PER_STEP = 5
ANGLE_FLOOR = 1e-9
SIZE_PROFILES = ("constant", "spinning_square")


@dataclass(frozen=True)
class NoiseModel:
    """``sigma_mu`` is the std of the bearing rotation angle (rad)."""

    sigma_mu: float = 0.01
    sigma_w: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.sigma_mu < 0 or self.sigma_w < 0:
            raise ConfigurationError("noise sigmas must be non-negative")

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)


@dataclass(frozen=True)
class SizeProfile:
    kind: str = "constant"
    base_size: float = 1.0
    spin_rate: float = 0.0

    def __post_init__(self):
        if self.kind not in SIZE_PROFILES:
            raise ConfigurationError(f"size profile must be one of {SIZE_PROFILES}")
        if self.base_size <= 0:
            raise ConfigurationError("base_size must be positive")


def effective_size(profile: SizeProfile, bearing, t: float) -> float:
    """Target extent orthogonal to the line of sight.

    A square of side ``a`` spinning about the vertical presents a silhouette
    of width ``a (|cos phi| + |sin phi|)`` where ``phi`` is the spin angle
    relative to the bearing azimuth.
    """
    if profile.kind == "constant":
        return profile.base_size
    g = np.asarray(bearing, dtype=float)
    phi = profile.spin_rate * t - math.atan2(g[1], g[0])
    return profile.base_size * (abs(math.cos(phi)) + abs(math.sin(phi)))


def draw_noise(rng: np.random.Generator, n_steps: int) -> np.ndarray:
    """Standard-normal draws in the fixed per-step order, shape ``(n_steps, 5)``."""
    return rng.standard_normal((n_steps, DRAWS_PER_STEP))


def apply_noise(bearings, angles, draws, noise: NoiseModel):
    """Corrupt true bearings/angles with pre-drawn standard normals.

    Broadcasts over leading axes: ``bearings (..., 3)``, ``angles (...)``,
    ``draws (..., 5)``.  Bearings are rotated by ``sigma_mu * draws[..., 3]``
    about the axis ``draws[..., :3] / |draws[..., :3]|`` (uniform on the
    sphere); angles receive additive Gaussian noise and are clamped to
    ``(0, pi/2)``.
    """
    g = np.asarray(bearings, dtype=float)
    draws = np.asarray(draws, dtype=float)
    axis = draws[..., 0:3]
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    eps = noise.sigma_mu * draws[..., 3]
    c, s = np.cos(eps)[..., None], np.sin(eps)[..., None]
    dot = np.sum(axis * g, axis=-1, keepdims=True)
    g_hat = g * c + np.cross(axis, g) * s + axis * dot * (1.0 - c)
    g_hat = g_hat / np.linalg.norm(g_hat, axis=-1, keepdims=True)
    th = np.asarray(angles, dtype=float) + noise.sigma_w * draws[..., 4]
    th = np.clip(th, ANGLE_FLOOR, math.pi / 2 - ANGLE_FLOOR)
    return g_hat, th


def true_measurement(target_pos, observer_pos, size: float):
    rel = np.asarray(target_pos, float) - np.asarray(observer_pos, float)
    r = float(np.linalg.norm(rel))
    if r <= 0:
        raise ConfigurationError("target and observer coincide")
    return rel / r, float(subtended_angle_exact(size, r))


def synthesize_measurement(target_pos, observer_pos, size: float, noise: NoiseModel,
                           rng: np.random.Generator) -> Measurement:
    g, th = true_measurement(target_pos, observer_pos, size)
    g_hat, th_hat = apply_noise(g, th, draw_noise(rng, 1)[0], noise)
    return Measurement(g_hat, float(th_hat))
