"""Kinematic motion models evaluated analytically in time."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bearing_angle.errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class PolynomialMotion:
    """``p(t) = sum_j coefficients[j] * t**j`` with 3-vector coefficients."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] < 1:
            raise ConfigurationError("coefficients must have shape (order+1, 3)")
        if not np.all(np.isfinite(c)):
            raise ConfigurationError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @property
    def order(self) -> int:
        return self.coefficients.shape[0] - 1

    def position(self, t):
        t = np.asarray(t, dtype=float)
        powers = t[..., None] ** np.arange(self.order + 1)
        return powers @ self.coefficients

    def state(self, t: float):
        """Position, velocity and acceleration at ``t``."""
        pos = np.zeros(3)
        vel = np.zeros(3)
        acc = np.zeros(3)
        for j, c in enumerate(self.coefficients):
            pos += c * t ** j
            if j >= 1:
                vel += j * c * t ** (j - 1)
            if j >= 2:
                acc += j * (j - 1) * c * t ** (j - 2)
        return pos, vel, acc

    def shifted(self, t0: float) -> "PolynomialMotion":
        """Same trajectory re-expressed in the time variable ``tau = t - t0``."""
        n = self.order
        out = np.zeros_like(self.coefficients)
        for j in range(n + 1):
            for k in range(j + 1):
                out[k] += math.comb(j, k) * t0 ** (j - k) * self.coefficients[j]
        return PolynomialMotion(out)


@dataclass(frozen=True, eq=False)
class CircularMotion:
    """Constant-speed circle in the horizontal plane through ``center``.

    ``phase`` is the initial polar angle of the agent about the centre;
    positive ``speed`` runs counter-clockwise.
    """

    center: np.ndarray
    radius: float
    speed: float
    phase: float = -math.pi / 2

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigurationError("radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    def state(self, t: float):
        w = self.speed / self.radius
        a = self.phase + w * t
        c, s = math.cos(a), math.sin(a)
        pos = self.center + self.radius * np.array([c, s, 0.0])
        vel = self.radius * w * np.array([-s, c, 0.0])
        acc = -self.radius * w * w * np.array([c, s, 0.0])
        return pos, vel, acc


@dataclass(frozen=True, eq=False)
class ShuttleMotion:
    """Back-and-forth motion on a line with constant-magnitude acceleration.

    Starting at ``start`` with speed ``speed`` along ``direction``, the agent
    decelerates at ``accel`` until it reverses and returns to ``start``, then
    the acceleration flips sign so the excursion repeats on the other side.
    The cycle has period ``4 * speed / accel``.
    """

    start: np.ndarray
    direction: np.ndarray
    speed: float
    accel: float

    def __post_init__(self):
        if self.speed <= 0 or self.accel <= 0:
            raise ConfigurationError("speed and accel must be positive")
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "direction", d / np.linalg.norm(d))
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))

    @property
    def period(self) -> float:
        return 4.0 * self.speed / self.accel

    def state(self, t: float):
        half = self.period / 2.0
        tau = math.fmod(t, self.period)
        if tau < 0:
            tau += self.period
        u, a = self.speed, self.accel
        if tau < half:
            s, v, acc = u * tau - 0.5 * a * tau ** 2, u - a * tau, -a
        else:
            tau -= half
            s, v, acc = -u * tau + 0.5 * a * tau ** 2, -u + a * tau, a
        d = self.direction
        return self.start + s * d, v * d, acc * d
