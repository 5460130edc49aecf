"""Pseudo-linear Kalman filters for bearing-angle and bearing-only tracking.

The bearing-angle filter estimates ``x = [p_T, v_T, size]`` (7 states); the
bearing-only baseline estimates ``[p_T, v_T]`` (6 states).  Every function
here broadcasts over leading batch axes so a Monte-Carlo ensemble can be
filtered in one pass: a state of shape ``(B, 7)`` with covariance
``(B, 7, 7)`` is updated with bearings ``(B, 3)`` and angles ``(B,)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from bearing_angle.errors import ConfigurationError, NumericalFailure, RangeEstimateError
from bearing_angle.geometry import (
    ANGLE_MODELS,
    Measurement,
    linearized_angle,
    linearized_angle_slope,
)

MODES = ("bearing_angle", "bearing_only")
DEFAULT_INITIAL_VARIANCE = 0.1


@dataclass(frozen=True)
class TargetState:
    position: np.ndarray
    velocity: np.ndarray
    size: float | None = None

    def to_vector(self) -> np.ndarray:
        parts = [np.asarray(self.position, float), np.asarray(self.velocity, float)]
        if self.size is not None:
            parts.append(np.array([float(self.size)]))
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, x) -> "TargetState":
        x = np.asarray(x, dtype=float)
        size = float(x[6]) if x.shape[-1] == 7 else None
        return cls(x[:3].copy(), x[3:6].copy(), size)


@dataclass(frozen=True)
class FilterConfig:
    """Filter tuning.

    ``sigma_mu`` is the per-axis std of the additive bearing noise and
    ``sigma_w`` the std of the angle noise.  ``angle_model="exact"`` feeds
    ``2 tan(theta/2)`` to the angle block so the pseudo-linear relation is
    exact for angles generated as ``2 arctan(size / 2r)``; ``"small_angle"``
    uses the measured angle directly.
    """

    dt: float = 0.02
    sigma_v: float = 1e-3
    sigma_ell: float = 1e-4
    sigma_mu: float = 0.01
    sigma_w: float = 0.01
    mode: str = "bearing_angle"
    angle_model: str = "exact"
    min_range: float = 0.1
    min_size: float = 0.01

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        for name in ("sigma_v", "sigma_ell", "sigma_mu", "sigma_w"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.angle_model not in ANGLE_MODELS:
            raise ConfigurationError(f"angle_model must be one of {ANGLE_MODELS}")
        if self.min_range <= 0 or self.min_size <= 0:
            raise ConfigurationError("min_range and min_size must be positive")

    @property
    def state_dim(self) -> int:
        return 7 if self.mode == "bearing_angle" else 6


@dataclass(frozen=True, eq=False)
class FilterState:
    estimate: np.ndarray
    covariance: np.ndarray
    time: float = 0.0

    @property
    def target(self) -> TargetState:
        return TargetState.from_vector(self.estimate)

    @property
    def state_dim(self) -> int:
        return self.estimate.shape[-1]


@dataclass(frozen=True, eq=False)
class PseudoMeasurement:
    z: np.ndarray
    H: np.ndarray
    noise_cov: np.ndarray


def initial_state(position, velocity, size=None, cfg: FilterConfig | None = None,
                  covariance=None, time: float = 0.0) -> FilterState:
    """Build a filter state; covariance defaults to ``0.1 I``."""
    cfg = cfg or FilterConfig()
    parts = [np.asarray(position, float), np.asarray(velocity, float)]
    if cfg.mode == "bearing_angle":
        if size is None:
            raise ConfigurationError("bearing_angle mode needs an initial size")
        parts.append(np.array([float(size)]))
    x = np.concatenate(parts)
    n = cfg.state_dim
    P = DEFAULT_INITIAL_VARIANCE * np.eye(n) if covariance is None else np.array(covariance, dtype=float)
    if P.shape != (n, n):
        raise ConfigurationError(f"covariance must be {n}x{n}")
    return FilterState(x, P, float(time))


def transition_matrix(dt: float, state_dim: int = 7) -> np.ndarray:
    """Constant-velocity transition; the size state (if any) is held constant."""
    F = np.eye(state_dim)
    F[0:3, 3:6] = dt * np.eye(3)
    return F


def process_noise(cfg: FilterConfig) -> np.ndarray:
    q = [0.0, 0.0, 0.0] + [cfg.sigma_v ** 2] * 3
    if cfg.mode == "bearing_angle":
        q.append(cfg.sigma_ell ** 2)
    return np.diag(q)


def predict(state: FilterState, cfg: FilterConfig) -> FilterState:
    F = transition_matrix(cfg.dt, state.state_dim)
    x = _matvec(F, state.estimate)
    P = F @ state.covariance @ F.T + process_noise(cfg)
    return FilterState(x, P, state.time + cfg.dt)


def _matvec(A, v):
    return (A @ v[..., None])[..., 0]


def _projector(g):
    return np.eye(3) - g[..., :, None] * g[..., None, :]


def pseudo_measurement_arrays(bearing, angle, observer_pos, range_estimate, cfg: FilterConfig):
    """Batched construction of ``(z, H, noise_cov)``.

    Shapes: bearing/observer_pos ``(..., 3)``, angle/range ``(...)``.
    """
    g = np.asarray(bearing, dtype=float)
    po = np.asarray(observer_pos, dtype=float)
    r = np.asarray(range_estimate, dtype=float)
    if np.any(~(r > 0)):
        raise RangeEstimateError("range estimate must be positive")
    batch = np.broadcast_shapes(g.shape[:-1], po.shape[:-1], r.shape)
    Pg = _projector(g)
    top_z = _matvec(Pg, po)
    r2 = (r ** 2)[..., None, None]
    if cfg.mode == "bearing_only":
        H = np.zeros(batch + (3, 6))
        H[..., :, 0:3] = Pg
        R = r2 * cfg.sigma_mu ** 2 * (Pg @ np.swapaxes(Pg, -1, -2))
        return top_z, H, R

    raw = np.asarray(angle, dtype=float)
    th = linearized_angle(raw, cfg.angle_model)
    sw = cfg.sigma_w * linearized_angle_slope(raw, cfg.angle_model)
    eye = np.broadcast_to(np.eye(3), batch + (3, 3))
    z = np.concatenate([top_z, th[..., None] * po], axis=-1)
    H = np.zeros(batch + (6, 7))
    H[..., 0:3, 0:3] = Pg
    H[..., 3:6, 0:3] = th[..., None, None] * eye
    H[..., 3:6, 6] = -g
    E = np.zeros(batch + (6, 4))
    E[..., 0:3, 0:3] = Pg
    E[..., 3:6, 0:3] = th[..., None, None] * eye
    E[..., 3:6, 3] = -g
    E = r[..., None, None] * E
    D = np.zeros(np.shape(sw) + (4, 4))
    D[..., [0, 1, 2], [0, 1, 2]] = cfg.sigma_mu ** 2
    D[..., 3, 3] = sw ** 2
    R = E @ D @ np.swapaxes(E, -1, -2)
    return z, H, R


def build_pseudo_measurement(meas: Measurement, observer_pos, range_estimate: float,
                             cfg: FilterConfig) -> PseudoMeasurement:
    if not range_estimate > 0:
        raise RangeEstimateError(f"range estimate must be positive, got {range_estimate!r}")
    z, H, R = pseudo_measurement_arrays(meas.bearing, meas.angle, observer_pos, range_estimate, cfg)
    return PseudoMeasurement(z, H, R)


def _pinv_rcond(S):
    return max(S.shape[-2:]) * np.finfo(float).eps


def update(state: FilterState, pm: PseudoMeasurement, min_size: float | None = None,
           check: bool = True) -> FilterState:
    """Kalman correction with a pseudoinverted innovation covariance.

    ``min_size`` clamps the size state from below.  With ``check=False``
    non-finite results are returned instead of raising, leaving batch
    callers to mask failed members.
    """
    x, P = state.estimate, state.covariance
    H, z, R = pm.H, pm.z, pm.noise_cov
    if H.shape[-1] != x.shape[-1]:
        raise ConfigurationError(f"H has {H.shape[-1]} columns for a {x.shape[-1]}-state filter")
    Ht = np.swapaxes(H, -1, -2)
    S = H @ P @ Ht + R
    K = P @ Ht @ np.linalg.pinv(S, rcond=_pinv_rcond(S))
    innov = z - _matvec(H, x)
    x_new = x + _matvec(K, innov)
    n = x.shape[-1]
    P_new = (np.eye(n) - K @ H) @ P
    P_new = 0.5 * (P_new + np.swapaxes(P_new, -1, -2))
    if min_size is not None and n == 7:
        x_new[..., 6] = np.maximum(x_new[..., 6], min_size)
    if check and not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(P_new))):
        raise NumericalFailure("non-finite state or covariance after update")
    return FilterState(x_new, P_new, state.time)


def range_estimate(position_estimate, observer_pos, floor: float):
    r = np.linalg.norm(np.asarray(position_estimate) - np.asarray(observer_pos), axis=-1)
    return np.maximum(r, floor)


def step(state: FilterState, meas, observer_pos, cfg: FilterConfig, check: bool = True) -> FilterState:
    """Predict one ``dt`` and correct with ``meas``.

    ``meas`` is a :class:`Measurement`, or a ``(bearing, angle)`` pair of
    arrays for a batched state.  The range in the noise model comes from
    the prior position estimate.
    """
    if isinstance(meas, Measurement):
        bearing, angle = meas.bearing, meas.angle
    else:
        bearing, angle = meas
    prior = predict(state, cfg)
    r_hat = range_estimate(prior.estimate[..., 0:3], observer_pos, cfg.min_range)
    z, H, R = pseudo_measurement_arrays(bearing, angle, observer_pos, r_hat, cfg)
    return update(prior, PseudoMeasurement(z, H, R), min_size=cfg.min_size, check=check)


def with_mode(cfg: FilterConfig, mode: str) -> FilterConfig:
    return replace(cfg, mode=mode)
