"""Observability of bearing-angle target motion estimation.

Two complementary analyses:

* the rank of the stacked observability matrix ``[H(t_1); H(t_2) F; ...]``
  of the constant-velocity filter model, and
* the discrete linear system obtained by modelling the target as an
  order-``n`` polynomial in time, whose unknowns are the relative-motion
  coefficients and the target size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bearing_angle.errors import (
    InsufficientWindowError,
    UnderdeterminedError,
    UnobservableError,
)
from bearing_angle.filters import transition_matrix
from bearing_angle.geometry import linearized_angle, subtended_angle_exact
from bearing_angle.sim.motion import PolynomialMotion

EXCESS_ORDER_TOL = 1e-12
RANK_TOL_FACTOR = 100.0


@dataclass(frozen=True, eq=False)
class ObservationWindow:
    """Noise-free (or recorded) bearing/angle samples on a uniform grid."""

    times: np.ndarray
    bearings: np.ndarray
    angles: np.ndarray
    observer_positions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        g = np.asarray(self.bearings, dtype=float).reshape(-1, 3)
        th = np.asarray(self.angles, dtype=float).reshape(-1)
        po = np.asarray(self.observer_positions, dtype=float).reshape(-1, 3)
        if not (len(t) == len(g) == len(th) == len(po)) or len(t) < 1:
            raise InsufficientWindowError("window series must be non-empty and of equal length")
        if len(t) > 1:
            d = np.diff(t)
            if np.any(d <= 0) or np.ptp(d) > 1e-9:
                raise InsufficientWindowError("window times must be strictly increasing and uniformly spaced")
        for name, value in (("times", t), ("bearings", g), ("angles", th), ("observer_positions", po)):
            object.__setattr__(self, name, value)

    def __len__(self):
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    def head(self, count: int) -> "ObservationWindow":
        return ObservationWindow(self.times[:count], self.bearings[:count],
                                 self.angles[:count], self.observer_positions[:count])


def window_from_motion(target_motion, observer_motion, size: float, times,
                       angle_model: str = "exact") -> ObservationWindow:
    """Sample noise-free measurements from two motion models.

    Motions expose ``state(t) -> (position, velocity, acceleration)``.
    ``angle_model="exact"`` produces ``2 arctan(size / 2r)``;
    ``"small_angle"`` produces ``size / r``.
    """
    times = np.asarray(times, dtype=float)
    g, th, po = [], [], []
    for t in times:
        pt = target_motion.state(t)[0]
        p_o = observer_motion.state(t)[0]
        rel = pt - p_o
        r = float(np.linalg.norm(rel))
        g.append(rel / r)
        th.append(float(subtended_angle_exact(size, r)) if angle_model == "exact" else size / r)
        po.append(p_o)
    return ObservationWindow(times, np.array(g), np.array(th), np.array(po))


@dataclass
class ObservabilityReport:
    rank: int
    state_dim: int
    null_basis: list
    verdict: str
    singular_values: list = field(default_factory=list)

    @property
    def observable(self) -> bool:
        return self.verdict == "observable"

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "state_dim": self.state_dim,
            "verdict": self.verdict,
            "null_basis": [list(map(float, v)) for v in self.null_basis],
            "singular_values": [float(s) for s in self.singular_values],
        }


def measurement_block(bearing, angle, angle_model: str = "exact") -> np.ndarray:
    """The 6x7 pseudo-linear measurement matrix for a noise-free sample."""
    g = np.asarray(bearing, dtype=float)
    th = float(linearized_angle(angle, angle_model))
    H = np.zeros((6, 7))
    H[0:3, 0:3] = np.eye(3) - np.outer(g, g)
    H[3:6, 0:3] = th * np.eye(3)
    H[3:6, 6] = -g
    return H


def observability_matrix(bearings, angles, dt: float, angle_model: str = "exact") -> np.ndarray:
    """Stack ``H(t_i) F^(i-1)`` for any number of samples (including one)."""
    F = transition_matrix(dt)
    blocks, Fi = [], np.eye(7)
    for g, th in zip(np.asarray(bearings), np.asarray(angles)):
        blocks.append(measurement_block(g, th, angle_model) @ Fi)
        Fi = F @ Fi
    return np.vstack(blocks)


def build_observability_matrix(window: ObservationWindow, angle_model: str = "exact") -> np.ndarray:
    if len(window) < 2:
        raise InsufficientWindowError("observability matrix needs at least 2 samples")
    return observability_matrix(window.bearings, window.angles, window.dt, angle_model)


def rank_tolerance(singular_values, shape) -> float:
    smax = float(singular_values[0]) if len(singular_values) else 0.0
    return max(shape) * smax * np.finfo(float).eps * RANK_TOL_FACTOR


def analyze_rank(Q, state_dim: int | None = None) -> ObservabilityReport:
    """Numerical rank and null space of ``Q`` from its SVD."""
    Q = np.asarray(Q, dtype=float)
    state_dim = Q.shape[1] if state_dim is None else state_dim
    _, s, Vt = np.linalg.svd(Q)
    tol = rank_tolerance(s, Q.shape)
    rank = int(np.sum(s > tol))
    null = [Vt[i].copy() for i in range(rank, state_dim)]
    verdict = "observable" if rank == state_dim else "unobservable"
    return ObservabilityReport(rank, state_dim, null, verdict, list(s))


def observer_excess_order(observer: PolynomialMotion, target_order: int) -> bool:
    """True iff the observer has non-negligible motion terms above ``target_order``."""
    c = observer.coefficients
    if len(c) <= target_order + 1:
        return False
    return bool(np.any(np.linalg.norm(c[target_order + 1:], axis=1) > EXCESS_ORDER_TOL))


def _vandermonde(tau, order):
    return tau[:, None] ** np.arange(order + 1)


def fit_observer_polynomial(window: ObservationWindow, order: int) -> np.ndarray:
    """Least-squares order-``order`` fit to the observer positions in shifted time.

    Returns coefficients of shape ``(order + 1, 3)`` in ``tau = t - t_1``.
    """
    tau = window.times - window.times[0]
    V = _vandermonde(tau, order)
    coef, *_ = np.linalg.lstsq(V, window.observer_positions, rcond=None)
    return coef


def stack_discrete_system(window: ObservationWindow, target_order: int,
                          angle_model: str = "exact") -> tuple[np.ndarray, np.ndarray]:
    """Build ``A X = h`` over all samples of ``window``.

    ``X = [s_0, ..., s_n, size]`` where ``s_j`` are the coefficients of the
    relative motion ``p_T - (observer polynomial part)`` in shifted time
    ``tau = t - t_1``.  Each sample contributes
    ``[I, tau I, ..., tau^n I, -g / theta]`` and the observer's
    higher-order motion, taken as the residual of an order-``n``
    least-squares fit to the observer positions.
    """
    n = int(target_order)
    N = len(window)
    if N < n + 2:
        raise UnderdeterminedError(
            f"insufficient observations: an order-{n} target needs at least {n + 2}, got {N}")
    tau = window.times - window.times[0]
    th = linearized_angle(window.angles, angle_model)
    rho = -window.bearings / th[:, None]
    A = np.zeros((3 * N, 3 * n + 4))
    for i in range(N):
        rows = slice(3 * i, 3 * i + 3)
        for j in range(n + 1):
            A[rows, 3 * j:3 * j + 3] = tau[i] ** j * np.eye(3)
        A[rows, -1] = rho[i]
    V = _vandermonde(tau, n)
    h = (window.observer_positions - V @ fit_observer_polynomial(window, n)).reshape(-1)
    return A, h


@dataclass
class RecoveredSolution:
    relative_coefficients: np.ndarray
    size: float
    residual_norm: float
    conditioning: float
    observer_coefficients: np.ndarray | None = None
    time_origin: float = 0.0

    @property
    def order(self) -> int:
        return len(self.relative_coefficients) - 1

    @property
    def target_coefficients(self) -> np.ndarray:
        """Target polynomial in shifted time ``tau = t - time_origin``."""
        if self.observer_coefficients is None:
            raise ValueError("observer coefficients unknown; use recover_target_motion")
        return self.relative_coefficients + self.observer_coefficients

    def target_motion(self) -> PolynomialMotion:
        """Target polynomial in absolute time."""
        return PolynomialMotion(self.target_coefficients).shifted(-self.time_origin)

    def to_dict(self) -> dict:
        doc = {
            "order": self.order,
            "size": float(self.size),
            "relative_coefficients": self.relative_coefficients.tolist(),
            "residual_norm": float(self.residual_norm),
            "conditioning": float(self.conditioning),
            "time_origin": float(self.time_origin),
        }
        if self.observer_coefficients is not None:
            doc["target_coefficients"] = self.target_motion().coefficients.tolist()
        return doc


def recover_motion(A, h) -> RecoveredSolution:
    """Least-squares solve of the stacked system; rank-deficient systems raise."""
    A = np.asarray(A, dtype=float)
    h = np.asarray(h, dtype=float)
    rows, cols = A.shape
    if rows < cols:
        raise UnderdeterminedError(f"insufficient observations: {rows} equations for {cols} unknowns")
    _, s, Vt = np.linalg.svd(A)
    if s[-1] <= rank_tolerance(s, A.shape):
        raise UnobservableError(
            "stacked system is rank deficient: observer lacks higher-order motion",
            null_direction=Vt[-1].copy(), singular_values=s)
    X, *_ = np.linalg.lstsq(A, h, rcond=None)
    n = (cols - 4) // 3
    coeffs = X[:-1].reshape(n + 1, 3)
    return RecoveredSolution(coeffs, float(X[-1]), float(np.linalg.norm(A @ X - h)), float(s[-1]))


def recover_target_motion(window: ObservationWindow, target_order: int,
                          angle_model: str = "exact") -> RecoveredSolution:
    """Fit, stack and solve; the result can rebuild the target trajectory."""
    A, h = stack_discrete_system(window, target_order, angle_model)
    sol = recover_motion(A, h)
    sol.observer_coefficients = fit_observer_polynomial(window, target_order)
    sol.time_origin = float(window.times[0])
    return sol
