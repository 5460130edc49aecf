"""scikit-learn style wrapper around the pseudo-linear filters."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from bearing_angle.filters import FilterConfig, FilterState, predict, step
from bearing_angle.geometry import linearized_angle
from bearing_angle.validation import check_measurement_array

FLAG_MEASURED = "measured"
FLAG_GAP = "gap"
FLAG_MISSING = "missing"


class BearingAngleEstimator(TransformerMixin, BaseEstimator):
    """Replay a bearing/angle stream through a pseudo-linear Kalman filter.

    ``X`` has one row per sample with columns
    ``t, gx, gy, gz, theta, pox, poy, poz`` on a uniform grid of spacing
    ``dt``.  Rows whose bearing or angle is NaN, and gaps in the time
    column, are bridged by prediction without correction.

    The filter starts one ``dt`` before the first row.  When
    ``initial_position`` is None the target is placed along the first
    bearing at the range implied by ``initial_size`` and the first angle.

    Parameters
    ----------
    mode : {"bearing_angle", "bearing_only"}
    dt, sigma_v, sigma_ell, sigma_mu, sigma_w, angle_model, min_range, min_size
        Filter tuning, see :class:`bearing_angle.filters.FilterConfig`.
    initial_position, initial_velocity : array-like of shape (3,), optional
    initial_size : float
    initial_variance : float
        Initial covariance is ``initial_variance * I``.
    """

    def __init__(self, mode="bearing_angle", dt=0.02, sigma_v=1e-3, sigma_ell=1e-4,
                 sigma_mu=0.01, sigma_w=0.01, angle_model="exact", initial_position=None,
                 initial_velocity=None, initial_size=1.0, initial_variance=0.1,
                 min_range=0.1, min_size=0.01):
        self.mode = mode
        self.dt = dt
        self.sigma_v = sigma_v
        self.sigma_ell = sigma_ell
        self.sigma_mu = sigma_mu
        self.sigma_w = sigma_w
        self.angle_model = angle_model
        self.initial_position = initial_position
        self.initial_velocity = initial_velocity
        self.initial_size = initial_size
        self.initial_variance = initial_variance
        self.min_range = min_range
        self.min_size = min_size

    def filter_config(self) -> FilterConfig:
        return FilterConfig(
            dt=self.dt, sigma_v=self.sigma_v, sigma_ell=self.sigma_ell, sigma_mu=self.sigma_mu,
            sigma_w=self.sigma_w, mode=self.mode, angle_model=self.angle_model,
            min_range=self.min_range, min_size=self.min_size,
        )

    def _initial_state(self, X, cfg):
        n = cfg.state_dim
        if self.initial_position is not None:
            p0 = np.asarray(self.initial_position, dtype=float)
        else:
            first = X[np.flatnonzero(np.isfinite(X[:, 4]))[0]]
            r0 = self.initial_size / float(linearized_angle(first[4], cfg.angle_model))
            p0 = first[5:8] + r0 * first[1:4]
        v0 = np.zeros(3) if self.initial_velocity is None else np.asarray(self.initial_velocity, dtype=float)
        x0 = np.concatenate([p0, v0] + ([[self.initial_size]] if n == 7 else []))
        P0 = self.initial_variance * np.eye(n)
        return FilterState(x0[None], P0[None], float(X[0, 0]) - cfg.dt)

    def _run(self, X):
        cfg = self.filter_config()
        X = check_measurement_array(X, cfg.dt)
        state = self._initial_state(X, cfg)
        times, est, cov, flags, rows = [], [], [], [], []
        for i, row in enumerate(X):
            n_gap = int(round((row[0] - state.time) / cfg.dt)) - 1
            for _ in range(n_gap):
                state = predict(state, cfg)
                times.append(state.time)
                est.append(state.estimate[0])
                cov.append(state.covariance[0])
                flags.append(FLAG_GAP)
            if np.all(np.isfinite(row[1:5])):
                state = step(state, (row[None, 1:4], row[None, 4]), row[5:8], cfg)
                flags.append(FLAG_MEASURED)
            else:
                state = predict(state, cfg)
                flags.append(FLAG_MISSING)
            state = FilterState(state.estimate, state.covariance, float(row[0]))
            times.append(state.time)
            est.append(state.estimate[0])
            cov.append(state.covariance[0])
            rows.append(len(times) - 1)
        return state, np.array(times), np.array(est), np.array(cov), np.array(flags), np.array(rows)

    def fit(self, X, y=None):
        """Filter the stream; results land in ``times_``, ``estimates_``,
        ``covariances_`` and ``flags_`` (gap rows included)."""
        state, self.times_, self.estimates_, self.covariances_, self.flags_, self.row_index_ = self._run(X)
        self.state_ = FilterState(state.estimate[0], state.covariance[0], state.time)
        self.n_features_in_ = 8
        return self

    def transform(self, X):
        """Posterior state estimates, one row per input row."""
        check_is_fitted(self, "state_")
        _, _, est, _, _, rows = self._run(X)
        return est[rows]

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X).estimates_[self.row_index_]

    def predict(self, times):
        """Constant-velocity extrapolation of the final position estimate."""
        check_is_fitted(self, "state_")
        t = np.asarray(times, dtype=float).reshape(-1)
        x = self.state_.estimate
        return x[None, 0:3] + (t - self.state_.time)[:, None] * x[None, 3:6]
