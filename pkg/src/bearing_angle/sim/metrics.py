"""Estimation-error metrics and NEES consistency bounds."""

from __future__ import annotations

import numpy as np
from scipy import stats


def nees(true_state, estimate, covariance, return_flag: bool = False):
    """Normalized estimation error squared ``e^T P^-1 e``.

    A singular covariance falls back to the pseudoinverse; with
    ``return_flag=True`` the result is ``(value, used_pinv)``.
    """
    e = np.asarray(true_state, float) - np.asarray(estimate, float)
    P = np.asarray(covariance, float)
    used_pinv = False
    try:
        if np.linalg.cond(P) > 1.0 / np.finfo(float).eps:
            raise np.linalg.LinAlgError
        val = float(e @ np.linalg.solve(P, e))
    except np.linalg.LinAlgError:
        used_pinv = True
        val = float(e @ np.linalg.pinv(P) @ e)
    val = max(val, 0.0)
    return (val, used_pinv) if return_flag else val


def batch_nees(errors, covariances) -> np.ndarray:
    """NEES over leading batch axes: ``errors (..., n)``, ``covariances (..., n, n)``."""
    e = np.asarray(errors, float)
    try:
        sol = np.linalg.solve(covariances, e[..., None])[..., 0]
    except np.linalg.LinAlgError:
        sol = np.einsum("...ij,...j->...i", np.linalg.pinv(covariances), e)
    return np.einsum("...i,...i->...", e, sol)


def nees_bounds(state_dim: int, runs: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided chi-square band for the run-averaged NEES of a consistent filter."""
    alpha = 1.0 - confidence
    dof = state_dim * runs
    lo, hi = stats.chi2.ppf([alpha / 2, 1 - alpha / 2], dof)
    return float(lo / runs), float(hi / runs)
