"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np

from bearing_angle.errors import SchemaError

MEASUREMENT_COLUMNS = ("t", "gx", "gy", "gz", "theta", "pox", "poy", "poz")
GRID_TOL = 1e-9


def check_uniform_grid(times, dt: float, allow_gaps: bool = True) -> np.ndarray:
    """Check that ``times`` increase on a grid of spacing ``dt``.

    Gaps of whole multiples of ``dt`` are accepted when ``allow_gaps``.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise SchemaError("t: at least one sample is required")
    if not np.all(np.isfinite(t)):
        raise SchemaError("t: non-finite time stamp")
    steps = np.diff(t) / dt
    whole = np.round(steps)
    if np.any(whole < 1) or np.any(np.abs(steps - whole) * dt > GRID_TOL * max(1.0, abs(t).max())):
        raise SchemaError(f"t: samples are not on a uniform grid of spacing {dt}")
    if not allow_gaps and np.any(whole != 1):
        raise SchemaError("t: gap in time grid")
    return t


def check_measurement_array(X, dt: float) -> np.ndarray:
    """Validate an ``(N, 8)`` measurement table (see ``MEASUREMENT_COLUMNS``)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise SchemaError("measurement table is empty")
    if X.shape[1] != len(MEASUREMENT_COLUMNS):
        raise SchemaError(f"expected {len(MEASUREMENT_COLUMNS)} columns {MEASUREMENT_COLUMNS}, got {X.shape[1]}")
    check_uniform_grid(X[:, 0], dt)
    for j, name in enumerate(MEASUREMENT_COLUMNS[5:], start=5):
        if not np.all(np.isfinite(X[:, j])):
            raise SchemaError(f"{name}: observer position must be finite")
    measured = np.all(np.isfinite(X[:, 1:5]), axis=1)
    if not measured.any():
        raise SchemaError("theta: no complete measurement rows")
    norms = np.linalg.norm(X[measured, 1:4], axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise SchemaError("gx: bearing columns must form unit vectors")
    th = X[measured, 4]
    if np.any((th <= 0) | (th >= np.pi / 2)):
        raise SchemaError("theta: angles must lie in (0, pi/2)")
    return X
