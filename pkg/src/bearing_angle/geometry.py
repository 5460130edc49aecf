"""Pin-hole camera conversions between bounding boxes and bearing/angle pairs.

Pixel coordinates follow the usual convention: ``x`` grows to the right,
``y`` grows downward, and the principal point sits at the image centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from bearing_angle.errors import (
    ConfigurationError,
    NormalizationError,
    ZeroSizeError,
)

UNIT_TOL = 1e-12
ANGLE_MODELS = ("exact", "small_angle")


def unit(v, tol=UNIT_TOL):
    """Return ``v / ||v||``; raise on a zero vector."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n <= tol:
        raise NormalizationError(f"cannot normalize vector with norm {n}")
    return v / n


def check_unit(v, tol=UNIT_TOL, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise NormalizationError(f"{name} must be a 3-vector, got shape {v.shape}")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise NormalizationError(f"{name} is not unit-norm (|v| = {np.linalg.norm(v)!r})")
    return v


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pin-hole camera with principal point at the image centre.

    ``focal_length`` and ``pixel_size`` share a length unit; only their
    ratio (the focal length in pixels) enters the geometry.
    """

    focal_length: float
    pixel_size: float
    image_width: int
    image_height: int
    cam_to_world: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if self.focal_length <= 0 or self.pixel_size <= 0:
            raise ConfigurationError("focal_length and pixel_size must be positive")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ConfigurationError("image dimensions must be positive")
        R = np.asarray(self.cam_to_world, dtype=float)
        if R.shape != (3, 3):
            raise ConfigurationError("cam_to_world must be 3x3")
        if np.linalg.norm(R.T @ R - np.eye(3)) >= 1e-10 or np.linalg.det(R) <= 0:
            raise ConfigurationError("cam_to_world must be a proper rotation")
        object.__setattr__(self, "cam_to_world", R)

    @property
    def focal_pixels(self) -> float:
        return self.focal_length / self.pixel_size

    @property
    def principal_point(self) -> tuple[float, float]:
        return self.image_width / 2.0, self.image_height / 2.0

    @property
    def intrinsic_matrix(self) -> np.ndarray:
        fp = self.focal_pixels
        cx, cy = self.principal_point
        return np.array([[fp, 0.0, cx], [0.0, fp, cy], [0.0, 0.0, 1.0]])

    def with_rotation(self, cam_to_world) -> "CameraModel":
        return CameraModel(
            self.focal_length, self.pixel_size, self.image_width, self.image_height,
            np.asarray(cam_to_world, dtype=float),
        )


@dataclass(frozen=True)
class BoundingBox:
    center_x: float
    center_y: float
    size: float


@dataclass(frozen=True, eq=False)
class Measurement:
    """World-frame unit bearing plus the subtended angle in radians."""

    bearing: np.ndarray
    angle: float

    def __post_init__(self):
        g = check_unit(self.bearing, name="bearing")
        object.__setattr__(self, "bearing", g)
        if not 0.0 < self.angle < math.pi / 2:
            raise ConfigurationError(f"angle must lie in (0, pi/2), got {self.angle!r}")


def pixel_to_bearing(box: BoundingBox, cam: CameraModel) -> np.ndarray:
    """World-frame unit vector from the camera centre through the box centre."""
    K = cam.intrinsic_matrix
    try:
        ray = np.linalg.solve(K, np.array([box.center_x, box.center_y, 1.0]))
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError("intrinsic matrix is singular") from exc
    return unit(cam.cam_to_world @ ray)


def bbox_to_angle(box: BoundingBox, cam: CameraModel, size_axis: str = "width") -> float:
    """Angle subtended at the camera centre by the box edges.

    Uses the law of cosines over the pixel distances from the camera centre
    to the midpoints of the two box sides measured along ``size_axis``.
    Offsets from the principal point are taken as absolute values; the
    formula is symmetric in them.
    """
    s = float(box.size)
    if s <= 0:
        raise ZeroSizeError("bounding box size must be positive")
    cx, cy = cam.principal_point
    dx = abs(box.center_x - cx)
    dy = abs(box.center_y - cy)
    if size_axis == "height":
        dx, dy = dy, dx
    elif size_axis != "width":
        raise ConfigurationError(f"size_axis must be 'width' or 'height', got {size_axis!r}")
    fp2 = cam.focal_pixels ** 2
    l_left = math.sqrt(fp2 + (dx - s / 2) ** 2 + dy ** 2)
    l_right = math.sqrt(fp2 + (dx + s / 2) ** 2 + dy ** 2)
    c = (l_left ** 2 + l_right ** 2 - s ** 2) / (2 * l_left * l_right)
    return math.acos(min(1.0, max(-1.0, c)))


def subtended_angle_exact(size, range_):
    """``2 arctan(size / (2 range))``; vectorized over numpy inputs."""
    return 2.0 * np.arctan(np.asarray(size, dtype=float) / (2.0 * np.asarray(range_, dtype=float)))


def small_angle_relative_error(size, range_):
    """Relative error of the ``size / range`` approximation to the exact angle."""
    exact = subtended_angle_exact(size, range_)
    return np.abs(np.asarray(size) / np.asarray(range_) - exact) / exact


def linearized_angle(theta, model: str = "exact"):
    """Map a subtended angle to the quantity ``size / range``.

    ``"exact"`` inverts ``theta = 2 arctan(size / 2r)`` as ``2 tan(theta/2)``;
    ``"small_angle"`` returns ``theta`` unchanged.
    """
    if model == "exact":
        return 2.0 * np.tan(np.asarray(theta, dtype=float) / 2.0)
    if model == "small_angle":
        return np.asarray(theta, dtype=float)
    raise ConfigurationError(f"angle model must be one of {ANGLE_MODELS}, got {model!r}")


def linearized_angle_slope(theta, model: str = "exact"):
    """Derivative of :func:`linearized_angle` with respect to ``theta``."""
    if model == "exact":
        return 1.0 / np.cos(np.asarray(theta, dtype=float) / 2.0) ** 2
    return np.ones_like(np.asarray(theta, dtype=float))


def projection_matrix(bearing) -> np.ndarray:
    """``I - g g^T``: projector onto the plane orthogonal to ``bearing``."""
    g = check_unit(bearing, tol=1e-9, name="bearing")
    return np.eye(3) - np.outer(g, g)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation by ``angle`` about unit ``axis``."""
    a = check_unit(axis, tol=1e-9, name="axis")
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def perturb_bearing(bearing, axis, angle: float) -> np.ndarray:
    """Rotate ``bearing`` by ``angle`` about ``axis``."""
    g = check_unit(bearing, tol=1e-9, name="bearing")
    return rotation_matrix(axis, angle) @ g


def project_point(point, camera_position, cam: CameraModel) -> np.ndarray:
    """Pixel coordinates of a world point; points at or behind the camera are rejected."""
    pc = cam.cam_to_world.T @ (np.asarray(point, dtype=float) - np.asarray(camera_position, dtype=float))
    if pc[2] <= 0:
        raise ConfigurationError("point is behind the camera")
    q = cam.intrinsic_matrix @ (pc / pc[2])
    return q[:2]
