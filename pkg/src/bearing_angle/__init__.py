"""Bearing-angle target motion estimation from monocular bounding boxes."""

from bearing_angle.estimator import BearingAngleEstimator
from bearing_angle.filters import (
    FilterConfig,
    FilterState,
    PseudoMeasurement,
    build_pseudo_measurement,
    initial_state,
    predict,
    step,
    transition_matrix,
    update,
)
from bearing_angle.geometry import (
    BoundingBox,
    CameraModel,
    Measurement,
    bbox_to_angle,
    pixel_to_bearing,
    projection_matrix,
    subtended_angle_exact,
)

__version__ = "0.1.0"

__all__ = [
    "BearingAngleEstimator",
    "BoundingBox",
    "CameraModel",
    "FilterConfig",
    "FilterState",
    "Measurement",
    "PseudoMeasurement",
    "bbox_to_angle",
    "build_pseudo_measurement",
    "initial_state",
    "pixel_to_bearing",
    "predict",
    "projection_matrix",
    "step",
    "subtended_angle_exact",
    "transition_matrix",
    "update",
]
