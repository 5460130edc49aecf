"""Named scenario presets.

Planar geometries are embedded in the ``z = 0`` plane.  Shared tuning:
sigma_v = 1e-3, sigma_ell = 1e-4, sigma_mu = sigma_w = 0.01, P(t0) = 0.1 I,
50 Hz updates and a unit-diameter target.
"""

from __future__ import annotations

import math

from bearing_angle.errors import ConfigurationError
from bearing_angle.sim.config import ScenarioConfig

_SQRT_HALF = 1.0 / math.sqrt(2.0)
# square side whose silhouette width averages to 1 over a full turn
_SPIN_SIDE = math.pi / 4

_STATIONARY = {"kind": "polynomial", "coefficients": [[0.0, 10.0, 0.0]]}
_CONSTANT_VELOCITY = {"kind": "polynomial", "coefficients": [[0.0, 10.0, 0.0], [_SQRT_HALF, _SQRT_HALF, 0.0]]}
_CIRCLE = {"kind": "circle", "center": [0.0, 10.0, 0.0], "radius": 5.0, "speed": 3.0, "phase": -math.pi / 2}
_SHUTTLE = {"kind": "shuttle", "start": [0.0, 5.0, 0.0], "direction": [0.0, 1.0, 0.0], "speed": 4.0, "accel": 2.0}


def _s1():
    return dict(name="s1-circle", target=_STATIONARY, observer=_CIRCLE,
                initial_position=[0.0, 13.0, 0.0], initial_size=1.6, duration=20.0)


def _s2():
    return dict(name="s2-line", target=_STATIONARY, observer=_SHUTTLE,
                initial_position=[0.0, 8.0, 0.0], initial_size=0.8, duration=16.0)


def _s3():
    png = {"kind": "guided", "position": [0.0, 0.0, 0.0], "velocity": None,
           "law": {"kind": "png", "navigation_gain": 1.0, "speed_limit": 3.0}}
    return dict(name="s3-png", target=_CONSTANT_VELOCITY, observer=png,
                initial_position=[0.0, 13.0, 0.0], initial_size=1.6, duration=20.0, stop_range=1.0)


def _s4():
    d = _s1()
    d.update(name="s4-spin-circle",
             size_profile={"kind": "spinning_square", "base_size": _SPIN_SIDE, "spin_rate": 2 * math.pi})
    return d


def _s5():
    d = _s2()
    d.update(name="s5-spin-approach",
             size_profile={"kind": "spinning_square", "base_size": _SPIN_SIDE, "spin_rate": math.pi / 8})
    return d


def _track():
    law = {"kind": "range_tracking", "track_gain": 3.0, "desired_range": 3.0, "speed_limit": 3.0}
    observer = {"kind": "guided", "position": [0.0, 0.0, 0.0], "velocity": [0.0, 0.0, 0.0], "law": law}
    return dict(name="track-follow", target=_CONSTANT_VELOCITY, observer=observer,
                initial_position=[0.0, 13.0, 0.0], initial_size=1.6, duration=20.0)


PRESETS = {
    "s1-circle": _s1,
    "s2-line": _s2,
    "s3-png": _s3,
    "s4-spin-circle": _s4,
    "s5-spin-approach": _s5,
    "track-follow": _track,
}


def preset(name: str, **overrides) -> ScenarioConfig:
    try:
        doc = PRESETS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    doc.update(overrides)
    return ScenarioConfig(**doc)
