"""Scenario description, validation and (de)serialization."""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

from bearing_angle.errors import SchemaError
from bearing_angle.filters import FilterConfig, MODES
from bearing_angle.sim.guidance import GuidanceLaw
from bearing_angle.sim.measurements import SizeProfile

MOTION_FIELDS = {
    "polynomial": {"coefficients": None},
    "circle": {"center": None, "radius": None, "speed": None, "phase": -math.pi / 2},
    "shuttle": {"start": None, "direction": None, "speed": None, "accel": None},
    "guided": {"position": None, "velocity": None, "law": None},
}
FILTER_FIELDS = ("sigma_v", "sigma_ell", "sigma_mu", "sigma_w", "angle_model", "min_range", "min_size")


def _vec(value, path):
    if not (isinstance(value, (list, tuple)) and len(value) in (2, 3)):
        raise SchemaError(f"{path}: expected a 2- or 3-vector")
    out = [float(v) for v in value]
    return out + [0.0] if len(out) == 2 else out


def _check_keys(doc, allowed, path):
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected an object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise SchemaError(f"{path}: unknown key(s) {', '.join(unknown)}")


def normalize_motion(spec, path="motion", allow_guided=True) -> dict:
    """Validate a motion description and fill defaults.

    Planar 2-vectors are embedded with ``z = 0``.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError(f"{path}: motion needs a 'kind'")
    kind = spec["kind"]
    if kind not in MOTION_FIELDS or (kind == "guided" and not allow_guided):
        raise SchemaError(f"{path}.kind: unsupported motion kind {kind!r}")
    fields = MOTION_FIELDS[kind]
    _check_keys(spec, set(fields) | {"kind"}, path)
    out = {"kind": kind}
    for name, default in fields.items():
        if name not in spec and default is None and not (kind == "guided" and name == "velocity"):
            raise SchemaError(f"{path}.{name}: required")
        value = spec.get(name, default)
        p = f"{path}.{name}"
        if name == "coefficients":
            if not isinstance(value, list) or not value:
                raise SchemaError(f"{p}: expected a non-empty list of vectors")
            value = [_vec(c, f"{p}[{i}]") for i, c in enumerate(value)]
        elif name in ("center", "start", "direction", "position"):
            value = _vec(value, p)
        elif name == "velocity":
            value = None if value is None else _vec(value, p)
        elif name == "law":
            value = _normalize_dataclass(GuidanceLaw, value, p)
        else:
            value = float(value)
        out[name] = value
    return out


def _normalize_dataclass(cls, doc, path) -> dict:
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(doc or {}, names, path)
    try:
        obj = cls(**(doc or {}))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return dataclasses.asdict(obj)


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one scenario batch.

    Filter tuning is shared by both filter modes; ``modes`` selects which
    filters run.  ``stop_range`` ends the run once the true range drops
    below it.
    """

    name: str = "custom"
    target: dict = field(default_factory=lambda: {"kind": "polynomial", "coefficients": [[0.0, 10.0, 0.0]]})
    observer: dict = field(default_factory=lambda: {
        "kind": "circle", "center": [0.0, 10.0, 0.0], "radius": 5.0, "speed": 3.0, "phase": -math.pi / 2})
    size_profile: dict = field(default_factory=lambda: dataclasses.asdict(SizeProfile()))
    noise: dict = field(default_factory=lambda: {"sigma_mu": 0.01, "sigma_w": 0.01})
    filter: dict = field(default_factory=lambda: {
        "sigma_v": 1e-3, "sigma_ell": 1e-4, "sigma_mu": 0.01, "sigma_w": 0.01,
        "angle_model": "exact", "min_range": 0.1, "min_size": 0.01})
    initial_position: list = field(default_factory=lambda: [0.0, 13.0, 0.0])
    initial_velocity: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    initial_size: float = 1.6
    initial_variance: float = 0.1
    duration: float = 20.0
    dt: float = 0.02
    runs: int = 100
    seed: int = 0
    stop_range: float = 0.0
    modes: list = field(default_factory=lambda: list(MODES))
    divergence_threshold: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.target = normalize_motion(self.target, "target", allow_guided=False)
        self.observer = normalize_motion(self.observer, "observer")
        self.size_profile = _normalize_dataclass(SizeProfile, self.size_profile, "size_profile")
        _check_keys(self.noise, ("sigma_mu", "sigma_w"), "noise")
        self.noise = {k: float(self.noise.get(k, 0.01)) for k in ("sigma_mu", "sigma_w")}
        if min(self.noise.values()) < 0:
            raise SchemaError("noise: sigmas must be non-negative")
        _check_keys(self.filter, FILTER_FIELDS, "filter")
        defaults = dataclasses.asdict(FilterConfig())
        merged = {k: self.filter.get(k, defaults[k]) for k in FILTER_FIELDS}
        try:
            FilterConfig(dt=self.dt, **merged)
        except ValueError as exc:
            raise SchemaError(f"filter: {exc}") from exc
        self.filter = {k: (v if isinstance(v, str) else float(v)) for k, v in merged.items()}
        self.initial_position = _vec(self.initial_position, "initial_position")
        self.initial_velocity = _vec(self.initial_velocity, "initial_velocity")
        for name in ("initial_size", "initial_variance", "duration", "dt", "stop_range", "divergence_threshold"):
            setattr(self, name, float(getattr(self, name)))
        if self.dt <= 0 or self.duration <= 0:
            raise SchemaError("dt and duration must be positive")
        if self.initial_size <= 0 or self.initial_variance <= 0:
            raise SchemaError("initial_size and initial_variance must be positive")
        if int(self.runs) != self.runs or self.runs < 1:
            raise SchemaError("runs: must be an integer >= 1")
        self.runs = int(self.runs)
        self.seed = int(self.seed)
        if not self.modes or any(m not in MODES for m in self.modes):
            raise SchemaError(f"modes: each entry must be one of {MODES}")
        self.modes = [m for m in MODES if m in self.modes]

    def filter_config(self, mode: str) -> FilterConfig:
        return FilterConfig(dt=self.dt, mode=mode, **self.filter)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def to_dict(self) -> dict:
        return copy.deepcopy(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        _check_keys(doc, [f.name for f in dataclasses.fields(cls)], "config")
        return cls(**copy.deepcopy(doc))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(doc)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def replace(self, **changes) -> "ScenarioConfig":
        doc = self.to_dict()
        doc.update(changes)
        return ScenarioConfig.from_dict(doc)
