"""Scenario execution: truth propagation, measurement synthesis, filtering."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from bearing_angle.errors import GuidanceSingularity
from bearing_angle.filters import FilterState, step
from bearing_angle.sim.config import ScenarioConfig
from bearing_angle.sim.guidance import (
    GuidanceLaw,
    initial_heading_velocity,
    png_command,
    range_tracking_command,
)
from bearing_angle.sim.measurements import (
    NoiseModel,
    SizeProfile,
    apply_noise,
    draw_noise,
    effective_size,
    true_measurement,
)
from bearing_angle.sim.metrics import batch_nees
from bearing_angle.sim.motion import CircularMotion, PolynomialMotion, ShuttleMotion

log = logging.getLogger(__name__)


def build_motion(spec: dict):
    kind = spec["kind"]
    if kind == "polynomial":
        return PolynomialMotion(np.array(spec["coefficients"]))
    if kind == "circle":
        return CircularMotion(np.array(spec["center"]), spec["radius"], spec["speed"], spec["phase"])
    if kind == "shuttle":
        return ShuttleMotion(np.array(spec["start"]), np.array(spec["direction"]), spec["speed"], spec["accel"])
    raise ValueError(f"motion kind {kind!r} has no closed form")


@dataclass
class Truth:
    """Noise-free kinematics sampled at ``times``; index 0 is the filter start."""

    times: np.ndarray
    target: np.ndarray      # (K, 9): position, velocity, acceleration
    observer: np.ndarray    # (K, 9)
    size: np.ndarray        # (K,)
    bearings: np.ndarray    # (K, 3)
    angles: np.ndarray      # (K,)
    stop_reason: str = "duration"
    failure: dict | None = None

    @property
    def ranges(self) -> np.ndarray:
        return np.linalg.norm(self.target[:, 0:3] - self.observer[:, 0:3], axis=1)

    def state(self, with_size: bool = True) -> np.ndarray:
        x = self.target[:, 0:6]
        return np.column_stack([x, self.size]) if with_size else x


def simulate_truth(cfg: ScenarioConfig) -> Truth:
    target = build_motion(cfg.target)
    profile = SizeProfile(**cfg.size_profile)
    obs_spec = cfg.observer
    guided = obs_spec["kind"] == "guided"
    observer = None if guided else build_motion(obs_spec)
    law = GuidanceLaw(**obs_spec["law"]) if guided else None
    dt = cfg.dt

    rows_t, rows_o, sizes, bearings, angles, times = [], [], [], [], [], []
    stop_reason, failure = "duration", None
    p_o = v_prev = None
    for k in range(cfg.n_steps + 1):
        t = k * dt
        pt, vt, at = target.state(t)
        try:
            if guided:
                if k == 0:
                    p_o = np.array(obs_spec["position"], dtype=float)
                    v_prev = (np.array(obs_spec["velocity"], dtype=float) if obs_spec["velocity"] is not None
                              else initial_heading_velocity(p_o, pt, law.speed_limit))
                if law.kind == "png":
                    v_o = png_command((p_o, v_prev), (pt, vt), law.navigation_gain, law.speed_limit, dt)
                else:
                    v_o = range_tracking_command(p_o, pt, vt, law)
                a_o = (v_o - v_prev) / dt if k > 0 else np.zeros(3)
                po_row = np.concatenate([p_o, v_o, a_o])
            else:
                po_row = np.concatenate(observer.state(t))
            r = float(np.linalg.norm(pt - po_row[0:3]))
            if r == 0.0:
                raise GuidanceSingularity("observer reached the target position")
        except GuidanceSingularity as exc:
            stop_reason, failure = "failure", {"step": k, "error": str(exc)}
            log.warning("truth propagation stopped at step %d: %s", k, exc)
            break
        if cfg.stop_range > 0 and r < cfg.stop_range:
            stop_reason = "stop_range"
            break
        g, _ = true_measurement(pt, po_row[0:3], 1.0)
        ell = effective_size(profile, g, t)
        _, th = true_measurement(pt, po_row[0:3], ell)
        times.append(t)
        rows_t.append(np.concatenate([pt, vt, at]))
        rows_o.append(po_row)
        sizes.append(ell)
        bearings.append(g)
        angles.append(th)
        if guided:
            p_o = p_o + v_o * dt
            v_prev = v_o
    return Truth(np.array(times), np.array(rows_t), np.array(rows_o), np.array(sizes),
                 np.array(bearings), np.array(angles), stop_reason, failure)


def run_seeds(cfg: ScenarioConfig, runs: int) -> list[int]:
    """Run ``i`` is seeded with ``seed + i`` independently of execution order."""
    return [cfg.seed + i for i in range(runs)]


def synthesize(truth: Truth, cfg: ScenarioConfig, seeds) -> tuple[np.ndarray, np.ndarray]:
    """Noisy bearings ``(B, K, 3)`` and angles ``(B, K)``; row 0 is unused."""
    noise = NoiseModel(cfg.noise["sigma_mu"], cfg.noise["sigma_w"])
    K = len(truth.times)
    draws = np.stack([draw_noise(np.random.default_rng(s), K) for s in seeds])
    return apply_noise(truth.bearings[None], truth.angles[None], draws, noise)


@dataclass
class FilterTrace:
    """Per-step filter output for a batch of runs (index 0 is the prior at t0)."""

    mode: str
    estimates: np.ndarray     # (B, K, n)
    covariances: np.ndarray   # (B, K, n, n)
    nees: np.ndarray          # (B, K)
    failed_at: np.ndarray     # (B,) step index of numerical failure, -1 if none

    @property
    def ok(self) -> np.ndarray:
        return self.failed_at < 0


def run_filter_batch(truth: Truth, bearings, angles, cfg: ScenarioConfig, mode: str) -> FilterTrace:
    fcfg = cfg.filter_config(mode)
    B, K = bearings.shape[0], len(truth.times)
    n = fcfg.state_dim
    x0 = np.concatenate([cfg.initial_position, cfg.initial_velocity] + ([[cfg.initial_size]] if n == 7 else []))
    state = FilterState(np.tile(x0, (B, 1)), np.tile(cfg.initial_variance * np.eye(n), (B, 1, 1)), 0.0)
    est = np.full((B, K, n), np.nan)
    cov = np.full((B, K, n, n), np.nan)
    est[:, 0], cov[:, 0] = state.estimate, state.covariance
    failed_at = np.full(B, -1)
    x_true = truth.state(with_size=(n == 7))
    for k in range(1, K):
        with np.errstate(all="ignore"):
            post = step(state, (bearings[:, k], angles[:, k]), truth.observer[k, 0:3], fcfg, check=False)
        bad = ~(np.all(np.isfinite(post.estimate), axis=1) & np.all(np.isfinite(post.covariance), axis=(1, 2)))
        newly = bad & (failed_at < 0)
        failed_at[newly] = k
        x, P = post.estimate, post.covariance
        if bad.any():
            x[bad], P[bad] = state.estimate[bad], state.covariance[bad]
        state = FilterState(x, P, post.time)
        est[:, k], cov[:, k] = x, P
    for b in np.flatnonzero(failed_at >= 0):
        est[b, failed_at[b]:] = np.nan
        cov[b, failed_at[b]:] = np.nan
    with np.errstate(all="ignore"):
        err = x_true[None] - est
        nees = np.full((B, K), np.nan)
        finite = np.all(np.isfinite(err), axis=2)
        nees[finite] = batch_nees(err[finite], cov[finite])
    return FilterTrace(mode, est, cov, nees, failed_at)


@dataclass
class RunRecord:
    """One seeded scenario execution."""

    seed: int
    times: np.ndarray
    target: np.ndarray
    observer: np.ndarray
    size: np.ndarray
    bearings: np.ndarray
    angles: np.ndarray
    estimates: dict = field(default_factory=dict)
    covariances: dict = field(default_factory=dict)
    nees: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    stop_reason: str = "duration"

    def position_error(self, mode: str) -> np.ndarray:
        return np.linalg.norm(self.estimates[mode][:, 0:3] - self.target[:, 0:3], axis=1)

    def covariance_trace(self, mode: str) -> np.ndarray:
        return np.trace(self.covariances[mode], axis1=1, axis2=2)


@dataclass
class BatchResult:
    config: ScenarioConfig
    truth: Truth
    seeds: list
    bearings: np.ndarray
    angles: np.ndarray
    traces: dict

    def record(self, i: int) -> RunRecord:
        rec = RunRecord(
            seed=self.seeds[i], times=self.truth.times, target=self.truth.target,
            observer=self.truth.observer, size=self.truth.size,
            bearings=self.bearings[i], angles=self.angles[i], stop_reason=self.truth.stop_reason,
        )
        if self.truth.failure:
            rec.failures.append(dict(self.truth.failure, source="truth"))
        for mode, tr in self.traces.items():
            rec.estimates[mode] = tr.estimates[i]
            rec.covariances[mode] = tr.covariances[i]
            rec.nees[mode] = tr.nees[i]
            if tr.failed_at[i] >= 0:
                rec.failures.append({"step": int(tr.failed_at[i]), "error": "numerical failure", "source": mode})
        return rec


def simulate_batch(cfg: ScenarioConfig, seeds=None, modes=None) -> BatchResult:
    seeds = list(run_seeds(cfg, cfg.runs) if seeds is None else seeds)
    truth = simulate_truth(cfg)
    bearings, angles = synthesize(truth, cfg, seeds)
    traces = {m: run_filter_batch(truth, bearings, angles, cfg, m) for m in (modes or cfg.modes)}
    return BatchResult(cfg, truth, seeds, bearings, angles, traces)


def run_scenario(cfg: ScenarioConfig, run_index: int = 0) -> RunRecord:
    """Execute run ``run_index`` of ``cfg`` (seed ``cfg.seed + run_index``)."""
    return simulate_batch(cfg, seeds=[cfg.seed + run_index]).record(0)
