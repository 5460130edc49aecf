"""Monte-Carlo aggregation over seeded scenario runs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bearing_angle.sim.config import ScenarioConfig
from bearing_angle.sim.engine import BatchResult, run_seeds, simulate_batch

FINAL_WINDOW = 1.0  # seconds averaged for the final-error figure


@dataclass
class ModeMetrics:
    mean_position_error: np.ndarray
    mean_velocity_error: np.ndarray
    mean_size_error: np.ndarray | None
    position_rmse: np.ndarray
    velocity_rmse: np.ndarray
    average_nees: np.ndarray
    failed_runs: list = field(default_factory=list)
    final_position_error: float = float("nan")
    diverged: bool = False

    def summary(self) -> dict:
        return {
            "final_position_error": self.final_position_error,
            "diverged": self.diverged,
            "failed_runs": list(self.failed_runs),
            "max_position_rmse_after_start": float(np.nanmax(self.position_rmse[1:])) if len(self.position_rmse) > 1 else None,
        }


@dataclass
class AggregateMetrics:
    scenario: str
    runs: int
    seeds: list
    times: np.ndarray
    modes: dict
    stop_reason: str = "duration"
    truth_failure: dict | None = None

    def to_dict(self) -> dict:
        """JSON-ready summary including the per-step series."""
        out = {
            "scenario": self.scenario,
            "runs": self.runs,
            "seeds": list(self.seeds),
            "stop_reason": self.stop_reason,
            "truth_failure": self.truth_failure,
            "times": self.times.tolist(),
            "modes": {},
        }
        for mode, m in self.modes.items():
            doc = m.summary()
            doc["per_step"] = {
                "mean_position_error": m.mean_position_error.tolist(),
                "mean_velocity_error": m.mean_velocity_error.tolist(),
                "position_rmse": m.position_rmse.tolist(),
                "velocity_rmse": m.velocity_rmse.tolist(),
                "average_nees": m.average_nees.tolist(),
            }
            if m.mean_size_error is not None:
                doc["per_step"]["mean_size_error"] = m.mean_size_error.tolist()
            out["modes"][mode] = doc
        return out


def _nanmean0(a):
    with np.errstate(all="ignore"):
        return np.nanmean(a, axis=0) if a.shape[0] else np.full(a.shape[1:], np.nan)


def aggregate(batch: BatchResult) -> AggregateMetrics:
    cfg, truth = batch.config, batch.truth
    times = truth.times
    final = times >= times[-1] - FINAL_WINDOW + 1e-9
    modes = {}
    for mode, tr in batch.traces.items():
        ok = tr.ok
        est = tr.estimates[ok]
        pos_err = np.linalg.norm(est[:, :, 0:3] - truth.target[None, :, 0:3], axis=2)
        vel_err = np.linalg.norm(est[:, :, 3:6] - truth.target[None, :, 3:6], axis=2)
        size_err = None
        if est.shape[2] == 7:
            size_err = _nanmean0(np.abs(est[:, :, 6] - truth.size[None]))
        mpe = _nanmean0(pos_err)
        m = ModeMetrics(
            mean_position_error=mpe,
            mean_velocity_error=_nanmean0(vel_err),
            mean_size_error=size_err,
            position_rmse=np.sqrt(_nanmean0(pos_err ** 2)),
            velocity_rmse=np.sqrt(_nanmean0(vel_err ** 2)),
            average_nees=_nanmean0(tr.nees[ok]),
            failed_runs=[int(batch.seeds[i]) for i in np.flatnonzero(~ok)],
        )
        m.final_position_error = float(np.mean(mpe[final])) if ok.any() else float("nan")
        m.diverged = bool(not ok.any() or m.final_position_error > cfg.divergence_threshold)
        modes[mode] = m
    return AggregateMetrics(cfg.name, len(batch.seeds), list(batch.seeds), times, modes,
                            truth.stop_reason, truth.failure)


def monte_carlo(cfg: ScenarioConfig, runs: int | None = None, return_batch: bool = False):
    """Run ``runs`` seeded repetitions (default ``cfg.runs``) and aggregate.

    Runs whose filter fails numerically are excluded from the statistics
    and listed under ``failed_runs``.
    """
    runs = cfg.runs if runs is None else int(runs)
    if runs < 1:
        raise ValueError("runs must be >= 1")
    batch = simulate_batch(cfg, seeds=run_seeds(cfg, runs))
    agg = aggregate(batch)
    return (agg, batch) if return_batch else agg
