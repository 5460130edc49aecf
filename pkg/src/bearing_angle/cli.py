"""Command-line front end: ``simulate``, ``observability`` and ``estimate``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
numerical failure.  Options can also be supplied through environment
variables named ``BEARING_ANGLE_<OPTION>`` (e.g. ``BEARING_ANGLE_RUNS``);
explicit flags take precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from bearing_angle import records
from bearing_angle.errors import BearingAngleError, NumericalFailure, UnderdeterminedError, UnobservableError
from bearing_angle.estimator import BearingAngleEstimator
from bearing_angle.filters import MODES
from bearing_angle.observability import (
    analyze_rank,
    build_observability_matrix,
    ObservationWindow,
    recover_target_motion,
    window_from_motion,
)
from bearing_angle.sim.config import ScenarioConfig, normalize_motion
from bearing_angle.sim.engine import build_motion, simulate_truth
from bearing_angle.sim.montecarlo import monte_carlo
from bearing_angle.sim.presets import PRESETS, preset

log = logging.getLogger("bearing_angle")

ENV_PREFIX = "BEARING_ANGLE_"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
FILTER_CHOICES = (*MODES, "both")

WINDOW_DEFAULTS = {
    "target": {"kind": "polynomial", "coefficients": [[0.0, 10.0, 0.0], [0.5, 0.0, 0.0]]},
    "observer": {"kind": "polynomial", "coefficients": [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.0]]},
    "size": 1.0,
    "start": 0.0,
    "dt": 0.1,
    "samples": 10,
    "order": 1,
    "angle_model": "exact",
}


class UsageError(BearingAngleError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


# ---------------------------------------------------------------- simulate

def resolve_scenario(args) -> ScenarioConfig:
    preset_name = args.preset or _env("preset")
    config_path = args.config or _env("config")
    if preset_name and config_path:
        raise UsageError("use either --preset or --config, not both")
    if config_path:
        try:
            cfg = ScenarioConfig.from_dict(_read_json(config_path))
        except BearingAngleError as exc:
            raise UsageError(f"{config_path}: {exc}") from exc
    else:
        cfg = preset(preset_name or "s1-circle")
    changes = {}
    runs = args.runs if args.runs is not None else _env("runs")
    seed = args.seed if args.seed is not None else _env("seed")
    filt = args.filter or _env("filter")
    if runs is not None:
        changes["runs"] = int(runs)
    if seed is not None:
        changes["seed"] = int(seed)
    if filt is not None:
        if filt not in FILTER_CHOICES:
            raise UsageError(f"--filter must be one of {FILTER_CHOICES}")
        changes["modes"] = list(MODES) if filt == "both" else [filt]
    return cfg.replace(**changes) if changes else cfg


def cmd_simulate(args) -> int:
    cfg = resolve_scenario(args)
    if args.dump_config:
        print(cfg.to_json())
        return EXIT_OK
    out = Path(args.out or _env("out", "out"))
    agg, batch = monte_carlo(cfg, return_batch=True)
    prov = lambda seed=None: records.provenance(cfg.digest(), cfg.seed if seed is None else seed)  # noqa: E731

    records.write_json(out / "config.json", cfg.to_dict(), prov())
    records.write_json(out / "summary.json", agg.to_dict(), prov())
    records.write_csv(out / "aggregate.csv", records.aggregate_columns(cfg.modes),
                      records.aggregate_rows(agg), prov())
    indices = range(len(batch.seeds)) if args.per_run else range(1)
    for i in indices:
        rec = batch.record(i)
        p = prov(rec.seed)
        records.write_csv(out / f"run_{i:03d}.csv", records.run_series_columns(cfg.modes),
                          records.run_series_rows(rec), p)
        records.write_csv(out / f"run_{i:03d}_measurements.csv", records.MEASUREMENT_COLUMNS,
                          records.measurement_rows(rec.times, rec.bearings, rec.angles, rec.observer[:, 0:3]), p)

    failures = []
    if agg.truth_failure:
        failures.append(dict(agg.truth_failure, source="truth"))
    for mode, tr in batch.traces.items():
        for i in np.flatnonzero(~tr.ok):
            failures.append({"source": mode, "seed": int(batch.seeds[i]), "step": int(tr.failed_at[i])})
    for mode, m in agg.modes.items():
        flag = "DIVERGED" if m.diverged else "ok"
        print(f"{cfg.name} {mode}: final position error {m.final_position_error:.4f} m [{flag}]")
    if failures:
        records.write_json(out / "failures.json", {"failures": failures}, prov())
        print(f"{len(failures)} failure(s); see {out / 'failures.json'}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ----------------------------------------------------------- observability

def _window_from_spec(doc) -> tuple[ObservationWindow, int, str]:
    unknown = set(doc) - set(WINDOW_DEFAULTS)
    if unknown:
        raise UsageError(f"window config: unknown key(s) {', '.join(sorted(unknown))}")
    spec = {**WINDOW_DEFAULTS, **doc}
    target = build_motion(normalize_motion(spec["target"], "target", allow_guided=False))
    observer = build_motion(normalize_motion(spec["observer"], "observer", allow_guided=False))
    times = spec["start"] + spec["dt"] * np.arange(int(spec["samples"]))
    window = window_from_motion(target, observer, float(spec["size"]), times, spec["angle_model"])
    return window, int(spec["order"]), spec["angle_model"]


def _window_from_preset(name, samples, stride) -> ObservationWindow:
    truth = simulate_truth(preset(name, runs=1))
    idx = np.arange(0, len(truth.times), stride)[:samples]
    return ObservationWindow(truth.times[idx], truth.bearings[idx], truth.angles[idx], truth.observer[idx, 0:3])


def cmd_observability(args) -> int:
    if args.dump_config:
        print(json.dumps(WINDOW_DEFAULTS, indent=2, sort_keys=True))
        return EXIT_OK
    sources = [s for s in (args.config, args.run, args.preset) if s]
    if len(sources) > 1:
        raise UsageError("use only one of --config, --run, --preset")
    order = args.order
    angle_model = args.angle_model
    if args.run:
        X = records.load_measurements(args.run)
        window = ObservationWindow(X[:, 0], X[:, 1:4], X[:, 4], X[:, 5:8])
    elif args.preset:
        window = _window_from_preset(args.preset, args.samples or 50, args.stride)
    else:
        doc = _read_json(args.config) if args.config else {}
        window, spec_order, spec_model = _window_from_spec(doc)
        order = spec_order if order is None else order
        angle_model = angle_model or spec_model
    order = 1 if order is None else order
    angle_model = angle_model or "exact"
    if args.samples and not args.preset:
        window = window.head(args.samples)
    doc = {"samples": len(window), "target_order": order}
    if len(window) < order + 2:
        print(f"insufficient observations: an order-{order} target needs at least {order + 2} "
              f"samples, got {len(window)}", file=sys.stderr)
        return EXIT_USAGE
    rep = analyze_rank(build_observability_matrix(window, angle_model), 7)
    doc.update(rep.to_dict())
    try:
        doc["recovered"] = recover_target_motion(window, order, angle_model).to_dict()
    except UnobservableError as exc:
        doc["recovered"] = None
        doc["recovery_error"] = str(exc)
        doc["recovery_null_direction"] = [float(v) for v in exc.null_direction]
    except UnderdeterminedError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    doc["provenance"] = records.provenance()
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        records.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- estimate

def _estimator_params(path) -> dict:
    if not path:
        return {}
    doc = _read_json(path)
    if "target" in doc or "observer" in doc:
        cfg = ScenarioConfig.from_dict(doc)
        params = dict(cfg.filter, dt=cfg.dt, initial_position=cfg.initial_position,
                      initial_velocity=cfg.initial_velocity, initial_size=cfg.initial_size,
                      initial_variance=cfg.initial_variance)
        return params
    allowed = set(BearingAngleEstimator().get_params())
    unknown = set(doc) - allowed
    if unknown:
        raise UsageError(f"{path}: unknown key(s) {', '.join(sorted(unknown))}")
    return doc


def cmd_estimate(args) -> int:
    params = _estimator_params(args.config or _env("config"))
    if args.dump_config:
        print(json.dumps(BearingAngleEstimator(**params).get_params(), indent=2, sort_keys=True))
        return EXIT_OK
    if not args.measurements:
        raise UsageError("--measurements is required")
    filt = args.filter or _env("filter") or "bearing_angle"
    modes = list(MODES) if filt == "both" else [filt]
    if filt not in FILTER_CHOICES:
        raise UsageError(f"--filter must be one of {FILTER_CHOICES}")
    dt = params.get("dt", 0.02)
    X = records.load_measurements(args.measurements, args.observer, dt=dt)
    out = Path(args.out or _env("out", "estimates.csv"))
    for mode in modes:
        est = BearingAngleEstimator(**{**params, "mode": mode}).fit(X)
        n = est.estimates_.shape[1]
        diag = est.covariances_[:, np.arange(n), np.arange(n)]
        rows = [list(r) + [f] for r, f in zip(np.column_stack([est.times_, est.estimates_, diag]), est.flags_)]
        path = out if len(modes) == 1 else out.with_name(f"{out.stem}_{mode}{out.suffix}")
        records.write_csv(path, records.estimate_columns(mode), rows, records.provenance(filter=mode))
        print(f"wrote {path} ({len(rows)} rows, {int(np.sum(est.flags_ != 'measured'))} predict-only)")
    return EXIT_OK


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bearing-angle", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run Monte-Carlo scenario batches")
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--config", help="scenario JSON")
    sim.add_argument("--runs", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--filter", choices=FILTER_CHOICES)
    sim.add_argument("--out", help="output directory (default: out)")
    sim.add_argument("--per-run", action="store_true", help="write a series file for every run")
    sim.add_argument("--dump-config", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    obs = sub.add_parser("observability", help="rank analysis and discrete motion recovery")
    obs.add_argument("--config", help="window JSON (see --dump-config)")
    obs.add_argument("--run", help="measurement CSV")
    obs.add_argument("--preset", choices=sorted(PRESETS), help="sample a preset's noise-free truth")
    obs.add_argument("--order", type=int, help="target polynomial order (default 1)")
    obs.add_argument("--samples", type=int, help="use only the first N samples")
    obs.add_argument("--stride", type=int, default=10, help="preset sampling stride (default 10)")
    obs.add_argument("--angle-model", choices=("exact", "small_angle"))
    obs.add_argument("--out", help="write the JSON report here instead of stdout")
    obs.add_argument("--dump-config", action="store_true")
    obs.set_defaults(func=cmd_observability)

    est = sub.add_parser("estimate", help="replay recorded measurements through a filter")
    est.add_argument("--measurements", help="CSV with t,gx,gy,gz,theta[,pox,poy,poz]")
    est.add_argument("--observer", help="CSV with t,pox,poy,poz")
    est.add_argument("--config", help="estimator parameters or scenario JSON")
    est.add_argument("--filter", choices=FILTER_CHOICES)
    est.add_argument("--out", help="estimates CSV (default: estimates.csv)")
    est.add_argument("--dump-config", action="store_true")
    est.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (BearingAngleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
