"""Plot-ready tables: CSV/JSON writers with provenance, measurement readers."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from bearing_angle.errors import SchemaError
from bearing_angle.validation import MEASUREMENT_COLUMNS, check_uniform_grid

TOOL = "bearing_angle"


def provenance(config_digest: str | None = None, seed: int | None = None, **extra) -> dict:
    from bearing_angle import __version__

    doc = {"tool": TOOL, "version": __version__}
    if config_digest is not None:
        doc["config_sha256"] = config_digest
    if seed is not None:
        doc["seed"] = int(seed)
    doc.update(extra)
    doc["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return doc


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    return "%.17g" % value


def atomic_write(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(columns, rows, prov: dict | None = None) -> str:
    buf = io.StringIO()
    for key, value in (prov or {}).items():
        buf.write(f"# {key}: {value}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, columns, rows, prov: dict | None = None):
    atomic_write(path, render_csv(columns, rows, prov))


def write_json(path, doc: dict, prov: dict | None = None):
    doc = dict(doc)
    if prov is not None:
        doc["provenance"] = prov
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def csv_body(text: str) -> str:
    """CSV content without provenance comment lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


TEXT_COLUMNS = ("flags",)


def read_table(path, required=(), text_columns=TEXT_COLUMNS) -> dict:
    """Read a CSV with a header row into ``{column: array}``.

    Columns are parsed as floats except those in ``text_columns``, which
    are kept as strings.  Lines starting with ``#`` are skipped.  Missing
    ``required`` columns raise :class:`SchemaError` naming the first
    absent column.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#") and line.strip()]
    if not lines:
        raise SchemaError(f"{path}: empty table")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    for name in required:
        if name not in header:
            raise SchemaError(f"{path}: missing column '{name}'")
    data = {h: [] for h in header}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
        for h, v in zip(header, row):
            if h in text_columns:
                data[h].append(v)
                continue
            try:
                data[h].append(float(v))
            except ValueError:
                raise SchemaError(f"{path}: line {lineno}, column '{h}': not a number ({v!r})") from None
    out = {h: np.array(v, dtype=str if h in text_columns else float) for h, v in data.items()}
    if len(out[header[0]]) == 0:
        raise SchemaError(f"{path}: table has a header but no rows")
    return out


def load_measurements(path, observer_path=None, dt: float | None = None) -> np.ndarray:
    """Load an ``(N, 8)`` measurement array, optionally joining an observer file.

    The observer file holds ``t, pox, poy, poz``; its time column must match
    the measurement file's.
    """
    need = MEASUREMENT_COLUMNS if observer_path is None else MEASUREMENT_COLUMNS[:5]
    table = read_table(path, need)
    if observer_path is not None:
        obs = read_table(observer_path, ("t", "pox", "poy", "poz"))
        if len(obs["t"]) != len(table["t"]) or np.any(np.abs(obs["t"] - table["t"]) > 1e-9):
            raise SchemaError(f"{observer_path}: column 't' does not match the measurement time grid")
        for c in ("pox", "poy", "poz"):
            table[c] = obs[c]
    X = np.column_stack([table[c] for c in MEASUREMENT_COLUMNS])
    if dt is not None:
        check_uniform_grid(X[:, 0], dt)
    return X


def measurement_rows(times, bearings, angles, observer_positions):
    """Rows for the measurement CSV; the first sample (filter start) is dropped."""
    return np.column_stack([times, bearings, angles, observer_positions])[1:]


def run_series_columns(modes) -> list[str]:
    cols = ["t", "tpx", "tpy", "tpz", "tvx", "tvy", "tvz", "size",
            "opx", "opy", "opz", "ovx", "ovy", "ovz", "gx", "gy", "gz", "theta"]
    for m in modes:
        n = 7 if m == "bearing_angle" else 6
        names = ["px", "py", "pz", "vx", "vy", "vz", "ell"][:n]
        cols += [f"{m}_{c}" for c in names] + [f"{m}_cov_trace", f"{m}_nees", f"{m}_pos_err"]
    return cols


def run_series_rows(record) -> np.ndarray:
    parts = [record.times[:, None], record.target[:, 0:6], record.size[:, None],
             record.observer[:, 0:6], record.bearings, record.angles[:, None]]
    for m in record.estimates:
        parts += [record.estimates[m], record.covariance_trace(m)[:, None],
                  record.nees[m][:, None], record.position_error(m)[:, None]]
    return np.column_stack(parts)


def aggregate_columns(modes) -> list[str]:
    cols = ["t"]
    for m in modes:
        cols += [f"{m}_{c}" for c in ("mean_pos_err", "pos_rmse", "mean_vel_err", "vel_rmse", "avg_nees")]
        if m == "bearing_angle":
            cols.append(f"{m}_mean_size_err")
    return cols


def aggregate_rows(agg) -> np.ndarray:
    parts = [agg.times[:, None]]
    for m, mm in agg.modes.items():
        parts += [mm.mean_position_error[:, None], mm.position_rmse[:, None],
                  mm.mean_velocity_error[:, None], mm.velocity_rmse[:, None], mm.average_nees[:, None]]
        if mm.mean_size_error is not None:
            parts.append(mm.mean_size_error[:, None])
    return np.column_stack(parts)


def estimate_columns(mode: str) -> list[str]:
    n = 7 if mode == "bearing_angle" else 6
    state = ["ptx", "pty", "ptz", "vtx", "vty", "vtz", "ell"][:n]
    return ["t"] + state + [f"P{i}{i}" for i in range(n)] + ["flags"]
