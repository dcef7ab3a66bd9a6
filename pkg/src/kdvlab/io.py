"""File formats: 17-digit JSON, CSV series and atomic writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .spectral import Profile


def format_float(x) -> str:
    """17 significant digits, which round-trips every double."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent=None, _level=0) -> str:
    """JSON text with every float written by ``format_float``."""
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = ", " if indent is None else ","
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[" + sep.join(items) + end + "]"
    if hasattr(obj, "to_json_dict"):
        return dumps(obj.to_json_dict(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj):
    return atomic_write(path, dumps(obj, indent=2) + "\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if not isinstance(v, str) else v for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    return atomic_write(path, csv_text(header, rows))


def save_profile(path, q: Profile):
    return write_json(path, q.to_json_dict())


def load_profile(path) -> Profile:
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} does not hold a profile object")
    return Profile.from_json_dict(data)


DIAGNOSTIC_COLUMNS = ("mass", "momentum", "h_kdv")


def trajectory_text(traj) -> str:
    """One JSON header line with the flow spec, then rows ``t,<samples>``."""
    first = traj.snapshots[0][1]
    header = dict(traj.spec.to_json_dict(), geometry=first.geometry, n=first.n, length=first.length)
    rows = [[t, *p.samples] for t, p in traj.snapshots]
    lines = [dumps(header)]
    lines += [",".join(format_float(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def diagnostics_rows(traj):
    alpha_keys = [f"alpha_{k:g}" for k in traj.spec.diag_kappas]
    header = ["t", *DIAGNOSTIC_COLUMNS, *alpha_keys]
    rows = [[t, *(d[c] for c in DIAGNOSTIC_COLUMNS), *(d[a] for a in alpha_keys)] for (t, _), d in zip(traj.snapshots, traj.diagnostics)]
    return header, rows


def write_trajectory(directory, name, traj):
    """Trajectory and diagnostics files; returns their paths."""
    directory = Path(directory)
    paths = [atomic_write(directory / f"{name}.trajectory.csv", trajectory_text(traj))]
    if traj.diagnostics:
        header, rows = diagnostics_rows(traj)
        paths.append(write_csv(directory / f"{name}.diagnostics.csv", header, rows))
    return paths


def read_trajectory(path):
    """(header dict, times, list of Profiles) from a trajectory file."""
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    profiles = [Profile(row[1:], header["geometry"], header["length"], warn_decay=False) for row in data]
    return header, data[:, 0], profiles
