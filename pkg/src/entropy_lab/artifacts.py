"""CSV / JSON writers.  Floats use Python's shortest round-trip repr."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .checks import CheckReport, _clean
from .solver import Trajectory

TRAJECTORY_COLUMNS = ("t", "mass", "E_p", "R_p", "S_pq", "N_pq", "P_p", "B_p", "I_p", "J_p", "Q_pq", "tau")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ""
    try:
        return repr(float(v))
    except (TypeError, ValueError):
        return str(v)


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def trajectory_rows(traj: Trajectory):
    for s, tau in zip(traj.snapshots, traj.tau):
        d = s.as_dict()
        d["tau"] = float(tau)
        yield [d[c] for c in TRAJECTORY_COLUMNS]


def write_trajectory(traj: Trajectory, path: Path) -> Path:
    return write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(traj))


def write_state(traj: Trajectory, index: int, path: Path) -> Path:
    u = traj.states[index]
    return write_csv(path, ("x", "u"), zip(u.nodes.tolist(), u.values.tolist()))


def write_json(obj, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n")
    return path


def write_report(report: CheckReport, path: Path) -> Path:
    return write_json(report.to_dict(), path)


def read_csv(path: Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
