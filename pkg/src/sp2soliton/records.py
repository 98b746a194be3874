"""
File formats. Floats are written with repr, the shortest string that reads
back to the same binary64, so identical runs give byte-identical files.
"""

import json
import math

import numpy as np

from . import __version__
from .core import derived_arrays

SCHEMA_VERSION = 1
TRAJECTORY_COLUMNS = ("t", "x", "y", "tau2", "S", "g", "M_over_g3", "tt1", "tt2", "u")


def fnum(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _plain(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _plain(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(u) for u in v]
    if isinstance(v, np.ndarray):
        return [_plain(u) for u in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else fnum(v)
    return v


def header(config):
    """Reproducibility header shared by every output."""
    return {"artifact": "sp2soliton", "version": __version__, "schema_version": SCHEMA_VERSION,
            "config": _plain(config)}


def comment_block(config):
    return "# " + json.dumps(header(config), sort_keys=True) + "\n"


def trajectory_rows(traj):
    t, x, y, tau2 = traj.full_arrays()
    q = derived_arrays(x, y, tau2, traj.params.lam)
    cols = (t, x, y, tau2, q["S"], q["g"], q["M"] / (x * y * y), q["tt1"], q["tt2"], q["u"])
    return np.column_stack(cols)


def trajectory_csv(traj, config):
    lines = [comment_block(config).rstrip("\n"), ",".join(TRAJECTORY_COLUMNS)]
    for row in trajectory_rows(traj):
        lines.append(",".join(fnum(v) for v in row))
    return "\n".join(lines) + "\n"


def trajectory_envelope(traj, config):
    env = header(config)
    env.update({
        "kind": "trajectory",
        "frame": traj.frame.label(),
        "params": {"lambda": traj.params.lam},
        "options": _plain(traj.options.to_dict()),
        "events": [{"t": t, "name": n} for t, n in traj.events],
        "termination": traj.termination,
        "stats": _plain(traj.stats),
        "columns": list(TRAJECTORY_COLUMNS),
        "data": _plain(trajectory_rows(traj)),
    })
    return env


def dumps(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def classification_envelope(end, config, termination=None):
    env = header(config)
    env.update({"kind": "classification", **_plain(end.to_dict())})
    if termination is not None:
        env["termination"] = termination
    return env


def table_csv(columns, rows, config, extra_comments=()):
    lines = [comment_block(config).rstrip("\n")]
    lines += ["# " + c for c in extra_comments]
    lines.append(",".join(columns))
    for r in rows:
        lines.append(",".join(fnum(v) for v in r))
    return "\n".join(lines) + "\n"


def read_csv(path):
    """(columns, float array) from a file written here; comment lines skipped."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(cols))
    return cols, data
