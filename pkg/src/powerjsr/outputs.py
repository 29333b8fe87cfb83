"""Trajectory CSV, plot summary and report files.

CSV layout (one file per trajectory)::

    n, switch_index, c, P_1..P_m, gamma_1..gamma_m, norm_inf

Row ``n`` holds ``P(n)``; ``switch_index``, ``c`` and the SINR columns
describe the transition out of ``P(n)`` and are empty on the last row (and
the SINR columns are empty throughout when no gains are known). Unbounded
SINR is written as ``inf``. Numbers use 12 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

from .power_control import UNBOUNDED

FLOAT_FORMAT = "{:.12g}"


def fmt(x) -> str:
    if x is UNBOUNDED:
        return "inf"
    return FLOAT_FORMAT.format(float(x))


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trajectory_header(m: int) -> list[str]:
    return (
        ["n", "switch_index", "c"]
        + [f"P_{i + 1}" for i in range(m)]
        + [f"gamma_{i + 1}" for i in range(m)]
        + ["norm_inf"]
    )


def trajectory_csv(traj) -> str:
    m = traj.powers.shape[1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trajectory_header(m))
    for n in range(len(traj.powers)):
        if n < traj.steps:
            head = [str(n), str(traj.switch_indices[n]), fmt(traj.c_values[n])]
            gammas = [fmt(g) for g in traj.sinrs[n]] if traj.sinrs is not None else [""] * m
        else:
            head = [str(n), "", ""]
            gammas = [""] * m
        writer.writerow(head + [fmt(x) for x in traj.powers[n]] + gammas + [fmt(traj.norms[n])])
    return buf.getvalue()


def write_trajectory_csv(path, traj) -> None:
    atomic_write(path, trajectory_csv(traj))


def read_trajectory_csv(path) -> dict:
    """Columns of a trajectory CSV: indices, c values and the raw norm strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    indices = [int(r["switch_index"]) for r in rows if r["switch_index"] != ""]
    cs = [float(r["c"]) for r in rows if r["c"] != ""]
    return {
        "switch_indices": indices,
        "c_values": cs,
        "norm_inf": [r["norm_inf"] for r in rows],
        "rows": rows,
    }


def summary_csv(named_trajectories) -> str:
    """``(trajectory, n, log10_norm)`` rows for plotting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["trajectory", "n", "log10_norm"])
    for tag, traj in named_trajectories:
        for n, v in enumerate(traj.norms):
            value = fmt(math.log10(v)) if v > 0 and math.isfinite(v) else ("-inf" if v == 0 else "inf")
            writer.writerow([tag, str(n), value])
    return buf.getvalue()


def write_json(path, payload: dict) -> None:
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=False) + "\n")
