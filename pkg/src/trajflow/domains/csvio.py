"""Trajectory CSV files.

Trajectories: header ``traj_id,t,dim_0,...,dim_{D-1}``, one row per state.
Rows of one trajectory must appear with strictly increasing ``t``; ids may be
any string and keep their first-appearance order. Contexts live in a separate
file with header ``traj_id,ctx_0,...,ctx_{C-1}``.
"""

import csv
import math

import numpy as np

from ..errors import DataError, SchemaError
from .dataset import Dataset


def _fmt(v):
    return repr(float(v))


def write_trajectory_csv(path, trajectories, ids=None, id_col="traj_id", t_col="t"):
    traj = np.asarray(trajectories, dtype=np.float64)
    if traj.ndim != 3:
        raise DataError(f"expected trajectories [n, H, D], got shape {traj.shape}")
    n, h, d = traj.shape
    ids = list(range(n)) if ids is None else list(ids)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([id_col, t_col] + [f"dim_{j}" for j in range(d)])
        for i in range(n):
            for k in range(h):
                w.writerow([ids[i], k] + [_fmt(v) for v in traj[i, k]])


def write_context_csv(path, contexts, ids=None):
    ctx = np.asarray(contexts, dtype=np.float64)
    n = ctx.shape[0]
    ctx = ctx.reshape(n, -1) if ctx.ndim != 2 else ctx
    ids = list(range(n)) if ids is None else list(ids)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["traj_id"] + [f"ctx_{j}" for j in range(ctx.shape[1])])
        for i in range(n):
            w.writerow([ids[i]] + [_fmt(v) for v in ctx[i]])


def _prefixed_columns(header, prefix, path):
    cols = [c for c in header if c.startswith(prefix)]
    expected = [f"{prefix}{j}" for j in range(len(cols))]
    if cols != expected:
        raise SchemaError(f"{path}: columns must be {prefix}0..{prefix}N-1 in order, got {cols}")
    return [header.index(c) for c in cols]


def _parse_float(text, path, lineno, col):
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"{path}: line {lineno}: column {col!r} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{path}: line {lineno}: column {col!r} is not finite: {text!r}")
    return v


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return None, []
    return [c.strip() for c in rows[0]], rows[1:]


def resample_time(times, states, horizon):
    """Linear interpolation of ``states[T, D]`` onto ``horizon`` evenly spaced
    times spanning ``times``."""
    times = np.asarray(times, dtype=np.float64)
    if times.size == 1:
        return np.repeat(states[:1], horizon, axis=0)
    grid = np.linspace(times[0], times[-1], horizon)
    return np.stack([np.interp(grid, times, states[:, j]) for j in range(states.shape[1])], axis=1)


def load_trajectory_csv(path, horizon=None, context_path=None):
    """Read trajectories (and optional contexts) into a :class:`Dataset`.

    With ``horizon`` every trajectory is resampled to that many states;
    without it all trajectories must already share one length. The dataset's
    ``info["ids"]`` lists the trajectory ids in order.
    """
    header, rows = _read_rows(path)
    if header is None:
        return Dataset(np.zeros((0, horizon or 0, 0)), None, {"ids": []})
    for col in ("traj_id", "t"):
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    dims = _prefixed_columns(header, "dim_", path)
    if not dims:
        raise SchemaError(f"{path}: no dim_ columns")
    i_id, i_t = header.index("traj_id"), header.index("t")
    groups = {}
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        tid = row[i_id].strip()
        t = _parse_float(row[i_t], path, lineno, "t")
        vals = [_parse_float(row[j], path, lineno, header[j]) for j in dims]
        g = groups.setdefault(tid, ([], []))
        if g[0] and t <= g[0][-1]:
            raise DataError(f"{path}: line {lineno}: time {t} does not increase within trajectory {tid!r}")
        g[0].append(t)
        g[1].append(vals)
    ids = list(groups)
    out = []
    for tid in ids:
        times, states = groups[tid]
        states = np.asarray(states, dtype=np.float64)
        if horizon is not None:
            states = resample_time(times, states, horizon)
        out.append(states)
    if len({s.shape[0] for s in out}) > 1:
        raise DataError(f"{path}: trajectories have different lengths; pass a horizon to resample")
    traj = np.stack(out) if out else np.zeros((0, horizon or 0, len(dims)))
    ctx = None
    if context_path is not None:
        ctx = _load_contexts(context_path, ids)
    return Dataset(traj, ctx, {"ids": ids})


def _load_contexts(path, ids):
    header, rows = _read_rows(path)
    if header is None:
        if ids:
            raise SchemaError(f"{path}: context file is empty")
        return np.zeros((0, 0))
    if "traj_id" not in header:
        raise SchemaError(f"{path}: missing column 'traj_id'")
    cols = _prefixed_columns(header, "ctx_", path)
    i_id = header.index("traj_id")
    table = {}
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        tid = row[i_id].strip()
        if tid in table:
            raise DataError(f"{path}: line {lineno}: duplicate context for trajectory {tid!r}")
        table[tid] = [_parse_float(row[j], path, lineno, header[j]) for j in cols]
    missing = [t for t in ids if t not in table]
    if missing:
        raise DataError(f"{path}: no context for trajectories {missing[:5]}")
    return np.asarray([table[t] for t in ids], dtype=np.float64).reshape(len(ids), len(cols))
