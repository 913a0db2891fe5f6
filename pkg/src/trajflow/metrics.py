"""Evaluation metrics: displacement errors, per-dimension error tables, the
normalised maze score and collision rate."""

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .domains.maze import first_collision, segment_collisions
from .errors import ConfigError, ShapeError, UsageError

SCORE_CAP = 150.0


def _samples(samples, truth):
    s = np.asarray(samples, dtype=np.float64)
    if s.size == 0 or s.shape[0] == 0:
        raise UsageError("no samples to evaluate")
    truth = np.asarray(truth, dtype=np.float64)
    if s.ndim == truth.ndim:
        s = s[None]
    if s.shape[1:] != truth.shape:
        raise ShapeError(f"samples {s.shape[1:]} do not match truth {truth.shape}")
    return s, truth


def displacement(samples, truth):
    """Euclidean error per sample and step, ``[S, H]``."""
    s, truth = _samples(samples, truth)
    return np.linalg.norm(s - truth[None], axis=-1)


def ade(samples, truth):
    """Average displacement error over samples and steps.

    Returns ``(scalar, curve)``; ``curve[h]`` averages over samples at step h.
    """
    err = displacement(samples, truth)
    curve = err.mean(axis=0)
    return float(curve.mean()), curve


def min_ade(samples, truth):
    """Best single-sample ADE. Reported only, never used as a gate."""
    return float(displacement(samples, truth).mean(axis=1).min())


def mae_rmse_per_dim(samples, truth, horizons):
    """Rows ``{"horizon", "dim", "mae", "rmse"}`` for each horizon index and
    state dimension, computed over samples at that step."""
    s, truth = _samples(samples, truth)
    h = truth.shape[0]
    rows = []
    for k in horizons:
        k = int(k)
        if not -h <= k < h:
            raise ConfigError(f"horizon index {k} outside trajectory of length {h}")
        e = s[:, k, :] - truth[k]
        for d in range(truth.shape[1]):
            rows.append(
                {
                    "horizon": k,
                    "dim": d,
                    "mae": float(np.mean(np.abs(e[:, d]))),
                    "rmse": float(np.sqrt(np.mean(e[:, d] ** 2))),
                }
            )
    return rows


# -- maze --------------------------------------------------------------------------


def goal_reward(traj, goal, maze, radius=None):
    """Steps spent within ``radius`` (default one cell) of the goal, counted
    up to the start of the first colliding segment."""
    x = np.asarray(traj, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    radius = maze.cell_size if radius is None else radius
    near = np.linalg.norm(x - goal, axis=1) <= radius
    hit = first_collision(x, maze)
    if hit is not None:
        near = near[: hit + 1]
    return float(near.sum())


def maze_score(executed, goal, expert, maze, radius=None, upper=SCORE_CAP):
    """``100 * clamp(reward(executed) / reward(expert), 0, upper / 100)``.

    ``expert`` is the expert trajectory or its precomputed reward.
    """
    if not maze.is_free_point(goal):
        raise ConfigError(f"goal {np.asarray(goal).tolist()} lies in an occupied cell")
    if np.ndim(expert) == 0:
        ref = float(expert)
    else:
        ref = goal_reward(expert, goal, maze, radius)
    if ref <= 0:
        raise ConfigError("expert earns no reward; cannot normalise")
    r = goal_reward(executed, goal, maze, radius)
    return float(min(max(100.0 * r / ref, 0.0), upper))


def collision_rate(samples, maze):
    """Fraction of sample paths that touch a wall or leave the grid."""
    s = np.asarray(samples, dtype=np.float64)
    if s.shape[0] == 0:
        raise UsageError("no samples to evaluate")
    return float(np.mean([segment_collisions(x, maze).any() for x in s]))


# -- reports -------------------------------------------------------------------------


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EvalReport:
    """Scalar metrics, per-step curves (length H) and run facts."""

    scalars: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    num_samples: int = 0
    config_hash: str = ""
    timing: dict = field(default_factory=dict)

    def check(self):
        lengths = {len(c) for c in self.curves.values()}
        if len(lengths) > 1:
            raise ShapeError(f"curves differ in length: {sorted(lengths)}")
        for name, curve in self.curves.items():
            if name in self.scalars and not np.isclose(self.scalars[name], np.mean(curve), rtol=1e-12, atol=1e-12):
                raise UsageError(f"scalar {name} is not the mean of its curve")

    def to_text(self):
        lines = [f"num_samples={self.num_samples}", f"config_hash={self.config_hash}"]
        lines += [f"{k}={v!r}" for k, v in sorted(self.scalars.items())]
        lines += [f"time_{k}={v!r}" for k, v in sorted(self.timing.items())]
        return "\n".join(lines) + "\n"

    def write(self, text_path, curves_path, include_timing=True):
        self.check()
        report = self if include_timing else EvalReport(self.scalars, self.curves, self.num_samples, self.config_hash)
        with open(text_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
        names = sorted(self.curves)
        with open(curves_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step"] + names)
            length = len(self.curves[names[0]]) if names else 0
            for k in range(length):
                w.writerow([k] + [repr(float(self.curves[n][k])) for n in names])

    @staticmethod
    def read_text(path):
        out = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line:
                    key, _, val = line.partition("=")
                    out[key] = val
        return out
