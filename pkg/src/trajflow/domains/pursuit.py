"""Synthetic pursuit-evasion tracking data.

An evader leaves a start region and walks with a noisy heading toward one of
several hideouts. A tracker sees it only through sparse detections: each
history step is detected independently with probability ``detection_rate``.
The model predicts the next ``horizon`` evader positions from the ``K`` most
recent detections.

Context layout, per slot and most recent first: ``(age, x, y, valid)`` where
``age`` is steps since the detection divided by the history length. Unused
slots are all zero.
"""

from dataclasses import dataclass, field

import numpy as np

from ..diffcore import SeededRng
from ..errors import ConfigError
from .dataset import Dataset

SLOT = 4


def _default_hideouts():
    return ((15.0, 90.0), (50.0, 95.0), (85.0, 90.0))


@dataclass(frozen=True)
class PursuitScenario:
    bounds: tuple = (0.0, 0.0, 100.0, 100.0)
    hideouts: tuple = field(default_factory=_default_hideouts)
    start_region: tuple = (40.0, 0.0, 60.0, 10.0)
    speed: float = 1.0
    heading_noise: float = 0.15
    detection_rate: float = 0.44
    horizon: int = 64
    history: int = 16
    max_detections: int = 8

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ConfigError("pursuit bounds must have positive extent")
        if len(self.hideouts) < 1:
            raise ConfigError("pursuit scenario needs at least one hideout")
        for hx, hy in self.hideouts:
            if not (xmin <= hx <= xmax and ymin <= hy <= ymax):
                raise ConfigError(f"hideout ({hx}, {hy}) lies outside the map bounds")
        sx0, sy0, sx1, sy1 = self.start_region
        if not (xmin <= sx0 <= sx1 <= xmax and ymin <= sy0 <= sy1 <= ymax):
            raise ConfigError("start region must lie inside the map bounds")
        if not 0.0 < self.detection_rate < 1.0:
            raise ConfigError(f"detection_rate must be in (0, 1), got {self.detection_rate}")
        if self.speed <= 0 or self.heading_noise < 0:
            raise ConfigError("speed must be positive and heading_noise nonnegative")
        if self.horizon < 1 or self.history < 1 or self.max_detections < 1:
            raise ConfigError("horizon, history and max_detections must be positive")

    @property
    def context_dim(self):
        return SLOT * self.max_detections

    def to_dict(self):
        d = dict(self.__dict__)
        d["hideouts"] = [list(h) for h in self.hideouts]
        d["bounds"] = list(self.bounds)
        d["start_region"] = list(self.start_region)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("bounds", "start_region"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        if "hideouts" in d:
            d["hideouts"] = tuple(tuple(float(v) for v in h) for h in d["hideouts"])
        return cls(**d)


def simulate_evader(scn, rng):
    """One path of ``history + horizon`` positions and the chosen hideout index."""
    x0, y0, x1, y1 = scn.start_region
    pos = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
    target_idx = int(rng.integers(len(scn.hideouts)))
    target = np.asarray(scn.hideouts[target_idx], dtype=np.float64)
    steps = scn.history + scn.horizon
    noise = rng.normal(0.0, scn.heading_noise, size=steps) if scn.heading_noise > 0 else np.zeros(steps)
    lo = np.array(scn.bounds[:2])
    hi = np.array(scn.bounds[2:])
    path = np.empty((steps, 2))
    for k in range(steps):
        path[k] = pos
        gap = target - pos
        dist = float(np.hypot(*gap))
        if dist <= scn.speed:
            pos = target.copy()
            continue
        heading = np.arctan2(gap[1], gap[0]) + noise[k]
        pos = np.clip(pos + scn.speed * np.array([np.cos(heading), np.sin(heading)]), lo, hi)
    return path, target_idx


def detection_context(history, detected, max_detections):
    """Encode the most recent detections of a ``[P, 2]`` history."""
    p = history.shape[0]
    ctx = np.zeros((max_detections, SLOT))
    idx = np.flatnonzero(detected)[::-1][:max_detections]
    for slot, k in enumerate(idx):
        ctx[slot] = ((p - k) / p, history[k, 0], history[k, 1], 1.0)
    return ctx.reshape(-1)


def generate_pursuit_dataset(scn, n, seed):
    """``n`` evader futures ``[n, H, 2]`` with detection contexts.

    ``info`` reports the realised detection fraction over all history steps
    and the hideout each evader chose.
    """
    if n < 0:
        raise ConfigError("n must be nonnegative")
    root = SeededRng(seed)
    traj = np.empty((n, scn.horizon, 2))
    ctx = np.empty((n, scn.context_dim))
    choice = np.empty(n, dtype=np.int64)
    hits = 0
    for i in range(n):
        rng = root.child("pursuit", i)
        path, choice[i] = simulate_evader(scn, rng)
        hist = path[: scn.history]
        detected = rng.random(scn.history) < scn.detection_rate
        hits += int(detected.sum())
        ctx[i] = detection_context(hist, detected, scn.max_detections)
        traj[i] = path[scn.history :]
    total = n * scn.history
    info = {
        "n": n,
        "detection_rate": scn.detection_rate,
        "realized_detection_rate": hits / total if total else float("nan"),
        "history_steps": total,
        "hideout": choice.tolist(),
    }
    return Dataset(traj, ctx, info)
