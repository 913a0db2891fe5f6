"""Synthetic small-aircraft tracks in (lon-like, lat-like, alt-like) units.

Each track flies at constant ground speed and changes heading and climb rate
at a few random event times. Turns and climb changes are spread over several
steps so the path stays smooth. The forecasting context is the ``past`` most
recent states, flattened.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..diffcore import SeededRng
from ..errors import ConfigError
from .dataset import Dataset


@dataclass(frozen=True)
class FlightConfig:
    horizon: int = 32
    past: int = 16
    min_events: int = 2
    max_events: int = 5
    speed_range: tuple = (0.8, 1.2)
    max_turn: float = math.pi / 2
    max_climb: float = 0.3
    ramp_steps: int = 6

    def __post_init__(self):
        if self.horizon < 1 or self.past < 1:
            raise ConfigError("horizon and past must be positive")
        if not 0 <= self.min_events <= self.max_events:
            raise ConfigError("need 0 <= min_events <= max_events")
        lo, hi = self.speed_range
        if not 0 < lo <= hi:
            raise ConfigError("speed_range must be positive and ordered")
        if self.max_climb < 0 or self.ramp_steps < 1:
            raise ConfigError("max_climb must be nonnegative and ramp_steps positive")

    @property
    def speed_cap(self):
        """Upper bound on per-step displacement."""
        return math.hypot(self.speed_range[1], self.max_climb)

    @property
    def context_dim(self):
        return 3 * self.past

    def to_dict(self):
        d = dict(self.__dict__)
        d["speed_range"] = list(self.speed_range)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "speed_range" in d:
            d["speed_range"] = tuple(float(v) for v in d["speed_range"])
        return cls(**d)


def simulate_flight(cfg, rng):
    """One track of ``past + horizon`` states ``[T, 3]``."""
    steps = cfg.past + cfg.horizon
    speed = rng.uniform(*cfg.speed_range)
    heading = rng.uniform(-math.pi, math.pi)
    n_events = int(rng.integers(cfg.min_events, cfg.max_events + 1))
    times = np.sort(rng.choice(steps, size=n_events, replace=False)) if n_events else np.zeros(0, int)
    turns = rng.uniform(-cfg.max_turn, cfg.max_turn, size=n_events)
    climbs = rng.uniform(-cfg.max_climb, cfg.max_climb, size=n_events)
    turn_rate = np.zeros(steps)
    climb = np.zeros(steps)
    for k, dpsi, vz in zip(times, turns, climbs):
        end = min(k + cfg.ramp_steps, steps)
        turn_rate[k:end] += dpsi / cfg.ramp_steps
        climb[k:] = vz
    pos = np.array([rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(10, 30)])
    out = np.empty((steps, 3))
    for k in range(steps):
        out[k] = pos
        heading += turn_rate[k]
        pos = pos + np.array([speed * math.cos(heading), speed * math.sin(heading), climb[k]])
    return out


def generate_flight_dataset(n, seed, cfg=None):
    """``n`` future tracks ``[n, H, 3]`` with flattened past-state contexts."""
    cfg = cfg or FlightConfig()
    if n < 0:
        raise ConfigError("n must be nonnegative")
    root = SeededRng(seed)
    traj = np.empty((n, cfg.horizon, 3))
    ctx = np.empty((n, cfg.context_dim))
    for i in range(n):
        track = simulate_flight(cfg, root.child("flight", i))
        ctx[i] = track[: cfg.past].reshape(-1)
        traj[i] = track[cfg.past :]
    return Dataset(traj, ctx, {"n": n})


def split_sizes(n, fractions=(0.8, 0.1, 0.1)):
    """Largest-remainder rounding of ``n * fractions``.

    Leftover items go to the largest fractional parts; ties go to the later
    split.
    """
    if n < 0:
        raise ConfigError("n must be nonnegative")
    fr = np.asarray(fractions, dtype=np.float64)
    if np.any(fr < 0) or not math.isclose(fr.sum(), 1.0):
        raise ConfigError("split fractions must be nonnegative and sum to 1")
    # exact rational remainders so 0.1 * 474 ties with itself
    scaled = [round(f * 10**9) * n for f in fr]
    base = [s // 10**9 for s in scaled]
    rem = [s % 10**9 for s in scaled]
    left = n - sum(base)
    order = sorted(range(len(fr)), key=lambda i: (-rem[i], -i))
    for i in order[:left]:
        base[i] += 1
    return tuple(base)


def split_dataset(data, fractions=(0.8, 0.1, 0.1)):
    """Contiguous train/val/test subsets in generation order."""
    sizes = split_sizes(len(data), fractions)
    bounds = np.cumsum((0,) + sizes)
    return tuple(data.subset(slice(bounds[i], bounds[i + 1])) for i in range(len(sizes)))
