"""Trajectory generation: Euler/midpoint integration of a learned field, and
strided ancestral sampling for the diffusion baseline.

Both samplers share the planning constraint: the start state is written to
index 0 and the goal state to ``goal_index`` (default ``H - 1``) before every
network evaluation, and once more after the last step, so returned samples
satisfy the endpoints bit-exactly.
"""

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .ddpm import DiffusionNet
from .diffcore import SeededRng
from .errors import ConfigError, NonFiniteError, ShapeError
from .vfnet import VectorFieldNet, apply_net

SOLVERS = ("euler", "midpoint")


@dataclass(frozen=True)
class PlanConstraint:
    start_state: np.ndarray
    goal_state: np.ndarray
    goal_index: int = -1

    def apply(self, x):
        """Clamp endpoints of a ``[S, H, D]`` batch in place."""
        x[:, 0, :] = self.start_state
        x[:, self.goal_index, :] = self.goal_state
        return x


@dataclass(frozen=True)
class SampleRequest:
    context: np.ndarray = field(default_factory=lambda: np.zeros(0))
    num_steps: int = 1
    num_samples: int = 1
    constraints: PlanConstraint = None
    solver: str = "euler"
    seed: int = 0

    def __post_init__(self):
        if int(self.num_steps) < 1:
            raise ConfigError(f"num_steps must be >= 1, got {self.num_steps}")
        if int(self.num_samples) < 1:
            raise ConfigError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")


def step_time_schedule(n):
    """Uniform grid ``[(k / n, 1 / n) for k < n]``."""
    if n < 1:
        raise ConfigError(f"number of steps must be >= 1, got {n}")
    dt = 1.0 / n
    return [(k / n, dt) for k in range(n)]


class _Field:
    """Adapter giving every model the call shape ``f(t[S], x[S,H,D]) -> [S,H,D]``
    and counting evaluations."""

    def __init__(self, model, context, num_samples):
        self.model = model
        self.calls = 0
        if isinstance(model, (VectorFieldNet, DiffusionNet)):
            cfg = model.config
            self.shape = (cfg.horizon, cfg.state_dim)
            ctx = np.asarray(context, dtype=np.float64).reshape(-1)
            if ctx.size != cfg.context_dim:
                raise ShapeError(f"context length {ctx.size} != model context_dim {cfg.context_dim}")
        else:
            self.shape = None
            ctx = np.asarray(context, dtype=np.float64).reshape(-1)
        self.ctx = np.broadcast_to(ctx, (num_samples, ctx.size))

    def __call__(self, t, x):
        self.calls += 1
        tb = np.full(x.shape[0], t, dtype=np.float64)
        if isinstance(self.model, (VectorFieldNet, DiffusionNet)):
            return apply_net(self.model.config, self.model.params, tb, x, self.ctx)
        return np.asarray(self.model(tb, x, self.ctx), dtype=np.float64)


def _check_finite(v, step):
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"non-finite field output at sampling step {step}")


def _prior(req, shape):
    return SeededRng(req.seed).stream("prior").standard_normal((req.num_samples, *shape))


def _check_constraints(req, shape):
    c = req.constraints
    if c is None:
        return
    d = shape[1]
    if np.shape(c.start_state) != (d,) or np.shape(c.goal_state) != (d,):
        raise ShapeError(f"constraint states must have dimension {d}")


def euler_sample(model, req, shape=None, tau0=None, stats=None):
    """Integrate the field from ``tau0 ~ N(0, I)`` over ``t in [0, 1]``.

    ``model`` is a :class:`VectorFieldNet` or any callable
    ``f(t[S], x[S, H, D], context[S, C])``; for a bare callable ``shape`` gives
    ``(H, D)``. ``tau0`` overrides the prior draw. Returns ``[S, H, D]``.
    ``stats``, if given, receives ``network_calls``.
    """
    fld = _Field(model, req.context, req.num_samples)
    shape = fld.shape or tuple(shape if shape is not None else np.shape(tau0)[-2:])
    _check_constraints(req, shape)
    x = _prior(req, shape) if tau0 is None else np.array(tau0, dtype=np.float64).reshape(req.num_samples, *shape)
    con = req.constraints
    for step, (t, dt) in enumerate(step_time_schedule(req.num_steps)):
        if con is not None:
            con.apply(x)
        v = fld(t, x)
        _check_finite(v, step)
        if req.solver == "midpoint":
            xm = x + (0.5 * dt) * v
            if con is not None:
                con.apply(xm)
            v = fld(t + 0.5 * dt, xm)
            _check_finite(v, step)
        x = x + dt * v
    if con is not None:
        con.apply(x)
    if stats is not None:
        stats["network_calls"] = fld.calls
    return x


def strided_timesteps(total, n):
    """``n`` evenly strided diffusion steps ending at ``total - 1``, descending."""
    if n < 1:
        raise ConfigError(f"number of steps must be >= 1, got {n}")
    if n > total:
        raise ConfigError(f"cannot sample with {n} steps from a {total}-step schedule")
    ks = [(total * (i + 1)) // n - 1 for i in range(n)]
    return ks[::-1]


def ddpm_ancestral_sample(baseline, req, stats=None, clip=True):
    """Ancestral sampling over a strided subset of the training schedule.

    Each step predicts the noise, forms the clean estimate (clipped to the
    normalised data box when ``clip``), and draws from the Gaussian posterior
    between the current and next strided steps. Returns ``[S, H, D]``.
    """
    if not isinstance(baseline, DiffusionNet):
        raise ConfigError("ddpm_ancestral_sample needs a DiffusionNet")
    sched = baseline.schedule
    ks = strided_timesteps(sched.num_steps, req.num_steps)
    fld = _Field(baseline, req.context, req.num_samples)
    shape = fld.shape
    _check_constraints(req, shape)
    rng = SeededRng(req.seed)
    x = _prior(req, shape)
    noise = rng.stream("ancestral")
    con = req.constraints
    abar = sched.alpha_bars
    for step, k in enumerate(ks):
        if con is not None:
            con.apply(x)
        eps = fld(float(sched.time_input(k)), x)
        _check_finite(eps, step)
        ab = abar[k]
        x0 = (x - np.sqrt(1.0 - ab) * eps) / np.sqrt(ab)
        if clip:
            x0 = np.clip(x0, -1.0, 1.0)
        k_prev = ks[step + 1] if step + 1 < len(ks) else -1
        if k_prev < 0:
            x = x0
            continue
        ab_prev = abar[k_prev]
        beta = 1.0 - ab / ab_prev
        c0 = np.sqrt(ab_prev) * beta / (1.0 - ab)
        ct = np.sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab)
        var = beta * (1.0 - ab_prev) / (1.0 - ab)
        x = c0 * x0 + ct * x + np.sqrt(var) * noise.standard_normal(x.shape)
    if con is not None:
        con.apply(x)
    if stats is not None:
        stats["network_calls"] = fld.calls
    return x


def sample(model, req, stats=None):
    """Dispatch to the sampler matching the model family."""
    if isinstance(model, DiffusionNet):
        return ddpm_ancestral_sample(model, req, stats=stats)
    return euler_sample(model, req, stats=stats)


def measure_sampling_latency(model, req, repetitions=5):
    """Wall-clock sampling statistics after one warm-up run.

    ``network_calls`` is the number of network evaluations needed to produce
    one batch of ``req.num_samples`` samples.
    """
    if repetitions < 3:
        raise ConfigError("repetitions must be >= 3")
    stats = {}
    sample(model, req, stats=stats)
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        sample(model, req, stats=stats)
        times.append((time.perf_counter() - t0) * 1e3)
    return {
        "mean_ms": statistics.fmean(times),
        "std_ms": statistics.stdev(times),
        "network_calls": stats["network_calls"],
    }
