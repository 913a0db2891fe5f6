"""Matched denoising-diffusion baseline.

Same U-Net as the flow model, trained to predict the injected noise under a
cosine schedule. The network's time input is ``(k + 1) / T`` for diffusion
step ``k``, so both families see times in ``[0, 1]``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .diffcore import ops
from .training import as_training_data, fit
from .vfnet import VectorFieldNet, apply_net


@dataclass(frozen=True)
class DiffusionSchedule:
    num_steps: int
    betas: np.ndarray
    alpha_bars: np.ndarray

    def time_input(self, k):
        return (np.asarray(k, dtype=np.float64) + 1.0) / self.num_steps


def cosine_schedule(num_steps, s=0.008, max_beta=0.999):
    """Cosine alpha-bar schedule with betas clipped at ``max_beta``."""

    def f(u):
        return math.cos((u / num_steps + s) / (1 + s) * math.pi / 2) ** 2

    f0 = f(0)
    abar = np.array([f(k + 1) / f0 for k in range(num_steps)])
    prev = np.concatenate([[1.0], abar[:-1]])
    betas = np.minimum(1.0 - abar / prev, max_beta)
    return DiffusionSchedule(num_steps, betas, np.cumprod(1.0 - betas))


@dataclass
class DiffusionNet:
    """Noise-prediction network plus its schedule."""

    net: VectorFieldNet
    schedule: DiffusionSchedule

    @property
    def config(self):
        return self.net.config

    @property
    def params(self):
        return self.net.params

    def with_params(self, params):
        return DiffusionNet(self.net.with_params(params), self.schedule)

    def num_params(self):
        return self.net.num_params()


def make_baseline(net, num_steps=64):
    return DiffusionNet(net, cosine_schedule(num_steps))


def noisy_batch(x0, schedule, rng):
    """Forward process draw: ``(k, x_k, eps)`` for a batch of clean ``x0``."""
    b = x0.shape[0]
    k = rng.stream("time").integers(0, schedule.num_steps, size=b)
    eps = rng.stream("prior").standard_normal(x0.shape)
    ab = schedule.alpha_bars[k].reshape(-1, 1, 1)
    return k, np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps, eps


def train(data, model, cfg, state=None, on_checkpoint=None):
    """Epsilon-prediction training; ``cfg.sigma`` is unused here."""
    config = model.config
    sched = model.schedule

    def batch_loss(params, traj, ctx, rng):
        k, xk, eps = noisy_batch(traj, sched, rng)
        pred = apply_net(config, params, sched.time_input(k), xk, ctx)
        return ops.mean_square_error(pred, eps)

    return fit(as_training_data(data), model, cfg, batch_loss, state=state, on_checkpoint=on_checkpoint)
