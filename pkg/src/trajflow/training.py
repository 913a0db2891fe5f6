"""Shared minibatch training loop for both model families."""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .diffcore import AdamHyper, SeededRng, adam_step, backward, init_moments, record_forward
from .errors import ConfigError, NonFiniteError, ShapeError, TrainingError

log = logging.getLogger(__name__)

LR_SCHEDULES = ("constant", "cosine")


@dataclass(frozen=True)
class TrainerConfig:
    sigma: float = 0.01
    batch_size: int = 32
    steps: int = 2000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    checkpoint_every: int = 0
    lr_schedule: str = "constant"

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma}")
        if self.steps < 0:
            raise ConfigError(f"steps must be nonnegative, got {self.steps}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be nonnegative")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigError(f"lr_schedule must be one of {LR_SCHEDULES}, got {self.lr_schedule!r}")

    def adam(self, step=1, total=None):
        """Optimiser hyperparameters for ``step`` of a ``total``-step run."""
        lr = self.lr
        if self.lr_schedule == "cosine":
            total = total or self.steps
            frac = min(max(step - 1, 0) / max(total, 1), 1.0)
            lr = self.lr * 0.5 * (1.0 + math.cos(math.pi * frac))
        return AdamHyper(lr=lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class TrainingData:
    """Normalised trajectories ``[n, H, D]`` with contexts ``[n, C]``."""

    trajectories: np.ndarray
    contexts: np.ndarray

    def __post_init__(self):
        self.trajectories = np.asarray(self.trajectories, dtype=np.float64)
        n = self.trajectories.shape[0]
        if self.contexts is None:
            self.contexts = np.zeros((n, 0))
        self.contexts = np.asarray(self.contexts, dtype=np.float64).reshape(n, -1)

    def __len__(self):
        return self.trajectories.shape[0]


def as_training_data(data):
    if isinstance(data, TrainingData):
        return data
    traj, ctx = data
    return TrainingData(traj, ctx)


@dataclass
class TrainState:
    net: object
    moments: dict
    step: int = 0
    history: list = field(default_factory=list)


def fit(data, net, cfg, batch_loss, state=None, on_checkpoint=None):
    """Run ``cfg.steps`` optimiser steps.

    ``batch_loss(params, batch_traj, batch_ctx, rng)`` must return a scalar
    tape value; it draws any extra noise from ``rng`` streams. ``state``
    resumes a previous run: step numbering, moments and the random streams
    continue from where it stopped. ``on_checkpoint(state)`` returns the path
    it wrote, remembered as the last good checkpoint.
    """
    cfg_net = net.config
    if len(data) == 0:
        raise ConfigError("cannot train on an empty dataset")
    if data.trajectories.shape[1:] != (cfg_net.horizon, cfg_net.state_dim):
        raise ShapeError(
            f"dataset trajectories {data.trajectories.shape[1:]} do not match net "
            f"({cfg_net.horizon}, {cfg_net.state_dim})"
        )
    if data.contexts.shape[1] != cfg_net.context_dim:
        raise ShapeError(f"dataset context dim {data.contexts.shape[1]} != net {cfg_net.context_dim}")
    if state is None:
        state = TrainState(net=net, moments=init_moments(net.params))
    rng = _resumed_rng(cfg.seed, state.step)
    first = state.step
    last_ckpt = None
    n = len(data)
    for _ in range(cfg.steps):
        step = state.step + 1
        idx = rng.stream("data").integers(0, n, size=cfg.batch_size)
        traj = data.trajectories[idx]
        ctx = data.contexts[idx]
        loss_val, tape = record_forward(lambda **p: batch_loss(p, traj, ctx, rng), state.net.params)
        loss = float(loss_val)
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {step}", step, last_ckpt)
        grads = backward(tape)
        try:
            params, moments = adam_step(
                state.net.params, grads, state.moments, cfg.adam(step - first, cfg.steps), step
            )
        except NonFiniteError as exc:
            raise TrainingError(f"step {step}: {exc}", step, last_ckpt) from exc
        state.net = state.net.with_params(params)
        state.moments = moments
        state.step = step
        state.history.append(loss)
        if cfg.checkpoint_every and step % cfg.checkpoint_every == 0 and on_checkpoint is not None:
            last_ckpt = on_checkpoint(state)
        if step % 500 == 0:
            log.info("step %d loss %.6g", step, loss)
    return state


def _resumed_rng(seed, start_step):
    # streams are keyed by seed and the resume point so a resumed run
    # never replays the batches of the run it continues
    if start_step == 0:
        return SeededRng(seed)
    return SeededRng((int(seed) * 1_000_003 + int(start_step)) % 2**64)
