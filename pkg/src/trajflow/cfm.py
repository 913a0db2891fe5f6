"""Conditional flow matching: Gaussian path, straight-line target, regression loss.

The source distribution is a standard normal over normalised trajectory
coordinates. Training pairs each data trajectory with an independent noise
trajectory, samples a flow time per batch element, and regresses the network
onto the displacement ``tau1 - tau0``.
"""

import numpy as np

from .diffcore import SeededRng, ops
from .errors import ConfigError, DomainError, ShapeError
from .training import TrainerConfig, as_training_data, fit
from .vfnet import apply_net

__all__ = [
    "TrainerConfig",
    "cfm_loss",
    "sample_probability_path",
    "target_vector_field",
    "train",
]


def _generator(rng, purpose):
    if isinstance(rng, SeededRng):
        return rng.stream(purpose)
    return rng


def sample_probability_path(tau0, tau1, t, sigma, rng=None):
    """Draw from ``N(t * tau1 + (1 - t) * tau0, sigma^2 I)``.

    ``t`` is a scalar, or an array of per-row times when ``tau0``/``tau1`` carry
    a leading batch axis. ``rng`` may be a :class:`SeededRng` (its ``"path"``
    stream is used) or a numpy Generator; it is not touched when ``sigma == 0``.
    """
    tau0 = np.asarray(tau0, dtype=np.float64)
    tau1 = np.asarray(tau1, dtype=np.float64)
    if tau0.shape != tau1.shape:
        raise ShapeError(f"tau0 {tau0.shape} and tau1 {tau1.shape} differ")
    if sigma < 0:
        raise ConfigError(f"sigma must be nonnegative, got {sigma}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError("flow time must lie in [0, 1]")
    if t.ndim == 1:
        t = t.reshape(-1, *([1] * (tau0.ndim - 1)))
    mean = t * tau1 + (1.0 - t) * tau0
    if sigma == 0:
        return mean
    eps = _generator(rng, "path").standard_normal(tau0.shape)
    return mean + sigma * eps


def target_vector_field(tau0, tau1):
    """Displacement ``tau1 - tau0``; the same at every flow time."""
    tau0 = np.asarray(tau0, dtype=np.float64)
    tau1 = np.asarray(tau1, dtype=np.float64)
    if tau0.shape != tau1.shape:
        raise ShapeError(f"tau0 {tau0.shape} and tau1 {tau1.shape} differ")
    return tau1 - tau0


def cfm_loss(predicted, target):
    """Mean squared error over batch, horizon and state dims."""
    return ops.mean_square_error(predicted, target)


def flow_batch(tau1, rng, sigma):
    """Build one training batch: ``(t, tau_t, target)`` from data ``tau1``."""
    b = tau1.shape[0]
    tau0 = rng.stream("prior").standard_normal(tau1.shape)
    t = rng.stream("time").uniform(0.0, 1.0, size=b)
    tau_t = sample_probability_path(tau0, tau1, t, sigma, rng)
    return t, tau_t, target_vector_field(tau0, tau1)


def train(data, net, cfg, state=None, on_checkpoint=None):
    """Fit ``net`` to ``data`` (a :class:`TrainingData`); returns the final
    :class:`~trajflow.training.TrainState` (``.net``, ``.history``)."""
    config = net.config

    def batch_loss(params, traj, ctx, rng):
        t, tau_t, target = flow_batch(traj, rng, cfg.sigma)
        return cfm_loss(apply_net(config, params, t, tau_t, ctx), target)

    return fit(as_training_data(data), net, cfg, batch_loss, state=state, on_checkpoint=on_checkpoint)
