"""Temporal 1-d convolutional U-Net over trajectories with FiLM conditioning.

The network maps ``(t, trajectory [H, D], context [C]) -> [H, D]``. Time is
embedded with sinusoidal features, concatenated with the context, and passed
through a small MLP; every residual block gets a per-channel FiLM modulation
projected from that conditioning vector.

Layout (``c_i = base_channels * 2**i``)::

    in-conv D -> c_0
    for i < depth:   res(c_{i-1} -> c_i)  [skip]  -> stride-2 conv
    mid:             res(c_{depth-1} -> c_depth)
    for i reversed:  nearest x2 + conv -> c_i, concat skip, res(2 c_i -> c_i)
    out-conv (1x1, zero-initialised) c_0 -> D

Parameters are a flat ``{name: ndarray}`` dict so the same code path runs on
plain arrays (inference) and on tape ``Var`` handles (training).
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .diffcore import ops
from .errors import ConfigError, DomainError, ShapeError

MAX_FREQ = 1000.0


@dataclass(frozen=True)
class NetConfig:
    horizon: int
    state_dim: int
    context_dim: int = 0
    base_channels: int = 32
    depth: int = 2
    kernel_size: int = 5
    time_embed_dim: int = 32
    groups: int = 8

    def __post_init__(self):
        for name in ("horizon", "state_dim", "base_channels", "depth", "kernel_size", "time_embed_dim", "groups"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.context_dim < 0:
            raise ConfigError("context_dim must be nonnegative")
        if self.horizon % (2**self.depth):
            raise ConfigError(f"horizon {self.horizon} is not divisible by 2**depth = {2**self.depth}")
        if self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.base_channels % self.groups:
            raise ConfigError(f"base_channels {self.base_channels} not divisible by groups {self.groups}")

    @property
    def cond_dim(self):
        return 2 * self.time_embed_dim

    def channels(self, level):
        return self.base_channels * 2**level

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: int(v) for k, v in d.items()})


@dataclass
class VectorFieldNet:
    config: NetConfig
    params: dict = field(repr=False)

    def num_params(self):
        return int(sum(p.size for p in self.params.values()))

    def with_params(self, params):
        return VectorFieldNet(self.config, params)


def time_embed(t, dim):
    """Sinusoidal features ``[sin(w_i t)..., cos(w_i t)...]`` of flow time ``t``.

    ``w_i`` is log-spaced over ``[1, MAX_FREQ]``. ``t`` may be a scalar or a
    1-d array, giving ``[dim]`` or ``[len(t), dim]``.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise DomainError(f"flow time must lie in [0, 1], got {t}")
    if dim < 1:
        raise ConfigError("embedding dim must be positive")
    n_sin = dim // 2
    n_cos = dim - n_sin
    freqs = frequencies(n_cos)
    ang_sin = t_arr[..., None] * freqs[:n_sin]
    ang_cos = t_arr[..., None] * freqs
    return np.concatenate([np.sin(ang_sin), np.cos(ang_cos)], axis=-1)


def frequencies(n):
    if n == 1:
        return np.ones(1)
    return np.exp(np.linspace(0.0, np.log(MAX_FREQ), n))


def film_modulate(features, scale, shift):
    """``features * (1 + scale) + shift`` per channel; see :func:`ops.film`."""
    return ops.film(features, scale, shift)


# -- parameters ---------------------------------------------------------------


def _param_shapes(cfg):
    """Ordered ``(name, shape, init)`` triples; init is 'fan' or 'zero' or 'one'."""
    k = cfg.kernel_size
    hc = cfg.cond_dim
    spec = [
        ("cond.l1.w", (cfg.time_embed_dim + cfg.context_dim, hc), "fan"),
        ("cond.l1.b", (hc,), "fan"),
        ("cond.l2.w", (hc, hc), "fan"),
        ("cond.l2.b", (hc,), "fan"),
        ("in.w", (cfg.base_channels, cfg.state_dim, k), "fan"),
        ("in.b", (cfg.base_channels,), "fan"),
    ]

    def res(prefix, cin, cout):
        spec.extend(
            [
                (f"{prefix}.conv1.w", (cout, cin, k), "fan"),
                (f"{prefix}.conv1.b", (cout,), "fan"),
                (f"{prefix}.gn1.g", (cout,), "one"),
                (f"{prefix}.gn1.b", (cout,), "zero"),
                (f"{prefix}.film.scale.w", (hc, cout), "zero"),
                (f"{prefix}.film.scale.b", (cout,), "zero"),
                (f"{prefix}.film.shift.w", (hc, cout), "zero"),
                (f"{prefix}.film.shift.b", (cout,), "zero"),
                (f"{prefix}.conv2.w", (cout, cout, k), "fan"),
                (f"{prefix}.conv2.b", (cout,), "fan"),
                (f"{prefix}.gn2.g", (cout,), "one"),
                (f"{prefix}.gn2.b", (cout,), "zero"),
            ]
        )
        if cin != cout:
            spec.extend([(f"{prefix}.skip.w", (cout, cin, 1), "fan"), (f"{prefix}.skip.b", (cout,), "fan")])

    prev = cfg.base_channels
    for i in range(cfg.depth):
        c = cfg.channels(i)
        res(f"down{i}", prev, c)
        spec.extend([(f"down{i}.pool.w", (c, c, 3), "fan"), (f"down{i}.pool.b", (c,), "fan")])
        prev = c
    res("mid", prev, cfg.channels(cfg.depth))
    prev = cfg.channels(cfg.depth)
    for i in reversed(range(cfg.depth)):
        c = cfg.channels(i)
        spec.extend([(f"up{i}.conv.w", (c, prev, k), "fan"), (f"up{i}.conv.b", (c,), "fan")])
        res(f"up{i}", 2 * c, c)
        prev = c
    spec.extend([("out.w", (cfg.state_dim, cfg.base_channels, 1), "zero"), ("out.b", (cfg.state_dim,), "zero")])
    return spec


def _fan_in(name, shape, shapes_by_name):
    # biases share the fan-in of their weight
    wshape = shapes_by_name[name[:-2] + ".w"] if name.endswith(".b") else shape
    if len(wshape) == 3:
        return wshape[1] * wshape[2]
    return wshape[0]


def init_net(config, rng):
    """Fresh network; uniform(+-1/sqrt(fan_in)) weights, identity FiLM, zero output."""
    spec = _param_shapes(config)
    shapes = {name: shape for name, shape, _ in spec}
    gen = rng.stream("init")
    params = {}
    for name, shape, kind in spec:
        if kind == "zero":
            params[name] = np.zeros(shape)
        elif kind == "one":
            params[name] = np.ones(shape)
        else:
            fan = max(_fan_in(name, shape, shapes), 1)
            bound = 1.0 / np.sqrt(fan)
            params[name] = gen.uniform(-bound, bound, size=shape)
    return VectorFieldNet(config, params)


# -- forward ------------------------------------------------------------------


def _res_block(p, prefix, h, cond, groups):
    a = ops.conv1d(h, p[f"{prefix}.conv1.w"], p[f"{prefix}.conv1.b"])
    a = ops.mish(ops.group_norm(a, p[f"{prefix}.gn1.g"], p[f"{prefix}.gn1.b"], groups))
    scale = ops.dense(cond, p[f"{prefix}.film.scale.w"], p[f"{prefix}.film.scale.b"])
    shift = ops.dense(cond, p[f"{prefix}.film.shift.w"], p[f"{prefix}.film.shift.b"])
    a = ops.film(a, scale, shift)
    a = ops.conv1d(a, p[f"{prefix}.conv2.w"], p[f"{prefix}.conv2.b"])
    a = ops.mish(ops.group_norm(a, p[f"{prefix}.gn2.g"], p[f"{prefix}.gn2.b"], groups))
    if f"{prefix}.skip.w" in p:
        h = ops.conv1d(h, p[f"{prefix}.skip.w"], p[f"{prefix}.skip.b"], pad=0)
    return ops.add(a, h)


def apply_net(config, params, t, x, context):
    """Batched evaluation.

    ``t`` [B] in [0, 1], ``x`` [B, H, D], ``context`` [B, C]; returns [B, H, D].
    ``params`` values may be ndarrays or tape handles.
    """
    x = np.asarray(x, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    b = x.shape[0]
    if x.ndim != 3 or x.shape[1:] != (config.horizon, config.state_dim):
        raise ShapeError(f"trajectory batch {x.shape} does not match [B, {config.horizon}, {config.state_dim}]")
    if context.shape != (b, config.context_dim):
        raise ShapeError(f"context batch {context.shape} does not match [{b}, {config.context_dim}]")
    if t.shape != (b,):
        raise ShapeError(f"time batch {t.shape} does not match [{b}]")

    p = params
    g = config.groups
    emb = np.concatenate([time_embed(t, config.time_embed_dim), context], axis=1)
    cond = ops.mish(ops.dense(emb, p["cond.l1.w"], p["cond.l1.b"]))
    cond = ops.mish(ops.dense(cond, p["cond.l2.w"], p["cond.l2.b"]))

    h = ops.conv1d(np.ascontiguousarray(x.transpose(0, 2, 1)), p["in.w"], p["in.b"])
    skips = []
    for i in range(config.depth):
        h = _res_block(p, f"down{i}", h, cond, g)
        skips.append(h)
        h = ops.conv1d(h, p[f"down{i}.pool.w"], p[f"down{i}.pool.b"], stride=2, pad=1)
    h = _res_block(p, "mid", h, cond, g)
    for i in reversed(range(config.depth)):
        h = ops.conv1d(ops.upsample2(h), p[f"up{i}.conv.w"], p[f"up{i}.conv.b"])
        h = ops.concat(h, skips[i], axis=1)
        h = _res_block(p, f"up{i}", h, cond, g)
    h = ops.conv1d(h, p["out.w"], p["out.b"], pad=0)
    return ops.swap12(h)


def forward(net, t, traj, context=None):
    """Vector field at one trajectory: ``[H, D] -> [H, D]``."""
    cfg = net.config
    traj = np.asarray(traj, dtype=np.float64)
    if traj.shape != (cfg.horizon, cfg.state_dim):
        raise ShapeError(f"trajectory {traj.shape} does not match [{cfg.horizon}, {cfg.state_dim}]")
    ctx = np.zeros(0) if context is None else np.asarray(context, dtype=np.float64).reshape(-1)
    if ctx.shape != (cfg.context_dim,):
        raise ShapeError(f"context length {ctx.size} != context_dim {cfg.context_dim}")
    out = apply_net(cfg, net.params, np.array([float(t)]), traj[None], ctx[None])
    return out[0]
