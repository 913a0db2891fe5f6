import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajflow import cfm
from trajflow.diffcore import SeededRng, backward, record_forward
from trajflow.errors import ConfigError, DomainError, ShapeError
from trajflow.training import TrainerConfig
from trajflow.vfnet import NetConfig, apply_net, film_modulate, forward, init_net, time_embed


def count_params(h, d, c, base, depth, k, te):
    """Walk the U-Net layer by layer and add up weight sizes."""
    hc = 2 * te
    total = (te + c) * hc + hc + hc * hc + hc
    total += base * d * k + base

    def res(cin, cout):
        n = cout * cin * k + cout + 2 * cout
        n += 2 * (hc * cout + cout)
        n += cout * cout * k + cout + 2 * cout
        if cin != cout:
            n += cout * cin + cout
        return n

    prev = base
    for i in range(depth):
        ch = base * 2**i
        total += res(prev, ch) + ch * ch * 3 + ch
        prev = ch
    total += res(prev, base * 2**depth)
    prev = base * 2**depth
    for i in reversed(range(depth)):
        ch = base * 2**i
        total += ch * prev * k + ch + res(2 * ch, ch)
        prev = ch
    return total + d * base + d


def test_parameter_count_matches_independent_walk():
    cfg = NetConfig(horizon=16, state_dim=2, base_channels=32, depth=2, kernel_size=5)
    net = init_net(cfg, SeededRng(0))
    assert net.num_params() == count_params(16, 2, 0, 32, 2, 5, 32)


@pytest.mark.parametrize("depth,base,ctx", [(1, 8, 0), (2, 16, 3), (3, 8, 5)])
def test_parameter_count_is_pure_function_of_config(depth, base, ctx):
    cfg = NetConfig(horizon=32, state_dim=3, context_dim=ctx, base_channels=base, depth=depth)
    a = init_net(cfg, SeededRng(0)).num_params()
    b = init_net(cfg, SeededRng(9)).num_params()
    assert a == b == count_params(32, 3, ctx, base, depth, 5, 32)


def test_output_shape_and_zero_field_at_init():
    cfg = NetConfig(horizon=16, state_dim=2, depth=2)
    net = init_net(cfg, SeededRng(0))
    out = forward(net, 0.3, np.random.default_rng(0).standard_normal((16, 2)))
    assert out.shape == (16, 2)
    assert np.array_equal(out, np.zeros((16, 2)))


def test_same_seed_same_params():
    cfg = NetConfig(horizon=8, state_dim=1, base_channels=8, depth=1)
    a, b = init_net(cfg, SeededRng(4)), init_net(cfg, SeededRng(4))
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


@pytest.mark.parametrize(
    "kw",
    [
        dict(horizon=10, state_dim=2, depth=2),
        dict(horizon=16, state_dim=2, kernel_size=4),
        dict(horizon=16, state_dim=2, base_channels=12, groups=8),
        dict(horizon=16, state_dim=0),
    ],
)
def test_invalid_configs_rejected(kw):
    with pytest.raises(ConfigError):
        NetConfig(**kw)


def test_time_embed_at_zero():
    e = time_embed(0.0, 8)
    assert np.array_equal(e[:4], np.zeros(4))
    assert np.array_equal(e[4:], np.ones(4))


def test_time_embed_hand_computed_at_half():
    # two frequencies, log-spaced from 1 to 1000; exp(log(1000)) is off by an ulp
    want = [math.sin(0.5), math.sin(500.0), math.cos(0.5), math.cos(500.0)]
    assert np.allclose(time_embed(0.5, 4), want, rtol=0, atol=1e-12)


def test_time_embed_distinguishes_endpoints():
    assert not np.array_equal(time_embed(0.0, 2), time_embed(1.0, 2))


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.integers(1, 64))
def test_time_embed_length_and_range(t, dim):
    e = time_embed(t, dim)
    assert e.shape == (dim,)
    assert np.all(np.abs(e) <= 1.0)


@pytest.mark.parametrize("t", [-0.01, 1.01, float("nan")])
def test_time_embed_outside_unit_interval(t):
    with pytest.raises(DomainError):
        time_embed(t, 4)


def test_film_identity_and_formula():
    rng = np.random.default_rng(0)
    h = rng.standard_normal((3, 5))
    assert np.array_equal(film_modulate(h, np.zeros(3), np.zeros(3)), h)
    s, b = rng.standard_normal(3), rng.standard_normal(3)
    assert np.allclose(film_modulate(h, s, b), h * (1 + s[:, None]) + b[:, None])


def test_film_channel_mismatch():
    with pytest.raises(ShapeError):
        film_modulate(np.ones((3, 5)), np.ones(4), np.ones(4))


def test_forward_rejects_bad_shapes():
    cfg = NetConfig(horizon=8, state_dim=2, context_dim=3, base_channels=8, depth=1)
    net = init_net(cfg, SeededRng(0))
    with pytest.raises(ShapeError):
        forward(net, 0.5, np.zeros((8, 3)), np.zeros(3))
    with pytest.raises(ShapeError):
        forward(net, 0.5, np.zeros((8, 2)), np.zeros(2))


def test_every_parameter_receives_gradient():
    cfg = NetConfig(horizon=8, state_dim=2, context_dim=2, base_channels=4, depth=2, groups=2, time_embed_dim=4)
    net = init_net(cfg, SeededRng(0))
    rng = np.random.default_rng(1)
    params = {k: v + 0.1 * rng.standard_normal(v.shape) for k, v in net.params.items()}
    x = rng.standard_normal((3, 8, 2))
    ctx = rng.standard_normal((3, 2))
    _, tape = record_forward(
        lambda **p: cfm.cfm_loss(apply_net(cfg, p, np.array([0.1, 0.5, 0.9]), x, ctx), np.zeros_like(x)), params
    )
    grads = backward(tape)
    assert set(grads) == set(params)
    assert all(np.any(g != 0) for g in grads.values())


def test_trained_net_depends_on_context():
    cfg = NetConfig(horizon=8, state_dim=1, context_dim=1, base_channels=8, depth=1, groups=2)
    net = init_net(cfg, SeededRng(0))
    rng = np.random.default_rng(0)
    level = rng.uniform(-1, 1, size=64)
    traj = np.repeat(level[:, None, None], 8, axis=1)
    state = cfm.train((traj, level[:, None]), net, TrainerConfig(steps=100, batch_size=16, lr=3e-3))
    x = rng.standard_normal((8, 1))
    a = forward(state.net, 0.5, x, np.array([-0.8]))
    b = forward(state.net, 0.5, x, np.array([0.8]))
    assert np.max(np.abs(a - b)) > 0
