import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from trajflow import cfm
from trajflow.diffcore import SeededRng, check_gradients, ops
from trajflow.errors import ConfigError, DomainError, ShapeError, TrainingError
from trajflow.training import TrainerConfig, TrainingData, fit
from trajflow.vfnet import NetConfig, apply_net, init_net

finite = st.floats(-1e6, 1e6, allow_nan=False)
traj_pair = st.integers(1, 6).flatmap(
    lambda h: st.tuples(arrays(np.float64, (h, 2), elements=finite), arrays(np.float64, (h, 2), elements=finite))
)


@settings(max_examples=200, deadline=None)
@given(traj_pair)
def test_path_endpoints_are_exact(pair):
    tau0, tau1 = pair
    assert np.array_equal(cfm.sample_probability_path(tau0, tau1, 0.0, 0.0), tau0)
    assert np.array_equal(cfm.sample_probability_path(tau0, tau1, 1.0, 0.0), tau1)


@settings(max_examples=200, deadline=None)
@given(traj_pair)
def test_target_field_closes_the_gap(pair):
    tau0, tau1 = pair
    u = cfm.target_vector_field(tau0, tau1)
    # one rounding in the subtraction and one in the addition
    tol = 2 * np.finfo(float).eps * np.maximum(np.abs(tau0), np.abs(tau1))
    assert np.all(np.abs((u + tau0) - tau1) <= tol)


def test_target_field_has_no_time_dependence():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
    assert np.array_equal(cfm.target_vector_field(a, b), cfm.target_vector_field(a, b))


def test_path_noise_uses_path_stream_only_when_sigma_positive():
    rng = SeededRng(5)
    tau0, tau1 = np.zeros((3, 2)), np.ones((3, 2))
    cfm.sample_probability_path(tau0, tau1, 0.5, 0.0, rng)
    first = rng.stream("path").standard_normal(2)
    assert np.array_equal(first, SeededRng(5).stream("path").standard_normal(2))
    noisy = cfm.sample_probability_path(tau0, tau1, 0.5, 0.1, SeededRng(5))
    assert not np.array_equal(noisy, np.full((3, 2), 0.5))


def test_batched_times_apply_per_row():
    tau0, tau1 = np.zeros((2, 3, 1)), np.ones((2, 3, 1))
    out = cfm.sample_probability_path(tau0, tau1, np.array([0.25, 0.75]), 0.0)
    assert np.array_equal(out[0], np.full((3, 1), 0.25))
    assert np.array_equal(out[1], np.full((3, 1), 0.75))


def test_path_argument_errors():
    with pytest.raises(ConfigError):
        cfm.sample_probability_path(np.zeros(2), np.zeros(2), 0.5, -1.0)
    with pytest.raises(DomainError):
        cfm.sample_probability_path(np.zeros(2), np.zeros(2), 1.5, 0.0)
    with pytest.raises(ShapeError):
        cfm.target_vector_field(np.zeros(2), np.zeros(3))


def _tiny():
    return NetConfig(horizon=4, state_dim=2, context_dim=2, base_channels=4, depth=1, groups=2, time_embed_dim=4)


@pytest.mark.parametrize("seed", range(100))
def test_full_loss_gradient_matches_finite_differences(seed):
    cfg = _tiny()
    rng = np.random.default_rng(seed)
    net = init_net(cfg, SeededRng(seed))
    # perturb the zero-initialised layers so every gradient path is exercised
    params = {k: v + 0.2 * rng.standard_normal(v.shape) for k, v in net.params.items()}
    tau1 = rng.standard_normal((3, 4, 2))
    ctx = rng.standard_normal((3, 2))
    srng = SeededRng(seed)
    t, tau_t, target = cfm.flow_batch(tau1, srng, 0.01)

    def loss(**p):
        return cfm.cfm_loss(apply_net(cfg, p, t, tau_t, ctx), target)

    errs = check_gradients(loss, params, h=1e-5, max_coords=2, rng=rng)
    assert max(errs.values()) < 1e-4, errs


def test_zero_steps_returns_input_net():
    cfg = _tiny()
    net = init_net(cfg, SeededRng(0))
    data = (np.zeros((5, 4, 2)), np.zeros((5, 2)))
    st_ = cfm.train(data, net, TrainerConfig(steps=0))
    assert st_.history == []
    assert all(np.array_equal(st_.net.params[k], net.params[k]) for k in net.params)


def test_same_seed_same_history():
    cfg = _tiny()
    rng = np.random.default_rng(0)
    data = (rng.standard_normal((10, 4, 2)), rng.standard_normal((10, 2)))
    runs = [cfm.train(data, init_net(cfg, SeededRng(1)), TrainerConfig(steps=15, batch_size=4)).history for _ in range(2)]
    assert runs[0] == runs[1]


def test_resume_continues_step_numbering():
    cfg = _tiny()
    rng = np.random.default_rng(0)
    data = (rng.standard_normal((10, 4, 2)), rng.standard_normal((10, 2)))
    state = cfm.train(data, init_net(cfg, SeededRng(1)), TrainerConfig(steps=6, batch_size=4))
    state = cfm.train(data, state.net, TrainerConfig(steps=4, batch_size=4), state=state)
    assert state.step == 10
    assert len(state.history) == 10


def test_non_finite_loss_reports_step_and_last_checkpoint():
    cfg = _tiny()
    calls = {"n": 0}

    def batch_loss(params, traj, ctx, rng):
        calls["n"] += 1
        base = ops.mean_square_error(params["out.b"], np.zeros(2))
        return ops.mul(base, float("nan")) if calls["n"] == 3 else base

    saved = []

    def on_ckpt(state):
        saved.append(f"ckpt-{state.step}")
        return saved[-1]

    data = TrainingData(np.zeros((4, 4, 2)), np.zeros((4, 2)))
    with pytest.raises(TrainingError) as exc:
        fit(data, init_net(cfg, SeededRng(0)), TrainerConfig(steps=5, batch_size=2, checkpoint_every=1), batch_loss, on_checkpoint=on_ckpt)
    assert exc.value.step == 3
    assert exc.value.last_checkpoint == "ckpt-2"


def test_dataset_shape_must_match_net():
    with pytest.raises(ShapeError):
        cfm.train((np.zeros((3, 8, 2)), np.zeros((3, 2))), init_net(_tiny(), SeededRng(0)), TrainerConfig(steps=1))


@pytest.mark.parametrize("kw", [dict(sigma=-0.1), dict(batch_size=0), dict(steps=-1), dict(lr_schedule="step")])
def test_trainer_config_validation(kw):
    with pytest.raises(ConfigError):
        TrainerConfig(**kw)


def test_cosine_schedule_decays_to_zero():
    cfg = TrainerConfig(lr=0.01, steps=100, lr_schedule="cosine")
    assert cfg.adam(1).lr == 0.01
    assert cfg.adam(51).lr == pytest.approx(0.005)
    assert cfg.adam(101).lr == pytest.approx(0.0, abs=1e-18)
    assert TrainerConfig(lr=0.01).adam(77).lr == 0.01
