"""Desk-scale comparison experiments between the flow model and the
diffusion baseline, shared by the acceptance suite and the pilot script."""

import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import cfm, ddpm
from .diffcore import SeededRng
from .domains import (
    PursuitScenario,
    denormalize,
    fit_stats,
    generate_maze_dataset,
    generate_pursuit_dataset,
    load_maze,
    normalize,
)
from .metrics import ade, collision_rate, maze_score
from .sampler import PlanConstraint, SampleRequest, sample
from .training import TrainerConfig, TrainingData
from .vfnet import NetConfig, init_net


@dataclass(frozen=True)
class ComparisonConfig:
    horizon: int = 32
    n_train: int = 500
    n_eval: int = 50
    base_channels: int = 16
    depth: int = 2
    groups: int = 8
    steps: int = 3000
    batch_size: int = 32
    lr: float = 2e-3
    lr_schedule: str = "cosine"
    sigma: float = 0.01
    diffusion_steps: int = 64
    seed: int = 0
    eval_seed: int = 1000
    maze: str = "umaze"
    detection_rate: float = 0.44
    samples_per_item: int = 4
    step_counts: tuple = (1, 2, 64)
    collision_samples: int = 200

    def to_dict(self):
        d = asdict(self)
        d["step_counts"] = list(self.step_counts)
        return d


@dataclass
class TrainedPair:
    flow: object
    diffusion: object
    stats: object
    ctx_stats: object
    seconds: dict = field(default_factory=dict)


def _train_both(cfg, traj, ctx):
    stats = fit_stats(traj)
    with warnings.catch_warnings():
        # constant context slots are expected (e.g. an always-valid flag)
        warnings.simplefilter("ignore", RuntimeWarning)
        ctx_stats = fit_stats(ctx) if ctx.shape[1] else None
    data = TrainingData(normalize(traj, stats), normalize(ctx, ctx_stats) if ctx_stats else ctx)
    netcfg = NetConfig(
        horizon=cfg.horizon,
        state_dim=traj.shape[2],
        context_dim=ctx.shape[1],
        base_channels=cfg.base_channels,
        depth=cfg.depth,
        groups=cfg.groups,
    )
    tcfg = TrainerConfig(
        sigma=cfg.sigma,
        batch_size=cfg.batch_size,
        steps=cfg.steps,
        lr=cfg.lr,
        lr_schedule=cfg.lr_schedule,
        seed=cfg.seed,
    )
    seconds = {}
    t0 = time.perf_counter()
    flow = cfm.train(data, init_net(netcfg, SeededRng(cfg.seed)), tcfg).net
    seconds["train_tcfm"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    base = ddpm.make_baseline(init_net(netcfg, SeededRng(cfg.seed)), cfg.diffusion_steps)
    diffusion = ddpm.train(data, base, tcfg).net
    seconds["train_ddpm"] = time.perf_counter() - t0
    return TrainedPair(flow, diffusion, stats, ctx_stats, seconds)


def _ctx(pair, c):
    return normalize(c, pair.ctx_stats) if pair.ctx_stats is not None else c


def maze_comparison(cfg=ComparisonConfig()):
    """Planning on a bundled maze: mean maze score per family and step count
    over ``n_eval`` episodes, collision rates at N=2, and constraint checks."""
    maze = load_maze(cfg.maze)
    train = generate_maze_dataset(maze, cfg.n_train, cfg.horizon, cfg.seed)
    pair = _train_both(cfg, train.trajectories, train.contexts)
    test = generate_maze_dataset(maze, max(cfg.n_eval, cfg.collision_samples), cfg.horizon, cfg.eval_seed)
    out = {"config": cfg.to_dict(), "seconds": pair.seconds}
    models = {"tcfm": pair.flow, "ddpm": pair.diffusion}

    def plan(model, i, n, num=1, seed=0):
        ends = normalize(test.contexts[i].reshape(2, 2), pair.stats)
        req = SampleRequest(
            context=_ctx(pair, test.contexts[i]),
            num_steps=n,
            num_samples=num,
            constraints=PlanConstraint(ends[0], ends[1]),
            seed=seed,
        )
        # the final clamp happens in world units so denormalising cannot move the endpoints
        return PlanConstraint(*test.contexts[i].reshape(2, 2)).apply(denormalize(sample(model, req), pair.stats))

    exact = True
    for fam, model in models.items():
        for n in cfg.step_counts:
            scores, errs = [], []
            for i in range(cfg.n_eval):
                p = plan(model, i, n, seed=cfg.eval_seed + i)
                scores.append(maze_score(p[0], test.contexts[i, 2:], test.trajectories[i], maze))
                errs.append(ade(p, test.trajectories[i])[0])
                if fam == "tcfm":
                    exact &= bool(np.array_equal(p[0, 0], test.contexts[i, :2]))
                    exact &= bool(np.array_equal(p[0, -1], test.contexts[i, 2:]))
            out[f"score_{fam}_N{n}"] = float(np.mean(scores))
            out[f"ade_{fam}_N{n}"] = float(np.mean(errs))
        plans = np.concatenate(
            [plan(model, i, 2, seed=cfg.eval_seed + i) for i in range(cfg.collision_samples)]
        )
        out[f"collision_{fam}_N2"] = collision_rate(plans, maze)
    out["tcfm_constraints_exact"] = exact
    return out


def pursuit_refinement(cfg=ComparisonConfig(horizon=64, n_train=800, n_eval=50)):
    """Tracking on the pursuit domain: ADE per family and step count."""
    scn = PursuitScenario(detection_rate=cfg.detection_rate, horizon=cfg.horizon)
    train = generate_pursuit_dataset(scn, cfg.n_train, cfg.seed)
    pair = _train_both(cfg, train.trajectories, train.contexts)
    test = generate_pursuit_dataset(scn, cfg.n_eval, cfg.eval_seed)
    out = {
        "config": cfg.to_dict(),
        "seconds": pair.seconds,
        "realized_detection_rate": train.info["realized_detection_rate"],
    }
    for fam, model in (("tcfm", pair.flow), ("ddpm", pair.diffusion)):
        for n in cfg.step_counts:
            vals = []
            for i in range(cfg.n_eval):
                req = SampleRequest(
                    context=_ctx(pair, test.contexts[i]),
                    num_steps=n,
                    num_samples=cfg.samples_per_item,
                    seed=cfg.eval_seed + i,
                )
                vals.append(ade(denormalize(sample(model, req), pair.stats), test.trajectories[i])[0])
            out[f"ade_{fam}_N{n}"] = float(np.mean(vals))
    return out
