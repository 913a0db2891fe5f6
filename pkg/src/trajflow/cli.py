"""Command-line entry point: ``trajflow generate|train|sample|eval|benchmark``.

Every command reads a JSON run config (``--config``); flags override it, and
the fully resolved config is written next to the outputs as
``<command>.config.json`` so the run can be repeated exactly with
``--config`` pointing at that file.

Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
4 numeric failure.
"""

import argparse
import copy
import csv
import json
import logging
import os
import sys
import warnings

import numpy as np

from . import cfm, checkpoint, ddpm, plots
from .diffcore import SeededRng, init_moments
from .domains import (
    FlightConfig,
    PursuitScenario,
    fit_stats,
    generate_flight_dataset,
    generate_maze_dataset,
    generate_pursuit_dataset,
    load_maze,
    load_trajectory_csv,
    denormalize,
    normalize,
    split_dataset,
    write_context_csv,
    write_trajectory_csv,
)
from .domains.maze import _wall_boxes
from .domains.norm import NormStats
from .errors import ConfigError, DataError, IoError, NonFiniteError, TrainingError, TrajflowError
from .metrics import EvalReport, ade, collision_rate, config_hash, mae_rmse_per_dim, maze_score
from .sampler import PlanConstraint, SampleRequest, measure_sampling_latency, sample
from .training import TrainerConfig, TrainingData, TrainState
from .vfnet import NetConfig, init_net

log = logging.getLogger("trajflow")

OUTPUT_ROOT_ENV = "TRAJFLOW_OUTPUT_ROOT"
SPLITS = ("train", "val", "test")
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_NET_DEFAULTS = {
    k: v for k, v in NetConfig(horizon=16, state_dim=1).to_dict().items() if k not in ("horizon", "state_dim", "context_dim")
}

DEFAULTS = {
    "seed": 0,
    "output_dir": "runs/default",
    "domain": {"kind": "maze", "n": 200, "splits": [0.8, 0.1, 0.1]},
    "model": {"family": "tcfm", "net": _NET_DEFAULTS, "diffusion_steps": 64},
    "trainer": {**TrainerConfig().to_dict(), "seed": None},
    "sampler": {"num_steps": 1, "num_samples": 8, "solver": "euler", "seed": None},
    "eval": {"n_list": [1, 2, 4, 8, 16, 32, 64], "max_items": 50, "horizons": [0, 15, 30], "checkpoint": None},
    "benchmark": {"n_list": [1, 100], "repetitions": 5, "checkpoints": []},
    "sample": {"checkpoint": None, "split": "test", "index": 0},
    "train": {"resume": None},
}

DOMAIN_DEFAULTS = {
    "maze": {"maze": "umaze", "horizon": 64, "jitter": 0.25, "clearance": 0.2},
    "pursuit": PursuitScenario().to_dict(),
    "flight": FlightConfig().to_dict(),
    "csv": {"path": None, "context_path": None, "horizon": None},
}


# -- configuration -----------------------------------------------------------------


def _merge(base, over, where=""):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in out:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(out[key], dict) and isinstance(val, dict):
            out[key] = _merge(out[key], val, f"{where}{key}.")
        else:
            out[key] = copy.deepcopy(val)
    return out


def _set_path(cfg, dotted, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"--set {dotted}: {k!r} is not a config section")
        node = node[k]
    last = keys[-1]
    if isinstance(node.get(last), dict) and isinstance(value, dict):
        # a section given as an object merges into its defaults
        node[last] = _merge(node[last], value, dotted + ".")
    else:
        node[last] = value


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(raw, overrides=()):
    """Materialise defaults under ``raw`` then apply ``(dotted_key, value)``
    overrides. Returns a new dict with every field present."""
    raw = copy.deepcopy(raw or {})
    kind = raw.get("domain", {}).get("kind", DEFAULTS["domain"]["kind"])
    for key, val in overrides:
        if key == "domain.kind":
            kind = val
    if kind not in DOMAIN_DEFAULTS:
        raise ConfigError(f"domain.kind must be one of {sorted(DOMAIN_DEFAULTS)}, got {kind!r}")
    base = copy.deepcopy(DEFAULTS)
    base["domain"].update(DOMAIN_DEFAULTS[kind])
    base["domain"]["kind"] = kind
    cfg = _merge(base, raw)
    for key, val in overrides:
        probe = cfg
        for k in key.split(".")[:-1]:
            probe = probe.get(k, {}) if isinstance(probe, dict) else {}
        if key.split(".")[-1] not in probe:
            raise ConfigError(f"unknown config key {key!r}")
        _set_path(cfg, key, val)
    if cfg["trainer"]["seed"] is None:
        cfg["trainer"]["seed"] = cfg["seed"]
    if cfg["sampler"]["seed"] is None:
        cfg["sampler"]["seed"] = cfg["seed"]
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg["model"]["family"] not in checkpoint.FAMILIES:
        raise ConfigError(f"model.family must be one of {checkpoint.FAMILIES}")
    TrainerConfig.from_dict(cfg["trainer"])
    s = cfg["sampler"]
    SampleRequest(num_steps=s["num_steps"], num_samples=s["num_samples"], solver=s["solver"], seed=s["seed"])
    d = cfg["domain"]
    if d["kind"] == "csv":
        if not d["path"] or not os.path.isfile(d["path"]):
            raise ConfigError(f"domain.path {d['path']!r} does not exist")
        if d["context_path"] and not os.path.isfile(d["context_path"]):
            raise ConfigError(f"domain.context_path {d['context_path']!r} does not exist")
    elif int(d["n"]) < 1:
        raise ConfigError("domain.n must be positive")
    if any(int(n) < 1 for n in cfg["eval"]["n_list"] + cfg["benchmark"]["n_list"]):
        raise ConfigError("sampling step counts must be >= 1")


def output_dir(cfg):
    out = cfg["output_dir"]
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    return os.path.abspath(out)


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise IoError(f"output directory {path} is not writable")
    return path


def _write_json(path, obj):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _persist(cfg, command):
    out = _ensure_dir(output_dir(cfg))
    frozen = copy.deepcopy(cfg)
    frozen["output_dir"] = out
    _write_json(os.path.join(out, f"{command}.config.json"), frozen)
    return out


# -- data ------------------------------------------------------------------------------


def _generate(cfg):
    d = cfg["domain"]
    kind, n, seed = d["kind"], int(d.get("n", 0)), int(cfg["seed"])
    if kind == "maze":
        maze = load_maze(d["maze"])
        data = generate_maze_dataset(maze, n, int(d["horizon"]), seed, d["jitter"], d["clearance"])
    elif kind == "pursuit":
        fields = {k: v for k, v in d.items() if k in DOMAIN_DEFAULTS["pursuit"]}
        data = generate_pursuit_dataset(PursuitScenario.from_dict(fields), n, seed)
    elif kind == "flight":
        fields = {k: v for k, v in d.items() if k in DOMAIN_DEFAULTS["flight"]}
        data = generate_flight_dataset(n, seed, FlightConfig.from_dict(fields))
    else:
        data = load_trajectory_csv(d["path"], d["horizon"], d["context_path"])
    return data


def cmd_generate(cfg):
    """Write split CSVs, normalisation stats and a manifest under ``<out>/data``."""
    out = _persist(cfg, "generate")
    data = _generate(cfg)
    if len(data) == 0:
        raise DataError("dataset is empty")
    parts = dict(zip(SPLITS, split_dataset(data, tuple(cfg["domain"]["splits"]))))
    if len(parts["train"]) == 0:
        raise ConfigError("train split is empty; increase domain.n")
    ddir = _ensure_dir(os.path.join(out, "data"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        stats = {"traj": fit_stats(parts["train"].trajectories)}
        if parts["train"].contexts.shape[1]:
            stats["ctx"] = fit_stats(parts["train"].contexts)
    for name, part in parts.items():
        try:
            write_trajectory_csv(os.path.join(ddir, f"{name}_trajectories.csv"), part.trajectories)
            write_context_csv(os.path.join(ddir, f"{name}_contexts.csv"), part.contexts)
        except OSError as exc:
            raise IoError(f"cannot write dataset files in {ddir}: {exc}") from exc
    _write_json(os.path.join(ddir, "stats.json"), {k: v.to_dict() for k, v in stats.items()})
    manifest = {
        "kind": cfg["domain"]["kind"],
        "seed": cfg["seed"],
        "num_trajectories": len(data),
        "counts": {k: len(v) for k, v in parts.items()},
        "horizon": int(data.trajectories.shape[1]),
        "state_dim": int(data.trajectories.shape[2]),
        "context_dim": int(data.contexts.shape[1]),
        "config_hash": config_hash(cfg["domain"]),
    }
    if "realized_detection_rate" in data.info:
        manifest["realized_detection_rate"] = data.info["realized_detection_rate"]
    _write_json(os.path.join(ddir, "manifest.json"), manifest)
    log.info("wrote %d trajectories to %s", len(data), ddir)
    return manifest


def _load_split(out, split):
    ddir = os.path.join(out, "data")
    tpath = os.path.join(ddir, f"{split}_trajectories.csv")
    if not os.path.isfile(tpath):
        raise DataError(f"dataset not found at {tpath}; run `trajflow generate` first")
    data = load_trajectory_csv(tpath, context_path=os.path.join(ddir, f"{split}_contexts.csv"))
    with open(os.path.join(ddir, "stats.json"), encoding="utf-8") as fh:
        stats = {k: NormStats.from_dict(v) for k, v in json.load(fh).items()}
    return data, stats


def _norm_ctx(ctx, stats):
    if "ctx" not in stats or ctx.shape[-1] == 0:
        return ctx
    return normalize(ctx, stats["ctx"])


# -- training ------------------------------------------------------------------------


def _build_model(cfg, data):
    _, h, d = data.trajectories.shape
    netcfg = NetConfig(horizon=h, state_dim=d, context_dim=data.contexts.shape[1], **cfg["model"]["net"])
    net = init_net(netcfg, SeededRng(cfg["seed"]))
    if cfg["model"]["family"] == "ddpm":
        return ddpm.make_baseline(net, int(cfg["model"]["diffusion_steps"]))
    return net


def cmd_train(cfg):
    """Train from ``<out>/data``; writes ``model.ckpt``, periodic checkpoints
    and ``loss.csv`` (one row per step)."""
    out = _persist(cfg, "train")
    data, stats = _load_split(out, "train")
    tdata = TrainingData(normalize(data.trajectories, stats["traj"]), _norm_ctx(data.contexts, stats))
    tcfg = TrainerConfig.from_dict(cfg["trainer"])
    state = None
    resume = cfg["train"]["resume"]
    if resume:
        ck = checkpoint.load(resume)
        if ck.family != cfg["model"]["family"]:
            raise ConfigError(f"checkpoint family {ck.family} does not match model.family")
        model = ck.model()
        state = TrainState(net=model, moments=ck.moments or init_moments(model.params), step=ck.step)
    else:
        model = _build_model(cfg, data)
    if model.config.horizon != data.trajectories.shape[1]:
        raise ConfigError("checkpoint horizon does not match the dataset")
    first_step = state.step if state else 0
    cdir = os.path.join(out, "checkpoints")

    def snapshot(st):
        _ensure_dir(cdir)
        path = os.path.join(cdir, f"step_{st.step:06d}.ckpt")
        checkpoint.save(path, _ckpt(cfg, st, stats))
        return path

    trainer = cfm.train if cfg["model"]["family"] == "tcfm" else ddpm.train
    state = trainer(tdata, model, tcfg, state=state, on_checkpoint=snapshot)
    final = os.path.join(out, "model.ckpt")
    checkpoint.save(final, _ckpt(cfg, state, stats))
    with open(os.path.join(out, "loss.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "loss"])
        for i, v in enumerate(state.history):
            w.writerow([first_step + i + 1, repr(float(v))])
    log.info("trained to step %d; checkpoint %s", state.step, final)
    return final


def _ckpt(cfg, state, stats):
    return checkpoint.Checkpoint.from_model(
        state.net, run_config=cfg, norm=stats, step=state.step, moments=state.moments
    )


# -- sampling and evaluation -----------------------------------------------------------


def _is_planning(cfg):
    return cfg["domain"]["kind"] == "maze"


def _request(cfg, ctx_raw, stats, n_steps, seed, num_samples=None):
    con = None
    if _is_planning(cfg):
        ends = normalize(ctx_raw.reshape(2, 2), stats["traj"])
        con = PlanConstraint(ends[0], ends[1])
    s = cfg["sampler"]
    return SampleRequest(
        context=_norm_ctx(ctx_raw, stats),
        num_steps=int(n_steps),
        num_samples=int(num_samples or s["num_samples"]),
        constraints=con,
        solver=s["solver"],
        seed=int(seed),
    )


def _to_world(cfg, samples, ctx_raw, stats):
    """Denormalise; plans get their endpoints rewritten in world units so the
    affine round trip cannot perturb them."""
    out = denormalize(samples, stats["traj"])
    if _is_planning(cfg):
        ends = ctx_raw.reshape(2, 2)
        PlanConstraint(ends[0], ends[1]).apply(out)
    return out


def _checkpoint_path(cfg, out, section):
    return cfg[section]["checkpoint"] or os.path.join(out, "model.ckpt")


def _load_model(path, data):
    ck = checkpoint.load(path)
    model = ck.model()
    if model.config.horizon != data.trajectories.shape[1] or model.config.state_dim != data.trajectories.shape[2]:
        raise ConfigError(
            f"checkpoint expects trajectories ({model.config.horizon}, {model.config.state_dim}), "
            f"dataset has {data.trajectories.shape[1:]}"
        )
    return ck, model


def cmd_sample(cfg):
    """Sample one context of a split; writes CSV (``sample_id,t_index,dim_*``)
    and an SVG overlay."""
    out = _persist(cfg, "sample")
    sc = cfg["sample"]
    data, stats = _load_split(out, sc["split"])
    idx = int(sc["index"])
    if not 0 <= idx < len(data):
        raise ConfigError(f"sample.index {idx} outside split of size {len(data)}")
    ck, model = _load_model(_checkpoint_path(cfg, out, "sample"), data)
    n = cfg["sampler"]["num_steps"]
    req = _request(cfg, data.contexts[idx], ck.norm or stats, n, cfg["sampler"]["seed"])
    samples = _to_world(cfg, sample(model, req), data.contexts[idx], ck.norm or stats)
    sdir = _ensure_dir(os.path.join(out, "samples"))
    stem = os.path.join(sdir, f"samples_{sc['split']}{idx}_N{n}")
    write_trajectory_csv(stem + ".csv", samples, id_col="sample_id", t_col="t_index")
    if samples.shape[2] >= 2:
        walls = _wall_boxes(load_maze(cfg["domain"]["maze"])) if _is_planning(cfg) else None
        plots.trajectory_overlay(stem + ".svg", samples[..., :2], data.trajectories[idx, :, :2], walls, f"N={n}")
    return stem + ".csv"


def evaluate(cfg, model, data, stats, n_steps):
    """EvalReport for one step count over the first ``eval.max_items`` items."""
    items = range(min(len(data), int(cfg["eval"]["max_items"])))
    if len(items) == 0:
        raise DataError("evaluation split is empty")
    curves, scores, hits, all_samples = [], [], [], []
    maze = load_maze(cfg["domain"]["maze"]) if _is_planning(cfg) else None
    for i in items:
        req = _request(cfg, data.contexts[i], stats, n_steps, cfg["sampler"]["seed"] + i)
        samples = _to_world(cfg, sample(model, req), data.contexts[i], stats)
        truth = data.trajectories[i]
        curves.append(ade(samples, truth)[1])
        all_samples.append(samples)
        if maze is not None:
            goal = data.contexts[i, 2:4]
            scores.append(maze_score(samples[0], goal, truth, maze))
            hits.append(collision_rate(samples, maze))
    curve = np.mean(curves, axis=0)
    rep = EvalReport(num_samples=len(items) * req.num_samples, config_hash=config_hash(cfg))
    rep.curves["ade"] = curve
    rep.scalars["ade"] = float(curve.mean())
    rep.scalars["n_steps"] = int(n_steps)
    if maze is not None:
        rep.scalars["maze_score"] = float(np.mean(scores))
        rep.scalars["collision_rate"] = float(np.mean(hits))
    else:
        h = data.trajectories.shape[1]
        horizons = [k for k in cfg["eval"]["horizons"] if k < h]
        stacked = np.stack(all_samples)
        for row in _mae_rmse_over_items(stacked, data.trajectories[: len(items)], horizons):
            rep.scalars[f"mae_h{row['horizon']}_d{row['dim']}"] = row["mae"]
            rep.scalars[f"rmse_h{row['horizon']}_d{row['dim']}"] = row["rmse"]
    return rep


def _mae_rmse_over_items(samples, truths, horizons):
    # pool every (item, sample) error by offsetting samples to a shared origin
    err = samples - truths[:, None]
    flat = err.reshape(-1, *err.shape[2:])
    return mae_rmse_per_dim(flat, np.zeros(err.shape[2:]), horizons)


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def cmd_eval(cfg):
    """One report per step count plus ADE-vs-N and ADE-vs-horizon figures."""
    out = _persist(cfg, "eval")
    data, stats = _load_split(out, "test")
    ck, model = _load_model(_checkpoint_path(cfg, out, "eval"), data)
    stats = ck.norm or stats
    edir = _ensure_dir(os.path.join(out, "eval"))
    n_list = [int(n) for n in cfg["eval"]["n_list"]]
    reports = []
    for n in n_list:
        rep = evaluate(cfg, model, data, stats, n)
        rep.write(os.path.join(edir, f"report_N{n}.txt"), os.path.join(edir, f"curves_N{n}.csv"), include_timing=False)
        reports.append(rep)
    extra = [k for k in ("maze_score", "collision_rate") if k in reports[0].scalars]
    _write_csv(
        os.path.join(edir, "ade_vs_n.csv"),
        ["n_steps", "ade"] + extra,
        [[n, repr(r.scalars["ade"])] + [repr(r.scalars[k]) for k in extra] for n, r in zip(n_list, reports)],
    )
    plots.line_chart(
        os.path.join(edir, "ade_vs_n.svg"),
        n_list,
        {"ade": [r.scalars["ade"] for r in reports]},
        title=f"{ck.family}: ADE vs sampling steps",
        xlabel="sampling steps N",
        ylabel="ADE",
        logx=len(n_list) > 1 and min(n_list) > 0,
    )
    cols = [f"N={n}" for n in n_list]
    h = len(reports[0].curves["ade"])
    _write_csv(
        os.path.join(edir, "ade_vs_horizon.csv"),
        ["step"] + cols,
        [[k] + [repr(float(r.curves["ade"][k])) for r in reports] for k in range(h)],
    )
    plots.line_chart(
        os.path.join(edir, "ade_vs_horizon.svg"),
        list(range(h)),
        {c: r.curves["ade"] for c, r in zip(cols, reports)},
        title=f"{ck.family}: ADE vs prediction step",
        xlabel="step",
        ylabel="ADE",
    )
    return reports


def cmd_benchmark(cfg):
    """Latency and quality per (checkpoint, N). Timing columns vary run to
    run; everything else is deterministic."""
    out = _persist(cfg, "benchmark")
    bc = cfg["benchmark"]
    paths = bc["checkpoints"] or [os.path.join(out, "model.ckpt")]
    data, stats = _load_split(out, "test")
    rows = []
    for path in paths:
        ck, model = _load_model(path, data)
        st = ck.norm or stats
        for n in bc["n_list"]:
            req = _request(cfg, data.contexts[0], st, n, cfg["sampler"]["seed"])
            timing = measure_sampling_latency(model, req, int(bc["repetitions"]))
            quality = ade(denormalize(sample(model, req), st["traj"]), data.trajectories[0])[0]
            rows.append(
                {
                    "model": f"{ck.family}:{os.path.basename(path)}",
                    "n_steps": int(n),
                    "mean_ms": timing["mean_ms"],
                    "std_ms": timing["std_ms"],
                    "network_calls": timing["network_calls"],
                    "ade": quality,
                }
            )
    bdir = _ensure_dir(os.path.join(out, "benchmark"))
    header = ["model", "n_steps", "mean_ms", "std_ms", "network_calls", "ade"]
    _write_csv(os.path.join(bdir, "benchmark.csv"), header, [[r[k] for k in header] for r in rows])
    lo, hi = min(bc["n_list"]), max(bc["n_list"])
    speed = []
    for r in rows:
        if r["n_steps"] == lo:
            slow = [s for s in rows if s["model"] == r["model"] and s["n_steps"] == hi]
            if slow and lo != hi:
                speed.append([r["model"], lo, hi, slow[0]["mean_ms"] / r["mean_ms"]])
    _write_csv(os.path.join(bdir, "speedup.csv"), ["model", "n_fast", "n_slow", "speedup"], speed)
    return rows


# -- argument parsing ------------------------------------------------------------------

COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "benchmark": cmd_benchmark,
}


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="trajflow", description="Flow-matching trajectory models at desk scale.")
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name, help=COMMANDS[name].__doc__.splitlines()[0])
        s.add_argument("--config", help="JSON run config (authoritative; flags override it)")
        s.add_argument("--output-dir", help="output directory (relative paths honour $" + OUTPUT_ROOT_ENV + ")")
        s.add_argument("--seed", type=int)
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
        if name == "train":
            s.add_argument("--steps", type=int)
            s.add_argument("--resume", help="checkpoint to continue from")
        if name in ("sample", "eval"):
            s.add_argument("--checkpoint")
            s.add_argument("--num-steps", type=int)
            s.add_argument("--num-samples", type=int)
        if name == "sample":
            s.add_argument("--index", type=int)
            s.add_argument("--split", choices=SPLITS)
        if name in ("eval", "benchmark"):
            s.add_argument("--n-list", type=_int_list)
        if name == "benchmark":
            s.add_argument("--checkpoint", action="append", dest="checkpoints")
            s.add_argument("--repetitions", type=int)
    return p


def _overrides(args):
    ov = []
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        ov.append((key.strip(), _parse_value(val)))
    flag_map = {
        "output_dir": "output_dir",
        "seed": "seed",
        "steps": "trainer.steps",
        "resume": "train.resume",
        "num_steps": "sampler.num_steps",
        "num_samples": "sampler.num_samples",
        "index": "sample.index",
        "split": "sample.split",
        "repetitions": "benchmark.repetitions",
        "checkpoints": "benchmark.checkpoints",
    }
    for attr, key in flag_map.items():
        val = getattr(args, attr, None)
        if val is not None:
            ov.append((key, val))
    if getattr(args, "checkpoint", None) is not None and args.command in ("sample", "eval"):
        ov.append((f"{args.command}.checkpoint", os.path.abspath(args.checkpoint)))
    if getattr(args, "n_list", None) is not None:
        ov.append((f"{args.command}.n_list", args.n_list))
    return ov


def _read_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(_read_config(args.config), _overrides(args))
        COMMANDS[args.command](cfg)
    except TrainingError as exc:
        print(f"error: {exc} (last checkpoint: {exc.last_checkpoint})", file=sys.stderr)
        return EXIT_NUMERIC
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, IoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, TrajflowError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
