"""Compare the compiled and numpy kernel backends on U-Net-sized shapes.

    python benchmarks/bench_kernels.py [--repeat 20] [--csv out.csv]

Also times a full training step of a small network under each backend.
Prints one row per (kernel, shape) with median milliseconds and the speedup
of the compiled backend over numpy.
"""

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from trajflow import cfm
from trajflow.diffcore import SeededRng, kernels
from trajflow.training import TrainerConfig
from trajflow.vfnet import NetConfig, init_net

SHAPES = [(32, 16, 64), (32, 64, 16), (64, 32, 32)]  # (batch, channels, length)


def _median_ms(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times)


def _cases(b, c, length):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((b, c, length))
    w = rng.standard_normal((c, c, 5))
    bias = rng.standard_normal(c)
    gamma, beta = rng.standard_normal(c), rng.standard_normal(c)
    groups = 8 if c % 8 == 0 else 1
    gout = rng.standard_normal((b, c, length))

    def gn_backward():
        _, xhat, rstd = kernels.group_norm_forward(x, gamma, beta, groups, 1e-5)
        kernels.group_norm_backward(gout, xhat, rstd, gamma, groups)

    return {
        "conv1d_forward": lambda: kernels.conv1d_forward(x, w, bias, 1, 2),
        "conv1d_backward": lambda: kernels.conv1d_backward(gout, x, w, 1, 2),
        "group_norm_forward": lambda: kernels.group_norm_forward(x, gamma, beta, groups, 1e-5),
        "group_norm_fwd_bwd": gn_backward,
        "mish_forward": lambda: kernels.mish_forward(x),
        "mish_backward": lambda: kernels.mish_backward(gout, x),
    }


def _train_step_case():
    cfg = NetConfig(horizon=32, state_dim=2, context_dim=4, base_channels=16, depth=2, groups=8)
    rng = np.random.default_rng(0)
    data = (rng.standard_normal((64, 32, 2)), rng.standard_normal((64, 4)))
    net = init_net(cfg, SeededRng(0))
    return lambda: cfm.train(data, net, TrainerConfig(steps=5, batch_size=32))


def run(repeat):
    backends = kernels.available()
    rows = []
    for shape in SHAPES:
        names = list(_cases(*shape))
        for name in names:
            row = {"kernel": name, "shape": "x".join(map(str, shape))}
            for be in backends:
                with kernels.use_backend(be):
                    row[be] = _median_ms(_cases(*shape)[name], repeat)
            rows.append(row)
    row = {"kernel": "train_5_steps", "shape": "H32_base16_depth2"}
    for be in backends:
        with kernels.use_backend(be):
            row[be] = _median_ms(_train_step_case(), max(3, repeat // 5))
    rows.append(row)
    for r in rows:
        if "cython" in r:
            r["speedup"] = r["numpy"] / r["cython"]
    return rows, backends


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    rows, backends = run(args.repeat)
    cols = ["kernel", "shape"] + [f"{b}" for b in backends] + (["speedup"] if "cython" in backends else [])
    if "cython" not in backends:
        print("compiled backend not built; timing numpy only", file=sys.stderr)
    print(f"{'kernel':<20}{'shape':<20}" + "".join(f"{c + ' ms' if c in backends else c:>14}" for c in cols[2:]))
    for r in rows:
        print(f"{r['kernel']:<20}{r['shape']:<20}" + "".join(f"{r[c]:>14.3f}" for c in cols[2:]))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
