"""Pilot runs for the comparison experiments; prints JSON results.

    python benchmarks/pilot_acceptance.py maze|pursuit [key=value ...]
"""

import json
import sys
import time

from trajflow.experiments import ComparisonConfig, maze_comparison, pursuit_refinement


def main(argv):
    which = argv[0]
    over = {}
    for item in argv[1:]:
        k, _, v = item.partition("=")
        over[k] = json.loads(v)
    if "step_counts" in over:
        over["step_counts"] = tuple(over["step_counts"])
    t0 = time.perf_counter()
    if which == "maze":
        res = maze_comparison(ComparisonConfig(**over))
    else:
        over.setdefault("horizon", 64)
        over.setdefault("n_train", 800)
        res = pursuit_refinement(ComparisonConfig(**over))
    res["total_seconds"] = time.perf_counter() - t0
    print(json.dumps(res, indent=2))


if __name__ == "__main__":
    main(sys.argv[1:])
