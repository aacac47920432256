"""Time one objective evaluation per backend, for native kernels and the MDL VM.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from cogforge import core
from cogforge.baselines import get_baseline
from cogforge.mdl import load_library
from cogforge.synthgen import (gen_bandit_agents, gen_decision_problems, gen_rlwm_agents,
                               gen_twostep_agents, simulate_heuristic_agents)

THETA = {
    "rw": [0.3, 5.0], "rw_pm": [0.4, 0.2, 5.0], "rw_kappa": [0.3, 5.0, 0.5],
    "rw4a": [0.4, 0.2, 0.3, 0.1, 5.0, 0.3], "hybrid": [0.5, 0.5, 0.6, 0.5, 5.0, 5.0, 0.2],
    "rlwm": [0.1, 0.05, 0.1, 0.8, 0.02, 8.0], "pwadd": [0.9, 0.7, 0.5, 0.3, 5.0],
}


def participant(name):
    if name.startswith("rw"):
        d, _ = gen_bandit_agents("rw_pm", 1, 200, seed=0, feedback="full")
    elif name == "hybrid":
        d, _ = gen_twostep_agents(n_agents=1, n_trials=200, seed=0)
    elif name == "rlwm":
        d, _ = gen_rlwm_agents(n_agents=1, seed=0)
    else:
        d = simulate_heuristic_agents("ttb", gen_decision_problems(200, n_features=4, seed=0, binary=True), 0.1, 1, seed=0)
    return d.participants[0]


def bench(fn, repeat):
    n = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not core.COMPILED:
        print("compiled extension unavailable; only the python backend can be timed")
    backends = ["compiled", "python"] if core.COMPILED else ["python"]
    print(f"{'model':10s} {'route':7s} " + " ".join(f"{b + ' us':>13s}" for b in backends) + "   speedup")
    for name, th in THETA.items():
        p = participant(name)
        for route, model in (("native", get_baseline(name)), ("vm", load_library(name))):
            t = [bench(lambda f=model.objective(p, backend=b): f(th), args.repeat) * 1e6 for b in backends]
            sp = f"{t[1] / t[0]:8.1f}x" if len(t) == 2 else ""
            print(f"{name:10s} {route:7s} " + " ".join(f"{x:13.1f}" for x in t) + "  " + sp)


if __name__ == "__main__":
    main()
