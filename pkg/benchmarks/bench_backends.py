"""Time the compiled and pure-numpy integrators on the same problems.

    python3 benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from consensus_flocking import _backend
from consensus_flocking.integrate import simulate
from consensus_flocking.model import FirstOrderState, InteractionKernel, SecondOrderState, SystemConfig
from consensus_flocking.schedule import gen_pe_matrix

CASES = [
    # (label, N, d, order, kernel, steps)
    ("N=2 d=1 first order", 2, 1, 1, InteractionKernel.constant(1.0), 20000),
    ("N=5 d=2 first order", 5, 2, 1, InteractionKernel.powerlaw(1.0, 1.0), 20000),
    ("N=10 d=3 first order", 10, 3, 1, InteractionKernel.tabulated([0, 1, 2, 4], [1.0, 0.6, 0.3, 0.1]), 10000),
    ("N=10 d=3 second order", 10, 3, 2, InteractionKernel.powerlaw(1.0, 0.5), 10000),
]


def run_case(n, d, order, kernel, steps, backend):
    T = 1.0
    cfg = SystemConfig(n, d, scaling="normalized", window=T, service=0.5)
    m = gen_pe_matrix(n, T, 0.5, duty_phase=None, seed=1)
    rng = np.random.default_rng(0)
    x0 = rng.uniform(-1, 1, (n, d))
    state = FirstOrderState(x0) if order == 1 else SecondOrderState(x0, rng.uniform(-1, 1, (n, d)))
    t0 = time.perf_counter()
    tr = simulate(cfg, kernel, m, state, steps * 1e-3, 1e-3, backend=backend)
    return time.perf_counter() - t0, tr


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _backend.compiled is None:
        raise SystemExit("compiled core not available; build with `pip install --no-build-isolation -e .`")
    print(f"{'case':<24}{'steps':>8}{'python [s]':>12}{'cython [s]':>12}{'speedup':>9}{'max |diff|':>12}")
    for label, n, d, order, kernel, steps in CASES:
        best = {}
        out = {}
        for backend in ("python", "cython"):
            times = []
            for _ in range(args.repeat):
                dt, tr = run_case(n, d, order, kernel, steps, backend)
                times.append(dt)
            best[backend], out[backend] = min(times), tr
        diff = float(np.abs(out["python"].positions - out["cython"].positions).max())
        print(f"{label:<24}{len(out['cython']) - 1:>8}{best['python']:>12.3f}{best['cython']:>12.4f}"
              f"{best['python'] / best['cython']:>8.0f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
