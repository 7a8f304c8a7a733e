"""Time the numba and numpy path-propagation kernels on the same workload.

    python3 benchmarks/bench_kernels.py [--paths 2000] [--steps 250]

Reports microseconds per path-step for each backend and the largest
difference between their terminal states.
"""

import argparse
import time

import numpy as np

from burgerslab import kernels, rng
from burgerslab._accel import HAVE_NUMBA
from burgerslab.dynamics import IntegratorConfig, run_paths
from burgerslab.spectral import basis_vector


def time_backend(func, cfg, paths, steps, tangent):
    kernels.propagate = func
    keys = rng.stream_keys(1, paths)
    h = basis_vector(1, cfg.n_modes) if tangent else None
    x0 = basis_vector(1, cfg.n_modes)
    run_paths(x0, cfg, 2, cfg.dt, keys[:2], h=h)  # warm-up / compile
    start = time.perf_counter()
    batch = run_paths(x0, cfg, steps, cfg.dt, keys, h=h)
    elapsed = time.perf_counter() - start
    return elapsed / (paths * steps) * 1e6, batch.x


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=2000)
    parser.add_argument("--steps", type=int, default=250)
    args = parser.parse_args()
    backends = [("numpy", kernels.propagate_vectorized)]
    if HAVE_NUMBA:
        backends.insert(0, ("numba", kernels.propagate_loops))
    print(f"{'N':>3} {'tangent':>7} " + " ".join(f"{name:>12}" for name, _ in backends)
          + "   max|dx|   (us per path-step)")
    for n_modes in (8, 16, 32):
        cfg = IntegratorConfig(n_modes, dt=1e-3)
        for tangent in (False, True):
            timings, states = [], []
            for _, func in backends:
                us, x = time_backend(func, cfg, args.paths, args.steps, tangent)
                timings.append(us)
                states.append(x)
            diff = np.max(np.abs(states[0] - states[-1]))
            print(f"{n_modes:>3} {tangent!s:>7} " + " ".join(f"{t:>12.3f}" for t in timings)
                  + f"   {diff:.1e}")


if __name__ == "__main__":
    main()
