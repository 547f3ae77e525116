"""Time the compiled and pure-Python propagation kernels on the same packet run.

    python3 benchmarks/bench_propagate.py [--sigma 100] [--repeat 3]
"""
import argparse
import time

import numpy as np

from wqed import timedomain as td
from wqed.core import SystemParams


def run_once(params, config, backend):
    grid, x0, t_final = td.plan_packet_run(params, config)
    state = td.init_gaussian_packet(grid, x0, config.sigma_x, 1.45, params)
    start = time.perf_counter()
    final, _ = td.evolve(state, params, t_final, record=False, backend=backend)
    return time.perf_counter() - start, final, grid.n_cells, round(t_final / grid.dx)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, default=100.0)
    ap.add_argument("--dx", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    params = SystemParams(omega_c=1.0, omega_a=1.0, g=0.5, gamma_wg=0.09, gamma_c=0.02, gamma_a=0.03)
    config = td.PacketConfig(sigma_x=args.sigma, dx=args.dx)
    timings, finals = {}, {}
    for backend in ("cython", "python"):
        try:
            best = min(run_once(params, config, backend)[0] for _ in range(args.repeat))
        except ImportError:
            print(f"{backend:7s} unavailable (extension not built)")
            continue
        timings[backend] = best
        _, finals[backend], cells, steps = run_once(params, config, backend)
        print(f"{backend:7s} {best * 1e3:9.2f} ms  ({cells} cells, {steps} steps)")
    if len(timings) == 2:
        same = np.array_equal(finals["cython"].phiR, finals["python"].phiR) and \
            finals["cython"].ea == finals["python"].ea
        print(f"speedup {timings['python'] / timings['cython']:.1f}x, identical results: {same}")


if __name__ == "__main__":
    main()
