"""Compiled vs pure-Python RK4 sweep on a full storage run.

    python3 benchmarks/bench_rk4.py [--cm 100] [--repeat 3]
"""
import argparse
import time

import numpy as np

from cavmem import _kernels
from cavmem.dynamics import SimulationConfig, default_dt, integrate_ode
from cavmem.schedule import build_emission, input_pulse, optimal_window


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cm", type=float, default=100.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    em = build_emission(args.cm, optimal_window(args.cm).T_max)
    cfg = SimulationConfig(-2 * em.T, 0.0, default_dt(args.cm))
    run = lambda kernel: integrate_ode(em.time_reverse(), input_pulse(em), cfg, kernel=kernel)

    print(f"Cm={args.cm:g}, {cfg.n_steps} steps, active backend: {_kernels.BACKEND}")
    t_py, slow = best_of(lambda: run(_kernels.python_rk4_sweep), args.repeat)
    print(f"  python  {t_py * 1e3:9.2f} ms  ({t_py / cfg.n_steps * 1e9:7.1f} ns/step)")
    if _kernels.BACKEND != "cython":
        print("  cython  not built")
        return
    t_cy, fast = best_of(lambda: run(_kernels.rk4_sweep), args.repeat)
    print(f"  cython  {t_cy * 1e3:9.2f} ms  ({t_cy / cfg.n_steps * 1e9:7.1f} ns/step)")
    print(f"  speed-up {t_py / t_cy:.1f}x, max |dP| = {np.max(np.abs(fast.P - slow.P)):.1e}")


if __name__ == "__main__":
    main()
