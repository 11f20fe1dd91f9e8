"""Wall-clock comparison of the compiled and pure-Python kernels.

Usage::

    python benchmarks/bench_kernels.py [--t-end 50] [--repeat 3]

Runs the two-neuron model and a 5-node ring in both convolution modes on each
available backend and prints the best time per case plus the max state gap
between backends.
"""

import argparse
import time

import numpy as np

from fmhnn import COMPILED_AVAILABLE, DEFAULT_PARAMS, RingParams, SolverConfig, ring_system, solve_abm, two_neuron_system


def _best(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=50.0)
    ap.add_argument("--step", type=float, default=0.005)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cases = {
        "two_neuron": (two_neuron_system(), np.array([-4.5, 0.5, -4.5])),
        "ring_n5": (ring_system(RingParams(DEFAULT_PARAMS, 5, 1, 0.5)), np.linspace(-1, 1, 15)),
    }
    backends = ["python"] + (["compiled"] if COMPILED_AVAILABLE else [])
    print(f"{'case':<12}{'mode':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'gap':>10}")
    for name, (system, x0) in cases.items():
        for mode in ("direct", "fft_accelerated"):
            times, states = {}, {}
            for b in backends:
                cfg = SolverConfig(step_size=args.step, t_end=args.t_end, convolution_mode=mode, backend=b)
                times[b], tr = _best(lambda: solve_abm(system, x0, 0.93, cfg), args.repeat)
                states[b] = tr.states
            row = f"{name:<12}{mode:<18}" + "".join(f"{times[b]:>11.3f}s" for b in backends)
            if len(backends) == 2:
                speed = times["python"] / times["compiled"]
                gap = float(np.max(np.abs(states["python"] - states["compiled"])))
                row += f"{speed:>9.1f}x{gap:>10.1e}"
            print(row)


if __name__ == "__main__":
    main()
