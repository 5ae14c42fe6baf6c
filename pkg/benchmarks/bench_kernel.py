"""Compare the compiled resolvent kernel with the pure-Python fallback.

Times ``kernel.resolve_grid`` on the six-node network over a full sweep
(rows x frequency points) and checks that both backends agree.

    python benchmarks/bench_kernel.py --rows 121 --points 601 --repeat 5
"""
import argparse
import statistics
import time

import numpy as np

from structbath import kernel
from structbath.sweep import SweepAxis, preset, run_sweep, spec_at


def _rows(name, rows):
    p = preset(name)
    if p.default_axis is not None:
        lo, hi = p.default_axis.values[0], p.default_axis.values[-1]
        axis = SweepAxis.linspace(p.default_axis.parameter, lo, hi, rows)
    else:
        axis = SweepAxis.linspace("J_L1L2-scale", 0.5, 2.0, rows)
    return p, axis, [spec_at(p, axis, v).bath_arrays() for v in axis.values]


def time_kernel(arrays, omegas, backend, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for a in arrays:
            kernel.resolve_grid(*a, 2, omegas, backend=backend)
        out.append(time.perf_counter() - t0)
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--preset", default="FIG3")
    parser.add_argument("--rows", type=int, default=121)
    parser.add_argument("--points", type=int, default=601)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    p, axis, arrays = _rows(args.preset, args.rows)
    omegas = np.linspace(5.8, 7.6, args.points)
    cells = args.rows * args.points
    print(f"{args.preset}: {args.rows} x {args.points} = {cells} solves of size {len(arrays[0][1])}")

    results = {}
    for backend in kernel.available_backends():
        times = time_kernel(arrays, omegas, backend, args.repeat)
        results[backend] = kernel.resolve_grid(*arrays[-1], 2, omegas, backend=backend)
        best, med = min(times), statistics.median(times)
        print(f"  {backend:9s} best {best:.3f} s  median {med:.3f} s  "
              f"({best / cells * 1e6:.2f} us/solve)")

    if len(results) == 2:
        a, b = results["python"], results["compiled"]
        dev = max(float(np.max(np.abs(x - y) / np.maximum(np.abs(y), 1e-300))) for x, y in zip(a[:3], b[:3]))
        print(f"  max relative deviation between backends: {dev:.2e}")
    else:
        print("  compiled kernel not built; only the fallback was timed")

    t0 = time.perf_counter()
    run_sweep(p, axis, omegas)
    print(f"  end-to-end run_sweep ({kernel.get_backend()}): {time.perf_counter() - t0:.3f} s")


if __name__ == "__main__":
    main()
