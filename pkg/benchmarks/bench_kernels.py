"""Timing comparison of the stepping engines.

Runs the same decaying-perturbation problem through every available engine
and reports steps per second plus the speedup of the compiled extension
over the numpy fallback.  Usage:

    python benchmarks/bench_kernels.py [--cells 64 256 1024] [--t-end 2.0]
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from chemolab import kernels
from chemolab.field import Grid, ScalarField
from chemolab.motility import MotilityModel
from chemolab.solver import SolverConfig, run


def _problem(cells: int):
    grid = Grid.line(10.0, cells)
    x = grid.centers()
    u = ScalarField(grid, 2.0 + 0.05 * np.cos(math.pi * x / 10.0))
    v = ScalarField(grid, np.full(cells, 2.0))
    return u, v


def bench(cells: int, t_end: float, repeats: int) -> dict[str, tuple[int, float]]:
    model = MotilityModel(m=2.0, a=0.0, b=1.0, k=1.0, s0=1.0)
    config = SolverConfig(t_end=t_end)
    out = {}
    for name in kernels.available_engines():
        best = math.inf
        steps = 0
        for _ in range(repeats):
            u, v = _problem(cells)
            res = run(u, v, model, config, engine=name)
            best = min(best, res.runtime_s)
            steps = res.steps
        out[name] = (steps, best)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cells", type=int, nargs="+", default=[64, 256, 1024])
    parser.add_argument("--t-end", type=float, default=2.0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    names = kernels.available_engines()
    print(f"engines: {', '.join(names)}")
    header = f"{'cells':>6}  " + "".join(f"{n + ' steps/s':>18}" for n in names)
    if "compiled" in names:
        header += f"{'speedup':>9}"
    print(header)
    for cells in args.cells:
        results = bench(cells, args.t_end, args.repeats)
        rates = {n: s / t for n, (s, t) in results.items()}
        row = f"{cells:>6}  " + "".join(f"{rates[n]:>18.0f}" for n in names)
        if "compiled" in names:
            row += f"{rates['compiled'] / rates['pure']:>8.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
