"""Estimate E[L_1] for standard BM by occupation densities of Gaussian-increment paths.

For each band half-width eps, (1/2 eps) * time spent in (-eps, eps) is
averaged over independent paths; the eps -> 0 limit is taken by a linear
least-squares fit in eps.  The result is written to the calibration fixture
read by :mod:`lorentz_holes.limit_processes`.
"""

import argparse
import json
import time

import numpy as np

from lorentz_holes.limit_processes import CALIBRATION_PATH


def occupation_means(rng, paths, steps, eps_grid, batch=200):
    dt = 1.0 / steps
    sums = np.zeros((paths, eps_grid.size))
    done = 0
    while done < paths:
        m = min(batch, paths - done)
        b = np.cumsum(rng.standard_normal((m, steps)) * np.sqrt(dt), axis=1)
        absb = np.abs(b)
        for j, eps in enumerate(eps_grid):
            sums[done : done + m, j] = (absb < eps).sum(axis=1) * dt / (2.0 * eps)
        done += m
    return sums


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=20_000)
    parser.add_argument("--steps", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=20_240)
    args = parser.parse_args()

    eps_grid = np.array([0.03, 0.04, 0.05, 0.06, 0.08, 0.10])
    start = time.perf_counter()
    occ = occupation_means(np.random.default_rng(args.seed), args.paths, args.steps, eps_grid)
    # per-path extrapolation keeps the paths independent, so the spread gives the standard error
    design = np.column_stack([np.ones_like(eps_grid), eps_grid])
    coef, *_ = np.linalg.lstsq(design, occ.T, rcond=None)
    intercepts = coef[0]
    mean = float(intercepts.mean())
    stderr = float(intercepts.std(ddof=1) / np.sqrt(args.paths))
    record = {
        "mean_local_time": mean,
        "stderr": stderr,
        "paths": args.paths,
        "steps": args.steps,
        "seed": args.seed,
        "eps": eps_grid.tolist(),
        "occupation_means": occ.mean(axis=0).tolist(),
    }
    CALIBRATION_PATH.parent.mkdir(parents=True, exist_ok=True)
    with open(CALIBRATION_PATH, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    print(f"E[L_1] = {mean:.5f} +- {stderr:.5f} ({time.perf_counter() - start:.1f}s); wrote {CALIBRATION_PATH}")


if __name__ == "__main__":
    main()
