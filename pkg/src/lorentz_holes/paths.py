"""Functions on [0, 1] sampled on a grid: scaled walks, local times, limit-process samples."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PathFunction:
    """Function given by its values on ``grid``.

    ``interpolation="linear"`` gives the continuous piecewise-linear
    extension; ``"step"`` gives the right-continuous step function, used for
    nondecreasing local-time paths.
    """

    grid: np.ndarray
    values: np.ndarray
    interpolation: str = "linear"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid and values must be 1-d arrays of the same length >= 2")
        if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must increase strictly from 0 to 1")
        if self.interpolation not in ("linear", "step"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, values, interpolation: str = "linear") -> "PathFunction":
        values = np.asarray(values, dtype=float)
        m = values.size - 1
        return cls(np.arange(m + 1) / m, values, interpolation)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)):
            raise ValueError("paths are defined on [0, 1]")
        if self.interpolation == "linear":
            out = np.interp(t, self.grid, self.values)
        else:
            idx = np.searchsorted(self.grid, t, side="right") - 1
            out = self.values[idx]
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path: str | Path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write("t,value\n")
            for t, v in zip(self.grid.tolist(), np.asarray(self.values, dtype=float).tolist()):
                fh.write(f"{t!r},{v!r}\n")


def lattice_path(positions, n: int) -> PathFunction:
    """Diffusively scaled path ``k/n -> positions[k] / sqrt(n)``, linear in between."""
    positions = np.asarray(positions, dtype=float)
    if positions.size < n + 1:
        raise ValueError(f"need {n + 1} positions, got {positions.size}")
    return PathFunction.uniform(positions[: n + 1] / np.sqrt(n))


def counting_path(counts, n: int) -> PathFunction:
    """Scaled counter ``k/n -> counts[k] / sqrt(n)`` as a right-continuous step function."""
    counts = np.asarray(counts, dtype=float)
    if counts.size < n + 1:
        raise ValueError(f"need {n + 1} counts, got {counts.size}")
    return PathFunction.uniform(counts[: n + 1] / np.sqrt(n), "step")
