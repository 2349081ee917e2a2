"""Samplers for Brownian motion with local time and the quasi-reflected processes built on it.

Everything rests on a simple +-1 lattice walk of N steps.  The path is the
walk scaled by sigma / sqrt(N); the local time at 0 is the running number of
zero-visits divided by ``r * sqrt(N)``, where ``r`` makes the mean of the
terminal local time equal the occupation-density value of sigma-BM.  A sign
flip placed at a zero-visit never breaks continuity.
"""

from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special, stats

from .paths import PathFunction

CALIBRATION_PATH = Path(__file__).with_name("data") / "calibration.json"


class DomainError(ValueError):
    pass


class TruncationRequired(ValueError):
    """The accumulating intensity needs a positive truncation time."""


class IntensityTag(str, enum.Enum):
    LOCAL_TIME = "c_dL"
    LOCAL_TIME_OVER_SQRT_T = "c_dL_over_sqrt_t"


@functools.lru_cache(maxsize=None)
def calibration() -> dict:
    with open(CALIBRATION_PATH) as fh:
        return json.load(fh)


def mean_local_time(sigma: float = 1.0) -> float:
    """E[L_1] of sigma-BM at 0 (occupation-density normalisation), from the calibration fixture."""
    return calibration()["mean_local_time"] / sigma


def expected_zero_visits(n_steps: int) -> float:
    """Exact mean number of returns to 0 of a simple walk within ``n_steps`` steps."""
    total = 0.0
    p = 1.0
    for j in range(1, n_steps // 2 + 1):
        p *= (2 * j - 1) / (2 * j)
        total += p
    return total


@functools.lru_cache(maxsize=None)
def local_time_normalizer(n_steps: int, sigma: float = 1.0) -> float:
    """The factor r with local time = zero-visits / (r sqrt(N))."""
    return expected_zero_visits(n_steps) / (math.sqrt(n_steps) * mean_local_time(sigma))


@dataclass(frozen=True)
class BrownianPathWithLocalTime:
    walk: np.ndarray
    sigma: float
    normalizer: float

    @property
    def n_steps(self) -> int:
        return self.walk.size - 1

    @property
    def zero_visits(self) -> np.ndarray:
        """Grid indices k >= 1 at which the backbone sits at 0."""
        return np.flatnonzero(self.walk[1:] == 0) + 1

    @property
    def path_values(self) -> np.ndarray:
        return self.sigma * self.walk / math.sqrt(self.n_steps)

    @property
    def local_time_values(self) -> np.ndarray:
        hits = np.zeros(self.walk.size)
        hits[self.zero_visits] = 1.0
        return np.cumsum(hits) / (self.normalizer * math.sqrt(self.n_steps))

    @property
    def path(self) -> PathFunction:
        return PathFunction.uniform(self.path_values)

    @property
    def local_time(self) -> PathFunction:
        return PathFunction.uniform(self.local_time_values, "step")


def sample_bm_with_local_time(rng: np.random.Generator, N: int, sigma: float = 1.0, start: int = 0) -> BrownianPathWithLocalTime:
    """Brownian path on [0, 1] with its local time at 0, from an N-step lattice walk.

    ``start`` offsets the backbone by that many lattice sites.
    """
    if N < 1000:
        raise ValueError("use at least 1000 grid steps")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    walk = np.empty(N + 1, dtype=np.int64)
    walk[0] = start
    np.cumsum(np.where(rng.random(N) < 0.5, 1, -1), out=walk[1:])
    walk[1:] += start
    return BrownianPathWithLocalTime(walk, float(sigma), local_time_normalizer(N, float(sigma)))


@dataclass(frozen=True)
class PointProcess:
    points: np.ndarray
    intensity_tag: IntensityTag
    t0: float = 0.0


def sample_point_process(
    rng: np.random.Generator,
    bmlt: BrownianPathWithLocalTime,
    c: float,
    tag: IntensityTag | str,
    t0: float = 0.0,
) -> PointProcess:
    """Poisson points with intensity c dL (or c t^{-1/2} dL) on (t0, 1].

    Each zero-visit carries a local-time increment; its point count is
    Poisson with mean c times that increment (divided by the square root of
    the cell midpoint for the accumulating intensity).  Counts are drawn by
    inverse cdf from one uniform per zero-visit, so changing ``t0`` or ``c``
    alters only the counts, never the random numbers behind them.
    """
    tag = IntensityTag(tag)
    if c < 0:
        raise ValueError("intensity constant must be nonnegative")
    if not 0.0 <= t0 < 1.0:
        raise ValueError("t0 must lie in [0, 1)")
    if tag is IntensityTag.LOCAL_TIME_OVER_SQRT_T and t0 <= 0.0:
        raise TruncationRequired("the accumulating intensity has infinitely many points near 0; pass t0 > 0")
    N = bmlt.n_steps
    visits = bmlt.zero_visits
    u = rng.random(visits.size)
    times = visits / N
    mean = np.full(visits.size, c / (bmlt.normalizer * math.sqrt(N)))
    if tag is IntensityTag.LOCAL_TIME_OVER_SQRT_T:
        mean /= np.sqrt((visits - 0.5) / N)
    counts = np.zeros(visits.size, dtype=np.int64)
    active = (times > t0) & (mean > 0)
    if active.any():
        counts[active] = np.maximum(stats.poisson.ppf(u[active], mean[active]), 0).astype(np.int64)
    return PointProcess(np.repeat(times, counts), tag, float(t0))


def assemble_qrbm(
    bmlt: BrownianPathWithLocalTime,
    pp: PointProcess,
    eta: int,
    early_sign: int | None = None,
) -> PathFunction:
    """Give |B| the sign (-1)^(eta + number of points at or after t).

    The last interval before time 1 carries (-1)^eta and the sign alternates
    at each point going backwards; with no points the sign is (-1)^eta
    throughout.  When the process was truncated at ``pp.t0 > 0``,
    ``early_sign`` is used up to the last zero of the backbone before t0.
    """
    N = bmlt.n_steps
    grid = np.arange(N + 1) / N
    after = pp.points.size - np.searchsorted(pp.points, grid, side="left")
    sign = 1 - 2 * ((eta + after) & 1)
    if pp.t0 > 0.0 and early_sign is not None:
        zeros = bmlt.zero_visits
        before = zeros[zeros <= pp.t0 * N]
        if before.size:
            sign[: before[-1] + 1] = early_sign
    values = sign * np.abs(bmlt.path_values)
    return PathFunction(grid, values)


def sample_qrbm(rng: np.random.Generator, N: int, c: float, sigma: float = 1.0) -> PathFunction:
    """Quasi-reflected BM: flips at Poisson points of intensity c dL."""
    bmlt = sample_bm_with_local_time(rng, N, sigma)
    pp = sample_point_process(rng, bmlt, c, IntensityTag.LOCAL_TIME)
    eta = int(rng.random() < 0.5)
    return assemble_qrbm(bmlt, pp, eta)


def sample_QRBM(rng: np.random.Generator, N: int, c: float, sigma: float = 1.0, t0: float | None = None) -> PathFunction:
    """Self-similar variant: flips at Poisson points of intensity c t^{-1/2} dL, truncated at t0.

    ``t0`` defaults to N^{-1/2}; before the last zero preceding t0 the path
    carries a single fair random sign.
    """
    t0 = 1.0 / math.sqrt(N) if t0 is None else t0
    bmlt = sample_bm_with_local_time(rng, N, sigma)
    pp = sample_point_process(rng, bmlt, c, IntensityTag.LOCAL_TIME_OVER_SQRT_T, t0)
    eta = int(rng.random() < 0.5)
    early_sign = 1 if rng.random() < 0.5 else -1
    return assemble_qrbm(bmlt, pp, eta, early_sign)


def bridge_local_time_tail(a, b, t0: float, t1: float, sigma: float, y):
    """P(local time at 0 of the sigma-BM bridge from (t0, a) to (t1, b) exceeds y)."""
    y = np.asarray(y, dtype=float)
    if not t1 > t0:
        raise DomainError("need t1 > t0")
    if np.any(y < 0):
        raise DomainError("y must be nonnegative")
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    spread = abs(a) + abs(b) + sigma * sigma * y
    # spread^2 - (b - a)^2 in factored form, avoiding cancellation
    gap = (2.0 * min(abs(a), abs(b)) if a * b > 0 else 0.0) + sigma * sigma * y
    out = np.clip(np.exp(-gap * (spread + abs(b - a)) / (2.0 * sigma * sigma * (t1 - t0))), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def bridge_local_time_cdf(a, b, t0: float, t1: float, sigma: float):
    """Cdf of the bridge local time, as a function with its left limit (atom at 0 unless a, b differ in sign)."""

    def cdf(y):
        y = np.asarray(y, dtype=float)
        out = np.where(y < 0, 0.0, 1.0 - bridge_local_time_tail(a, b, t0, t1, sigma, np.maximum(y, 0.0)))
        return float(out) if out.ndim == 0 else out

    def left(y):
        y = np.asarray(y, dtype=float)
        out = np.where(y <= 0, 0.0, cdf(y))
        return float(out) if out.ndim == 0 else out

    return cdf, left


def gaussian_marginal_cdf(t: float, sigma: float, x):
    """P(sigma B_t <= x)."""
    if t <= 0 or sigma <= 0:
        raise DomainError("need t > 0 and sigma > 0")
    x = np.asarray(x, dtype=float)
    out = 0.5 * (1.0 + special.erf(x / (sigma * math.sqrt(2.0 * t))))
    return float(out) if out.ndim == 0 else out
