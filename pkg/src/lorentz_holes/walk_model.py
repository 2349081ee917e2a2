"""Random-walk analogue of the wall process, the sign-chain formula and the Le Cam bound.

The walk is a simple symmetric walk whose modulus is reflected at 0; when it
is at 0 it either returns to the side it came from (probability 1 - eps) or
passes to the other side (probability eps).  Equivalently it is
``s_k * |Y_k|`` with ``Y`` a simple walk started at 1 and ``s_k`` a sign that
flips at zero-visits with probability eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import special

from . import constants as C
from . import rng as streams
from .lorentz_sim import TrajectoryRecord
from .paths import PathFunction, lattice_path
from .wall_holes import CrossingMode, HoleSchedule, Regime, WallConfig, decide_crossings

UNIT_WALL = WallConfig(((0.0, 1.0),))


class SizeExceeded(ValueError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    """Walk horizon and crossing schedule.

    In the shrinking regime eps at a zero-visit at time k is ``alpha_k``; in
    the double-array regime it is ``alpha_n`` throughout.  Geometric mode
    places a hole of length eps on a unit wall and hits it at a uniform
    height; trapdoor mode flips a Bernoulli(eps) coin.
    """

    n: int
    schedule: HoleSchedule = field(default_factory=HoleSchedule)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.schedule.regime is Regime.NO_WALL:
            return
        eps = self.epsilons()
        if np.any(eps < 0) or np.any(eps > 1):
            raise ValueError("crossing probabilities must lie in [0, 1]")

    def epsilons(self) -> np.ndarray:
        """eps for a zero-visit at time k = 1..n (index k-1)."""
        if self.schedule.regime is Regime.NO_WALL:
            return np.ones(self.n)
        return self.schedule.sizes(self.n)


def _crossing_decisions(rng, eps, mode):
    eps = np.asarray(eps, dtype=float)
    out = np.ones(eps.shape, dtype=bool)
    partial = eps < 1.0
    if CrossingMode(mode) is CrossingMode.GEOMETRIC:
        heights = rng.random(eps.shape)
        out[partial] = decide_crossings(rng, UNIT_WALL, eps[partial], heights[partial], mode)
    else:
        out[partial] = decide_crossings(rng, UNIT_WALL, eps[partial], np.zeros(partial.sum()), mode)
    return out


def _walk_from_draws(start_up: bool, steps: np.ndarray, cross_rng, config: WalkConfig):
    n = config.n
    y = np.empty(n + 1, dtype=np.int64)
    y[0] = 1
    np.cumsum(steps, out=y[1:])
    y[1:] += 1
    visits = np.flatnonzero(y == 0)
    eps = config.epsilons()[visits - 1] if visits.size else np.empty(0)
    crossed = _crossing_decisions(cross_rng, eps, config.schedule.crossing_mode)
    start_sign = 1 if start_up else -1
    flips = np.zeros(n + 2, dtype=np.int64)
    flips[visits[crossed] + 1] = 1
    sign = start_sign * (1 - 2 * (np.cumsum(flips[: n + 1]) & 1))
    S = sign * np.abs(y)
    L = np.zeros(n + 1, dtype=np.int64)
    L[visits] = 1
    return S, np.cumsum(L), visits[crossed]


def run_walk(rng: np.random.Generator, config: WalkConfig, cross_rng: np.random.Generator | None = None) -> TrajectoryRecord:
    """One walk of ``config.n`` steps started at +-1 with equal probability.

    ``L`` counts visits to 0 and ``crossing_steps`` lists the zero-visit
    times after which the walk changed side.  The first step from +-1 is an
    ordinary symmetric step.
    """
    start_up = rng.random() < 0.5
    steps = np.where(rng.random(config.n) < 0.5, 1, -1)
    S, L, crossings = _walk_from_draws(start_up, steps, rng if cross_rng is None else cross_rng, config)
    return TrajectoryRecord(S.astype(float), L, crossings, 0, config.epsilons(), config.schedule.regime.value)


def walk_stream_pair(seed: int, index: int):
    return streams.substream(seed, index, streams.WALK_STEPS), streams.substream(seed, index, streams.WALK_CROSSINGS)


def iter_walk_chunks(seed: int, config: WalkConfig, samples: int, start: int = 0, chunk: int = 500) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(S, L)`` integer arrays of shape (m, n + 1) for consecutive blocks of samples.

    Sample i uses streams ``(i, WALK_STEPS)`` and ``(i, WALK_CROSSINGS)``,
    so the values agree with :func:`run_walk` driven by the same pair.
    """
    n = config.n
    for lo in range(start, start + samples, chunk):
        idx = range(lo, min(lo + chunk, start + samples))
        S = np.empty((len(idx), n + 1), dtype=np.int32)
        L = np.empty((len(idx), n + 1), dtype=np.int32)
        for row, i in enumerate(idx):
            step_rng, cross_rng = walk_stream_pair(seed, i)
            start_up = step_rng.random() < 0.5
            steps = np.where(step_rng.random(n) < 0.5, 1, -1)
            S[row], L[row], _ = _walk_from_draws(start_up, steps, cross_rng, config)
        yield S, L


def walk_scaled_path(record: TrajectoryRecord, n: int) -> PathFunction:
    """``k/n -> S_k / sqrt(n)`` with linear interpolation (same as the billiard)."""
    return lattice_path(record.S, n)


def sample_walk_bridge(rng: np.random.Generator, n: int, start: int, end: int) -> np.ndarray:
    """Simple walk of ``n`` steps from ``start`` conditioned to end at ``end``.

    Uniform over all such paths: a random permutation of the fixed multiset
    of up and down steps.
    """
    up2 = n + end - start
    if up2 % 2 or not 0 <= up2 <= 2 * n:
        raise ValueError(f"no walk of {n} steps joins {start} to {end}")
    steps = np.full(n, -1, dtype=np.int64)
    steps[: up2 // 2] = 1
    rng.shuffle(steps)
    path = np.empty(n + 1, dtype=np.int64)
    path[0] = start
    np.cumsum(steps, out=path[1:])
    path[1:] += start
    return path


def chain_plus_probability(p: Sequence[float]) -> float:
    """Probability that a +-1 sign chain started at + is at + after flips with probabilities ``p``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("flip probabilities must lie in [0, 1]")
    return 0.5 * (1.0 + float(np.prod(1.0 - 2.0 * p)))


def poisson_binomial_pmf(p: Sequence[float]) -> np.ndarray:
    """Exact pmf of a sum of independent Bernoulli(p_j) by sequential convolution."""
    p = np.asarray(p, dtype=float)
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for j, pj in enumerate(p, start=1):
        pmf[1 : j + 1] = pmf[1 : j + 1] * (1.0 - pj) + pmf[:j] * pj
        pmf[0] *= 1.0 - pj
    return pmf


def poisson_pmf(k: np.ndarray, lam: float) -> np.ndarray:
    # log-space evaluation stays finite for large lam
    k = np.asarray(k, dtype=float)
    if lam == 0.0:
        return (k == 0).astype(float)
    return np.exp(k * math.log(lam) - lam - special.gammaln(k + 1.0))


def le_cam_bound(p: Sequence[float]) -> tuple[float, float]:
    """Distance between a Poisson-binomial law and Poisson with the same mean, and its bound.

    Returns ``(sum_k |P(sum = k) - Poisson(lam)(k)|, 2 * sum p_j**2)``; the
    Poisson mass beyond the support of the sum is included in the first term.
    """
    p = np.asarray(p, dtype=float)
    if p.size > C.LE_CAM_MAX_SIZE:
        raise SizeExceeded(f"{p.size} terms exceed the exact convolution limit {C.LE_CAM_MAX_SIZE}")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    lam = float(p.sum())
    pmf = poisson_binomial_pmf(p)
    ks = np.arange(p.size + 1)
    poisson = poisson_pmf(ks, lam)
    tail = float(special.pdtrc(p.size, lam)) if lam > 0 else 0.0
    distance = float(np.abs(pmf - poisson).sum()) + tail
    return distance, float(2.0 * np.sum(p * p))
