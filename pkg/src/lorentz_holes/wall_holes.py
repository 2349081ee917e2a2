"""The vertical wall at x = 0, its randomly placed hole, and the crossing decision."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .billiard_core import BoundaryMode, ScattererLattice


class Regime(str, enum.Enum):
    SHRINKING = "shrinking"  # hole n has size alpha_n
    DOUBLE_ARRAY = "double_array"  # every hole up to horizon n has size alpha_n
    NO_WALL = "no_wall"  # the periodic process, wall absent


class CrossingMode(str, enum.Enum):
    GEOMETRIC = "geometric"
    TRAPDOOR = "trapdoor"


class WallError(ValueError):
    pass


class HoleTooLarge(WallError):
    pass


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class WallConfig:
    """Wall components as closed intervals of heights in [0, 1]."""

    components: tuple[tuple[float, float], ...]

    def __post_init__(self):
        comps = tuple((float(a), float(b)) for a, b in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise WallError("wall needs at least one component")
        prev = -math.inf
        for a, b in comps:
            if not (0.0 <= a < b <= 1.0):
                raise WallError(f"bad component [{a}, {b}]")
            if a <= prev:
                raise WallError("components must be sorted and disjoint")
            prev = b

    @property
    def c1(self) -> float:
        return sum(b - a for a, b in self.components)

    @property
    def min_length(self) -> float:
        return min(b - a for a, b in self.components)

    def component_of(self, y: float) -> int | None:
        for i, (a, b) in enumerate(self.components):
            if a <= y <= b:
                return i
        return None

    def in_open_component(self, y: float) -> bool:
        return any(a < y < b for a, b in self.components)

    def uniform_point(self, u: float) -> tuple[int, float]:
        """Map u in [0, 1) to a point uniform in arclength on the union of components."""
        target = u * self.c1
        for i, (a, b) in enumerate(self.components):
            length = b - a
            if target < length or i == len(self.components) - 1:
                return i, a + min(target, length)
            target -= length
        raise AssertionError("unreachable")


def wall_from_lattice(lattice: ScattererLattice) -> WallConfig:
    """Connected components of the line x = 0 minus the scatterers, within one period."""
    blocked = []
    torus = lattice.boundary_mode is BoundaryMode.VERTICAL_TORUS
    for disk in lattice.disks:
        cx, cy = disk.center
        r = disk.radius
        for a in (-1, 0, 1):
            dx = cx + a
            if abs(dx) >= r:
                continue
            half = math.sqrt(r * r - dx * dx)
            lo, hi = cy - half, cy + half
            shifts = (-1, 0, 1) if torus else (0,)
            for b in shifts:
                blo, bhi = max(lo + b, 0.0), min(hi + b, 1.0)
                if blo < bhi:
                    blocked.append((blo, bhi))
    blocked.sort()
    free = []
    cursor = 0.0
    for lo, hi in blocked:
        if lo > cursor:
            free.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < 1.0:
        free.append((cursor, 1.0))
    if torus and len(free) > 1 and free[0][0] == 0.0 and free[-1][1] == 1.0:
        raise WallError("a wall component wraps through y = 0; shift the lattice vertically")
    if not free:
        raise WallError("the line x = 0 is entirely covered by scatterers")
    return WallConfig(tuple(free))


@dataclass(frozen=True)
class HoleInterval:
    pieces: tuple[tuple[float, float], ...]

    @property
    def total_length(self) -> float:
        return sum(b - a for a, b in self.pieces)


def _hole_at(wall: WallConfig, component: int, xi: float, alpha: float) -> HoleInterval:
    left, right = wall.components[component]
    room = right - xi
    if room > alpha:
        return HoleInterval(((xi, xi + alpha),))
    # wrap to the start of the same component
    return HoleInterval(((xi, right), (left, left + alpha - room)))


def sample_hole(rng: np.random.Generator, wall: WallConfig, alpha: float) -> HoleInterval:
    """Hole of length ``alpha`` starting at a uniform point of the wall, wrapping within its component."""
    if not 0.0 < alpha < wall.min_length:
        if alpha >= wall.min_length:
            raise HoleTooLarge(f"hole {alpha} does not fit the shortest component {wall.min_length}")
        raise WallError(f"hole size must be positive, got {alpha}")
    component, xi = wall.uniform_point(rng.random())
    return _hole_at(wall, component, xi, alpha)


def hole_contains(hole: HoleInterval, y: float) -> bool:
    return any(a < y < b for a, b in hole.pieces)


def crossing_probability(wall: WallConfig, alpha: float) -> float:
    if not 0.0 <= alpha < wall.min_length:
        raise HoleTooLarge(f"hole {alpha} outside [0, {wall.min_length})")
    return alpha / wall.c1


@dataclass(frozen=True)
class HoleSchedule:
    """Hole-size sequence and crossing rule.

    ``family`` selects alpha_n: ``inv_sqrt`` is c/sqrt(n), ``const`` is
    ``alpha``, ``power`` is c * n**(-beta).
    """

    regime: Regime = Regime.SHRINKING
    family: str = "inv_sqrt"
    c: float = 1.0
    alpha: float = 0.0
    beta: float = 0.5
    crossing_mode: CrossingMode = CrossingMode.GEOMETRIC

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        object.__setattr__(self, "crossing_mode", CrossingMode(self.crossing_mode))
        if self.family not in ("inv_sqrt", "const", "power"):
            raise ScheduleError(f"unknown schedule family {self.family!r}")
        if self.family == "power" and self.beta <= 0:
            raise ScheduleError("power schedule needs beta > 0 for the hole to shrink")

    def alpha_at(self, n) -> np.ndarray | float:
        n = np.asarray(n, dtype=float)
        if np.any(n < 1):
            raise ScheduleError("hole index starts at 1")
        if self.family == "inv_sqrt":
            out = self.c / np.sqrt(n)
        elif self.family == "const":
            out = np.full_like(n, self.alpha)
        else:
            out = self.c * n ** (-self.beta)
        return float(out) if out.ndim == 0 else out

    def hole_size(self, index: int, horizon: int) -> float:
        """Size of the hole met during counted step ``index`` of a run of length ``horizon``."""
        if self.regime is Regime.NO_WALL:
            return math.nan
        if self.regime is Regime.DOUBLE_ARRAY:
            return self.alpha_at(horizon)
        return self.alpha_at(index)

    def sizes(self, horizon: int) -> np.ndarray:
        """Hole size in force at each counted step 1..horizon (NaN without a wall)."""
        if self.regime is Regime.NO_WALL:
            return np.full(horizon, np.nan)
        if self.regime is Regime.DOUBLE_ARRAY:
            return np.full(horizon, self.alpha_at(horizon))
        return np.asarray(self.alpha_at(np.arange(1, horizon + 1)), dtype=float)

    def validate(self, wall: WallConfig, horizon: int) -> None:
        if self.regime is Regime.NO_WALL:
            return
        sizes = self.sizes(horizon)
        if np.any(sizes < 0):
            raise ScheduleError("negative hole size")
        if sizes.max() >= wall.min_length:
            raise HoleTooLarge(
                f"alpha reaches {sizes.max():.4g} but the shortest wall component is {wall.min_length:.4g}"
            )


def decide_crossing(
    rng: np.random.Generator,
    schedule: HoleSchedule,
    wall: WallConfig,
    n: int,
    hit_height: float,
    horizon: int | None = None,
) -> bool:
    """Whether a particle reaching the wall at ``hit_height`` during step ``n`` passes through."""
    if n < 1:
        raise ScheduleError("hole index starts at 1")
    if schedule.regime is Regime.NO_WALL:
        return True
    alpha = schedule.hole_size(n, horizon if horizon is not None else n)
    if alpha <= 0.0:
        return False
    if schedule.crossing_mode is CrossingMode.TRAPDOOR:
        return bool(rng.random() < crossing_probability(wall, alpha))
    return hole_contains(sample_hole(rng, wall, alpha), hit_height)


def decide_crossings(
    rng: np.random.Generator,
    wall: WallConfig,
    alphas: Sequence[float],
    heights: Sequence[float],
    mode: CrossingMode,
) -> np.ndarray:
    """Vectorised crossing decisions for independent wall visits.

    Same law as repeated :func:`decide_crossing`, but draws the random
    numbers in bulk (one uniform per visit).
    """
    alphas = np.asarray(alphas, dtype=float)
    heights = np.asarray(heights, dtype=float)
    u = rng.random(alphas.shape)
    if np.any(alphas >= wall.min_length):
        raise HoleTooLarge(f"hole {alphas.max()} does not fit the shortest component {wall.min_length}")
    if CrossingMode(mode) is CrossingMode.TRAPDOOR:
        return u < alphas / wall.c1
    lefts = np.array([a for a, _ in wall.components])
    rights = np.array([b for _, b in wall.components])
    lengths = rights - lefts
    edges = np.concatenate([[0.0], np.cumsum(lengths)])
    target = u * wall.c1
    comp = np.clip(np.searchsorted(edges, target, side="right") - 1, 0, len(lengths) - 1)
    xi = lefts[comp] + np.minimum(target - edges[comp], lengths[comp])
    # offset of the height past the hole start, measured around the component
    hcomp_left = lefts[comp]
    inside = (heights > hcomp_left) & (heights < rights[comp])
    offset = np.mod(heights - xi, lengths[comp])
    crossed = inside & (offset > 0.0) & (offset < alphas) & (alphas > 0.0)
    return crossed
