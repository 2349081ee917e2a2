"""Trajectories of the Lorentz process with a wall at x = 0.

Wall-free flights are computed in bulk by the compiled stepper.  The wall
is then applied by mirror coupling: the lattice is symmetric under
``x -> -x``, so a reflection off the wall is the same as letting the
particle pass and mirroring the rest of its path.  The with-wall position is
therefore ``s_k * X_k`` with ``X`` the wall-free position and ``s_k = +-1``
flipping at each wall visit that does not go through the hole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from . import constants as C
from . import rng as streams
from .billiard_core import (
    BoundaryMode,
    LatticeError,
    NoCollisionWithinHorizon,
    ParticleState,
    ScattererLattice,
    next_collision,
    reflect,
    _unit,
    validate_symmetry,
)
from .paths import PathFunction, counting_path, lattice_path
from .wall_holes import HoleSchedule, Regime, WallConfig, WallError, decide_crossing, wall_from_lattice


class StepBudgetExceeded(RuntimeError):
    """Too many uncounted wall events between two counted collisions."""


@dataclass(frozen=True)
class LorentzConfig:
    lattice: ScattererLattice
    wall: WallConfig | None = None
    count_wall_hits: bool = False

    def __post_init__(self):
        if self.wall is None:
            object.__setattr__(self, "wall", wall_from_lattice(self.lattice))

    def validate(self) -> None:
        self.lattice.validate()
        if not validate_symmetry(self.lattice):
            raise LatticeError("lattice is not symmetric under x -> -x; mirror coupling needs it")
        if self.lattice.max_free_path is None:
            raise LatticeError("lattice has no certified free-path bound")
        expected = wall_from_lattice(self.lattice)
        if len(expected.components) != len(self.wall.components) or any(
            abs(a - b) > C.GEOMETRY_TOL or abs(c - d) > C.GEOMETRY_TOL
            for (a, c), (b, d) in zip(self.wall.components, expected.components)
        ):
            raise WallError(f"wall components {self.wall.components} differ from the lattice's {expected.components}")


@dataclass
class TrajectoryRecord:
    """One trajectory of ``n`` counted steps.

    ``S[k]`` is the horizontal coordinate after k counted steps (``S[0]`` is
    the start), ``L[k]`` the number of flights among the first k that
    crossed an open wall component, ``alpha[k-1]`` the hole size in force
    during step k (NaN without a wall).
    """

    S: np.ndarray
    L: np.ndarray
    crossing_steps: np.ndarray
    wall_hits: int = 0
    alpha: np.ndarray | None = None
    regime: str = Regime.NO_WALL.value
    kappa: np.ndarray = field(init=False)

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        self.L = np.asarray(self.L, dtype=np.int64)
        self.crossing_steps = np.asarray(self.crossing_steps, dtype=np.int64)
        self.kappa = np.diff(self.S)
        if self.alpha is None:
            self.alpha = np.full(self.n, np.nan)

    @property
    def n(self) -> int:
        return self.S.size - 1

    @property
    def crossed(self) -> np.ndarray:
        flags = np.zeros(self.n + 1, dtype=bool)
        flags[self.crossing_steps] = True
        return flags[1:]

    def to_csv(self, path, header: str = "") -> None:
        crossed = self.crossed.astype(int).tolist()
        kappa, S, L, alpha = self.kappa.tolist(), self.S.tolist(), np.asarray(self.L).tolist(), self.alpha.tolist()
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write("k,kappa,S,L,crossed,alpha\n")
            fh.write(f"0,,{S[0]!r},0,0,\n")
            for k in range(1, self.n + 1):
                fh.write(f"{k},{kappa[k - 1]!r},{S[k]!r},{L[k]},{crossed[k - 1]},{alpha[k - 1]!r}\n")


def _boundary_pieces(lattice: ScattererLattice):
    """Boundary pieces meeting the window x in [-1, 1]: (kind, center or y, radius, weight)."""
    pieces = []
    for disk in lattice.disks:
        cx, cy = disk.center
        r = disk.radius
        for a in range(-3, 4):
            if cx + a + r >= -1.0 and cx + a - r <= 1.0:
                pieces.append(("disk", (cx + a, cy), r, 2.0 * math.pi * r))
    if lattice.boundary_mode is BoundaryMode.REFLECTING_STRIP:
        pieces.append(("floor", 0.0, 0.0, 2.0))
        pieces.append(("ceiling", 1.0, 0.0, 2.0))
    return pieces


def sample_initial_state(rng: np.random.Generator, config: LorentzConfig) -> ParticleState:
    """Point of the Poincare section drawn from the normalised Liouville measure on x in [-1, 1].

    Position uniform in arclength (rejection outside the window), outgoing
    angle to the normal with density cos(phi)/2.
    """
    pieces = _boundary_pieces(config.lattice)
    weights = np.array([p[3] for p in pieces])
    cum = np.cumsum(weights) / weights.sum()
    while True:
        idx = min(int(np.searchsorted(cum, rng.random(), side="right")), len(pieces) - 1)
        kind, where, r, _ = pieces[idx]
        u = rng.random()
        if kind == "disk":
            psi = 2.0 * math.pi * u
            nx, ny = math.cos(psi), math.sin(psi)
            q = (where[0] + r * nx, where[1] + r * ny)
        else:
            q = (-1.0 + 2.0 * u, where)
            nx, ny = (0.0, 1.0) if kind == "floor" else (0.0, -1.0)
        if -1.0 <= q[0] <= 1.0:
            break
    phi = math.asin(2.0 * rng.random() - 1.0)
    c, s = math.cos(phi), math.sin(phi)
    return ParticleState(q, (nx * c - ny * s, nx * s + ny * c))


def section_coordinates(q: np.ndarray, v: np.ndarray, lattice: ScattererLattice) -> tuple[np.ndarray, np.ndarray]:
    """Reduce section points to (arclength on the cell boundary, angle to the normal)."""
    q = np.atleast_2d(q)
    v = np.atleast_2d(v)
    torus = lattice.boundary_mode is BoundaryMode.VERTICAL_TORUS
    best = np.full(q.shape[0], np.inf)
    s = np.zeros(q.shape[0])
    nrm = np.zeros_like(q)
    offset = 0.0
    for disk in lattice.disks:
        cx, cy = disk.center
        dx = q[:, 0] - cx
        dx -= np.round(dx)
        dy = q[:, 1] - cy
        if torus:
            dy -= np.round(dy)
        dist = np.abs(np.hypot(dx, dy) - disk.radius)
        take = dist < best
        psi = np.mod(np.arctan2(dy, dx), 2 * math.pi)
        best = np.where(take, dist, best)
        s = np.where(take, offset + disk.radius * psi, s)
        nrm[take] = np.column_stack([dx, dy])[take] / disk.radius
        offset += 2 * math.pi * disk.radius
    if not torus:
        for y0, normal in ((0.0, (0.0, 1.0)), (1.0, (0.0, -1.0))):
            dist = np.abs(q[:, 1] - y0)
            take = dist < best
            best = np.where(take, dist, best)
            s = np.where(take, offset + np.mod(q[:, 0], 1.0), s)
            nrm[take] = normal
            offset += 1.0
    cross = nrm[:, 0] * v[:, 1] - nrm[:, 1] * v[:, 0]
    dot = nrm[:, 0] * v[:, 0] + nrm[:, 1] * v[:, 1]
    return s, np.arctan2(cross, dot)


def free_flights(states, lattice: ScattererLattice, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Wall-free flights for a batch of start states.

    Returns (x0, kappas, heights): ``kappas[p, k]`` is the horizontal
    projection of flight k + 1, ``heights[p, k]`` the height where it crossed
    x = 0 (reduced mod 1 in torus mode) or NaN.
    """
    from ._kernels import advance

    if lattice.max_free_path is None:
        raise LatticeError("lattice has no certified free-path bound")
    x = np.array([s.q[0] for s in states], dtype=float)
    y = np.array([s.q[1] for s in states], dtype=float)
    vx = np.array([s.v[0] for s in states], dtype=float)
    vy = np.array([s.v[1] for s in states], dtype=float)
    x0 = x.copy()
    kappas = np.empty((x.size, n))
    heights = np.empty((x.size, n))
    centers, radii = lattice.centers, lattice.radii
    status = advance(
        x, y, vx, vy, n, centers[:, 0].copy(), centers[:, 1].copy(), radii, float(lattice.max_free_path),
        lattice.boundary_mode is BoundaryMode.VERTICAL_TORUS, kappas, heights,
    )
    if status.any():
        raise NoCollisionWithinHorizon(f"{int(status.sum())} particles found no scatterer within the bound")
    return x0, kappas, heights


def positions_from_kappas(x0: float, kappas: np.ndarray) -> np.ndarray:
    # sequential cumsum reproduces the stepper's x exactly
    return np.cumsum(np.concatenate([[x0], kappas]))


def _open_mask(wall: WallConfig, heights: np.ndarray) -> np.ndarray:
    mask = np.zeros(heights.shape, dtype=bool)
    for a, b in wall.components:
        mask |= (heights > a) & (heights < b)
    return mask


def apply_wall(
    x0: float,
    kappas: np.ndarray,
    heights: np.ndarray,
    rng: np.random.Generator,
    schedule: HoleSchedule,
    wall: WallConfig,
    count_wall_hits: bool = False,
) -> TrajectoryRecord:
    """Turn one wall-free trajectory into the trajectory with the wall present."""
    n = kappas.size
    free = positions_from_kappas(x0, kappas)
    visited = ~np.isnan(heights)
    opened = _open_mask(wall, np.where(visited, heights, -1.0))
    alpha = schedule.sizes(n)
    if schedule.regime is Regime.NO_WALL:
        steps = np.flatnonzero(opened) + 1
        L = np.concatenate([[0], np.cumsum(opened)])
        return TrajectoryRecord(free, L, steps, 0, alpha, schedule.regime.value)
    if count_wall_hits:
        return _apply_wall_counting_hits(free, heights, opened, rng, schedule, wall, n)

    flips = np.zeros(n + 1, dtype=np.int64)
    crossings = []
    for j in np.flatnonzero(visited):
        k = int(j) + 1
        if decide_crossing(rng, schedule, wall, k, float(heights[j]), horizon=n):
            crossings.append(k)
        else:
            flips[k] = 1
    sign = 1 - 2 * (np.cumsum(flips) & 1)
    L = np.concatenate([[0], np.cumsum(opened)])
    return TrajectoryRecord(sign * free, L, crossings, int(flips.sum()), alpha, schedule.regime.value)


def _apply_wall_counting_hits(free, heights, opened, rng, schedule, wall, n):
    # literal dynamics: each wall reflection is a counted step landing on x = 0
    S = [free[0]]
    L = [0]
    crossings = []
    sign = 1.0
    hits = 0
    j = 0
    while len(S) <= n:
        h = heights[j]
        if np.isnan(h):
            S.append(sign * free[j + 1])
            L.append(L[-1])
        else:
            k = len(S)
            if decide_crossing(rng, schedule, wall, k, float(h), horizon=n):
                S.append(sign * free[j + 1])
                L.append(L[-1] + int(opened[j]))
                crossings.append(k)
            else:
                hits += 1
                S.append(0.0)
                L.append(L[-1] + int(opened[j]))
                sign = -sign
                if len(S) <= n:
                    S.append(sign * free[j + 1])
                    L.append(L[-1])
        j += 1
    return TrajectoryRecord(np.array(S), np.array(L), crossings, hits, schedule.sizes(n), schedule.regime.value)


def run_trajectory(
    rng: np.random.Generator,
    config: LorentzConfig,
    schedule: HoleSchedule,
    n: int,
    hole_rng: np.random.Generator | None = None,
) -> TrajectoryRecord:
    """Simulate ``n`` counted collisions from a Liouville-distributed start.

    Geometry randomness (the start) comes from ``rng``; hole randomness from
    ``hole_rng``, which defaults to ``rng``.  Sharing the geometry stream
    between regimes gives the coupled trajectories of the mirror identity.
    """
    if n < 1:
        raise ValueError("n must be positive")
    schedule.validate(config.wall, n)
    state = sample_initial_state(rng, config)
    x0, kappas, heights = free_flights([state], config.lattice, n)
    return apply_wall(
        x0[0], kappas[0], heights[0], rng if hole_rng is None else hole_rng, schedule, config.wall, config.count_wall_hits
    )


def iter_ensemble(
    seed: int,
    config: LorentzConfig,
    schedules: Mapping[str, HoleSchedule],
    n: int,
    samples: int,
    start: int = 0,
    chunk: int = 100,
) -> Iterator[tuple[int, dict[str, TrajectoryRecord]]]:
    """Yield ``(i, {name: record})`` for samples ``start .. start + samples - 1``.

    Every schedule sees the same wall-free trajectory of sample ``i`` (stream
    ``(i, GEOMETRY)``) and a fresh copy of the hole stream ``(i, HOLES)``.
    """
    for schedule in schedules.values():
        schedule.validate(config.wall, n)
    for lo in range(start, start + samples, chunk):
        idx = range(lo, min(lo + chunk, start + samples))
        states = [sample_initial_state(streams.substream(seed, i, streams.GEOMETRY), config) for i in idx]
        x0, kappas, heights = free_flights(states, config.lattice, n)
        for row, i in enumerate(idx):
            out = {}
            for name, schedule in schedules.items():
                out[name] = apply_wall(
                    x0[row], kappas[row], heights[row], streams.substream(seed, i, streams.HOLES),
                    schedule, config.wall, config.count_wall_hits,
                )
            yield i, out


def run_trajectory_direct(
    rng: np.random.Generator,
    config: LorentzConfig,
    schedule: HoleSchedule,
    n: int,
    hole_rng: np.random.Generator | None = None,
) -> TrajectoryRecord:
    """Reference stepper that reflects off the wall explicitly, one collision at a time.

    Slow and only meant to cross-check :func:`run_trajectory` on short
    horizons; the two differ by rounding, which the chaotic dynamics
    amplifies over long runs.
    """
    hole_rng = rng if hole_rng is None else hole_rng
    lattice, wall = config.lattice, config.wall
    state = sample_initial_state(rng, config)
    S = [state.q[0]]
    L = [0]
    crossings = []
    hits = 0
    while len(S) <= n:
        k = len(S)
        event = next_collision(state, lattice)
        qx, qy = state.q
        vx, vy = state.v
        hx = event.hit_point[0]
        chatter = 0
        if (qx < 0.0) != (hx < 0.0) and schedule.regime is not Regime.NO_WALL:
            # height where the chord meets x = 0, same arithmetic as the batch stepper
            h = qy + (-qx) * (vy / vx)
            h_cell = h - math.floor(h) if lattice.boundary_mode is BoundaryMode.VERTICAL_TORUS else h
            opened = wall.in_open_component(h_cell)
            if decide_crossing(hole_rng, schedule, wall, k, h_cell, horizon=n):
                crossings.append(k)
            else:
                hits += 1
                chatter += 1
                if chatter > C.WALL_CHATTER_LIMIT:
                    raise StepBudgetExceeded(f"more than {C.WALL_CHATTER_LIMIT} wall hits before step {k}")
                state = ParticleState((0.0, h), reflect(state.v, (-1.0 if vx > 0 else 1.0, 0.0)))
                event = next_collision(state, lattice)
            L.append(L[-1] + int(opened))
        else:
            if (qx < 0.0) != (hx < 0.0):
                h = qy + (-qx) * (vy / vx)
                h_cell = h - math.floor(h) if lattice.boundary_mode is BoundaryMode.VERTICAL_TORUS else h
                opened = wall.in_open_component(h_cell)
                if opened:
                    crossings.append(k)
                L.append(L[-1] + int(opened))
            else:
                L.append(L[-1])
        state = ParticleState(event.hit_point, _unit(reflect(state.v, event.normal)))
        S.append(event.hit_point[0])
    return TrajectoryRecord(np.array(S), np.array(L), crossings, hits, schedule.sizes(n), schedule.regime.value)


def scaled_path(record: TrajectoryRecord, n: int) -> PathFunction:
    """``k/n -> S_k / sqrt(n)``, linearly interpolated."""
    return lattice_path(record.S, n)


def local_time_path(record: TrajectoryRecord, n: int) -> PathFunction:
    """``k/n -> L_k / sqrt(n)`` as a nondecreasing right-continuous step function."""
    return counting_path(record.L, n)
