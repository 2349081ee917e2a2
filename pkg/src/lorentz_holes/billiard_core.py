"""Geometry and collision dynamics of the periodic Lorentz billiard in a strip.

Scatterers are circular disks, repeated with period 1 horizontally.  Two
vertical boundary treatments are supported: a strip with reflecting floor
and ceiling, and a vertical torus where ``y`` wraps with period 1.  All
coordinates are global (unwrapped) so that the running sum of horizontal
flight projections is bit-identical to the particle's ``x`` coordinate.

No wall logic lives here; see :mod:`lorentz_holes.wall_holes`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import constants as C


class BoundaryMode(str, enum.Enum):
    REFLECTING_STRIP = "reflecting_strip"
    VERTICAL_TORUS = "vertical_torus"


class HitKind(str, enum.Enum):
    DISK = "disk"
    FLOOR = "strip_floor"
    CEILING = "strip_ceiling"
    WALL = "wall"


class LatticeError(ValueError):
    """Invalid scatterer geometry."""


class InfiniteHorizon(LatticeError):
    """Some line direction admits a corridor free of scatterers."""

    def __init__(self, direction: float, message: str = ""):
        self.direction = direction
        super().__init__(message or f"open corridor in direction {direction:.6f} rad")


class NoCollisionWithinHorizon(RuntimeError):
    """No scatterer hit within the certified free-path bound."""


class TangentialHit(RuntimeError):
    """Ray grazes a disk within tolerance (raised only in strict mode)."""


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class ScattererLattice:
    """Disks of the fundamental cell, extended with horizontal period 1.

    ``max_free_path`` is filled in by :func:`certify`; collision search
    needs it to bound the neighbourhood it scans.
    """

    disks: tuple[Disk, ...]
    boundary_mode: BoundaryMode = BoundaryMode.VERTICAL_TORUS
    max_free_path: float | None = None
    period: float = field(default=1.0, init=False)

    def __post_init__(self):
        object.__setattr__(self, "disks", tuple(self.disks))
        object.__setattr__(self, "boundary_mode", BoundaryMode(self.boundary_mode))

    @property
    def centers(self) -> np.ndarray:
        return np.array([d.center for d in self.disks], dtype=float).reshape(-1, 2)

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.disks], dtype=float)

    def unfolded(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Disks of a doubly periodic cell with no boundaries.

        The strip is unfolded by mirroring in its floor, which gives vertical
        period 2; the torus is already doubly periodic with period 1.
        Returns (centers, radii, vertical period).
        """
        centers, radii = self.centers, self.radii
        if self.boundary_mode is BoundaryMode.VERTICAL_TORUS:
            return centers, radii, 1.0
        mirrored = centers * np.array([1.0, -1.0]) + np.array([0.0, 2.0])
        return np.vstack([centers, mirrored]), np.concatenate([radii, radii]), 2.0

    def validate(self) -> None:
        """Check radii, pairwise disjointness and clearance from the strip boundary."""
        for d in self.disks:
            if not d.radius > 0:
                raise LatticeError(f"non-positive radius {d.radius}")
            cx, cy = d.center
            if not (0.0 <= cx < 1.0 and 0.0 <= cy < 1.0):
                raise LatticeError(f"center {d.center} outside the unit cell")
            if self.boundary_mode is BoundaryMode.REFLECTING_STRIP:
                if not (d.radius < cy < 1.0 - d.radius):
                    raise LatticeError(f"disk {d} touches the strip boundary")
        centers, radii = self.centers, self.radii
        vertical_shifts = (0,) if self.boundary_mode is BoundaryMode.REFLECTING_STRIP else (-1, 0, 1)
        for i in range(len(radii)):
            for j in range(i, len(radii)):
                for a in (-1, 0, 1):
                    for b in vertical_shifts:
                        if i == j and a == 0 and b == 0:
                            continue
                        gap = math.hypot(centers[j, 0] + a - centers[i, 0], centers[j, 1] + b - centers[i, 1])
                        if gap <= radii[i] + radii[j]:
                            raise LatticeError(f"disks {i} and {j} overlap (shift {a},{b})")


@dataclass(frozen=True)
class ParticleState:
    """Poincare-section point: position on a boundary and post-collision unit velocity."""

    q: tuple[float, float]
    v: tuple[float, float]

    @property
    def cell_index(self) -> int:
        return math.floor(self.q[0])


@dataclass(frozen=True)
class CollisionEvent:
    flight_time: float
    hit_point: tuple[float, float]
    hit_object: HitKind
    kappa: float
    normal: tuple[float, float]
    disk_id: int | None = None


def next_collision(state: ParticleState, lattice: ScattererLattice, strict: bool = False) -> CollisionEvent:
    """Earliest intersection of the ray ``q + t v`` (t > 0) with the billiard boundary.

    Tangential contacts (discriminant below ``TANGENT_DISCRIMINANT``) are not
    collisions; with ``strict=True`` they raise :class:`TangentialHit` instead.
    """
    horizon = lattice.max_free_path
    if horizon is None:
        raise LatticeError("lattice has no certified free-path bound; call certify() first")
    (qx, qy), (vx, vy) = state.q, state.v
    reach = math.ceil(horizon) + 1
    cell_x = math.floor(qx)
    torus = lattice.boundary_mode is BoundaryMode.VERTICAL_TORUS
    cell_y = math.floor(qy) if torus else 0
    vertical = range(cell_y - reach, cell_y + reach + 1) if torus else (0,)

    best_t = math.inf
    best = None
    for disk_id, disk in enumerate(lattice.disks):
        r = disk.radius
        for a in range(cell_x - reach, cell_x + reach + 1):
            for b in vertical:
                dx = qx - (disk.center[0] + a)
                dy = qy - (disk.center[1] + b)
                proj = dx * vx + dy * vy
                if proj >= 0.0:
                    continue
                disc = proj * proj - (dx * dx + dy * dy - r * r)
                if disc < C.TANGENT_DISCRIMINANT:
                    if strict and disc > -C.TANGENT_DISCRIMINANT:
                        raise TangentialHit(f"grazing disk {disk_id} at shift ({a},{b})")
                    continue
                t = -proj - math.sqrt(disc)
                if C.MIN_FLIGHT < t < best_t:
                    best_t = t
                    best = (HitKind.DISK, disk_id, disk.center[0] + a, disk.center[1] + b, r)

    if not torus:
        if vy < 0.0:
            t = -qy / vy
            if C.MIN_FLIGHT < t < best_t:
                best_t, best = t, (HitKind.FLOOR, None, 0.0, 0.0, 0.0)
        elif vy > 0.0:
            t = (1.0 - qy) / vy
            if C.MIN_FLIGHT < t < best_t:
                best_t, best = t, (HitKind.CEILING, None, 0.0, 0.0, 0.0)

    if best is None or best_t > horizon * C.HORIZON_OVERSHOOT:
        raise NoCollisionWithinHorizon(f"no hit within {horizon} from {state}")

    kappa = best_t * vx
    hx = qx + kappa
    hy = qy + best_t * vy
    kind, disk_id, cx, cy, r = best
    if kind is HitKind.DISK:
        normal = ((hx - cx) / r, (hy - cy) / r)
    elif kind is HitKind.FLOOR:
        hy, normal = 0.0, (0.0, 1.0)
    else:
        hy, normal = 1.0, (0.0, -1.0)
    return CollisionEvent(best_t, (hx, hy), kind, kappa, normal, disk_id)


def reflect(v: Sequence[float], n: Sequence[float]) -> tuple[float, float]:
    """Specular reflection ``v - 2<v,n> n``."""
    dot = v[0] * n[0] + v[1] * n[1]
    return (v[0] - 2.0 * dot * n[0], v[1] - 2.0 * dot * n[1])


def _unit(v: tuple[float, float]) -> tuple[float, float]:
    # same operation order as the batch kernel, so both paths agree bitwise
    norm = math.sqrt(v[0] * v[0] + v[1] * v[1])
    return (v[0] / norm, v[1] / norm)


def billiard_map(state: ParticleState, lattice: ScattererLattice) -> tuple[ParticleState, float]:
    """One application of the billiard ball map; returns the new state and its kappa."""
    event = next_collision(state, lattice)
    v_new = _unit(reflect(state.v, event.normal))
    return ParticleState(event.hit_point, v_new), event.kappa


def validate_symmetry(lattice: ScattererLattice) -> bool:
    """True iff the periodic disk set is invariant under ``x -> -x``."""
    centers, radii = lattice.centers, lattice.radii
    for (cx, cy), r in zip(centers, radii):
        mx = (-cx) % 1.0
        found = False
        for (ox, oy), orad in zip(centers, radii):
            dx = abs(mx - ox)
            dx = min(dx, 1.0 - dx)
            if dx <= C.GEOMETRY_TOL and abs(cy - oy) <= C.GEOMETRY_TOL and abs(r - orad) <= C.GEOMETRY_TOL:
                found = True
                break
        if not found:
            return False
    return True


def validate_finite_horizon(
    lattice: ScattererLattice,
    n_directions: int = C.HORIZON_DIRECTIONS,
    n_offsets: int = C.HORIZON_OFFSETS,
    refine: bool = True,
) -> float:
    """Upper bound on the free-flight length, by a direction/offset line sweep.

    Every line of the swept family is intersected with the doubly periodic
    disk set (the strip is unfolded by mirroring); the longest gap between
    consecutive blocked chords is the longest free flight along that line.
    Lines near the worst one are then re-swept on a grid 100 times finer.
    The grid is a certificate by sampling, not a proof.  A relative slack
    of ``HORIZON_SAFETY`` is added to the result.

    Raises:
        InfiniteHorizon: some line in the sweep is not blocked within the
            scanning window, i.e. there is an open corridor.
    """
    from ._kernels import horizon_sweep

    if not lattice.disks:
        raise InfiniteHorizon(0.0, "empty lattice: every line is an open corridor")
    centers, radii, height = lattice.unfolded()
    thetas = np.linspace(0.0, math.pi, n_directions, endpoint=False)
    worst, worst_theta, open_theta = horizon_sweep(centers, radii, 1.0, height, thetas, n_offsets)
    if open_theta >= 0.0:
        raise InfiniteHorizon(open_theta)
    if refine:
        step = math.pi / n_directions
        local = np.linspace(worst_theta - 2 * step, worst_theta + 2 * step, 401)
        w2, _, open2 = horizon_sweep(centers, radii, 1.0, height, local, n_offsets * 10)
        if open2 >= 0.0:
            raise InfiniteHorizon(open2)
        worst = max(worst, w2)
    return worst * (1.0 + C.HORIZON_SAFETY)


def certify(lattice: ScattererLattice, **sweep_kwargs) -> ScattererLattice:
    """Validate the geometry and attach the free-path bound."""
    lattice.validate()
    bound = validate_finite_horizon(lattice, **sweep_kwargs)
    return replace(lattice, max_free_path=bound)


FIXTURE_PATH = Path(__file__).with_name("data") / "fixture.toml"


def lattice_from_dict(spec: dict) -> ScattererLattice:
    disks = tuple(Disk((float(d["center"][0]), float(d["center"][1])), float(d["radius"])) for d in spec["disks"])
    return ScattererLattice(
        disks,
        BoundaryMode(spec.get("boundary_mode", BoundaryMode.VERTICAL_TORUS.value)),
        spec.get("max_free_path"),
    )


def lattice_to_dict(lattice: ScattererLattice) -> dict:
    out = {
        "boundary_mode": lattice.boundary_mode.value,
        "disks": [{"center": list(d.center), "radius": d.radius} for d in lattice.disks],
    }
    if lattice.max_free_path is not None:
        out["max_free_path"] = lattice.max_free_path
    return out


def default_lattice() -> ScattererLattice:
    """The shipped two-disk fixture with its recorded free-path bound."""
    import tomli

    with open(FIXTURE_PATH, "rb") as fh:
        return lattice_from_dict(tomli.load(fh)["lattice"])
