"""Experiment configuration: one TOML file with run, lattice, wall, schedule and limit sections."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli
import tomli_w

from .billiard_core import (
    FIXTURE_PATH,
    LatticeError,
    ScattererLattice,
    lattice_from_dict,
    lattice_to_dict,
    validate_symmetry,
)
from .walk_model import WalkConfig
from .wall_holes import HoleSchedule, ScheduleError, WallConfig, WallError, wall_from_lattice

FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


def _same_components(a: WallConfig, b: WallConfig, tol: float = 1e-12) -> bool:
    if len(a.components) != len(b.components):
        return False
    return all(abs(x - y) <= tol for ca, cb in zip(a.components, b.components) for x, y in zip(ca, cb))


@dataclass(frozen=True)
class LimitSettings:
    kind: str = "qrbm"
    c: float = 1.0
    sigma: float = 1.0
    grid: int = 10_000
    t0: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    lattice: ScattererLattice
    schedule: HoleSchedule = field(default_factory=HoleSchedule)
    wall: WallConfig | None = None
    limit: LimitSettings = field(default_factory=LimitSettings)
    seed: int = 1
    samples: int = 1_000
    n: int = 10_000
    records: int = 5
    count_wall_hits: bool = False
    threads: int = 1
    out: str = "runs/experiment"

    def resolved_wall(self) -> WallConfig:
        return self.wall if self.wall is not None else wall_from_lattice(self.lattice)

    def validate(self, model: str = "billiard") -> None:
        """Check every section; ``model="walk"`` checks the schedule against the walk's unit wall."""
        for name in ("samples", "n"):
            if getattr(self, name) < 1:
                raise ConfigError(f"run.{name}: must be positive")
        if self.records < 0:
            raise ConfigError("run.records: must be nonnegative")
        if self.threads < 1:
            raise ConfigError("run.threads: must be positive")
        try:
            self.lattice.validate()
        except LatticeError as exc:
            raise ConfigError(f"lattice.disks: {exc}") from exc
        if not validate_symmetry(self.lattice):
            raise ConfigError("lattice.disks: not symmetric under x -> -x")
        if self.lattice.max_free_path is None:
            raise ConfigError("lattice.max_free_path: missing; certify the lattice first")
        try:
            derived = wall_from_lattice(self.lattice)
        except WallError as exc:
            raise ConfigError(f"wall.components: {exc}") from exc
        if self.wall is not None and not _same_components(self.wall, derived):
            raise ConfigError(f"wall.components: {self.wall.components} differ from the lattice's {derived.components}")
        try:
            if model == "walk":
                WalkConfig(self.n, self.schedule)
            else:
                self.schedule.validate(self.resolved_wall(), self.n)
        except (ScheduleError, WallError, ValueError) as exc:
            raise ConfigError(f"schedule: {exc}") from exc
        if self.limit.kind not in ("qrbm", "QRBM"):
            raise ConfigError(f"limit.kind: expected 'qrbm' or 'QRBM', got {self.limit.kind!r}")
        if self.limit.grid < 1000:
            raise ConfigError("limit.grid: must be at least 1000")
        if self.limit.sigma <= 0 or self.limit.c < 0:
            raise ConfigError("limit: need sigma > 0 and c >= 0")
        if self.limit.t0 is not None and not 0 < self.limit.t0 < 1:
            raise ConfigError("limit.t0: must lie in (0, 1)")

    def to_dict(self) -> dict:
        schedule = {
            "regime": self.schedule.regime.value,
            "family": self.schedule.family,
            "c": self.schedule.c,
            "alpha": self.schedule.alpha,
            "beta": self.schedule.beta,
            "crossing_mode": self.schedule.crossing_mode.value,
            "count_wall_hits": self.count_wall_hits,
        }
        limit = {"kind": self.limit.kind, "c": self.limit.c, "sigma": self.limit.sigma, "grid": self.limit.grid}
        if self.limit.t0 is not None:
            limit["t0"] = self.limit.t0
        out = {
            "version": FORMAT_VERSION,
            "run": {
                "seed": self.seed,
                "samples": self.samples,
                "n": self.n,
                "records": self.records,
                "threads": self.threads,
                "out": self.out,
            },
            "lattice": lattice_to_dict(self.lattice),
            "schedule": schedule,
            "limit": limit,
        }
        if self.wall is not None:
            out["wall"] = {"components": [list(c) for c in self.wall.components]}
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        version = doc.get("version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise ConfigError(f"version: unsupported config version {version}")
        known = {"version", "run", "lattice", "wall", "schedule", "limit"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
        if "lattice" not in doc:
            raise ConfigError("lattice: section missing")
        try:
            lattice = lattice_from_dict(doc["lattice"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"lattice: {exc}") from exc
        run = dict(doc.get("run", {}))
        sched = dict(doc.get("schedule", {}))
        count_hits = bool(sched.pop("count_wall_hits", False))
        try:
            schedule = HoleSchedule(**sched)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"schedule: {exc}") from exc
        wall = None
        if "wall" in doc:
            try:
                wall = WallConfig(tuple(tuple(c) for c in doc["wall"]["components"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"wall.components: {exc}") from exc
        try:
            limit = LimitSettings(**doc.get("limit", {}))
        except TypeError as exc:
            raise ConfigError(f"limit: {exc}") from exc
        allowed = {"seed", "samples", "n", "records", "threads", "out"}
        extra = set(run) - allowed
        if extra:
            raise ConfigError(f"run.{sorted(extra)[0]}: unknown key")
        return cls(lattice=lattice, schedule=schedule, wall=wall, limit=limit, count_wall_hits=count_hits, **run)

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def config_hash(self) -> str:
        """Digest of everything that determines the outputs (not the thread count or output path)."""
        doc = self.to_dict()
        doc["run"] = {k: v for k, v in doc["run"].items() if k not in ("threads", "out")}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    path = FIXTURE_PATH if path is None else Path(path)
    with open(path, "rb") as fh:
        try:
            doc = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return ExperimentConfig.from_dict(doc)
