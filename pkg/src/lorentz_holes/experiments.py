"""Ensemble runs reduced to the scalar statistics the acceptance checks compare.

Results are cached per argument tuple so that several checks sharing an
ensemble simulate it once per process.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from . import rng as streams
from .billiard_core import ScattererLattice
from .limit_processes import sample_bm_with_local_time, sample_qrbm, sample_QRBM
from .lorentz_sim import LorentzConfig, iter_ensemble
from .stats import excursion_signs
from .walk_model import WalkConfig, iter_walk_chunks, sample_walk_bridge
from .wall_holes import HoleSchedule

CHUNK = 500


def path_statistics(values: np.ndarray, n: int, t0: float) -> dict[str, np.ndarray]:
    """Per-row statistics of scaled grid paths with ``n`` steps.

    ``end``/``half``: W(1) and W(1/2); ``abs_end``: |W(1)|; ``changes``:
    side changes on [t0, 1]; ``sign_product``: sign W(t0) * sign W(1);
    ``half_end``: sign W(1/2) * sign W(1).
    """
    values = np.atleast_2d(values).astype(float)
    i0 = int(math.ceil(t0 * n))
    signs = excursion_signs(values)
    tail = signs[:, i0:]
    return {
        "end": values[:, n],
        "half": values[:, n // 2],
        "abs_end": np.abs(values[:, n]),
        "changes": np.count_nonzero(tail[:, 1:] != tail[:, :-1], axis=1).astype(float),
        "sign_product": (signs[:, i0] * signs[:, n]).astype(float),
        "half_end": (signs[:, n // 2] * signs[:, n]).astype(float),
    }


def _concat(parts: list[dict]) -> dict[str, np.ndarray]:
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


@functools.lru_cache(maxsize=16)
def walk_ensemble(seed: int, n: int, schedule: HoleSchedule, samples: int, t0: float = 0.05) -> dict[str, np.ndarray]:
    """Walk statistics with positions scaled by sqrt(n); ``visits`` is L_n / sqrt(n)."""
    config = WalkConfig(n, schedule)
    parts = []
    for S, L in iter_walk_chunks(seed, config, samples, chunk=CHUNK):
        part = path_statistics(S / math.sqrt(n), n, t0)
        part["visits"] = L[:, n] / math.sqrt(n)
        parts.append(part)
    return _concat(parts)


def _limit_path(kind, rng, N, c, sigma, truncation):
    if kind == "qrbm":
        return sample_qrbm(rng, N, c, sigma)
    if kind == "QRBM":
        return sample_QRBM(rng, N, c, sigma, truncation)
    raise ValueError(f"unknown limit process {kind!r}")


@functools.lru_cache(maxsize=16)
def limit_ensemble(
    seed: int, kind: str, N: int, c: float, sigma: float, samples: int, t0: float = 0.05, truncation: float | None = None
) -> dict[str, np.ndarray]:
    """Statistics of qRBM (``kind="qrbm"``) or QRBM (``kind="QRBM"``) samples on an N-step grid."""
    parts = []
    for lo in range(0, samples, CHUNK):
        rows = [
            _limit_path(kind, streams.substream(seed, i, streams.LIMIT), N, c, sigma, truncation).values
            for i in range(lo, min(lo + CHUNK, samples))
        ]
        parts.append(path_statistics(np.vstack(rows), N, t0))
    return _concat(parts)


@functools.lru_cache(maxsize=4)
def brownian_local_time_ensemble(seed: int, N: int, sigma: float, samples: int) -> dict[str, np.ndarray]:
    """Terminal values of (B_1, L_1) for sigma-BM from the lattice sampler."""
    end = np.empty(samples)
    local = np.empty(samples)
    for i in range(samples):
        bm = sample_bm_with_local_time(streams.substream(seed, i, streams.LIMIT), N, sigma)
        end[i] = bm.path_values[-1]
        local[i] = bm.local_time_values[-1]
    return {"end": end, "local_time": local}


@functools.lru_cache(maxsize=4)
def bridge_visits(seed: int, n: int, start: int, end: int, samples: int) -> np.ndarray:
    """Zero-visits of lattice walk bridges, scaled by 1/sqrt(n)."""
    out = np.empty(samples)
    for i in range(samples):
        path = sample_walk_bridge(streams.substream(seed, i, streams.WALK_STEPS), n, start, end)
        out[i] = np.count_nonzero(path[1:] == 0) / math.sqrt(n)
    return out


@functools.lru_cache(maxsize=4)
def billiard_ensemble(
    seed: int,
    lattice: ScattererLattice,
    schedules: tuple[tuple[str, HoleSchedule], ...],
    n: int,
    samples: int,
    horizon_factor: int = 4,
) -> dict[str, dict[str, np.ndarray]]:
    """Billiard trajectories of ``horizon_factor * n`` steps under several schedules.

    For every schedule returns S at n/2, n and the full horizon, L at n, and
    whether |S| matched the wall-free |S| at every step (``mirror_exact``,
    only meaningful next to a ``no_wall`` schedule named ``per``).
    """
    config = LorentzConfig(lattice)
    config.validate()
    horizon = horizon_factor * n
    names = [name for name, _ in schedules]
    out = {name: {k: np.empty(samples) for k in ("half", "end", "far", "visits", "mirror_exact")} for name in names}
    for i, records in iter_ensemble(seed, config, dict(schedules), horizon, samples):
        reference = records.get("per")
        for name, record in records.items():
            row = out[name]
            row["half"][i] = record.S[n // 2]
            row["end"][i] = record.S[n]
            row["far"][i] = record.S[horizon]
            row["visits"][i] = record.L[n]
            row["mirror_exact"][i] = float(reference is not None and np.array_equal(np.abs(record.S), np.abs(reference.S)))
    return out
