"""Estimators and goodness-of-fit tests for the verification harness."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from . import constants as C
from .limit_processes import mean_local_time
from .paths import PathFunction


class TooFewSamples(ValueError):
    pass


def _require(size: int, minimum: int) -> None:
    if size < minimum:
        raise TooFewSamples(f"{size} samples, need at least {minimum}")


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    name: str
    statistic: float
    threshold: float
    p_value: float | None = None
    passed: bool = False
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.statistic = float(self.statistic)
        self.threshold = float(self.threshold)
        self.p_value = None if self.p_value is None else float(self.p_value)
        self.passed = bool(self.passed)

    def to_json(self, **extra) -> str:
        payload = asdict(self)
        payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True, default=float)


@dataclass
class Ensemble:
    """Scalar statistics of i.i.d. samples with where they came from."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _require(self.values.shape[0], C.MIN_ESTIMATOR_SAMPLES)

    @property
    def count(self) -> int:
        return self.values.shape[0]


class ECDF:
    """Right-continuous empirical distribution function."""

    def __init__(self, data):
        self.sorted = np.sort(np.asarray(data, dtype=float))

    def __call__(self, x):
        out = np.searchsorted(self.sorted, x, side="right") / self.sorted.size
        return float(out) if np.ndim(out) == 0 else out

    def left(self, x):
        out = np.searchsorted(self.sorted, x, side="left") / self.sorted.size
        return float(out) if np.ndim(out) == 0 else out


def ecdf(data) -> ECDF:
    return ECDF(data)


def kolmogorov_sf(x: float) -> float:
    """P(sup |Brownian bridge| > x) from the Kolmogorov series."""
    if x <= 0:
        return 1.0
    if x < 1.0:
        # Jacobi-transformed series converges fast for small x
        terms = np.exp(-((2 * np.arange(1, 20) - 1) ** 2) * math.pi**2 / (8 * x * x))
        return float(1.0 - math.sqrt(2 * math.pi) / x * terms.sum())
    k = np.arange(1, 101)
    return float(min(1.0, max(0.0, 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * x * x)))))


def ks_distance(data, cdf: Callable, cdf_left: Callable | None = None) -> float:
    """sup |F_hat - F|, exact for data with ties and for F with atoms (pass its left limit)."""
    e = ecdf(data)
    points = np.unique(e.sorted)
    cdf_left = cdf if cdf_left is None else cdf_left
    upper = np.abs(e(points) - np.asarray(cdf(points)))
    lower = np.abs(e.left(points) - np.asarray(cdf_left(points)))
    return float(max(upper.max(), lower.max()))


def ks_one_sample(data, cdf: Callable, threshold: float = math.inf, name: str = "ks_one_sample", cdf_left=None) -> TestReport:
    start = time.perf_counter()
    data = np.asarray(data, dtype=float)
    _require(data.size, C.MIN_KS_SAMPLES)
    d = ks_distance(data, cdf, cdf_left)
    p = kolmogorov_sf(math.sqrt(data.size) * d)
    return TestReport(name, d, threshold, p, d < threshold, time.perf_counter() - start, {"samples": int(data.size)})


def ks_two_sample(data1, data2, threshold: float = math.inf, name: str = "ks_two_sample") -> TestReport:
    start = time.perf_counter()
    a = np.sort(np.asarray(data1, dtype=float))
    b = np.sort(np.asarray(data2, dtype=float))
    _require(min(a.size, b.size), C.MIN_KS_SAMPLES)
    pooled = np.unique(np.concatenate([a, b]))
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.abs(fa - fb).max())
    effective = a.size * b.size / (a.size + b.size)
    p = kolmogorov_sf(math.sqrt(effective) * d)
    return TestReport(name, d, threshold, p, d < threshold, time.perf_counter() - start, {"samples": [int(a.size), int(b.size)]})


def estimate_sigma(final_positions, n: int) -> float:
    """Sample standard deviation of S_n / sqrt(n)."""
    x = np.asarray(final_positions, dtype=float)
    _require(x.size, C.MIN_ESTIMATOR_SAMPLES)
    return float(np.std(x / math.sqrt(n), ddof=1))


def estimate_c0(final_visits, n: int, sigma: float) -> float:
    """Ratio of mean L_n / sqrt(n) to the mean local time of sigma-BM."""
    x = np.asarray(final_visits, dtype=float)
    _require(x.size, C.MIN_ESTIMATOR_SAMPLES)
    return float(np.mean(x / math.sqrt(n)) / mean_local_time(sigma))


def excursion_signs(values: np.ndarray) -> np.ndarray:
    """Sign of each grid value, zeros replaced by the sign of the nearest earlier nonzero value.

    Zeros before the first nonzero value take the first nonzero sign.
    Works row-wise on 2-d arrays.
    """
    values = np.atleast_2d(values)
    sign = np.sign(values).astype(np.int8)
    nz = sign != 0
    idx = np.where(nz, np.arange(sign.shape[1]), 0)
    np.maximum.accumulate(idx, axis=1, out=idx)
    filled = np.take_along_axis(sign, idx, axis=1)
    first = np.argmax(nz, axis=1)
    first_sign = sign[np.arange(sign.shape[0]), first]
    filled = np.where(filled == 0, first_sign[:, None], filled)
    return filled


def sign_changes(values: np.ndarray, start: int = 0) -> np.ndarray:
    """Number of side changes of each row over grid indices ``start..end``."""
    s = excursion_signs(np.atleast_2d(values)[:, start:])
    return np.count_nonzero(s[:, 1:] != s[:, :-1], axis=1)


def sign_at(values: np.ndarray, index: int) -> np.ndarray:
    """Excursion sign of each row at a grid index."""
    return excursion_signs(values)[:, index]


def sign_change_stat(path: PathFunction, s: float, t: float) -> int:
    """sign(path(s) * path(t)); a zero value takes the sign of its excursion."""
    if not 0 < s < t <= 1:
        raise ValueError("need 0 < s < t <= 1")
    vs, vt = path(s), path(t)
    if vs == 0 or vt == 0:
        signs = excursion_signs(path.values)[0]
        grid = path.grid
        if vs == 0:
            vs = signs[min(np.searchsorted(grid, s), grid.size - 1)]
        if vt == 0:
            vt = signs[min(np.searchsorted(grid, t), grid.size - 1)]
    return int(np.sign(vs * vt))


def llt_check(final_positions, n: int, b: float, sigma: float, lattice_walk: bool = False, name: str = "llt") -> TestReport:
    """Local limit check: sqrt(n) P(S_n lands at b sqrt(n)) against phi(b / sigma) / sigma.

    Billiard: the unit cell containing b sqrt(n).  Walk: the site of the
    right parity nearest to b sqrt(n), with the factor 1/2 for the walk's
    period 2.  Passes within 4 standard errors of the target probability.
    """
    start = time.perf_counter()
    x = np.asarray(final_positions, dtype=float)
    _require(x.size, C.MIN_KS_SAMPLES)
    root = math.sqrt(n)
    target = sps.norm.pdf(b / sigma) / sigma
    if lattice_walk:
        parity = int(round(x[0])) % 2
        site = math.floor(b * root)
        if site % 2 != parity:
            site += 1 if (b * root - site) >= 0.5 else -1
        hits = np.mean(np.round(x) == site)
        factor = 0.5
    else:
        hits = np.mean(np.floor(x) == math.floor(b * root))
        factor = 1.0
    estimate = factor * root * hits
    p = min(1.0, target / (factor * root))
    se = factor * root * math.sqrt(p * (1 - p) / x.size)
    dev = abs(estimate - target)
    return TestReport(
        name, dev, 4 * se, None, dev <= 4 * se, time.perf_counter() - start,
        {"estimate": estimate, "target": float(target), "standard_error": se},
    )


def spearman(x, y) -> float:
    return float(sps.spearmanr(x, y).statistic)
