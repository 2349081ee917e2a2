"""The eight acceptance criteria as runnable checks with pinned sizes and thresholds."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .billiard_core import ScattererLattice, default_lattice
from .experiments import (
    billiard_ensemble,
    bridge_visits,
    brownian_local_time_ensemble,
    limit_ensemble,
    walk_ensemble,
)
from .limit_processes import bridge_local_time_cdf, bridge_local_time_tail, gaussian_marginal_cdf
from .stats import TestReport, estimate_c0, estimate_sigma, ks_one_sample, ks_two_sample, llt_check, spearman
from .walk_model import chain_plus_probability, le_cam_bound
from .wall_holes import HoleSchedule

MARGINALS = ("abs_end", "changes", "sign_product")


@dataclass(frozen=True)
class AcceptanceSettings:
    seed: int = 1
    walk_n: int = 10_000
    walk_samples: int = 10_000
    grid: int = 10_000
    limit_samples: int = 10_000
    t0: float = 0.05
    bridge_samples: int = 5_000
    billiard_n: int = 10_000
    billiard_samples: int = 2_000
    oracle_samples: int = 10_000
    formula_inputs: int = 10_000


@dataclass
class CriterionResult:
    number: int
    title: str
    reports: list[TestReport] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.reports) and all(r.passed for r in self.reports)

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failing = [r.name for r in self.reports if not r.passed]
        tail = f" failing: {', '.join(failing)}" if failing else ""
        return f"criterion {self.number} {status} {self.title} ({len(self.reports)} checks, {self.runtime:.1f}s){tail}"


def _check(name: str, statistic: float, threshold: float, passed: bool, **details) -> TestReport:
    return TestReport(name, float(statistic), float(threshold), None, bool(passed), 0.0, details)


def _walk(settings: AcceptanceSettings, regime: str, family: str, mode: str = "geometric", **params):
    schedule = HoleSchedule(regime, family, crossing_mode=mode, **params)
    return walk_ensemble(settings.seed, settings.walk_n, schedule, settings.walk_samples, settings.t0)


def _limit(settings: AcceptanceSettings, kind: str, truncation: float | None = None, c: float = 1.0):
    return limit_ensemble(settings.seed, kind, settings.grid, c, 1.0, settings.limit_samples, settings.t0, truncation)


def enumerate_chain_plus(p) -> float:
    """P(sign chain started at + ends at +) by summing over all flip patterns."""
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=len(p)):
        if sum(pattern) % 2 == 0:
            total += math.prod(pj if f else 1.0 - pj for pj, f in zip(p, pattern))
    return total


def criterion_1(settings: AcceptanceSettings) -> list[TestReport]:
    rng = np.random.default_rng(settings.seed)
    worst = -math.inf
    for _ in range(settings.formula_inputs):
        m = int(rng.integers(1, 60))
        p = rng.random(m) * rng.random()
        tv, bound = le_cam_bound(p)
        worst = max(worst, tv - bound)
    reports = [_check("le_cam_tv_below_bound", worst, 0.0, worst <= 0.0, inputs=settings.formula_inputs)]

    err = 0.0
    for m in range(11):
        for _ in range(20):
            p = rng.random(m)
            err = max(err, abs(chain_plus_probability(p) - enumerate_chain_plus(p)))
    reports.append(_check("chain_formula_vs_enumeration", err, 1e-12, err <= 1e-12))

    errs = []
    for _ in range(200):
        a, b = rng.uniform(0.05, 3.0, 2)
        sigma = rng.uniform(0.3, 3.0)
        dt = rng.uniform(0.1, 2.0)
        y = rng.uniform(0.0, 3.0)
        errs.append(abs(bridge_local_time_tail(a, -b, 0.0, dt, sigma, 0.0) - 1.0))
        errs.append(abs(bridge_local_time_tail(0.0, 0.0, 0.0, 1.0, 1.0, y) - math.exp(-y * y / 2)))
        errs.append(abs(bridge_local_time_tail(a, b, 0.0, dt, sigma, 0.0) - math.exp(-2 * a * b / (sigma**2 * dt))))
    err = max(errs)
    reports.append(_check("bridge_tail_identities", err, 1e-12, err <= 1e-12))
    return reports


def criterion_2(settings: AcceptanceSettings) -> list[TestReport]:
    w = _walk(settings, "shrinking", "power", c=1.0, beta=0.25)
    p = float(np.mean(w["half_end"] < 0))
    return [_check("walk_case4_sign_change_half_to_one", abs(p - 0.25), 0.02, abs(p - 0.25) <= 0.02, estimate=p, target=0.25)]


def criterion_3(settings: AcceptanceSettings) -> list[TestReport]:
    reports = []
    for regime in ("shrinking", "double_array"):
        # statistics taken from t = 1/2 so that "changes" covers [1/2, 1]
        w = walk_ensemble(settings.seed, settings.walk_n, HoleSchedule(regime, "power", c=1.0, beta=1.0), settings.walk_samples, 0.5)
        p = float(np.mean(w["changes"] > 0))
        reports.append(_check(f"walk_case3_{regime}_sign_change", p, 0.02, p <= 0.02, estimate=p))
        ks = ks_one_sample(w["end"], lambda x: gaussian_marginal_cdf(1.0, 1.0, x), 0.025, f"walk_case3_{regime}_gaussian_marginal")
        reports.append(ks)
    return reports


def _case12_distances(settings: AcceptanceSettings, mode: str, truncation: float | None = None) -> list[TestReport]:
    reports = []
    for regime, kind in (("shrinking", "QRBM"), ("double_array", "qrbm")):
        w = _walk(settings, regime, "inv_sqrt", mode=mode, c=1.0)
        lim = _limit(settings, kind, truncation if kind == "QRBM" else None)
        for key in MARGINALS:
            reports.append(ks_two_sample(w[key], lim[key], 0.03, f"walk_{regime}_vs_{kind}_{key}"))
    return reports


def criterion_4(settings: AcceptanceSettings) -> list[TestReport]:
    return _case12_distances(settings, "geometric")


def criterion_5(settings: AcceptanceSettings) -> list[TestReport]:
    reports = []
    for kind in ("qrbm", "QRBM"):
        lim = _limit(settings, kind)
        reports.append(ks_one_sample(lim["end"], lambda x: gaussian_marginal_cdf(1.0, 1.0, x), 0.02, f"{kind}_gaussian_marginal"))
    lim = _limit(settings, "QRBM")
    reports.append(ks_two_sample(lim["half"] / math.sqrt(0.5), lim["end"], 0.03, "QRBM_self_similarity"))
    base = 1.0 / math.sqrt(settings.grid)
    w = _walk(settings, "shrinking", "inv_sqrt", c=1.0)
    full = _limit(settings, "QRBM", base)
    halved = _limit(settings, "QRBM", base / 2)
    for key in MARGINALS:
        d_full = ks_two_sample(w[key], full[key]).statistic
        d_half = ks_two_sample(w[key], halved[key]).statistic
        change = abs(d_full - d_half)
        reports.append(_check(f"QRBM_truncation_sensitivity_{key}", change, 0.01, change < 0.01, ks_t0=d_full, ks_half_t0=d_half))
    return reports


def criterion_6(settings: AcceptanceSettings) -> list[TestReport]:
    n = settings.walk_n
    site = int(round(0.5 * math.sqrt(n)))
    visits = bridge_visits(settings.seed, n, site, site, settings.bridge_samples)
    a = b = site / math.sqrt(n)
    cdf, left = bridge_local_time_cdf(a, b, 0.0, 1.0, 1.0)
    return [ks_one_sample(visits, cdf, 0.05, "walk_bridge_local_time", cdf_left=left)]


BILLIARD_CASE4 = HoleSchedule("shrinking", "power", c=0.55, beta=0.25)


def criterion_7(settings: AcceptanceSettings, lattice: ScattererLattice | None = None) -> list[TestReport]:
    lattice = default_lattice() if lattice is None else lattice
    n = settings.billiard_n
    res = billiard_ensemble(
        settings.seed, lattice, (("per", HoleSchedule("no_wall")), ("case4", BILLIARD_CASE4)), n, settings.billiard_samples
    )
    per, case4 = res["per"], res["case4"]
    reports = []
    exact = float(case4["mirror_exact"].mean())
    reports.append(_check("billiard_mirror_identity", 1.0 - exact, 0.0, exact == 1.0, fraction_exact=exact))

    sigma_n = estimate_sigma(per["end"], n)
    sigma_4n = estimate_sigma(per["far"], 4 * n)
    ratio = sigma_4n / sigma_n
    reports.append(_check("billiard_sigma_ratio", ratio, 1.25, 0.8 <= ratio <= 1.25, sigma_n=sigma_n, sigma_4n=sigma_4n))

    p = float(np.mean(case4["half"] * case4["end"] < 0))
    reports.append(_check("billiard_case4_sign_change", abs(p - 0.25), 0.05, abs(p - 0.25) <= 0.05, estimate=p))

    reports.append(llt_check(per["end"], n, 0.0, sigma_n, name="billiard_llt_b0"))

    rho = spearman(np.abs(per["end"]), per["visits"])
    c0 = estimate_c0(per["visits"], n, sigma_n)
    oracle = brownian_local_time_ensemble(settings.seed, settings.grid, sigma_n, settings.oracle_samples)
    rho_oracle = spearman(np.abs(oracle["end"]), oracle["local_time"])
    reports.append(
        _check("billiard_endpoint_local_time_association", rho, 0.0, rho < 0.0 and rho_oracle < 0.0, oracle_spearman=rho_oracle)
    )
    ks = ks_two_sample(per["visits"] / math.sqrt(n), c0 * oracle["local_time"], 0.05, "billiard_local_time_marginal")
    ks.details.update(c0=c0, sigma=sigma_n)
    reports.append(ks)
    return reports


def criterion_8(settings: AcceptanceSettings) -> list[TestReport]:
    geometric = _case12_distances(settings, "geometric")
    trapdoor = _case12_distances(settings, "trapdoor")
    reports = []
    for g, t in zip(geometric, trapdoor):
        diff = abs(g.statistic - t.statistic)
        reports.append(_check(f"{g.name}_trapdoor_shift", diff, 0.01, diff < 0.01, geometric=g.statistic, trapdoor=t.statistic))
    return reports


CRITERIA = {
    1: ("exact formulas", criterion_1),
    2: ("walk case 4 Wiener sign statistic", criterion_2),
    3: ("walk case 3 reflected limit", criterion_3),
    4: ("walk cases 1-2 vs QRBM/qRBM samplers", criterion_4),
    5: ("limit sampler marginals", criterion_5),
    6: ("walk bridge local time", criterion_6),
    7: ("billiard fixture", criterion_7),
    8: ("geometric/trapdoor equivalence", criterion_8),
}


def run_criterion(number: int, settings: AcceptanceSettings | None = None, **kwargs) -> CriterionResult:
    settings = AcceptanceSettings() if settings is None else settings
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    reports = fn(settings, **kwargs)
    return CriterionResult(number, title, reports, time.perf_counter() - start)


def run_all(settings: AcceptanceSettings | None = None, numbers=None, lattice: ScattererLattice | None = None) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if numbers is None else numbers
    results = []
    for k in numbers:
        kwargs = {"lattice": lattice} if k == 7 and lattice is not None else {}
        results.append(run_criterion(k, settings, **kwargs))
    return results
