import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from lorentz_holes import constants as C
from lorentz_holes.acceptance import enumerate_chain_plus
from lorentz_holes.experiments import walk_ensemble
from lorentz_holes.limit_processes import gaussian_marginal_cdf
from lorentz_holes.stats import excursion_signs, ks_one_sample
from lorentz_holes.walk_model import (
    SizeExceeded,
    WalkConfig,
    chain_plus_probability,
    iter_walk_chunks,
    le_cam_bound,
    poisson_binomial_pmf,
    poisson_pmf,
    run_walk,
    sample_walk_bridge,
    walk_scaled_path,
    walk_stream_pair,
)
from lorentz_holes.wall_holes import HoleSchedule

N = 10_000
ALWAYS = HoleSchedule("shrinking", "const", alpha=1.0)
NEVER = HoleSchedule("shrinking", "const", alpha=0.0)
HALF = HoleSchedule("shrinking", "const", alpha=0.5)


def _walk(seed, i, config):
    step_rng, cross_rng = walk_stream_pair(seed, i)
    return run_walk(step_rng, config, cross_rng)


def _normal(x):
    return gaussian_marginal_cdf(1.0, 1.0, x)


def test_walk_shape_and_start(rng):
    rec = run_walk(rng, WalkConfig(100, HALF))
    assert rec.n == 100
    assert abs(rec.S[0]) == 1
    assert np.all(np.abs(np.diff(rec.S)) == 1)
    assert np.all(np.diff(rec.L) >= 0)
    assert np.array_equal(np.flatnonzero(np.diff(rec.L)) + 1, np.flatnonzero(rec.S[1:] == 0) + 1)


def test_always_cross_is_simple_walk():
    w = walk_ensemble(1, N, ALWAYS, N, 0.05)
    assert ks_one_sample(w["end"], _normal, 0.02).passed


def test_half_cross_is_simple_walk():
    w = walk_ensemble(1, N, HALF, N, 0.05)
    assert ks_one_sample(w["end"], _normal, 0.02).passed


def test_never_cross_keeps_sign():
    for i in range(200):
        rec = _walk(3, i, WalkConfig(2000, NEVER))
        signs = excursion_signs(rec.S)[0]
        assert np.all(signs == np.sign(rec.S[0]))
        assert rec.crossing_steps.size == 0


def test_modulus_independent_of_schedule():
    # common random numbers: |S| is the same reflected walk whatever eps does
    for i in range(50):
        base = _walk(2, i, WalkConfig(3000, NEVER))
        for schedule in (ALWAYS, HALF, HoleSchedule("shrinking", "inv_sqrt", c=1.0)):
            other = _walk(2, i, WalkConfig(3000, schedule))
            assert np.array_equal(np.abs(other.S), np.abs(base.S))


def test_modulus_law_matches_across_extremes():
    a = walk_ensemble(1, N, NEVER, N, 0.05)["abs_end"]
    b = walk_ensemble(1, N, ALWAYS, N, 0.05)["abs_end"]
    assert np.abs(np.sort(a) - np.sort(b)).max() == 0.0


@pytest.mark.parametrize("mode", ["geometric", "trapdoor"])
def test_conditional_law_at_zero(mode):
    eps = 0.3
    schedule = HoleSchedule("double_array", "const", alpha=eps, crossing_mode=mode)
    config = WalkConfig(N, schedule)
    visits = crosses = 0
    for i in range(2000):
        rec = _walk(9, i, config)
        zeros = np.flatnonzero(rec.S[:-1] == 0)
        visits += zeros.size
        crosses += rec.crossing_steps.size
        # after a crossing the walk continues on the opposite side
        for k in rec.crossing_steps:
            if k < rec.n:
                assert np.sign(rec.S[k + 1]) != np.sign(rec.S[k - 1])
    p = crosses / visits
    se = math.sqrt(eps * (1 - eps) / visits)
    assert visits > 100_000
    assert abs(p - eps) < 3 * se


def test_eps_schedule_per_regime():
    shrink = WalkConfig(100, HoleSchedule("shrinking", "inv_sqrt", c=1.0))
    assert shrink.epsilons()[0] == 1.0 and shrink.epsilons()[-1] == pytest.approx(0.1)
    double = WalkConfig(100, HoleSchedule("double_array", "inv_sqrt", c=1.0))
    assert np.all(double.epsilons() == pytest.approx(0.1))
    with pytest.raises(ValueError):
        WalkConfig(100, HoleSchedule("shrinking", "inv_sqrt", c=2.0))


def test_chunks_match_single_runs():
    config = WalkConfig(500, HoleSchedule("shrinking", "inv_sqrt", c=1.0))
    (S, L), = list(iter_walk_chunks(4, config, 30))
    for i in range(30):
        rec = _walk(4, i, config)
        assert np.array_equal(S[i], rec.S)
        assert np.array_equal(L[i], rec.L)


def test_walk_scaled_path_examples():
    from lorentz_holes.lorentz_sim import TrajectoryRecord

    n = 64
    zero = TrajectoryRecord(np.zeros(n + 1), np.zeros(n + 1), [])
    assert np.all(walk_scaled_path(zero, n).values == 0)
    drift = TrajectoryRecord(np.arange(n + 1.0), np.zeros(n + 1), [])
    assert walk_scaled_path(drift, n)(0.25) == pytest.approx(0.25 * math.sqrt(n))
    assert walk_scaled_path(drift, n)(0.5) == drift.S[32] / math.sqrt(n)


def test_bridge_endpoints(rng):
    for start, end in [(0, 0), (3, -5), (10, 10)]:
        path = sample_walk_bridge(rng, 100, start, end)
        assert path[0] == start and path[-1] == end
        assert np.all(np.abs(np.diff(path)) == 1)
    with pytest.raises(ValueError):
        sample_walk_bridge(rng, 100, 0, 1)


# sign chain


def test_chain_examples():
    assert chain_plus_probability([]) == 1.0
    assert chain_plus_probability([0.5]) == 0.5
    assert chain_plus_probability([0.1, 0.2]) == pytest.approx(0.74, abs=1e-15)
    assert enumerate_chain_plus([0.1, 0.2]) == pytest.approx(0.74, abs=1e-15)
    with pytest.raises(ValueError):
        chain_plus_probability([1.5])


@given(st.lists(st.floats(0, 1), max_size=10))
def test_chain_formula_equals_enumeration(p):
    assert chain_plus_probability(p) == pytest.approx(enumerate_chain_plus(p), abs=1e-12)


def test_chain_formula_matches_matrix_chain_simulation():
    rng = np.random.default_rng(8)
    runs = 1_000_000
    for _ in range(5):
        m = int(rng.integers(1, 21))
        p = rng.random(m)
        state = np.zeros(runs, dtype=np.int8)
        for pk in p:
            # transition matrix [[1-p, p], [p, 1-p]] applied to each run
            state ^= (rng.random(runs) < pk).astype(np.int8)
        estimate = np.mean(state == 0)
        target = chain_plus_probability(p)
        se = math.sqrt(target * (1 - target) / runs)
        assert abs(estimate - target) < 3 * max(se, 1e-9)


# Le Cam


def test_le_cam_examples():
    assert le_cam_bound([0.0] * 5) == (0.0, 0.0)
    tv, bound = le_cam_bound([0.5])
    # exact: |0.5 - e^-.5| + |0.5 - .5 e^-.5| + P(Poisson(.5) >= 2)
    e = math.exp(-0.5)
    exact = abs(0.5 - e) + abs(0.5 - 0.5 * e) + (1 - e - 0.5 * e)
    assert tv == pytest.approx(exact, abs=1e-14)
    assert tv == pytest.approx(0.3934, abs=1e-4)
    assert bound == 0.5


def test_le_cam_size_guard():
    with pytest.raises(SizeExceeded):
        le_cam_bound(np.full(C.LE_CAM_MAX_SIZE + 1, 1e-3))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=60))
def test_le_cam_inequality(p):
    tv, bound = le_cam_bound(p)
    assert tv <= bound + 1e-12


def test_le_cam_small_probabilities(rng):
    for _ in range(100):
        p = rng.uniform(0, 0.05, 100)
        tv, bound = le_cam_bound(p)
        assert tv <= bound


def test_poisson_binomial_matches_scipy_binomial():
    pmf = poisson_binomial_pmf(np.full(30, 0.3))
    np.testing.assert_allclose(pmf, sps.binom.pmf(np.arange(31), 30, 0.3), atol=1e-14)
    assert pmf.sum() == pytest.approx(1.0)


def test_poisson_pmf_log_space():
    k = np.arange(0, 2000)
    np.testing.assert_allclose(poisson_pmf(k, 1000.0), sps.poisson.pmf(k, 1000.0), rtol=1e-9, atol=1e-300)
    assert np.isfinite(poisson_pmf(np.array([800.0]), 800.0)).all()
    assert poisson_pmf(np.array([0, 1]), 0.0).tolist() == [1.0, 0.0]
