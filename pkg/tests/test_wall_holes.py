import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorentz_holes.stats import ks_one_sample
from lorentz_holes.wall_holes import (
    CrossingMode,
    HoleInterval,
    HoleSchedule,
    HoleTooLarge,
    Regime,
    ScheduleError,
    WallConfig,
    WallError,
    _hole_at,
    crossing_probability,
    decide_crossing,
    decide_crossings,
    hole_contains,
    sample_hole,
    wall_from_lattice,
)

WALL = WallConfig(((0.2, 0.8),))
TWO = WallConfig(((0.1, 0.3), (0.5, 0.9)))


def test_fixture_wall(fixture_lattice):
    wall = wall_from_lattice(fixture_lattice)
    assert len(wall.components) == 1
    assert wall.components[0] == pytest.approx((0.2, 0.8))
    assert wall.c1 == pytest.approx(0.6)


def test_wall_config_rejects_bad_components():
    with pytest.raises(WallError):
        WallConfig(())
    with pytest.raises(WallError):
        WallConfig(((0.5, 0.4),))
    with pytest.raises(WallError):
        WallConfig(((0.1, 0.5), (0.4, 0.9)))


def test_hole_without_wrap():
    hole = _hole_at(WALL, 0, 0.3, 0.1)
    assert len(hole.pieces) == 1
    assert hole.pieces[0] == pytest.approx((0.3, 0.4))


def test_hole_wraps_within_component():
    hole = _hole_at(WALL, 0, 0.75, 0.1)
    assert len(hole.pieces) == 2
    assert hole.pieces[0] == pytest.approx((0.75, 0.8))
    assert hole.pieces[1] == pytest.approx((0.2, 0.25))


def test_hole_contains_examples():
    hole = HoleInterval(((0.3, 0.4),))
    assert hole_contains(hole, 0.35)
    assert not hole_contains(hole, 0.4)
    wrapped = HoleInterval(((0.75, 0.8), (0.2, 0.25)))
    assert hole_contains(wrapped, 0.22)


def test_crossing_probability_examples():
    assert crossing_probability(WALL, 0.0) == 0.0
    half = WallConfig(((0.25, 0.75),))
    assert crossing_probability(half, 0.05) == pytest.approx(0.1)
    with pytest.raises(HoleTooLarge):
        crossing_probability(WALL, 0.61)


def test_sample_hole_rejects_large_hole(rng):
    with pytest.raises(HoleTooLarge):
        sample_hole(rng, WALL, 0.61)
    with pytest.raises(HoleTooLarge):
        sample_hole(rng, TWO, 0.25)


@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 0.199))
def test_hole_subset_of_single_component(seed, alpha):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        hole = sample_hole(rng, TWO, alpha)
        assert hole.total_length == pytest.approx(alpha, abs=1e-12)
        comps = {TWO.component_of(a) for piece in hole.pieces for a in piece}
        assert len(comps) == 1 and None not in comps
        for a, b in hole.pieces:
            assert a < b


def test_hole_pieces_in_wall_many_draws():
    rng = np.random.default_rng(5)
    for _ in range(100_000):
        hole = sample_hole(rng, TWO, 0.15)
        comps = {TWO.component_of(a) for piece in hole.pieces for a in piece}
        assert len(comps) == 1 and None not in comps


def test_xi_uniform_on_wall():
    rng = np.random.default_rng(6)
    starts = np.array([sample_hole(rng, TWO, 0.05).pieces[0][0] for _ in range(100_000)])

    def cdf(y):
        y = np.asarray(y, dtype=float)
        first = np.clip(y - 0.1, 0, 0.2)
        second = np.clip(y - 0.5, 0, 0.4)
        return (first + second) / TWO.c1

    assert ks_one_sample(starts, cdf, 0.02).passed


@pytest.mark.parametrize("y", [0.2001, 0.35, 0.79])
def test_coverage_probability(y):
    alpha = 0.1
    trials = 1_000_000
    rng = np.random.default_rng(int(y * 1e4))
    hits = decide_crossings(rng, WALL, np.full(trials, alpha), np.full(trials, y), CrossingMode.GEOMETRIC)
    p = alpha / WALL.c1
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(hits.mean() - p) < 3 * se


def test_scalar_and_vector_crossing_agree():
    # same stream, same draws: decide_crossing and decide_crossings make identical decisions
    schedule = HoleSchedule("double_array", "const", alpha=0.1)
    heights = np.random.default_rng(1).uniform(0.2, 0.8, 2000)
    a = np.random.default_rng(2)
    scalar = [decide_crossing(a, schedule, WALL, 5, h) for h in heights]
    vector = decide_crossings(np.random.default_rng(2), WALL, np.full(2000, 0.1), heights, CrossingMode.GEOMETRIC)
    assert np.array_equal(scalar, vector)


def test_geometric_and_trapdoor_equivalent():
    trials = 1_000_000
    y = 0.5
    alpha = 0.05
    g = decide_crossings(np.random.default_rng(10), WALL, np.full(trials, alpha), np.full(trials, y), CrossingMode.GEOMETRIC)
    t = decide_crossings(np.random.default_rng(11), WALL, np.full(trials, alpha), np.full(trials, y), CrossingMode.TRAPDOOR)
    p = alpha / WALL.c1
    se = math.sqrt(2 * p * (1 - p) / trials)
    assert abs(g.mean() - t.mean()) < 4 * se


def test_empirical_crossing_rate_inv_sqrt():
    wall = WallConfig(((0.25, 0.75),))
    schedule = HoleSchedule("shrinking", "inv_sqrt", c=1.0)
    alpha = schedule.hole_size(10_000, 10_000)
    assert alpha == pytest.approx(0.01)
    trials = 1_000_000
    rng = np.random.default_rng(3)
    heights = rng.uniform(0.25, 0.75, trials)
    hits = decide_crossings(rng, wall, np.full(trials, alpha), heights, CrossingMode.GEOMETRIC)
    se = math.sqrt(0.02 * 0.98 / trials)
    assert abs(hits.mean() - 0.02) < 3 * se


def test_decide_crossing_edge_cases(rng):
    closed = HoleSchedule("shrinking", "const", alpha=0.0)
    assert not any(decide_crossing(rng, closed, WALL, k, 0.5) for k in range(1, 200))
    open_wall = HoleSchedule("no_wall")
    assert all(decide_crossing(rng, open_wall, WALL, k, 0.5) for k in range(1, 50))
    with pytest.raises(ScheduleError):
        decide_crossing(rng, closed, WALL, 0, 0.5)


def test_schedule_families():
    assert HoleSchedule("shrinking", "inv_sqrt", c=0.5).alpha_at(4) == pytest.approx(0.25)
    assert HoleSchedule("shrinking", "const", alpha=0.3).alpha_at(100) == 0.3
    assert HoleSchedule("shrinking", "power", c=0.5, beta=0.25).alpha_at(16) == pytest.approx(0.25)
    sizes = HoleSchedule("double_array", "inv_sqrt", c=0.5).sizes(100)
    assert np.all(sizes == 0.05)
    assert np.isnan(HoleSchedule("no_wall").sizes(5)).all()
    with pytest.raises(ScheduleError):
        HoleSchedule("shrinking", "cubic")
    with pytest.raises(ScheduleError):
        HoleSchedule("shrinking", "power", beta=0.0)
    with pytest.raises(ValueError):
        HoleSchedule("sideways")


def test_schedule_validation_is_hard_error():
    with pytest.raises(HoleTooLarge):
        HoleSchedule("shrinking", "inv_sqrt", c=1.0).validate(WALL, 100)
    HoleSchedule("shrinking", "inv_sqrt", c=0.5).validate(WALL, 100)
    # the double array only uses alpha_n, so a large c can still fit
    HoleSchedule("double_array", "inv_sqrt", c=1.0).validate(WALL, 100)
    assert Regime("no_wall") is Regime.NO_WALL


def test_uniform_point_covers_components():
    assert TWO.uniform_point(0.0) == (0, pytest.approx(0.1))
    comp, y = TWO.uniform_point(0.5)
    assert comp == 1 and y == pytest.approx(0.5 + 0.1)
