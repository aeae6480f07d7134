import math

import numpy as np
import pytest

from geometry import SE2State
from gridmaps import query_traversability
from tests.conftest import make_map, uniform_map
from validity import BoxResult, CheckerConfig, RobotFootprint, StateValidityChecker


def test_high_traversability_skips_tsdf():
    checker = StateValidityChecker(uniform_map(tsdf=-1.0, traversability=0.9))
    assert checker.check_state(SE2State(2.0, 2.0, 0.0))
    assert checker.stats.tsdf_queries == 0
    assert checker.stats.traversability_queries == 1
    assert checker.stats.states_accepted_by_traversability == 1


def test_low_traversability_is_invalid_without_tsdf():
    checker = StateValidityChecker(uniform_map(tsdf=1.0, traversability=0.1))
    assert not checker.check_state(SE2State(2.0, 2.0, 0.0))
    assert checker.stats.tsdf_queries == 0
    assert checker.stats.states_rejected_by_traversability == 1


def test_uncertain_band_uses_volumetric_check():
    free = StateValidityChecker(uniform_map(tsdf=1.0, traversability=0.5))
    assert free.check_state(SE2State(2.0, 2.0, 0.0))
    assert free.stats.states_sent_to_volumetric == 1
    assert free.stats.tsdf_queries == 1

    blocked = StateValidityChecker(uniform_map(tsdf=0.1, traversability=0.5))
    assert not blocked.check_state(SE2State(2.0, 2.0, 0.0))


def test_unknown_traversability_is_invalid():
    checker = StateValidityChecker(uniform_map(tsdf=1.0, traversability=-1.0))
    assert not checker.check_state(SE2State(2.0, 2.0, 0.0))
    assert not checker.check_state(SE2State(50.0, 2.0, 0.0))


def test_thresholds_are_strict():
    checker = StateValidityChecker(uniform_map(tsdf=-1.0, traversability=0.8),
                                   config=CheckerConfig(t_low=0.3, t_high=0.8))
    # ровно t_high - еще полоса неопределенности
    assert not checker.check_state(SE2State(2.0, 2.0, 0.0))
    assert checker.stats.states_sent_to_volumetric == 1


@pytest.mark.parametrize("tsdf, expected, queries", [
    (0.6, BoxResult.FREE, 1),
    (0.25, BoxResult.COLLISION, 1),
    (0.4, BoxResult.FREE, 3),
])
def test_box_collision_on_uniform_tsdf(tsdf, expected, queries):
    checker = StateValidityChecker(uniform_map(tsdf=tsdf, traversability=0.5))
    # прямоугольник 0.8x0.6: r_in = 0.3, r_out = 0.5
    assert checker.check_box_collision((2.0, 2.0), 0.4, 0.3, 0.0) is expected
    assert checker.stats.tsdf_queries == queries


def test_box_collision_depth_zero_uses_circumscribed_circle():
    checker = StateValidityChecker(uniform_map(tsdf=0.4, traversability=0.5),
                                   config=CheckerConfig(max_depth=0))
    assert checker.check_box_collision((2.0, 2.0), 0.4, 0.3, 0.0) is BoxResult.COLLISION


def test_box_outside_map_collides():
    checker = StateValidityChecker(uniform_map(tsdf=1.0, traversability=0.5))
    assert checker.check_box_collision((-3.0, 2.0), 0.4, 0.3, 0.0) is BoxResult.COLLISION


def test_footprint_next_to_disc(disc_map):
    checker = StateValidityChecker(disc_map, config=CheckerConfig(t_low=0.3, t_high=1.0))
    assert checker.check_state(SE2State(2.5, 0.0, 0.0))
    assert not checker.check_state(SE2State(1.1, 0.0, 0.0))


def test_motion_crossing_disc_is_invalid(disc_map):
    checker = StateValidityChecker(disc_map, config=CheckerConfig(t_low=0.3, t_high=1.0))
    assert not checker.check_motion(SE2State(-3.0, 0.0, 0.0), SE2State(3.0, 0.0, 0.0))
    assert checker.check_motion(SE2State(-3.0, 3.0, 0.0), SE2State(3.0, 3.0, 0.0))


def test_free_motion_needs_no_tsdf(free_checker):
    assert free_checker.check_motion(SE2State(0.0, 0.0, 0.0), SE2State(5.0, 0.0, 1.0))
    assert free_checker.stats.tsdf_queries == 0
    assert free_checker.stats.motions_checked == 1


def test_motion_discretization(free_checker):
    assert free_checker.motion_steps(SE2State(0, 0, 0), SE2State(1.0, 0, 0)) == 10
    assert free_checker.motion_steps(SE2State(0, 0, 0), SE2State(0, 0, math.pi / 2)) == 16
    assert free_checker.motion_steps(SE2State(0, 0, 0), SE2State(0, 0, 0)) == 1


def test_motion_without_endpoint_checks(free_checker):
    assert free_checker.check_motion(SE2State(0, 0, 0), SE2State(0.1, 0, 0), check_endpoints=False)
    assert free_checker.stats.traversability_queries == 0


def test_spawn_has_fresh_counters(free_checker):
    free_checker.check_state(SE2State(1.0, 0.0, 0.0))
    child = free_checker.spawn()
    assert child.stats.traversability_queries == 0
    assert child.map is free_checker.map


def test_footprint_parsing_and_orientation():
    fp = RobotFootprint.parse("0.4x0.6")
    assert (fp.length, fp.width) == (0.6, 0.4)
    assert fp.yaw_offset == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError, match="LxW"):
        RobotFootprint.parse("big")


def test_checker_config_validation():
    with pytest.raises(ValueError, match="thresholds"):
        CheckerConfig(t_low=0.9, t_high=0.5)
    with pytest.raises(ValueError):
        CheckerConfig(motion_step=0.0)


def test_wall_blocks_footprint_in_uncertain_band():
    m = make_map(bounds=(0.0, 6.0, 0.0, 4.0), base_traversability=0.5,
                 obstacles=[{"type": "rect", "center": (3.0, 2.0), "half_extents": (0.1, 2.0)}])
    checker = StateValidityChecker(m, RobotFootprint(0.4, 0.3))
    assert checker.check_state(SE2State(1.0, 2.0, 0.0))
    assert not checker.check_state(SE2State(2.8, 2.0, 0.0))


def noisy_map():
    """Шумная проходимость без неизвестных ячеек и диск-препятствие"""
    return make_map(bounds=(0.0, 10.0, 0.0, 10.0), base_traversability=0.5, noise_amplitude=0.5,
                    obstacles=[{"type": "disc", "center": (5.0, 5.0), "radius": 1.5}])


def random_states(n: int, seed: int, low: float = 0.5, high: float = 9.5):
    rng = np.random.default_rng(seed)
    return [SE2State(x, y, yaw) for x, y, yaw in zip(rng.uniform(low, high, n), rng.uniform(low, high, n),
                                                     rng.uniform(-math.pi, math.pi, n))]


def test_full_band_reduces_to_volumetric_check():
    m = noisy_map()
    checker = StateValidityChecker(m, config=CheckerConfig(t_low=0.0, t_high=1.0))
    volumetric = StateValidityChecker(m)
    for s in random_states(10_000, seed=0):
        assert checker.check_state(s) == (volumetric.check_footprint(s) is BoxResult.FREE)
    assert checker.stats.states_sent_to_volumetric == 10_000


def test_equal_thresholds_reduce_to_traversability_check():
    m = noisy_map()
    checker = StateValidityChecker(m, config=CheckerConfig(t_low=0.55, t_high=0.55))
    for s in random_states(10_000, seed=1):
        assert checker.check_state(s) == (query_traversability(m, (s.x, s.y)) > 0.55)
    # непрерывный шум не попадает ровно в порог
    assert checker.stats.tsdf_queries == 0


def test_tsdf_queries_do_not_grow_as_band_narrows():
    m = noisy_map()
    states = random_states(2_000, seed=2)
    counts = []
    for t_low, t_high in ((0.0, 1.0), (0.2, 0.9), (0.3, 0.8), (0.45, 0.6), (0.5, 0.5)):
        checker = StateValidityChecker(m, config=CheckerConfig(t_low=t_low, t_high=t_high))
        for s in states:
            checker.check_state(s)
        counts.append(checker.stats.tsdf_queries)
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] < counts[0]


def box_distance_to_point(s: SE2State, half_len: float, half_wid: float, px: float, py: float) -> float:
    """Точное расстояние от прямоугольника контура до точки"""
    dx, dy = px - s.x, py - s.y
    lx = math.cos(s.yaw) * dx + math.sin(s.yaw) * dy
    ly = -math.sin(s.yaw) * dx + math.cos(s.yaw) * dy
    return math.hypot(max(abs(lx) - half_len, 0.0), max(abs(ly) - half_wid, 0.0))


def test_free_footprint_keeps_clear_of_disc(disc_map):
    checker = StateValidityChecker(disc_map)
    fp = checker.footprint
    # значение TSDF берется в центре ячейки: погрешность до res * sqrt(2) / 2
    tolerance = disc_map.header.resolution * math.sqrt(2.0) / 2
    free = 0
    for s in random_states(5_000, seed=3, low=-3.0, high=3.0):
        if checker.check_footprint(s) is BoxResult.FREE:
            free += 1
            assert box_distance_to_point(s, fp.half_len, fp.half_wid, 0.0, 0.0) > 1.0 - tolerance - 1e-9
    assert 0 < free < 5_000
