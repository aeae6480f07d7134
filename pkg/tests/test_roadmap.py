import math

import numpy as np
import pytest

from exceptions import EndpointInvalidError, InformedRegionEmpty
from geometry import CostWeights, SE2State, path_cost, segment_costs_to_many
from roadmap import (LazyPRMStar, PlanStatus, QueryConfig, Roadmap, Status, connection_count,
                     informed_region_contains, plan_path, roadmap_for_map, sample)
from tests.conftest import make_map
from validity import RobotFootprint, StateValidityChecker

WALL_BOUNDS = (0.0, 10.0, 0.0, 6.0)


def wall_map(gap: bool):
    if gap:
        obstacles = [{"type": "rect", "center": (5.0, 1.25), "half_extents": (0.1, 1.25)},
                     {"type": "rect", "center": (5.0, 4.75), "half_extents": (0.1, 1.25)}]
    else:
        obstacles = [{"type": "rect", "center": (5.0, 3.0), "half_extents": (0.1, 3.0)}]
    return make_map(bounds=WALL_BOUNDS, base_traversability=0.5, obstacles=obstacles)


def planner_for(m, weights=CostWeights(), footprint=None, **budget):
    cfg = QueryConfig(**budget)
    checker = StateValidityChecker(m, footprint or RobotFootprint())
    return LazyPRMStar(roadmap_for_map(m.bounds, weights, cfg), checker, cfg)


def assert_path_valid(m, path, footprint):
    oracle = StateValidityChecker(m, footprint)
    for state in path:
        assert oracle.check_state(state)
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        assert oracle.check_motion(a, b)


def test_connection_count():
    assert connection_count(1, 1.0) == 1
    assert connection_count(100, 1.0) == math.ceil(math.e * (4.0 / 3.0) * math.log(100))
    assert connection_count(100, 2.0) > connection_count(100, 1.0)


def test_query_config_validation():
    with pytest.raises(ValueError, match="budgets"):
        QueryConfig(max_vertices=10, batch_size=20)
    with pytest.raises(ValueError):
        QueryConfig(samples_per_query=-1)


def test_same_start_and_goal(free_map):
    planner = planner_for(free_map)
    s = SE2State(2.0, 0.0, 0.5)
    result = planner.plan(s, s)
    assert result.solved
    assert result.cost == 0.0
    assert list(result.path) == [s]
    assert result.stats.new_samples == 0


def test_free_space_straight_line(free_map):
    planner = planner_for(free_map, weights=CostWeights(1.0, 0.0), samples_per_query=128, batch_size=64)
    start, goal = SE2State(0.0, 0.0, 0.0), SE2State(5.0, 0.0, 0.0)
    result = planner.plan(start, goal)
    assert result.status is PlanStatus.SOLVED
    assert result.cost <= 5.0 * 1.05
    assert result.path[0] == start and result.path[-1] == goal
    assert result.cost == pytest.approx(path_cost(result.path, CostWeights(1.0, 0.0)))
    assert result.stats.check.tsdf_queries == 0


@pytest.mark.slow
def test_path_through_gap_is_valid():
    m = wall_map(gap=True)
    footprint = RobotFootprint(0.4, 0.3)
    planner = planner_for(m, footprint=footprint, samples_per_query=2000, max_vertices=3000)
    start, goal = SE2State(1.0, 3.0, 0.0), SE2State(9.0, 3.0, 0.0)
    result = planner.plan(start, goal)
    assert result.solved
    assert result.cost >= 8.0
    assert_path_valid(m, result.path, footprint)
    for a, b in zip(result.path.waypoints[:-1], result.path.waypoints[1:]):
        if (a.x - 5.0) * (b.x - 5.0) < 0.0:
            y = a.y + (5.0 - a.x) / (b.x - a.x) * (b.y - a.y)
            assert 2.5 < y < 3.5


def test_closed_wall_is_unreachable():
    m = wall_map(gap=False)
    planner = planner_for(m, footprint=RobotFootprint(0.4, 0.3), samples_per_query=200,
                          max_vertices=500, batch_size=100)
    result = planner.plan(SE2State(1.0, 3.0, 0.0), SE2State(9.0, 3.0, 0.0))
    assert result.status is PlanStatus.UNREACHABLE
    assert result.path is None
    assert math.isinf(result.cost)
    assert result.stats.new_samples == 200


@pytest.mark.slow
def test_low_traversability_strip_forces_detour():
    m = make_map(bounds=WALL_BOUNDS, base_traversability=0.9,
                 traversability_regions=[{"shape": {"type": "rect", "center": (5.0, 2.0),
                                                    "half_extents": (0.3, 2.0)}, "value": 0.1}])
    planner = planner_for(m, weights=CostWeights(1.0, 0.0), samples_per_query=1500, max_vertices=2000)
    result = planner.plan(SE2State(1.0, 1.0, 0.0), SE2State(9.0, 1.0, 0.0))
    assert result.solved
    assert max(w.y for w in result.path) > 3.9
    assert result.cost > 9.5
    assert_path_valid(m, result.path, RobotFootprint())


def test_endpoints_are_reused(free_map):
    planner = planner_for(free_map)
    start, goal = SE2State(0.0, 0.0, 0.0), SE2State(3.0, 1.0, 1.0)
    ids = planner.add_query_endpoints(start, goal)
    assert planner.add_query_endpoints(start, goal) == ids
    assert planner.roadmap.num_vertices == 2
    assert planner.roadmap.status[ids[0]] is Status.VALID


def test_invalid_endpoint_is_reported(disc_map):
    planner = planner_for(disc_map)
    with pytest.raises(EndpointInvalidError) as info:
        planner.plan(SE2State(3.0, 3.0, 0.0), SE2State(0.0, 0.0, 0.0))
    assert info.value.endpoint == "goal"
    assert info.value.exit_code == 2


def test_roadmap_cap_limits_later_queries():
    m = wall_map(gap=True)
    planner = planner_for(m, footprint=RobotFootprint(0.4, 0.3), samples_per_query=256,
                          max_vertices=200, batch_size=64)
    # прямая перекрыта стеной: информированная область не схлопывается
    first = planner.plan(SE2State(2.0, 1.0, 0.0), SE2State(8.0, 1.0, 0.0))
    second = planner.plan(SE2State(2.0, 5.0, 0.0), SE2State(8.0, 5.0, 0.0))
    assert first.stats.new_samples == 198
    assert second.stats.new_samples == 0
    assert planner.roadmap.num_vertices == 202


def test_repeated_query_reuses_roadmap():
    m = wall_map(gap=True)
    start, goal = SE2State(2.0, 1.0, 0.0), SE2State(8.0, 1.0, 0.0)
    first_samples = second_samples = 0
    for seed in range(10):
        planner = planner_for(m, footprint=RobotFootprint(0.4, 0.3), samples_per_query=128,
                              batch_size=64, rng_seed=seed)
        first = planner.plan(start, goal)
        second = planner.plan(start, goal)
        assert first.stats.new_samples == 128
        assert second.cost <= first.cost + 1e-9
        first_samples += first.stats.new_samples
        second_samples += second.stats.new_samples
    assert second_samples < first_samples


def test_same_seed_gives_identical_result():
    m = wall_map(gap=True)
    start, goal = SE2State(2.0, 1.0, 0.0), SE2State(8.0, 1.0, 0.0)
    a, b = (planner_for(m, footprint=RobotFootprint(0.4, 0.3), samples_per_query=128, batch_size=64,
                        rng_seed=3).plan(start, goal) for _ in range(2))
    assert a.status is b.status
    assert a.cost == b.cost
    assert a.path == b.path
    assert a.stats.check == b.stats.check
    assert (a.stats.new_samples, a.stats.edges_validated, a.stats.searches) == \
        (b.stats.new_samples, b.stats.edges_validated, b.stats.searches)


@pytest.mark.slow
def test_cost_does_not_increase_with_vertex_budget():
    m = wall_map(gap=True)
    start, goal = SE2State(2.0, 1.0, 0.0), SE2State(8.0, 1.0, 0.0)
    costs = []
    for cap in (100, 200, 400):
        planner = planner_for(m, footprint=RobotFootprint(0.4, 0.3), samples_per_query=1000,
                              batch_size=50, max_vertices=cap, rng_seed=5)
        costs.append(planner.plan(start, goal).cost)
    assert costs[0] >= costs[1] >= costs[2]
    assert math.isfinite(costs[2])


def test_lazy_search_validates_only_candidate_edges(free_map):
    cfg = QueryConfig(samples_per_query=128, batch_size=64)
    roadmap = roadmap_for_map(free_map.bounds, CostWeights(), cfg)
    rng = np.random.default_rng(8)
    for _ in range(200):
        roadmap.add_vertex(sample(SE2State(0, 0), SE2State(0, 0), None, free_map.bounds, rng), 1.5)
    result = plan_path(SE2State(0.0, 0.0, 0.0), SE2State(5.0, 0.0, 0.0), roadmap, cfg,
                       StateValidityChecker(free_map))
    assert result.solved
    stats = result.stats
    assert 0 < stats.edges_validated <= stats.candidate_path_edges < roadmap.num_edges


def test_frozen_roadmap_draws_no_samples(free_map):
    planner = planner_for(free_map, samples_per_query=64, batch_size=64)
    planner.plan(SE2State(0.0, 0.0, 0.0), SE2State(5.0, 0.0, 0.0))
    planner.roadmap.freeze()
    before = planner.roadmap.num_vertices
    result = planner.plan(SE2State(0.0, 0.0, 0.0), SE2State(5.0, 0.0, 0.0))
    assert result.stats.new_samples == 0
    assert planner.roadmap.num_vertices == before


def test_shared_roadmap_across_queries(free_map):
    cfg = QueryConfig(samples_per_query=64, batch_size=64)
    roadmap = Roadmap(free_map.bounds)
    checker = StateValidityChecker(free_map)
    plan_path(SE2State(0.0, 0.0, 0.0), SE2State(4.0, 0.0, 0.0), roadmap, cfg, checker)
    size = roadmap.num_vertices
    plan_path(SE2State(1.0, 1.0, 0.0), SE2State(6.0, -1.0, 0.0), roadmap, cfg, checker)
    assert roadmap.num_vertices > size


def test_informed_samples_stay_in_region():
    rng = np.random.default_rng(1)
    w = CostWeights(1.0, 0.5)
    s1, s2 = SE2State(0.0, 0.0, 0.0), SE2State(4.0, 0.0, 1.0)
    best = 6.0
    for _ in range(300):
        s = sample(s1, s2, best, (-10.0, 10.0, -10.0, 10.0), rng, w)
        assert informed_region_contains(s1, s2, best, s.x, s.y, w)
        assert -math.pi <= s.yaw < math.pi


def test_informed_samples_respect_map_bounds():
    rng = np.random.default_rng(2)
    s1, s2 = SE2State(0.0, 0.0, 0.0), SE2State(4.0, 0.0, 0.0)
    for _ in range(100):
        s = sample(s1, s2, 8.0, (-0.5, 5.0, -0.5, 0.5), rng)
        assert -0.5 <= s.x <= 5.0 and -0.5 <= s.y <= 0.5


def test_region_contains_only_improving_points():
    s1, s2 = SE2State(0.0, 0.0, 0.0), SE2State(4.0, 0.0, 0.0)
    assert informed_region_contains(s1, s2, 6.0, 2.0, 0.0)
    assert not informed_region_contains(s1, s2, 6.0, 2.0, math.sqrt(5.0) + 0.01)
    quadratic = CostWeights(1.0, 1.0, 2)
    assert informed_region_contains(s1, s2, 10.0, 2.0, 0.0, quadratic)
    assert not informed_region_contains(s1, s2, 10.0, 2.0, 2.0, quadratic)


def test_degenerate_informed_region_raises():
    rng = np.random.default_rng(0)
    s1, s2 = SE2State(0.0, 0.0, 0.0), SE2State(4.0, 0.0, 0.0)
    with pytest.raises(InformedRegionEmpty):
        sample(s1, s2, 4.0, (-10.0, 10.0, -10.0, 10.0), rng)
    with pytest.raises(InformedRegionEmpty):
        sample(s1, s2, 8.0, (-10.0, 10.0, -10.0, 10.0), rng, CostWeights(1.0, 1.0, 2))


def test_uniform_samples_before_first_solution():
    rng = np.random.default_rng(4)
    bounds = (2.0, 3.0, -1.0, 0.0)
    for _ in range(50):
        s = sample(SE2State(0, 0), SE2State(1, 0), None, bounds, rng)
        assert 2.0 <= s.x <= 3.0 and -1.0 <= s.y <= 0.0


def test_roadmap_copy_is_independent(free_map):
    planner = planner_for(free_map, samples_per_query=32, batch_size=32)
    planner.plan(SE2State(0.0, 0.0, 0.0), SE2State(3.0, 0.0, 0.0))
    clone = planner.roadmap.copy()
    clone.add_vertex(SE2State(8.0, 2.0, 0.0), 1.5)
    assert clone.num_vertices == planner.roadmap.num_vertices + 1


def test_invalid_vertex_loses_edges(free_map):
    roadmap = Roadmap(free_map.bounds)
    for x in range(5):
        roadmap.add_vertex(SE2State(float(x), 0.0, 0.0), 1.5)
    assert roadmap.graph.degree(2) > 0
    roadmap.mark_vertex(2, False)
    assert roadmap.graph.degree(2) == 0
    v = roadmap.add_vertex(SE2State(2.1, 0.0, 0.0), 1.5)
    assert 2 not in roadmap.graph.adj[v]


@pytest.mark.parametrize("exponent", [1, 2])
def test_states_outside_informed_region_cannot_improve(exponent):
    rng = np.random.default_rng(7)
    w = CostWeights(1.0, 0.5, exponent)
    s1, s2 = SE2State(-1.0, 0.5, 0.3), SE2State(3.0, -0.5, 2.0)
    best = 7.0 if exponent == 1 else 12.0
    n = 100_000
    xs, ys = rng.uniform(-6.0, 8.0, n), rng.uniform(-6.0, 6.0, n)
    yaws = rng.uniform(-math.pi, math.pi, n)
    through = segment_costs_to_many(s1, xs, ys, yaws, w) + segment_costs_to_many(s2, xs, ys, yaws, w)
    inside = np.array([informed_region_contains(s1, s2, best, x, y, w) for x, y in zip(xs, ys)])
    assert inside.any() and not inside.all()
    assert (through[~inside] >= best - 1e-9).all()


@pytest.mark.slow
def test_accepted_informed_samples_lie_inside_region():
    rng = np.random.default_rng(8)
    w = CostWeights(1.0, 0.5)
    s1, s2 = SE2State(0.0, 0.0, 0.0), SE2State(4.0, 1.0, 1.0)
    best = 6.5
    # часть эллипса выходит за границы: работает и ветка с отбором по прямоугольнику
    for bounds in ((-10.0, 10.0, -10.0, 10.0), (-0.5, 5.0, -0.5, 1.5)):
        for _ in range(50_000):
            s = sample(s1, s2, best, bounds, rng, w)
            assert informed_region_contains(s1, s2, best, s.x, s.y, w)
            assert bounds[0] <= s.x <= bounds[1] and bounds[2] <= s.y <= bounds[3]
