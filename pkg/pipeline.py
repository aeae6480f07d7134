"""
Конвейер миссии: проверка, последовательность ToI, выбор PoI,
склейка путей, выравнивание курса и повторная проверка плана.
"""
from typing import List, Optional, Sequence, Set, Tuple
import time

from cache import EdgeCache
from config import PlannerConfig
from exceptions import InvariantViolation
from geometry import Path, SE2State, align_headings, path_cost
from gridmaps import MapBundle
from logger import log_phase, logger
from mission import Mission, Plan, validate_mission
from poi_selection import SelectionProblem, chain_paths, select
from roadmap import LazyPRMStar, PlanResult, Roadmap, sample
from sequencing import build_cost_matrix, solve_tsp
from utils.timer import PhaseTimer
from validity import StateValidityChecker


class CountingPlanner:
    """
    Обертка над планировщиком: считает запросы и суммирует время их этапов
    """

    def __init__(self, planner: LazyPRMStar):
        self.planner = planner
        self.calls = 0
        self.timer = PhaseTimer()

    def plan(self, start: SE2State, goal: SE2State) -> PlanResult:
        result = self.planner.plan(start, goal)
        self.calls += 1
        for name, seconds in result.stats.timings.items():
            self.timer.add(name, seconds)
        return result


def make_checker(m: MapBundle, config: PlannerConfig) -> StateValidityChecker:
    return StateValidityChecker(m, config.robot, config.checker)


def prepare_roadmap(m: MapBundle, mission: Mission, config: PlannerConfig,
                    freeze: bool = False, checker: StateValidityChecker = None) -> Roadmap:
    """
    Дорожная карта со всеми позами миссии, при необходимости выращенная
    запросами и замороженная для сравнения методов на одном графе

    Args:
        freeze (bool): Запретить рост после подготовки
    """
    checker = checker or make_checker(m, config)
    validate_mission(mission, checker)
    roadmap = Roadmap(m.bounds, config.weights, config.seed)
    planner = LazyPRMStar(roadmap, checker, config.query)
    poses = [mission.start] + [poi for toi in mission.tois for poi in toi.pois]
    for pose in poses:
        planner.add_query_endpoints(pose, pose)
    if freeze:
        # равномерные выборки до предела вершин, затем рост запрещен
        k_scale = config.query.k_neighbors_scale
        while roadmap.num_vertices < config.max_vertices:
            roadmap.add_vertex(sample(mission.start, mission.start, None, roadmap.bounds, roadmap.rng), k_scale)
        roadmap.freeze()
    logger.info(f"Подготовлена дорожная карта: {roadmap.num_vertices} вершин, {roadmap.num_edges} ребер")
    return roadmap


def concatenate_paths(paths: Sequence[Path]) -> Tuple[List[SE2State], List[int]]:
    """
    Склейка путей участков; общая поза на стыке остается один раз

    Returns:
        Tuple[List[SE2State], List[int]]: Путевые точки и индексы стыков (включая концы)
    """
    waypoints: List[SE2State] = list(paths[0])
    junctions = [0, len(waypoints) - 1]
    for path in paths[1:]:
        if path[0] != waypoints[-1]:
            raise InvariantViolation(f"segment starts at {path[0]} but previous ends at {waypoints[-1]}")
        waypoints.extend(path[1:])
        junctions.append(len(waypoints) - 1)
    return waypoints, junctions


def align_and_revalidate(waypoints: Sequence[SE2State], fixed: Set[int],
                         checker: StateValidityChecker) -> Tuple[List[SE2State], int]:
    """
    Выравнивание курса с последующей проверкой движений; у движений,
    не прошедших проверку, нефиксированные концы возвращаются к исходному курсу

    Returns:
        Tuple[List[SE2State], int]: Путевые точки и число возвращенных поз
    """
    original = list(waypoints)
    aligned = align_headings(original, fixed)
    reverted = 0
    while True:
        failing = [i for i in range(len(aligned) - 1)
                   if not checker.check_motion(aligned[i], aligned[i + 1])]
        if not failing:
            break
        changed = False
        for i in failing:
            for j in (i, i + 1):
                if j not in fixed and aligned[j] != original[j]:
                    aligned[j] = original[j]
                    reverted += 1
                    changed = True
        if not changed:
            raise InvariantViolation(f"motion {failing[0]} fails even with planned headings")
    if reverted:
        logger.warning(f"Выравнивание курса отменено для {reverted} путевых точек")
    return aligned, reverted


def revalidate_plan(plan: Plan, mission: Mission, checker: StateValidityChecker) -> None:
    """
    Повторная проверка плана: замкнут на старте, каждая выбранная PoI
    присутствует среди путевых точек, все движения валидны

    Raises:
        InvariantViolation: Если план нарушает одно из условий
    """
    waypoints = list(plan.waypoints)
    if waypoints[0] != mission.start or waypoints[-1] != mission.start:
        raise InvariantViolation("plan is not closed at the start pose")
    if sorted(plan.sequence) != sorted(toi.id for toi in mission.tois):
        raise InvariantViolation("plan does not visit every ToI exactly once")
    present = set(waypoints)
    for toi_id, index in zip(plan.sequence, plan.chosen_pois):
        if mission.toi_by_id(toi_id).pois[index] not in present:
            raise InvariantViolation(f"PoI {index} of ToI '{toi_id}' is missing from the waypoints")
    for i in range(len(waypoints) - 1):
        if not checker.check_motion(waypoints[i], waypoints[i + 1]):
            raise InvariantViolation(f"motion {i}: {waypoints[i]} -> {waypoints[i + 1]} is not valid")
    if abs(sum(plan.segment_costs) - plan.total_cost) > 1e-9:
        raise InvariantViolation("total cost differs from the sum of segment costs")


def run_mission(m: MapBundle, mission: Mission, config: PlannerConfig = None,
                roadmap: Optional[Roadmap] = None, cache: Optional[EdgeCache] = None) -> Plan:
    """
    Полный конвейер планирования миссии

    Args:
        m (MapBundle): Карта
        mission (Mission): Миссия
        config (PlannerConfig): Параметры
        roadmap (Roadmap): Подготовленная дорожная карта (иначе создается новая)
        cache (EdgeCache): Кэш путей между позами

    Returns:
        Plan: Замкнутый маршрут со статистикой
    """
    config = config or PlannerConfig()
    started = time.perf_counter()
    timer = PhaseTimer()
    checker = make_checker(m, config)

    def finish_phase(name: str):
        log_phase(name, timer.totals[name])

    with timer.phase("validation"):
        validate_mission(mission, checker)
    finish_phase("validation")

    roadmap = roadmap if roadmap is not None else Roadmap(m.bounds, config.weights, config.seed)
    planner = CountingPlanner(LazyPRMStar(roadmap, checker, config.query))
    cache = cache if cache is not None else EdgeCache(config.weights)

    if not mission.tois:
        stats = _stats(config, checker, timer, planner, started, roadmap, cache)
        return Plan([], [], Path([mission.start]), [], 0.0, stats)

    with timer.phase("cost_matrix"):
        matrix, _ = build_cost_matrix(mission, planner)
    finish_phase("cost_matrix")
    matrix_calls = planner.calls

    with timer.phase("tsp"):
        tour = solve_tsp(matrix, config.tsp)
    finish_phase("tsp")

    tois = [mission.tois[i - 1] for i in tour.order]
    problem = SelectionProblem([i - 1 for i in tour.order], [toi.pois for toi in tois],
                               mission.start, config.weights)
    with timer.phase("selection"):
        selection = select(config.method, problem, planner, cache)
    finish_phase("selection")

    with timer.phase("concatenation"):
        paths = chain_paths(problem, selection.chosen, cache)
        waypoints, junctions = concatenate_paths(paths)
    with timer.phase("alignment"):
        waypoints, reverted = align_and_revalidate(waypoints, set(junctions), checker.spawn())
    finish_phase("alignment")

    segment_costs = [path_cost(waypoints[a:b + 1], config.weights)
                     for a, b in zip(junctions[:-1], junctions[1:])]
    total = sum(segment_costs)

    stats = _stats(config, checker, timer, planner, started, roadmap, cache)
    stats.update({
        "paths_planned": selection.paths_planned,
        "matrix_paths_planned": matrix_calls,
        "idp_iterations": selection.iterations if config.method == "idp" else 0,
        "iterations": selection.iterations,
        "cap_hit": selection.cap_hit,
        "selection_cost": selection.total_cost,
        "tour_cost": tour.cost,
        "cost_matrix": matrix.to_list(),
        "trace": selection.trace,
        "headings_reverted": reverted,
    })
    plan = Plan([toi.id for toi in tois], list(selection.chosen), Path(waypoints),
                segment_costs, total, stats)

    with timer.phase("revalidation"):
        revalidate_plan(plan, mission, checker.spawn())
    plan.stats["wall_times"] = timer.as_dict()
    plan.stats["wall_time_total"] = time.perf_counter() - started
    logger.info(
        f"План готов: {len(tois)} ToI, стоимость {total:.3f}, "
        f"путей {selection.paths_planned}, итераций {selection.iterations}"
    )
    return plan


def _stats(config: PlannerConfig, checker: StateValidityChecker, timer: PhaseTimer,
           planner: CountingPlanner, started: float, roadmap: Roadmap,
           cache: EdgeCache) -> dict:
    check = checker.stats.as_dict()
    return {
        "method": config.method,
        "tsp": config.tsp,
        "paths_planned": 0,
        "idp_iterations": 0,
        "tsdf_queries": check["tsdf_queries"],
        "traversability_queries": check["traversability_queries"],
        "checker": check,
        "roadmap_vertices": roadmap.num_vertices,
        "roadmap_edges": roadmap.num_edges,
        "edge_cache": cache.get_stats(),
        "query_timings": planner.timer.as_dict(),
        "wall_times": timer.as_dict(),
        "wall_time_total": time.perf_counter() - started,
    }
