"""
Выбор одной PoI на каждый ToI при фиксированной последовательности обхода:
точное динамическое программирование по заранее спланированным путям,
итеративное DP с нижними оценками (IDP) и покоординатный спуск (IRBA).
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Protocol, Sequence, Tuple, Union
import math

import numpy as np

from cache import EdgeCache
from exceptions import MissingCostError, UnreachableError
from geometry import CostWeights, DEFAULT_WEIGHTS, Path, SE2State
from logger import log_iteration, logger

SELECTION_METHODS = ("idp", "dp", "irba")

CostTable = Union[EdgeCache, Mapping[Tuple[SE2State, SE2State], float]]


class PathPlanner(Protocol):
    def plan(self, start: SE2State, goal: SE2State): ...


@dataclass
class SelectionProblem:
    """
    Задача выбора PoI

    Attributes:
        sequence: Индексы ToI в порядке обхода
        poi_sets: Наборы PoI в том же порядке
        start: Стартовая поза (начало и конец цепочки)
        weights: Веса стоимости для нижних оценок
    """
    sequence: Sequence[int]
    poi_sets: Sequence[Sequence[SE2State]]
    start: SE2State
    weights: CostWeights = DEFAULT_WEIGHTS

    def __post_init__(self):
        if len(self.sequence) != len(self.poi_sets):
            raise ValueError(
                f"sequence has {len(self.sequence)} ToIs but {len(self.poi_sets)} PoI sets given"
            )
        for toi, pois in zip(self.sequence, self.poi_sets):
            if not pois:
                raise ValueError(f"ToI has no PoI: {toi}")

    @property
    def n_stages(self) -> int:
        return len(self.poi_sets)

    def chain(self, chosen: Sequence[int]) -> List[SE2State]:
        """Позы цепочки: старт, выбранные PoI, старт"""
        return [self.start] + [pois[i] for pois, i in zip(self.poi_sets, chosen)] + [self.start]

    def label(self, stage: int, index: int) -> str:
        if stage == 0 or stage == self.n_stages + 1:
            return "start"
        return f"ToI {self.sequence[stage - 1]} PoI {index}"

    def stage_poses(self, stage: int) -> Sequence[SE2State]:
        if stage == 0 or stage == self.n_stages + 1:
            return [self.start]
        return self.poi_sets[stage - 1]

    def full_pair_count(self) -> int:
        """Число путей между соседними этапами, которое планирует полное DP"""
        sizes = [1] + [len(p) for p in self.poi_sets] + [1]
        if self.n_stages == 0:
            return 0
        return sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))


@dataclass
class Selection:
    chosen: Tuple[int, ...]
    total_cost: float
    paths_planned: int = 0
    iterations: int = 1
    trace: List[dict] = field(default_factory=list)
    cap_hit: bool = False


def lower_bound_or_cost(a: SE2State, b: SE2State, cache: EdgeCache) -> float:
    """
    Стоимость запланированного пути, иначе segment_cost (нижняя оценка)
    """
    return cache.cost(a, b)


def _table_cost_fn(complete_costs: CostTable) -> Callable[[SE2State, SE2State], float]:
    if isinstance(complete_costs, EdgeCache):
        def lookup(a, b):
            record = complete_costs.get(a, b)
            if record is None:
                raise KeyError((a, b))
            return record.cost
        return lookup
    return lambda a, b: complete_costs[(a, b)]


def _dp(problem: SelectionProblem, cost_fn: Callable[[SE2State, SE2State], float]) -> Tuple[Tuple[int, ...], float]:
    """
    Обратная рекурсия по этапам и прямое восстановление argmin

    При равенстве выбирается PoI с меньшим индексом.
    """
    n = problem.n_stages
    if n == 0:
        return (), 0.0

    def transition(stage: int) -> np.ndarray:
        sources = problem.stage_poses(stage)
        targets = problem.stage_poses(stage + 1)
        table = np.empty((len(sources), len(targets)))
        for i, a in enumerate(sources):
            for j, b in enumerate(targets):
                try:
                    table[i, j] = cost_fn(a, b)
                except KeyError:
                    raise MissingCostError(problem.label(stage, i), problem.label(stage + 1, j)) from None
        return table

    tables = [transition(stage) for stage in range(n + 1)]
    # value[stage]: оптимальная стоимость от каждой позы этапа до финиша
    value = [None] * (n + 2)
    value[n + 1] = np.zeros(1)
    for stage in range(n, -1, -1):
        value[stage] = np.min(tables[stage] + value[stage + 1][np.newaxis, :], axis=1)

    chosen = []
    current = 0
    for stage in range(n):
        totals = tables[stage][current] + value[stage + 1]
        current = int(np.argmin(totals))
        chosen.append(current)
    return tuple(chosen), float(value[0][0])


def dp_select(problem: SelectionProblem, complete_costs: CostTable) -> Selection:
    """
    Точный выбор PoI динамическим программированием по полной таблице стоимостей

    Args:
        problem (SelectionProblem): Задача
        complete_costs: EdgeCache со всеми путями соседних этапов или словарь (a, b) -> стоимость

    Returns:
        Selection: Оптимальная цепочка

    Raises:
        MissingCostError: В таблице нет пары соседних этапов
    """
    if problem.n_stages == 0:
        return Selection((), 0.0, 0, 0)
    cost_fn = _table_cost_fn(complete_costs)
    chosen, optimum = _dp(problem, cost_fn)
    if not math.isfinite(optimum):
        raise UnreachableError("every chain contains an unreachable pair")
    # сумма вдоль цепочки в прямом порядке, как у IDP и IRBA
    poses = problem.chain(chosen)
    total = sum(cost_fn(a, b) for a, b in zip(poses[:-1], poses[1:]))
    trace = [{"iteration": 1, "chosen": list(chosen), "lower_bound": optimum, "certified": total}]
    return Selection(chosen, total, 0, 1, trace)


def _plan_pair(a: SE2State, b: SE2State, planner: PathPlanner, cache: EdgeCache) -> int:
    """Планирование пары, если ее нет в кэше; возвращает число запросов к планировщику"""
    if cache.get(a, b) is not None:
        return 0
    if a == b:
        cache.set(a, b, 0.0, Path([a]))
        return 0
    result = planner.plan(a, b)
    if result.solved:
        cache.set(a, b, result.cost, result.path)
    else:
        cache.set(a, b, math.inf, None)
    return 1


def plan_all_pairs(problem: SelectionProblem, planner: PathPlanner, cache: EdgeCache) -> int:
    """
    Планирование всех путей между позами соседних этапов (вход полного DP)

    Returns:
        int: Число новых запросов к планировщику
    """
    planned = 0
    if problem.n_stages == 0:
        return 0
    for stage in range(problem.n_stages + 1):
        for a in problem.stage_poses(stage):
            for b in problem.stage_poses(stage + 1):
                planned += _plan_pair(a, b, planner, cache)
    logger.info(f"Спланировано {planned} путей для полного DP")
    return planned


def _plan_chain(problem: SelectionProblem, chosen: Sequence[int], planner: PathPlanner,
                cache: EdgeCache) -> int:
    """
    Планирование недостающих путей цепочки

    Raises:
        UnreachableError: Сегмент цепочки недостижим, stage - номер сегмента
    """
    poses = problem.chain(chosen)
    planned = 0
    for stage, (a, b) in enumerate(zip(poses[:-1], poses[1:])):
        planned += _plan_pair(a, b, planner, cache)
        if not math.isfinite(cache.cost(a, b)):
            source = problem.label(stage, chosen[stage - 1] if stage > 0 else 0)
            target = problem.label(stage + 1, chosen[stage] if stage < len(chosen) else 0)
            raise UnreachableError(f"chain segment {source} -> {target} is unreachable", stage=stage)
    return planned


def chain_cost(problem: SelectionProblem, chosen: Sequence[int], cache: EdgeCache) -> float:
    poses = problem.chain(chosen)
    return sum(cache.cost(a, b) for a, b in zip(poses[:-1], poses[1:]))


def chain_paths(problem: SelectionProblem, chosen: Sequence[int], cache: EdgeCache) -> List[Path]:
    """Запланированные пути цепочки по этапам"""
    poses = problem.chain(chosen)
    paths = []
    for a, b in zip(poses[:-1], poses[1:]):
        record = cache.get(a, b)
        if record is None or record.path is None:
            raise UnreachableError(f"segment {a} -> {b} has no planned path")
        paths.append(record.path)
    return paths


def idp_select(problem: SelectionProblem, planner: PathPlanner, cache: EdgeCache = None) -> Selection:
    """
    Итеративное DP: незапланированные пары заменяются нижней оценкой,
    планируются только пути текущей цепочки; остановка при повторе выбора

    Args:
        problem (SelectionProblem): Задача
        planner: Планировщик точка-точка
        cache (EdgeCache): Общий кэш путей (может быть заполнен заранее)

    Returns:
        Selection: Выбранная цепочка со стоимостью по спланированным путям

    Raises:
        UnreachableError: Сегмент выбранной цепочки недостижим
    """
    cache = cache if cache is not None else EdgeCache(problem.weights)
    if problem.n_stages == 0:
        return Selection((), 0.0, 0, 0)

    # каждая итерация без повтора планирует хотя бы один новый путь
    cap = problem.full_pair_count() + 2
    trace: List[dict] = []
    planned = 0
    previous = None
    best: Optional[Tuple[float, Tuple[int, ...]]] = None
    cap_hit = False
    iteration = 0
    while True:
        iteration += 1
        chosen, lower = _dp(problem, cache.cost)
        if not math.isfinite(lower):
            raise UnreachableError("every chain contains an unreachable pair")
        if chosen == previous:
            certified = chain_cost(problem, chosen, cache)
            trace.append({"iteration": iteration, "chosen": list(chosen), "lower_bound": lower,
                          "certified": certified, "paths_planned": planned})
            log_iteration("idp", iteration, chosen, lower, certified)
            best = (certified, chosen)
            break
        planned += _plan_chain(problem, chosen, planner, cache)
        certified = chain_cost(problem, chosen, cache)
        trace.append({"iteration": iteration, "chosen": list(chosen), "lower_bound": lower,
                      "certified": certified, "paths_planned": planned})
        log_iteration("idp", iteration, chosen, lower, certified)
        if best is None or certified < best[0]:
            best = (certified, chosen)
        previous = chosen
        if iteration >= cap:
            cap_hit = True
            logger.warning(f"IDP: достигнут предел итераций {cap}, возвращается лучшая цепочка")
            break

    logger.info(f"IDP: {iteration} итераций, спланировано {planned} путей, стоимость {best[0]:.3f}")
    return Selection(best[1], best[0], planned, iteration, trace, cap_hit)


def irba_select(problem: SelectionProblem, planner: PathPlanner, cache: EdgeCache = None,
                initial: Optional[Sequence[int]] = None) -> Selection:
    """
    Покоординатный спуск: каждая PoI переизбирается по двум соседним путям

    Начальная цепочка - первая итерация IDP (DP по нижним оценкам), если
    не задана явно. После каждого прохода недостающие пути цепочки
    планируются; остановка, когда проход ничего не меняет.
    """
    cache = cache if cache is not None else EdgeCache(problem.weights)
    n = problem.n_stages
    if n == 0:
        return Selection((), 0.0, 0, 0)

    if initial is None:
        chosen, _ = _dp(problem, cache.cost)
        chosen = list(chosen)
    else:
        chosen = list(initial)
        if len(chosen) != n or any(not 0 <= c < len(p) for c, p in zip(chosen, problem.poi_sets)):
            raise ValueError(f"initial chain {chosen} does not match the problem")
    planned = _plan_chain(problem, chosen, planner, cache)
    trace = [{"iteration": 1, "chosen": list(chosen), "lower_bound": None,
              "certified": chain_cost(problem, chosen, cache), "paths_planned": planned}]

    cap = problem.full_pair_count() + 2
    iteration = 1
    cap_hit = False
    while True:
        iteration += 1
        changed = False
        for stage in range(n):
            prev_pose = problem.start if stage == 0 else problem.poi_sets[stage - 1][chosen[stage - 1]]
            next_pose = problem.start if stage == n - 1 else problem.poi_sets[stage + 1][chosen[stage + 1]]
            pois = problem.poi_sets[stage]
            incumbent = chosen[stage]
            best_value = cache.cost(prev_pose, pois[incumbent]) + cache.cost(pois[incumbent], next_pose)
            best_index = incumbent
            for index, poi in enumerate(pois):
                value = cache.cost(prev_pose, poi) + cache.cost(poi, next_pose)
                if value < best_value:
                    best_value, best_index = value, index
            if best_index != incumbent:
                chosen[stage] = best_index
                changed = True
        planned += _plan_chain(problem, chosen, planner, cache)
        certified = chain_cost(problem, chosen, cache)
        trace.append({"iteration": iteration, "chosen": list(chosen), "lower_bound": None,
                      "certified": certified, "paths_planned": planned})
        log_iteration("irba", iteration, chosen, certified)
        if not changed:
            break
        if iteration >= cap:
            cap_hit = True
            logger.warning(f"IRBA: достигнут предел проходов {cap}")
            break

    total = chain_cost(problem, chosen, cache)
    logger.info(f"IRBA: {iteration} проходов, спланировано {planned} путей, стоимость {total:.3f}")
    return Selection(tuple(chosen), total, planned, iteration, trace, cap_hit)


def select(method: str, problem: SelectionProblem, planner: PathPlanner,
           cache: EdgeCache = None) -> Selection:
    """
    Выбор PoI указанным методом

    Args:
        method (str): 'idp', 'dp' или 'irba'
    """
    cache = cache if cache is not None else EdgeCache(problem.weights)
    if method == "idp":
        return idp_select(problem, planner, cache)
    if method == "irba":
        return irba_select(problem, planner, cache)
    if method == "dp":
        planned = plan_all_pairs(problem, planner, cache)
        selection = dp_select(problem, cache)
        selection.paths_planned = planned
        return selection
    raise ValueError(f"unknown selection method '{method}', expected one of {SELECTION_METHODS}")
