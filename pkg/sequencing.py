"""
Последовательность обхода ToI: матрица стоимостей бесколлизионных путей
между представителями ToI и решение задачи коммивояжера.
"""
from dataclasses import dataclass
from typing import Dict, List, Protocol, Tuple
import math

import numpy as np

from exceptions import DisconnectedToIError, EndpointInvalidError, SolverLimitError
from geometry import SE2State
from logger import logger

EXACT_SOLVER_LIMIT = 15
TSP_MODES = ("exact", "heuristic", "auto")


class PathPlanner(Protocol):
    def plan(self, start: SE2State, goal: SE2State): ...


@dataclass
class CostMatrix:
    """
    Матрица стоимостей (n+1)x(n+1); строка и столбец 0 соответствуют старту

    Attributes:
        entries (np.ndarray): Стоимости, inf для недостижимых пар
    """
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1] or self.entries.shape[0] < 1:
            raise ValueError(f"cost matrix must be square and nonempty, got shape {self.entries.shape}")

    @property
    def n(self) -> int:
        return self.entries.shape[0] - 1

    def tour_cost(self, order: List[int]) -> float:
        """Стоимость замкнутого тура 0 -> order -> 0"""
        nodes = [0] + list(order) + [0]
        return float(sum(self.entries[a, b] for a, b in zip(nodes[:-1], nodes[1:])))

    def scaled(self, factor: float) -> "CostMatrix":
        return CostMatrix(self.entries * factor)

    def to_list(self) -> List[List[float]]:
        return [[None if math.isinf(v) else float(v) for v in row] for row in self.entries]


@dataclass(frozen=True)
class Tour:
    """Порядок обхода ToI (индексы 1..n), старт 0 подразумевается"""
    order: Tuple[int, ...]
    cost: float


def representative_pose(toi_index: int, mission) -> SE2State:
    """
    Представитель ToI для планирования между ToI: ближайший по положению PoI

    Args:
        toi_index (int): Индекс в матрице (0 - старт, i - ToI i-1)
        mission: Миссия

    Returns:
        SE2State: Поза-представитель
    """
    if toi_index == 0:
        return mission.start
    toi = mission.tois[toi_index - 1]
    if not toi.pois:
        raise ValueError(f"ToI has no PoI: '{toi.id}'")
    best, best_dist = None, math.inf
    for poi in toi.pois:
        d = math.hypot(poi.x - toi.pose.x, poi.y - toi.pose.y)
        if d < best_dist:
            best, best_dist = poi, d
    return best


def build_cost_matrix(mission, planner: PathPlanner) -> Tuple[CostMatrix, Dict[Tuple[int, int], object]]:
    """
    Построение матрицы стоимостей планированием путей между представителями

    Каждая неупорядоченная пара планируется один раз и отражается;
    недостижимые пары получают inf.

    Returns:
        Tuple[CostMatrix, Dict]: Матрица и результаты запросов по парам (i, j), i < j
    """
    size = len(mission.tois) + 1
    reps = [representative_pose(i, mission) for i in range(size)]
    entries = np.zeros((size, size))
    results = {}
    for i in range(size):
        for j in range(i + 1, size):
            try:
                result = planner.plan(reps[i], reps[j])
            except EndpointInvalidError as e:
                raise EndpointInvalidError(e.endpoint, e.state, pair=(i, j)) from e
            results[(i, j)] = result
            entries[i, j] = entries[j, i] = result.cost if result.solved else math.inf
            if not result.solved:
                logger.warning(f"Пара {i}-{j} недостижима ({result.status.value})")
    logger.info(f"Матрица стоимостей {size}x{size} построена")
    return CostMatrix(entries), results


def _check_connected(M: CostMatrix) -> None:
    entries = M.entries
    size = entries.shape[0]
    for i in range(size):
        others = np.delete(entries[i], i)
        if size > 1 and np.all(np.isinf(others)):
            raise DisconnectedToIError(i)


def solve_tsp_exact(M: CostMatrix) -> Tour:
    """
    Точное решение методом Хелда-Карпа с фиксированным стартом 0

    Среди туров равной стоимости возвращается лексикографически
    наименьший порядок.

    Raises:
        SolverLimitError: n > 15
        DisconnectedToIError: ToI недостижим ни из одной вершины или каждый тур бесконечен
    """
    n = M.n
    if n > EXACT_SOLVER_LIMIT:
        raise SolverLimitError(f"exact solver size limit: n={n} > {EXACT_SOLVER_LIMIT}")
    if n == 0:
        return Tour((), 0.0)
    _check_connected(M)
    dist = M.entries
    inner = dist[1:, 1:]
    full = (1 << n) - 1
    bits = np.arange(n)
    powers = 1 << bits
    # togo[mask, j]: стоимость из ToI j+1 через все ToI вне mask обратно в старт
    togo = np.full((1 << n, n), np.inf)
    togo[full] = dist[1:, 0]

    def next_values(mask: int) -> np.ndarray:
        values = np.full(n, np.inf)
        outside = np.flatnonzero(((mask >> bits) & 1) == 0)
        values[outside] = togo[mask | powers[outside], outside]
        return values

    for mask in range(full - 1, 0, -1):
        inside = ((mask >> bits) & 1) == 1
        togo[mask, inside] = np.min(inner[inside] + next_values(mask)[np.newaxis, :], axis=1)

    if not np.isfinite(np.min(dist[0, 1:] + next_values(0))):
        raise DisconnectedToIError(0, "every tour contains an unreachable pair")

    order: List[int] = []
    mask, current = 0, 0
    while len(order) < n:
        k = int(np.argmin(dist[current, 1:] + next_values(mask)))
        order.append(k + 1)
        mask |= 1 << k
        current = k + 1
    return Tour(tuple(order), M.tour_cost(order))


def _nearest_neighbour(dist: np.ndarray) -> List[int]:
    n = dist.shape[0] - 1
    unvisited = set(range(1, n + 1))
    order, current = [], 0
    while unvisited:
        nxt = min(unvisited, key=lambda j: (dist[current, j], j))
        order.append(nxt)
        unvisited.remove(nxt)
        current = nxt
    return order


def _two_opt(M: CostMatrix, order: List[int]) -> List[int]:
    """2-opt до локального оптимума; сравнение по полной стоимости тура"""
    best = list(order)
    best_cost = M.tour_cost(best)
    improved = True
    while improved:
        improved = False
        for i in range(len(best) - 1):
            for k in range(i + 1, len(best)):
                candidate = best[:i] + best[i:k + 1][::-1] + best[k + 1:]
                cost = M.tour_cost(candidate)
                if cost < best_cost - 1e-12:
                    best, best_cost = candidate, cost
                    improved = True
    return best


def solve_tsp_heuristic(M: CostMatrix) -> Tour:
    """Ближайший сосед от старта, затем 2-opt"""
    if M.n == 0:
        return Tour((), 0.0)
    _check_connected(M)
    order = _two_opt(M, _nearest_neighbour(M.entries))
    cost = M.tour_cost(order)
    if not math.isfinite(cost):
        raise DisconnectedToIError(order[0], "heuristic tour contains an unreachable pair")
    return Tour(tuple(order), cost)


def solve_tsp(M: CostMatrix, mode: str = "auto") -> Tour:
    """
    Решение TSP выбранным методом; auto - точный при n <= 15
    """
    if mode not in TSP_MODES:
        raise ValueError(f"unknown tsp mode '{mode}', expected one of {TSP_MODES}")
    if mode == "exact" or (mode == "auto" and M.n <= EXACT_SOLVER_LIMIT):
        tour = solve_tsp_exact(M)
    else:
        tour = solve_tsp_heuristic(M)
    logger.info(f"Последовательность ToI: {list(tour.order)}, стоимость {tour.cost:.3f}")
    return tour
