"""
Оптимальное планирование точка-точка: ленивая вероятностная дорожная карта
(LazyPRM*) с информированным сэмплером, переиспользуемая между запросами.
"""
from dataclasses import dataclass, field
from enum import Enum
from heapq import heappop, heappush
from typing import Dict, List, Optional, Tuple
import copy
import math
import time

import networkx as nx
import numpy as np

from exceptions import EndpointInvalidError, InformedRegionEmpty
from geometry import (CostWeights, DEFAULT_WEIGHTS, Path, SE2State, angle_diff,
                      path_cost, segment_cost, segment_costs_to_many)
from logger import log_query, logger
from utils.timer import PhaseTimer
from validity import CheckStats, StateValidityChecker

ENDPOINT_TOLERANCE = 1e-9
MAX_SAMPLE_ATTEMPTS = 1000
STATE_DIMENSION = 3


class Status(Enum):
    UNCHECKED = 0
    VALID = 1
    INVALID = 2


class PlanStatus(Enum):
    SOLVED = "solved"
    UNREACHABLE = "unreachable"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class QueryConfig:
    """
    Бюджеты запроса.

    max_vertices ограничивает размер всей дорожной карты миссии,
    samples_per_query - число новых выборок в одном запросе. Запрос
    прекращает выборку и раньше, если в его области выборки уже лежит
    samples_per_query вершин (кроме концов запроса), оставшихся от прошлых запросов.
    """
    max_vertices: int = 3000
    batch_size: int = 256
    samples_per_query: int = 512
    time_budget: Optional[float] = None
    k_neighbors_scale: float = 1.5
    rng_seed: int = 0

    def __post_init__(self):
        if not self.max_vertices >= self.batch_size >= 1:
            raise ValueError(
                f"budgets must satisfy max_vertices >= batch_size >= 1, "
                f"got {self.max_vertices}, {self.batch_size}"
            )
        if self.samples_per_query < 0:
            raise ValueError(f"samples_per_query must be >= 0, got {self.samples_per_query}")
        if not self.k_neighbors_scale > 0:
            raise ValueError(f"k_neighbors_scale must be positive, got {self.k_neighbors_scale}")


@dataclass
class QueryStats:
    """Статистика одного запроса"""
    check: CheckStats = field(default_factory=CheckStats)
    new_samples: int = 0
    vertices: int = 0
    edges: int = 0
    searches: int = 0
    vertices_validated: int = 0
    edges_validated: int = 0
    candidate_path_edges: int = 0
    timings: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "check": self.check.as_dict(),
            "new_samples": self.new_samples,
            "vertices": self.vertices,
            "edges": self.edges,
            "searches": self.searches,
            "vertices_validated": self.vertices_validated,
            "edges_validated": self.edges_validated,
            "candidate_path_edges": self.candidate_path_edges,
            "timings": dict(self.timings),
        }


@dataclass
class PlanResult:
    path: Optional[Path]
    cost: float
    status: PlanStatus
    stats: QueryStats = field(default_factory=QueryStats)

    @property
    def solved(self) -> bool:
        return self.status is PlanStatus.SOLVED


def connection_count(n: int, scale: float) -> int:
    """Число соседей k-PRM* для дорожной карты из n вершин"""
    if n <= 1:
        return 1
    return max(1, math.ceil(scale * math.e * (1.0 + 1.0 / STATE_DIMENSION) * math.log(n)))


class Roadmap:
    """
    Дорожная карта с ленивой проверкой вершин и ребер

    Вершины и ребра хранят статус (не проверено / валидно / невалидно),
    ребра - кэшированную стоимость. Ребра неориентированные.
    """

    def __init__(self, bounds: Tuple[float, float, float, float],
                 weights: CostWeights = DEFAULT_WEIGHTS, rng_seed: int = 0):
        self.bounds = bounds
        self.weights = weights
        self.rng_seed = rng_seed
        self.rng = np.random.default_rng(rng_seed)
        self.graph = nx.Graph()
        self.states: List[SE2State] = []
        self.status: List[Status] = []
        self._xs = np.empty(64)
        self._ys = np.empty(64)
        self._yaws = np.empty(64)
        self._invalid = np.zeros(64, dtype=bool)
        self.frozen = False

    @property
    def num_vertices(self) -> int:
        return len(self.states)

    @property
    def num_edges(self) -> int:
        return self.graph.number_of_edges()

    def freeze(self) -> None:
        """Запрет роста: новые выборки больше не добавляются"""
        self.frozen = True

    def copy(self) -> "Roadmap":
        return copy.deepcopy(self)

    def _grow_arrays(self):
        capacity = len(self._xs) * 2
        for name in ("_xs", "_ys", "_yaws"):
            grown = np.empty(capacity)
            grown[:len(getattr(self, name))] = getattr(self, name)
            setattr(self, name, grown)
        invalid = np.zeros(capacity, dtype=bool)
        invalid[:len(self._invalid)] = self._invalid
        self._invalid = invalid

    def find_vertex(self, state: SE2State, tol: float = ENDPOINT_TOLERANCE) -> Optional[int]:
        """Поиск вершины, совпадающей с состоянием с точностью tol"""
        n = self.num_vertices
        if n == 0:
            return None
        close = ((np.abs(self._xs[:n] - state.x) <= tol)
                 & (np.abs(self._ys[:n] - state.y) <= tol))
        for v in np.flatnonzero(close):
            if angle_diff(self.states[v].yaw, state.yaw) <= tol:
                return int(v)
        return None

    def costs_from(self, state: SE2State) -> np.ndarray:
        """Стоимости от состояния до всех вершин"""
        n = self.num_vertices
        return segment_costs_to_many(state, self._xs[:n], self._ys[:n], self._yaws[:n], self.weights)

    def add_vertex(self, state: SE2State, k_scale: float, status: Status = Status.UNCHECKED) -> int:
        """
        Добавление вершины и соединение с k ближайшими (не невалидными) вершинами

        Returns:
            int: Идентификатор вершины
        """
        v = self.num_vertices
        if v >= len(self._xs):
            self._grow_arrays()
        k = connection_count(v + 1, k_scale)
        neighbours: List[int] = []
        if v > 0:
            costs = self.costs_from(state)
            costs[self._invalid[:v]] = np.inf
            order = np.argsort(costs, kind='stable')[:k]
            neighbours = [int(u) for u in order if np.isfinite(costs[u])]

        self.states.append(state)
        self.status.append(status)
        self._xs[v], self._ys[v], self._yaws[v] = state.x, state.y, state.yaw
        self._invalid[v] = status is Status.INVALID
        self.graph.add_node(v)
        for u in neighbours:
            self.graph.add_edge(v, u, cost=segment_cost(state, self.states[u], self.weights),
                                status=Status.UNCHECKED)
        return v

    def mark_vertex(self, v: int, valid: bool) -> None:
        if valid:
            self.status[v] = Status.VALID
            return
        self.status[v] = Status.INVALID
        self._invalid[v] = True
        # у невалидной вершины не остается ребер
        self.graph.remove_edges_from(list(self.graph.edges(v)))

    def heuristic_to(self, goal: SE2State) -> List[float]:
        return self.costs_from(goal).tolist()

    def region_population(self, s1: SE2State, s2: SE2State, best_cost: Optional[float],
                          exclude: Tuple[int, ...] = ()) -> int:
        """
        Число вершин в области выборки запроса: вся карта до первого решения,
        затем информированная область
        """
        n = self.num_vertices
        if best_cost is None:
            inside = np.ones(n, dtype=bool)
        else:
            w = self.weights
            budget = (best_cost - w.w_r * angle_diff(s1.yaw, s2.yaw)) / w.w_t
            d1 = np.hypot(self._xs[:n] - s1.x, self._ys[:n] - s1.y)
            d2 = np.hypot(self._xs[:n] - s2.x, self._ys[:n] - s2.y)
            total = d1 * d1 + d2 * d2 if w.cost_exponent == 2 else d1 + d2
            inside = total < budget
        inside[list(exclude)] = False
        return int(np.count_nonzero(inside))


def sample(s1: SE2State, s2: SE2State, best_cost: Optional[float],
           bounds: Tuple[float, float, float, float], rng: np.random.Generator,
           w: CostWeights = DEFAULT_WEIGHTS) -> SE2State:
    """
    Выборка нового состояния

    Пока путь не найден, (x, y) равномерно в границах карты; затем только
    в информированной области, где путь через выборку может оказаться
    дешевле best_cost. Курс равномерно в [-pi, pi).

    Raises:
        InformedRegionEmpty: Если информированная область пуста
    """
    xmin, xmax, ymin, ymax = bounds
    if best_cost is None:
        x = rng.uniform(xmin, xmax)
        y = rng.uniform(ymin, ymax)
    else:
        x, y = _sample_informed(s1, s2, best_cost, bounds, rng, w)
    return SE2State(x, y, rng.uniform(-math.pi, math.pi))


def informed_region_contains(s1: SE2State, s2: SE2State, best_cost: float,
                             x: float, y: float, w: CostWeights = DEFAULT_WEIGHTS) -> bool:
    """Принадлежность точки информированной области"""
    budget = (best_cost - w.w_r * angle_diff(s1.yaw, s2.yaw)) / w.w_t
    d1 = math.hypot(x - s1.x, y - s1.y)
    d2 = math.hypot(x - s2.x, y - s2.y)
    if w.cost_exponent == 2:
        return d1 * d1 + d2 * d2 < budget
    return d1 + d2 < budget


def _sample_informed(s1: SE2State, s2: SE2State, best_cost: float,
                     bounds: Tuple[float, float, float, float], rng: np.random.Generator,
                     w: CostWeights) -> Tuple[float, float]:
    budget = (best_cost - w.w_r * angle_diff(s1.yaw, s2.yaw)) / w.w_t
    dx, dy = s2.x - s1.x, s2.y - s1.y
    focal = math.hypot(dx, dy)
    if w.cost_exponent == 2:
        # сумма квадратов расстояний до фокусов: круг вокруг середины
        slack = budget - 0.5 * focal * focal
        if slack <= 0.0:
            raise InformedRegionEmpty("informed region is empty")
        a = b = math.sqrt(0.5 * slack)
    else:
        if budget <= focal:
            raise InformedRegionEmpty("informed region is empty")
        a = 0.5 * budget
        b = math.sqrt(a * a - 0.25 * focal * focal)
    cx, cy = 0.5 * (s1.x + s2.x), 0.5 * (s1.y + s2.y)
    theta = math.atan2(dy, dx)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    half_x = math.hypot(a * cos_t, b * sin_t)
    half_y = math.hypot(a * sin_t, b * cos_t)

    xmin, xmax, ymin, ymax = bounds
    inside_bounds = (cx - half_x >= xmin and cx + half_x <= xmax
                     and cy - half_y >= ymin and cy + half_y <= ymax)
    box = (max(cx - half_x, xmin), min(cx + half_x, xmax),
           max(cy - half_y, ymin), min(cy + half_y, ymax))
    if box[0] >= box[1] or box[2] >= box[3]:
        raise InformedRegionEmpty("informed region lies outside the map")

    for _ in range(MAX_SAMPLE_ATTEMPTS):
        if inside_bounds:
            r = math.sqrt(rng.uniform(0.0, 1.0))
            phi = rng.uniform(0.0, 2.0 * math.pi)
            lx, ly = a * r * math.cos(phi), b * r * math.sin(phi)
            x = cx + cos_t * lx - sin_t * ly
            y = cy + sin_t * lx + cos_t * ly
        else:
            x = rng.uniform(box[0], box[1])
            y = rng.uniform(box[2], box[3])
        if (xmin <= x <= xmax and ymin <= y <= ymax
                and informed_region_contains(s1, s2, best_cost, x, y, w)):
            return x, y
    raise InformedRegionEmpty("no sample found in the informed region")


class LazyPRMStar:
    """
    Планировщик LazyPRM* на общей дорожной карте миссии

    Attributes:
        roadmap (Roadmap): Дорожная карта (растет между запросами)
        checker (StateValidityChecker): Проверка валидности
        config (QueryConfig): Бюджеты запросов
    """

    def __init__(self, roadmap: Roadmap, checker: StateValidityChecker, config: QueryConfig = None):
        self.roadmap = roadmap
        self.checker = checker
        self.config = config or QueryConfig()

    @property
    def weights(self) -> CostWeights:
        return self.roadmap.weights

    def add_query_endpoints(self, start: SE2State, goal: SE2State) -> Tuple[int, int]:
        """
        Вставка концов запроса в дорожную карту (или поиск совпадающих вершин)

        Raises:
            EndpointInvalidError: Если конец запроса невалиден
        """
        return self._endpoint(start, "start"), self._endpoint(goal, "goal")

    def _endpoint(self, state: SE2State, name: str) -> int:
        roadmap = self.roadmap
        v = roadmap.find_vertex(state)
        if v is not None:
            if roadmap.status[v] is Status.VALID:
                return v
            if roadmap.status[v] is Status.INVALID:
                raise EndpointInvalidError(name, state)
            if not self.checker.check_state(roadmap.states[v]):
                roadmap.mark_vertex(v, False)
                raise EndpointInvalidError(name, state)
            roadmap.mark_vertex(v, True)
            return v
        if not self.checker.check_state(state):
            raise EndpointInvalidError(name, state)
        return roadmap.add_vertex(state, self.config.k_neighbors_scale, Status.VALID)

    def plan(self, start: SE2State, goal: SE2State) -> PlanResult:
        """
        Поиск оптимального бесколлизионного пути между двумя состояниями

        Args:
            start (SE2State): Начальное состояние
            goal (SE2State): Целевое состояние

        Returns:
            PlanResult: Путь, стоимость, статус и статистика запроса
        """
        started = time.perf_counter()
        timer = PhaseTimer()
        stats = QueryStats()
        check_before = self.checker.stats.copy()
        roadmap = self.roadmap
        cfg = self.config

        with timer.phase("vertex_checking"):
            start_id, goal_id = self.add_query_endpoints(start, goal)
        if start_id == goal_id:
            result = PlanResult(Path([start]), 0.0, PlanStatus.SOLVED, stats)
            return self._finish(result, check_before, timer, started)

        best = self._lazy_search(start_id, goal_id, goal, timer, stats)
        budget = 0 if roadmap.frozen else cfg.samples_per_query
        timed_out = False
        region_empty = False
        while (stats.new_samples < budget and roadmap.num_vertices < cfg.max_vertices
               and not region_empty):
            best_cost = best[1] if best is not None else None
            # вершины прошлых запросов в текущей области выборки засчитываются в бюджет
            missing = budget - roadmap.region_population(start, goal, best_cost, (start_id, goal_id))
            if missing <= 0:
                break
            if cfg.time_budget is not None and time.perf_counter() - started > cfg.time_budget:
                timed_out = True
                break
            n_batch = min(cfg.batch_size, budget - stats.new_samples, missing,
                          cfg.max_vertices - roadmap.num_vertices)
            with timer.phase("sampling"):
                for _ in range(n_batch):
                    try:
                        s = sample(start, goal, best_cost, roadmap.bounds, roadmap.rng, roadmap.weights)
                    except InformedRegionEmpty:
                        region_empty = True
                        break
                    roadmap.add_vertex(s, cfg.k_neighbors_scale)
                    stats.new_samples += 1
            best = self._lazy_search(start_id, goal_id, goal, timer, stats)

        if best is not None:
            states = [roadmap.states[v] for v in best[0]]
            states[0], states[-1] = start, goal
            result = PlanResult(Path(states), path_cost(states, roadmap.weights), PlanStatus.SOLVED, stats)
        elif timed_out:
            result = PlanResult(None, math.inf, PlanStatus.BUDGET_EXHAUSTED, stats)
        else:
            result = PlanResult(None, math.inf, PlanStatus.UNREACHABLE, stats)
        return self._finish(result, check_before, timer, started)

    def _finish(self, result: PlanResult, check_before: CheckStats,
                timer: PhaseTimer, started: float) -> PlanResult:
        stats = result.stats
        stats.check = self.checker.stats - check_before
        stats.vertices = self.roadmap.num_vertices
        stats.edges = self.roadmap.num_edges
        accounted = sum(timer.totals.values())
        timer.add("misc", max(0.0, time.perf_counter() - started - accounted))
        stats.timings = timer.as_dict()
        log_query(result.path[0] if result.path else None, result.path[-1] if result.path else None,
                  result.status.value, result.cost, stats.new_samples)
        return result

    def _astar(self, start_id: int, goal_id: int, h: List[float]) -> Optional[List[int]]:
        """
        A* по ребрам, не помеченным невалидными; порядок (f, g, id)
        """
        roadmap = self.roadmap
        adj = roadmap.graph.adj
        status = roadmap.status
        g_score = {start_id: 0.0}
        parent: Dict[int, int] = {}
        closed = set()
        heap = [(h[start_id], 0.0, start_id)]
        while heap:
            f, g, u = heappop(heap)
            if u in closed:
                continue
            if u == goal_id:
                ids = [u]
                while u != start_id:
                    u = parent[u]
                    ids.append(u)
                ids.reverse()
                return ids
            closed.add(u)
            for v, data in adj[u].items():
                if v in closed or data['status'] is Status.INVALID or status[v] is Status.INVALID:
                    continue
                candidate = g + data['cost']
                if candidate < g_score.get(v, math.inf):
                    g_score[v] = candidate
                    parent[v] = u
                    heappush(heap, (candidate + h[v], candidate, v))
        return None

    def _lazy_search(self, start_id: int, goal_id: int, goal: SE2State,
                     timer: PhaseTimer, stats: QueryStats) -> Optional[Tuple[List[int], float]]:
        """
        Поиск кратчайшего пути с ленивой проверкой: сначала вершины пути,
        затем ребра; при отказе элемент помечается невалидным и поиск повторяется

        Returns:
            Optional[Tuple[List[int], float]]: Вершины пути и его стоимость
        """
        roadmap = self.roadmap
        graph = roadmap.graph
        h = roadmap.heuristic_to(goal)
        while True:
            with timer.phase("search"):
                ids = self._astar(start_id, goal_id, h)
            stats.searches += 1
            if ids is None:
                return None
            stats.candidate_path_edges += len(ids) - 1

            path_ok = True
            with timer.phase("vertex_checking"):
                for v in ids:
                    if roadmap.status[v] is Status.UNCHECKED:
                        stats.vertices_validated += 1
                        valid = self.checker.check_state(roadmap.states[v])
                        roadmap.mark_vertex(v, valid)
                        if not valid:
                            path_ok = False
                            break
            if not path_ok:
                continue

            with timer.phase("edge_checking"):
                for u, v in zip(ids[:-1], ids[1:]):
                    edge = graph.edges[u, v]
                    if edge['status'] is Status.UNCHECKED:
                        stats.edges_validated += 1
                        valid = self.checker.check_motion(roadmap.states[u], roadmap.states[v],
                                                          check_endpoints=False)
                        edge['status'] = Status.VALID if valid else Status.INVALID
                    if edge['status'] is Status.INVALID:
                        path_ok = False
                        break
            if path_ok:
                cost = 0.0
                for u, v in zip(ids[:-1], ids[1:]):
                    cost += graph.edges[u, v]['cost']
                return ids, cost


def plan_path(start: SE2State, goal: SE2State, roadmap: Roadmap, cfg: QueryConfig,
              checker: StateValidityChecker) -> PlanResult:
    """Запрос точка-точка на заданной дорожной карте"""
    return LazyPRMStar(roadmap, checker, cfg).plan(start, goal)


def add_query_endpoints(roadmap: Roadmap, start: SE2State, goal: SE2State,
                        checker: StateValidityChecker, cfg: QueryConfig = None) -> Tuple[int, int]:
    """Вставка концов запроса в дорожную карту"""
    return LazyPRMStar(roadmap, checker, cfg).add_query_endpoints(start, goal)


def roadmap_for_map(bounds, weights: CostWeights = DEFAULT_WEIGHTS, cfg: QueryConfig = None) -> Roadmap:
    cfg = cfg or QueryConfig()
    logger.debug(f"Новая дорожная карта: границы {bounds}, seed={cfg.rng_seed}")
    return Roadmap(bounds, weights, cfg.rng_seed)
