import math

import numpy as np
import pytest

from geometry import Path, SE2State
from gridmaps import EnvSpec, GridHeader, MapBundle, TraversabilityGrid, TsdfGrid, generate_synthetic_env
from roadmap import PlanResult, PlanStatus
from validity import StateValidityChecker


def make_map(**spec) -> MapBundle:
    """Карта по описанию среды (ключи EnvSpec)"""
    spec.setdefault("resolution", 0.1)
    spec.setdefault("truncation", 1.0)
    return generate_synthetic_env(EnvSpec(**spec), seed=0)


def uniform_map(tsdf: float, traversability: float, size: int = 40, truncation: float = 1.0) -> MapBundle:
    """Карта с постоянными значениями обоих слоев"""
    header = GridHeader(0.1, (0.0, 0.0), size, size)
    return MapBundle(
        TsdfGrid(header, truncation, np.full((size, size), tsdf)),
        TraversabilityGrid(header, np.full((size, size), traversability)),
    )


class TablePlanner:
    """
    Планировщик по таблице стоимостей: путь - прямой отрезок,
    стоимость - из таблицы (по умолчанию недостижимо)
    """

    def __init__(self, costs: dict):
        self.costs = costs
        self.calls = []

    def plan(self, start: SE2State, goal: SE2State) -> PlanResult:
        self.calls.append((start, goal))
        cost = self.costs.get((start, goal), math.inf)
        if math.isinf(cost):
            return PlanResult(None, math.inf, PlanStatus.UNREACHABLE)
        return PlanResult(Path([start, goal]), cost, PlanStatus.SOLVED)


@pytest.fixture
def free_map() -> MapBundle:
    return make_map(bounds=(-1.0, 11.0, -3.0, 3.0), base_traversability=0.9)


@pytest.fixture
def disc_map() -> MapBundle:
    # центры ячеек попадают на кратные 0.1 координаты
    return make_map(bounds=(-5.05, 5.05, -5.05, 5.05), truncation=2.0,
                    obstacles=[{"type": "disc", "center": (0.0, 0.0), "radius": 1.0}])


@pytest.fixture
def free_checker(free_map) -> StateValidityChecker:
    return StateValidityChecker(free_map)
