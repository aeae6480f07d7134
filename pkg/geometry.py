"""
Геометрия SE(2): состояния робота, функция стоимости, интерполяция
и выравнивание курса вдоль пути.
"""
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Set
import math

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """
    Приведение угла к диапазону [-pi, pi)

    Args:
        angle (float): Угол в радианах

    Returns:
        float: Нормализованный угол
    """
    if -math.pi <= angle < math.pi:
        return angle
    wrapped = math.fmod(angle + math.pi, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    wrapped -= math.pi
    # fmod на границе может дать ровно pi после округления
    if wrapped >= math.pi:
        wrapped -= TWO_PI
    return wrapped


@dataclass(frozen=True)
class SE2State:
    """Поза робота на плоскости: координаты в метрах и курс в радианах"""
    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'x', float(self.x))
        object.__setattr__(self, 'y', float(self.y))
        object.__setattr__(self, 'yaw', normalize_angle(float(self.yaw)))

    def with_yaw(self, yaw: float) -> "SE2State":
        return SE2State(self.x, self.y, yaw)

    def as_list(self) -> List[float]:
        return [self.x, self.y, self.yaw]

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "SE2State":
        x, y, yaw = values
        return cls(x, y, yaw)

    def __str__(self) -> str:
        return f"({self.x:.3f}, {self.y:.3f}, {self.yaw:.3f})"


@dataclass(frozen=True)
class CostWeights:
    """
    Веса трансляционной и вращательной составляющих стоимости.

    cost_exponent=1 дает метрику (аддитивна вдоль прямых); значение 2
    воспроизводит квадратичную запись и оставлено для сравнения.
    """
    w_t: float = 1.0
    w_r: float = 1.0
    cost_exponent: int = 1

    def __post_init__(self):
        if not self.w_t > 0:
            raise ValueError(f"w_t must be positive, got {self.w_t}")
        # w_r = 0 допускается: стоимость остается псевдометрикой
        if self.w_r < 0:
            raise ValueError(f"w_r must be non-negative, got {self.w_r}")
        if self.cost_exponent not in (1, 2):
            raise ValueError(f"cost_exponent must be 1 or 2, got {self.cost_exponent}")


DEFAULT_WEIGHTS = CostWeights()


@dataclass(frozen=True)
class Path:
    """Путь как упорядоченный набор путевых точек"""
    waypoints: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'waypoints', tuple(self.waypoints))
        if not self.waypoints:
            raise ValueError("empty path")

    def __len__(self) -> int:
        return len(self.waypoints)

    def __iter__(self):
        return iter(self.waypoints)

    def __getitem__(self, index):
        return self.waypoints[index]


def angle_diff(psi1: float, psi2: float) -> float:
    """
    Разность двух углов по окружности

    Returns:
        float: Значение в [0, pi]
    """
    d = abs(psi1 - psi2)
    return min(d, TWO_PI - d)


def segment_cost(s1: SE2State, s2: SE2State, w: CostWeights = DEFAULT_WEIGHTS) -> float:
    """
    Стоимость отрезка между двумя состояниями

    Args:
        s1 (SE2State): Начальное состояние
        s2 (SE2State): Конечное состояние
        w (CostWeights): Веса стоимости

    Returns:
        float: w_t * ||dxy|| + w_r * d(yaw)
    """
    dist = math.hypot(s1.x - s2.x, s1.y - s2.y)
    if w.cost_exponent == 2:
        dist = dist * dist
    return w.w_t * dist + w.w_r * angle_diff(s1.yaw, s2.yaw)


def segment_costs_to_many(s: SE2State, xs: np.ndarray, ys: np.ndarray, yaws: np.ndarray,
                          w: CostWeights = DEFAULT_WEIGHTS) -> np.ndarray:
    """Векторизованная стоимость от одного состояния до массива состояний"""
    dist = np.hypot(xs - s.x, ys - s.y)
    if w.cost_exponent == 2:
        dist = dist * dist
    d = np.abs(yaws - s.yaw)
    return w.w_t * dist + w.w_r * np.minimum(d, TWO_PI - d)


def path_cost(W: Iterable[SE2State], w: CostWeights = DEFAULT_WEIGHTS) -> float:
    """
    Стоимость пути как сумма стоимостей его отрезков

    Raises:
        ValueError: Если путь пуст
    """
    waypoints = list(W)
    if not waypoints:
        raise ValueError("empty path")
    total = 0.0
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        total += segment_cost(a, b, w)
    return total


def interpolate(s1: SE2State, s2: SE2State, t: float) -> SE2State:
    """
    Линейная интерполяция положения и интерполяция курса по кратчайшей дуге

    Args:
        t (float): Параметр в [0, 1]
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter {t} outside [0, 1]")
    if t == 0.0:
        return s1
    if t == 1.0:
        return s2
    dyaw = normalize_angle(s2.yaw - s1.yaw)
    return SE2State(
        s1.x + (s2.x - s1.x) * t,
        s1.y + (s2.y - s1.y) * t,
        s1.yaw + dyaw * t,
    )


def align_headings(W: Sequence[SE2State], fixed_indices: Set[int]) -> List[SE2State]:
    """
    Выравнивание курса путевых точек по направлению движения.

    Точки с индексами из fixed_indices (старт и PoI) не изменяются.
    При нулевом смещении копируется курс предыдущей точки.

    Args:
        W: Путевые точки
        fixed_indices: Индексы точек с фиксированным курсом

    Returns:
        List[SE2State]: Новый список путевых точек
    """
    waypoints = list(W)
    n = len(waypoints)
    aligned: List[SE2State] = list(waypoints)
    for i in range(n):
        if i in fixed_indices:
            continue
        if i < n - 1:
            a, b = waypoints[i], waypoints[i + 1]
        elif n > 1:
            a, b = waypoints[i - 1], waypoints[i]
        else:
            continue
        dx, dy = b.x - a.x, b.y - a.y
        if dx == 0.0 and dy == 0.0:
            if i > 0:
                aligned[i] = waypoints[i].with_yaw(aligned[i - 1].yaw)
            continue
        aligned[i] = waypoints[i].with_yaw(math.atan2(dy, dx))
    return aligned
