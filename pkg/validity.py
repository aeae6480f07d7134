"""
Иерархическая проверка валидности состояний: фильтр по порогам проходимости,
затем итеративная объемная проверка контура робота по TSDF.
"""
from dataclasses import dataclass, asdict, fields
from enum import Enum
from typing import Dict, Tuple
import math

from geometry import SE2State, angle_diff, interpolate
from gridmaps import MapBundle, query_traversability, query_tsdf


class BoxResult(Enum):
    FREE = "free"
    COLLISION = "collision"


@dataclass(frozen=True)
class RobotFootprint:
    """
    Прямоугольный контур основания робота.

    Длина направлена вдоль курса; если задана длина меньше ширины,
    стороны меняются местами, а контур поворачивается на 90 градусов.
    """
    length: float = 0.8
    width: float = 0.6
    yaw_offset: float = 0.0

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"footprint sides must be positive, got {self.length}x{self.width}")
        if self.length < self.width:
            length, width = self.width, self.length
            object.__setattr__(self, 'length', length)
            object.__setattr__(self, 'width', width)
            object.__setattr__(self, 'yaw_offset', self.yaw_offset + math.pi / 2)

    @property
    def half_len(self) -> float:
        return 0.5 * self.length

    @property
    def half_wid(self) -> float:
        return 0.5 * self.width

    @classmethod
    def parse(cls, text: str) -> "RobotFootprint":
        """Разбор строки вида '0.8x0.6'"""
        try:
            length, width = (float(part) for part in text.lower().split('x'))
        except ValueError as e:
            raise ValueError(f"footprint must look like LxW, got '{text}'") from e
        return cls(length, width)


@dataclass(frozen=True)
class CheckerConfig:
    t_low: float = 0.3
    t_high: float = 0.8
    max_depth: int = 2
    motion_step: float = 0.1
    yaw_radius: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.t_low <= self.t_high <= 1.0:
            raise ValueError(
                f"thresholds must satisfy 0 <= t_low <= t_high <= 1, got {self.t_low}, {self.t_high}"
            )
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0, got {self.max_depth}")
        if not self.motion_step > 0:
            raise ValueError(f"motion_step must be positive, got {self.motion_step}")
        if not self.yaw_radius > 0:
            raise ValueError(f"yaw_radius must be positive, got {self.yaw_radius}")


@dataclass
class CheckStats:
    """Счетчики запросов к картам за сессию планирования"""
    traversability_queries: int = 0
    tsdf_queries: int = 0
    states_accepted_by_traversability: int = 0
    states_rejected_by_traversability: int = 0
    states_sent_to_volumetric: int = 0
    motions_checked: int = 0

    def copy(self) -> "CheckStats":
        return CheckStats(**asdict(self))

    def __sub__(self, other: "CheckStats") -> "CheckStats":
        return CheckStats(**{f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)})

    def as_dict(self) -> Dict[str, int]:
        return asdict(self)


class StateValidityChecker:
    """
    Проверка состояний и движений робота на карте

    Attributes:
        map (MapBundle): Карта (только чтение)
        footprint (RobotFootprint): Контур робота
        config (CheckerConfig): Пороги и параметры
        stats (CheckStats): Собственные счетчики сессии
    """

    def __init__(self, m: MapBundle, footprint: RobotFootprint = None,
                 config: CheckerConfig = None, stats: CheckStats = None):
        self.map = m
        self.footprint = footprint or RobotFootprint()
        self.config = config or CheckerConfig()
        self.stats = stats if stats is not None else CheckStats()

    def spawn(self) -> "StateValidityChecker":
        """Копия проверяльщика с собственными счетчиками (для параллельных сессий)"""
        return StateValidityChecker(self.map, self.footprint, self.config)

    def check_state(self, s: SE2State) -> bool:
        """
        Иерархическая проверка состояния

        Проходимость ниже t_low или неизвестная - невалидно, выше t_high -
        валидно; в промежуточной полосе решает объемная проверка контура.

        Returns:
            bool: True если состояние валидно
        """
        self.stats.traversability_queries += 1
        trav = query_traversability(self.map, (s.x, s.y))
        if trav is None or trav < self.config.t_low:
            self.stats.states_rejected_by_traversability += 1
            return False
        if trav > self.config.t_high:
            self.stats.states_accepted_by_traversability += 1
            return True
        self.stats.states_sent_to_volumetric += 1
        return self.check_footprint(s) is BoxResult.FREE

    def check_footprint(self, s: SE2State) -> BoxResult:
        """Объемная проверка контура робота в состоянии s"""
        fp = self.footprint
        return self.check_box_collision((s.x, s.y), fp.half_len, fp.half_wid, s.yaw + fp.yaw_offset)

    def check_box_collision(self, center: Tuple[float, float], half_len: float, half_wid: float,
                            yaw: float, depth: int = 0) -> BoxResult:
        """
        Итеративная проверка прямоугольника по TSDF

        Расстояние в центре сравнивается с радиусами вписанной и описанной
        окружностей; при неопределенности прямоугольник делится пополам
        вдоль длинной стороны. На последнем уровне учитывается только
        описанная окружность.

        Args:
            center: Центр прямоугольника (x, y)
            half_len: Половина длинной стороны
            half_wid: Половина короткой стороны
            yaw: Направление длинной стороны
            depth: Текущая глубина рекурсии

        Returns:
            BoxResult: FREE или COLLISION
        """
        self.stats.tsdf_queries += 1
        d = query_tsdf(self.map, center)
        if d is None:
            return BoxResult.COLLISION
        r_out = math.hypot(half_len, half_wid)
        if depth >= self.config.max_depth:
            return BoxResult.FREE if d > r_out else BoxResult.COLLISION
        if d < half_wid:
            return BoxResult.COLLISION
        if d > r_out:
            return BoxResult.FREE

        offset = 0.5 * half_len
        cx, cy = center
        dx, dy = offset * math.cos(yaw), offset * math.sin(yaw)
        sub_len, sub_wid, sub_yaw = offset, half_wid, yaw
        if sub_len < sub_wid:
            sub_len, sub_wid, sub_yaw = sub_wid, sub_len, yaw + math.pi / 2
        for sign in (1.0, -1.0):
            sub_center = (cx + sign * dx, cy + sign * dy)
            if self.check_box_collision(sub_center, sub_len, sub_wid, sub_yaw, depth + 1) is BoxResult.COLLISION:
                return BoxResult.COLLISION
        return BoxResult.FREE

    def motion_steps(self, s1: SE2State, s2: SE2State) -> int:
        """Число интервалов дискретизации движения"""
        step = self.config.motion_step
        n_trans = math.ceil(math.hypot(s2.x - s1.x, s2.y - s1.y) / step)
        n_rot = math.ceil(angle_diff(s1.yaw, s2.yaw) * self.config.yaw_radius / step)
        return max(1, n_trans, n_rot)

    def check_motion(self, s1: SE2State, s2: SE2State, check_endpoints: bool = True) -> bool:
        """
        Проверка движения между двумя состояниями

        Промежуточные состояния берутся с шагом не более motion_step по
        положению и motion_step / yaw_radius по курсу, от s1 к s2.

        Args:
            check_endpoints: Проверять ли сами s1 и s2 (у вершин графа они уже проверены)

        Returns:
            bool: True если все состояния валидны
        """
        self.stats.motions_checked += 1
        if check_endpoints:
            if not self.check_state(s1):
                return False
            if s2 != s1 and not self.check_state(s2):
                return False
        if s1 == s2:
            return True
        n = self.motion_steps(s1, s2)
        for k in range(1, n):
            if not self.check_state(interpolate(s1, s2, k / n)):
                return False
        return True
