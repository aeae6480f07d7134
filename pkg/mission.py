"""
Миссия (старт и ToI с наборами PoI) и план (результат конвейера):
типы, JSON-файлы, проверка при загрузке и генерация миссий.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple
import json
import math
import os

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from exceptions import InputError, InvalidPoseError, MissionFormatError
from geometry import Path, SE2State
from gridmaps import MapBundle, _format_validation_error
from logger import logger
from validity import StateValidityChecker

MISSION_FILE_VERSION = 1

Triple = Tuple[float, float, float]


@dataclass(frozen=True)
class ToI:
    """Цель осмотра: поза и непустой набор поз осмотра"""
    id: str
    pose: SE2State
    pois: Tuple[SE2State, ...]


@dataclass(frozen=True)
class Mission:
    start: SE2State
    tois: Tuple[ToI, ...] = ()

    def toi_by_id(self, toi_id: str) -> ToI:
        for toi in self.tois:
            if toi.id == toi_id:
                return toi
        raise KeyError(toi_id)


@dataclass
class Plan:
    """
    Замкнутый маршрут миссии

    Attributes:
        sequence: Идентификаторы ToI в порядке обхода
        chosen_pois: Индекс выбранной PoI для каждого ToI последовательности
        waypoints: Путевые точки, первая и последняя совпадают со стартом
        segment_costs: Стоимости участков между соседними остановками
        total_cost: Сумма segment_costs
        stats: Статистика запуска
    """
    sequence: List[str]
    chosen_pois: List[int]
    waypoints: Path
    segment_costs: List[float]
    total_cost: float
    stats: Dict[str, Any] = field(default_factory=dict)
    closed: bool = True


# ---------------------------------------------------------------------------
# Схемы файлов
# ---------------------------------------------------------------------------

class ToIEntry(BaseModel):
    model_config = ConfigDict(extra='forbid')
    id: str
    pose: Triple
    pois: List[Triple] = Field(min_length=1)


class MissionFile(BaseModel):
    model_config = ConfigDict(extra='forbid')
    version: Literal[1]
    start: Triple
    tois: List[ToIEntry] = Field(default_factory=list)

    @field_validator('tois')
    @classmethod
    def _unique_ids(cls, tois: List[ToIEntry]) -> List[ToIEntry]:
        seen = set()
        for toi in tois:
            if toi.id in seen:
                raise ValueError(f"duplicate ToI id '{toi.id}'")
            seen.add(toi.id)
        return tois


class PlanFile(BaseModel):
    model_config = ConfigDict(extra='forbid')
    version: Literal[1] = 1
    closed: Literal[True] = True
    sequence: List[str]
    chosen_pois: List[int]
    waypoints: List[Triple] = Field(min_length=1)
    segment_costs: List[float]
    total_cost: float
    stats: Dict[str, Any] = Field(default_factory=dict)


def _read_json(path) -> Any:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise MissionFormatError(f"cannot read {path}: {e}") from e


def json_safe(value: Any) -> Any:
    """
    Приведение к строгому JSON: бесконечности и NaN становятся null
    """
    if isinstance(value, dict):
        return {key: json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_json(data: Any, path) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(json_safe(data), f, indent=2, allow_nan=False)


def mission_from_dict(data: dict, source: str = "<memory>") -> Mission:
    try:
        parsed = MissionFile.model_validate(data)
    except ValidationError as e:
        raise MissionFormatError(f"invalid mission {source}: {_format_validation_error(e)}") from e
    tois = tuple(
        ToI(entry.id, SE2State.from_sequence(entry.pose),
            tuple(SE2State.from_sequence(p) for p in entry.pois))
        for entry in parsed.tois
    )
    return Mission(SE2State.from_sequence(parsed.start), tois)


def mission_to_dict(mission: Mission) -> dict:
    return {
        "version": MISSION_FILE_VERSION,
        "start": mission.start.as_list(),
        "tois": [
            {"id": toi.id, "pose": toi.pose.as_list(), "pois": [p.as_list() for p in toi.pois]}
            for toi in mission.tois
        ],
    }


def load_mission(path) -> Mission:
    """
    Загрузка миссии из JSON-файла

    Raises:
        MissionFormatError: Если файл не читается или нарушает схему
    """
    mission = mission_from_dict(_read_json(path), str(path))
    logger.info(f"Загружена миссия {path}: {len(mission.tois)} ToI")
    return mission


def save_mission(mission: Mission, path) -> None:
    _write_json(mission_to_dict(mission), path)
    logger.info(f"Миссия сохранена в {path}")


def validate_mission(mission: Mission, checker: StateValidityChecker) -> None:
    """
    Проверка старта и всех PoI на валидность

    Raises:
        InvalidPoseError: С указанием ToI и индекса PoI
    """
    if not checker.check_state(mission.start):
        raise InvalidPoseError(None, None, mission.start)
    for toi in mission.tois:
        if not toi.pois:
            raise MissionFormatError(f"ToI has no PoI: '{toi.id}'")
        for index, poi in enumerate(toi.pois):
            if not checker.check_state(poi):
                raise InvalidPoseError(toi.id, index, poi)


def plan_to_dict(plan: Plan) -> dict:
    return {
        "version": 1,
        "closed": plan.closed,
        "sequence": list(plan.sequence),
        "chosen_pois": list(plan.chosen_pois),
        "waypoints": [w.as_list() for w in plan.waypoints],
        "segment_costs": list(plan.segment_costs),
        "total_cost": plan.total_cost,
        "stats": plan.stats,
    }


def plan_from_dict(data: dict, source: str = "<memory>") -> Plan:
    try:
        parsed = PlanFile.model_validate(data)
    except ValidationError as e:
        raise MissionFormatError(f"invalid plan {source}: {_format_validation_error(e)}") from e
    return Plan(
        sequence=parsed.sequence,
        chosen_pois=parsed.chosen_pois,
        waypoints=Path([SE2State.from_sequence(w) for w in parsed.waypoints]),
        segment_costs=parsed.segment_costs,
        total_cost=parsed.total_cost,
        stats=parsed.stats,
        closed=parsed.closed,
    )


def save_plan(plan: Plan, path) -> None:
    _write_json(plan_to_dict(plan), path)
    logger.info(f"План сохранен в {path}")


def load_plan(path) -> Plan:
    return plan_from_dict(_read_json(path), str(path))


# ---------------------------------------------------------------------------
# Генерация миссий
# ---------------------------------------------------------------------------

def generate_mission(m: MapBundle, checker: StateValidityChecker, n_tois: int, m_pois: int,
                     seed: int = 0, ring: Tuple[float, float] = (1.0, 2.0),
                     max_attempts: int = 200) -> Mission:
    """
    Генерация миссии: N целей, у каждой M поз осмотра на кольце вокруг цели,
    повернутых к ней; старт и все PoI валидны

    Args:
        m (MapBundle): Карта
        checker (StateValidityChecker): Проверка валидности поз
        n_tois (int): Число целей
        m_pois (int): Число PoI на цель
        seed (int): Зерно генератора
        ring (Tuple[float, float]): Внутренний и внешний радиусы кольца
        max_attempts (int): Число попыток на одну позу

    Raises:
        InputError: Если не удается разместить позы
    """
    if n_tois < 0 or m_pois < 1:
        raise InputError(f"need n_tois >= 0 and m_pois >= 1, got {n_tois}, {m_pois}")
    r_min, r_max = ring
    if not 0 < r_min <= r_max:
        raise InputError(f"invalid PoI ring {ring}")
    rng = np.random.default_rng(seed)
    xmin, xmax, ymin, ymax = m.bounds

    def random_point(margin: float) -> Tuple[float, float]:
        return (rng.uniform(xmin + margin, xmax - margin), rng.uniform(ymin + margin, ymax - margin))

    start = None
    for _ in range(max_attempts):
        x, y = random_point(0.5)
        candidate = SE2State(x, y, rng.uniform(-math.pi, math.pi))
        if checker.check_state(candidate):
            start = candidate
            break
    if start is None:
        raise InputError("cannot place a valid start pose")

    tois: List[ToI] = []
    for t in range(n_tois):
        placed: Optional[ToI] = None
        for _ in range(max_attempts):
            tx, ty = random_point(r_max)
            pois: List[SE2State] = []
            for _ in range(max_attempts):
                if len(pois) == m_pois:
                    break
                radius = rng.uniform(r_min, r_max)
                phi = rng.uniform(-math.pi, math.pi)
                poi = SE2State(tx + radius * math.cos(phi), ty + radius * math.sin(phi), phi + math.pi)
                if checker.check_state(poi):
                    pois.append(poi)
            if len(pois) == m_pois:
                placed = ToI(f"t{t + 1}", SE2State(tx, ty, 0.0), tuple(pois))
                break
        if placed is None:
            raise InputError(f"cannot place ToI {t + 1} with {m_pois} valid PoIs")
        tois.append(placed)

    logger.info(f"Сгенерирована миссия: {n_tois} ToI по {m_pois} PoI, seed={seed}")
    return Mission(start, tuple(tois))
