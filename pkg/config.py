from typing import Literal, Optional
import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from exceptions import InputError
from geometry import CostWeights
from roadmap import QueryConfig
from validity import CheckerConfig, RobotFootprint

# Загружаем переменные окружения
load_dotenv()

# Переменные окружения и соответствующие поля конфигурации
ENV_FIELDS = {
    "PLANNER_T_LOW": "t_low",
    "PLANNER_T_HIGH": "t_high",
    "PLANNER_WT": "w_t",
    "PLANNER_WR": "w_r",
    "PLANNER_COST_EXPONENT": "cost_exponent",
    "PLANNER_MAX_VERTICES": "max_vertices",
    "PLANNER_BATCH_SIZE": "batch_size",
    "PLANNER_SAMPLES_PER_QUERY": "samples_per_query",
    "PLANNER_SEED": "seed",
    "PLANNER_FOOTPRINT": "footprint",
    "PLANNER_METHOD": "method",
    "PLANNER_TSP": "tsp",
}


class PlannerConfig(BaseModel):
    """
    Параметры конвейера планирования

    Значения по умолчанию переопределяются переменными окружения,
    а те, в свою очередь, флагами командной строки.
    """
    model_config = ConfigDict(extra='forbid', frozen=True)

    w_t: float = Field(1.0, gt=0)
    w_r: float = Field(1.0, ge=0)
    cost_exponent: int = Field(1, ge=1, le=2)
    t_low: float = Field(0.3, ge=0, le=1)
    t_high: float = Field(0.8, ge=0, le=1)
    max_depth: int = Field(2, ge=0)
    motion_step: float = Field(0.1, gt=0)
    yaw_radius: float = Field(1.0, gt=0)
    footprint: str = "0.8x0.6"
    max_vertices: int = Field(3000, ge=1)
    batch_size: int = Field(256, ge=1)
    samples_per_query: int = Field(512, ge=0)
    time_budget: Optional[float] = Field(None, gt=0)
    k_neighbors_scale: float = Field(1.5, gt=0)
    seed: int = 0
    method: Literal["idp", "dp", "irba"] = "idp"
    tsp: Literal["exact", "heuristic", "auto"] = "auto"

    @model_validator(mode='after')
    def _check_consistency(self):
        if self.t_low > self.t_high:
            raise ValueError(f"t_low {self.t_low} must not exceed t_high {self.t_high}")
        if self.batch_size > self.max_vertices:
            raise ValueError(f"batch_size {self.batch_size} exceeds max_vertices {self.max_vertices}")
        RobotFootprint.parse(self.footprint)
        return self

    @classmethod
    def from_env(cls, **overrides) -> "PlannerConfig":
        """
        Сборка конфигурации: окружение, затем явные значения (None пропускается)

        Raises:
            InputError: Если значения не проходят проверку
        """
        values = {}
        for env_name, field_name in ENV_FIELDS.items():
            raw = os.getenv(env_name)
            if raw is not None and raw != "":
                values[field_name] = raw
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            raise InputError(f"invalid configuration: {e.errors()[0]['loc']}: {e.errors()[0]['msg']}") from e

    @property
    def weights(self) -> CostWeights:
        return CostWeights(self.w_t, self.w_r, self.cost_exponent)

    @property
    def checker(self) -> CheckerConfig:
        return CheckerConfig(self.t_low, self.t_high, self.max_depth, self.motion_step, self.yaw_radius)

    @property
    def query(self) -> QueryConfig:
        return QueryConfig(self.max_vertices, self.batch_size, self.samples_per_query,
                           self.time_budget, self.k_neighbors_scale, self.seed)

    @property
    def robot(self) -> RobotFootprint:
        return RobotFootprint.parse(self.footprint)
