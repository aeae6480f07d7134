"""
Плоские карты TSDF и проходимости: формат файла, точечные запросы
и генератор синтетических сред для тестов и бенчмарков.
"""
from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import Annotated, List, Literal, Optional, Tuple, Union
import json
import math
import os

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from exceptions import EnvSpecError, MapFormatError
from logger import logger

UNKNOWN_TRAVERSABILITY = -1.0
MAP_FILE_VERSION = 1
ENVIRONMENTS_DIR = FilePath(__file__).resolve().parent / "environments"


@dataclass(frozen=True)
class GridHeader:
    """
    Геометрия сетки: разрешение, нижний левый угол ячейки (0,0) и размеры

    Ячейка (row, col) занимает [ox + col*res, ox + (col+1)*res) x [oy + row*res, oy + (row+1)*res).
    """
    resolution: float
    origin: Tuple[float, float]
    width: int
    height: int

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"grid size must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, 'origin', (float(self.origin[0]), float(self.origin[1])))

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """Границы карты по краям ячеек: (xmin, xmax, ymin, ymax)"""
        ox, oy = self.origin
        return (ox, ox + self.width * self.resolution, oy, oy + self.height * self.resolution)

    def cell_index(self, x: float, y: float) -> Optional[Tuple[int, int]]:
        """
        Индекс ячейки (строка, столбец), содержащей точку

        floor((p - origin) / resolution): точка на общей границе двух ячеек
        относится к ячейке, для которой граница нижняя.

        Returns:
            Optional[Tuple[int, int]]: Индекс или None вне карты
        """
        col = math.floor((x - self.origin[0]) / self.resolution)
        row = math.floor((y - self.origin[1]) / self.resolution)
        if 0 <= col < self.width and 0 <= row < self.height:
            return row, col
        return None

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Координаты центров всех ячеек, массивы формы (height, width)"""
        xs = self.origin[0] + self.resolution * (np.arange(self.width) + 0.5)
        ys = self.origin[1] + self.resolution * (np.arange(self.height) + 0.5)
        return np.meshgrid(xs, ys)


@dataclass(frozen=True, eq=False)
class TsdfGrid:
    header: GridHeader
    truncation: float
    values: np.ndarray

    def __post_init__(self):
        _check_layer(self.header, self.values, "tsdf")
        if not self.truncation > 0:
            raise ValueError(f"truncation must be positive, got {self.truncation}")
        if not np.all(np.abs(self.values) <= self.truncation):
            raise ValueError("value out of range: tsdf exceeds truncation")
        self.values.setflags(write=False)


@dataclass(frozen=True, eq=False)
class TraversabilityGrid:
    header: GridHeader
    values: np.ndarray

    def __post_init__(self):
        _check_layer(self.header, self.values, "traversability")
        v = self.values
        if not np.all((v == UNKNOWN_TRAVERSABILITY) | ((v >= 0.0) & (v <= 1.0))):
            raise ValueError("value out of range: traversability must be -1 or in [0, 1]")
        self.values.setflags(write=False)


def _check_layer(header: GridHeader, values: np.ndarray, name: str):
    if values.shape != (header.height, header.width):
        raise ValueError(
            f"layer length mismatch: {name} has shape {values.shape}, "
            f"expected ({header.height}, {header.width})"
        )


@dataclass(frozen=True, eq=False)
class MapBundle:
    """Совмещенные слои TSDF и проходимости с общей геометрией"""
    tsdf: TsdfGrid
    traversability: TraversabilityGrid

    def __post_init__(self):
        if self.tsdf.header != self.traversability.header:
            raise ValueError("tsdf and traversability layers are not co-registered")

    @property
    def header(self) -> GridHeader:
        return self.tsdf.header

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        return self.header.bounds

    def __eq__(self, other) -> bool:
        if not isinstance(other, MapBundle):
            return NotImplemented
        return (self.header == other.header
                and self.tsdf.truncation == other.tsdf.truncation
                and np.array_equal(self.tsdf.values, other.tsdf.values)
                and np.array_equal(self.traversability.values, other.traversability.values))

    __hash__ = None


def query_tsdf(m: MapBundle, p: Tuple[float, float]) -> Optional[float]:
    """
    Значение TSDF в ячейке, содержащей точку

    Returns:
        Optional[float]: Расстояние в метрах или None (неизвестно) вне карты
    """
    index = m.header.cell_index(p[0], p[1])
    if index is None:
        return None
    return float(m.tsdf.values[index])


def query_traversability(m: MapBundle, p: Tuple[float, float]) -> Optional[float]:
    """
    Проходимость в ячейке, содержащей точку

    Returns:
        Optional[float]: Значение в [0, 1] или None для ячеек вне карты и неизвестных
    """
    index = m.header.cell_index(p[0], p[1])
    if index is None:
        return None
    value = float(m.traversability.values[index])
    if value == UNKNOWN_TRAVERSABILITY:
        return None
    return value


# ---------------------------------------------------------------------------
# Описание синтетической среды
# ---------------------------------------------------------------------------

class Disc(BaseModel):
    model_config = ConfigDict(extra='forbid')
    type: Literal['disc'] = 'disc'
    center: Tuple[float, float]
    radius: float = Field(gt=0)

    def sdf(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return np.hypot(xs - self.center[0], ys - self.center[1]) - self.radius

    def extent(self) -> Tuple[float, float, float, float]:
        cx, cy = self.center
        return cx - self.radius, cx + self.radius, cy - self.radius, cy + self.radius


class Rect(BaseModel):
    model_config = ConfigDict(extra='forbid')
    type: Literal['rect'] = 'rect'
    center: Tuple[float, float]
    half_extents: Tuple[float, float]

    @model_validator(mode='after')
    def _positive_extents(self):
        if self.half_extents[0] <= 0 or self.half_extents[1] <= 0:
            raise ValueError("half_extents must be positive")
        return self

    def sdf(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        qx = np.abs(xs - self.center[0]) - self.half_extents[0]
        qy = np.abs(ys - self.center[1]) - self.half_extents[1]
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return outside + inside

    def extent(self) -> Tuple[float, float, float, float]:
        cx, cy = self.center
        hx, hy = self.half_extents
        return cx - hx, cx + hx, cy - hy, cy + hy


Shape = Annotated[Union[Disc, Rect], Field(discriminator='type')]


class TraversabilityRegion(BaseModel):
    model_config = ConfigDict(extra='forbid')
    shape: Shape
    value: float = Field(ge=0.0, le=1.0)


class EnvSpec(BaseModel):
    """Описание синтетической среды (препятствия и области проходимости)"""
    model_config = ConfigDict(extra='forbid')
    bounds: Tuple[float, float, float, float]
    resolution: float = Field(gt=0)
    truncation: float = Field(gt=0)
    base_traversability: float = Field(default=1.0, ge=0.0, le=1.0)
    obstacles: List[Shape] = Field(default_factory=list)
    traversability_regions: List[TraversabilityRegion] = Field(default_factory=list)
    noise_amplitude: float = Field(default=0.0, ge=0.0, le=1.0)
    halo_width: float = Field(default=0.0, ge=0.0)
    halo_traversability: float = Field(default=0.5, ge=0.0, le=1.0)
    unknown_margin: float = Field(default=0.0, ge=0.0)

    @model_validator(mode='after')
    def _ordered_bounds(self):
        xmin, xmax, ymin, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("bounds must satisfy xmin < xmax and ymin < ymax")
        return self

    def obstacle_sdf(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Аналитическое знаковое расстояние до объединения препятствий (без усечения)"""
        sdf = np.full(np.shape(xs), np.inf)
        for obstacle in self.obstacles:
            sdf = np.minimum(sdf, obstacle.sdf(xs, ys))
        return sdf


def _format_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item['loc'])
        message = item['msg']
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        parts.append(f"{location}: {message}" if location else message)
    return "; ".join(parts)


def load_env_spec(path) -> EnvSpec:
    """
    Загрузка описания среды из JSON-файла

    Raises:
        EnvSpecError: Если файл не разбирается или нарушает схему
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise EnvSpecError(f"cannot read env spec {path}: {e}") from e
    try:
        return EnvSpec.model_validate(data)
    except ValidationError as e:
        raise EnvSpecError(f"invalid env spec {path}: {_format_validation_error(e)}") from e


def load_preset(name: str) -> EnvSpec:
    """Загрузка встроенного пресета среды (lunar, indoor)"""
    path = ENVIRONMENTS_DIR / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in ENVIRONMENTS_DIR.glob("*.json"))
        raise EnvSpecError(f"unknown environment preset '{name}', available: {available}")
    return load_env_spec(path)


def generate_synthetic_env(spec: EnvSpec, seed: int = 0) -> MapBundle:
    """
    Генерация карты по описанию среды

    TSDF равна усеченному аналитическому расстоянию до ближайшей границы
    препятствия; проходимость равна базовому значению (с шумом), поверх
    которого рисуются области, и нулю внутри препятствий.

    Args:
        spec (EnvSpec): Описание среды
        seed (int): Зерно генератора шума

    Returns:
        MapBundle: Сгенерированная карта

    Raises:
        EnvSpecError: Если препятствие выходит за границы
    """
    xmin, xmax, ymin, ymax = spec.bounds
    for index, obstacle in enumerate(spec.obstacles):
        oxmin, oxmax, oymin, oymax = obstacle.extent()
        if oxmin < xmin or oxmax > xmax or oymin < ymin or oymax > ymax:
            raise EnvSpecError(f"obstacle {index} lies outside bounds {spec.bounds}")

    res = spec.resolution
    # округление защищает от 29.999999 ячеек при делении
    width = max(1, math.ceil(round((xmax - xmin) / res, 9)))
    height = max(1, math.ceil(round((ymax - ymin) / res, 9)))
    header = GridHeader(res, (xmin, ymin), width, height)
    xs, ys = header.cell_centers()

    sdf = spec.obstacle_sdf(xs, ys)
    tsdf_values = np.clip(sdf, -spec.truncation, spec.truncation)

    rng = np.random.default_rng(seed)
    trav = np.full(xs.shape, spec.base_traversability)
    if spec.noise_amplitude > 0:
        trav = trav + spec.noise_amplitude * rng.uniform(-1.0, 1.0, size=xs.shape)
        trav = np.clip(trav, 0.0, 1.0)
    for region in spec.traversability_regions:
        trav[region.shape.sdf(xs, ys) <= 0.0] = region.value
    if spec.halo_width > 0:
        # полоса вокруг препятствий не выше halo_traversability
        halo = (sdf > 0.0) & (sdf <= spec.halo_width)
        trav[halo] = np.minimum(trav[halo], spec.halo_traversability)
    if spec.unknown_margin > 0:
        trav[(sdf > 0.0) & (sdf <= spec.unknown_margin)] = UNKNOWN_TRAVERSABILITY
    trav[sdf <= 0.0] = 0.0

    bundle = MapBundle(
        TsdfGrid(header, spec.truncation, np.ascontiguousarray(tsdf_values, dtype=float)),
        TraversabilityGrid(header, np.ascontiguousarray(trav, dtype=float)),
    )
    logger.info(
        f"Сгенерирована карта {width}x{height} (разрешение {res} м, "
        f"препятствий: {len(spec.obstacles)}, областей: {len(spec.traversability_regions)})"
    )
    return bundle


# ---------------------------------------------------------------------------
# Файл карты
# ---------------------------------------------------------------------------

class MapFile(BaseModel):
    """Схема JSON-файла карты"""
    model_config = ConfigDict(extra='forbid')
    version: Literal[1]
    resolution: float = Field(gt=0)
    origin: Tuple[float, float]
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    truncation: float = Field(gt=0)
    tsdf: List[float]
    traversability: List[float]

    @model_validator(mode='after')
    def _check_layers(self):
        expected = self.width * self.height
        for name in ("tsdf", "traversability"):
            actual = len(getattr(self, name))
            if actual != expected:
                raise ValueError(
                    f"layer length mismatch: {name} has {actual} values, "
                    f"expected width*height = {expected}"
                )
        for i, v in enumerate(self.tsdf):
            if not abs(v) <= self.truncation:
                raise ValueError(f"value out of range: tsdf[{i}] = {v} exceeds truncation {self.truncation}")
        for i, v in enumerate(self.traversability):
            if not (v == UNKNOWN_TRAVERSABILITY or 0.0 <= v <= 1.0):
                raise ValueError(f"value out of range: traversability[{i}] = {v}")
        return self


def map_to_dict(m: MapBundle) -> dict:
    header = m.header
    return {
        "version": MAP_FILE_VERSION,
        "resolution": header.resolution,
        "origin": [header.origin[0], header.origin[1]],
        "width": header.width,
        "height": header.height,
        "truncation": m.tsdf.truncation,
        "tsdf": m.tsdf.values.ravel().tolist(),
        "traversability": m.traversability.values.ravel().tolist(),
    }


def map_from_dict(data: dict, source: str = "<memory>") -> MapBundle:
    try:
        parsed = MapFile.model_validate(data)
    except ValidationError as e:
        raise MapFormatError(f"invalid map {source}: {_format_validation_error(e)}") from e
    header = GridHeader(parsed.resolution, parsed.origin, parsed.width, parsed.height)
    shape = (parsed.height, parsed.width)
    return MapBundle(
        TsdfGrid(header, parsed.truncation, np.array(parsed.tsdf, dtype=float).reshape(shape)),
        TraversabilityGrid(header, np.array(parsed.traversability, dtype=float).reshape(shape)),
    )


def save_map(m: MapBundle, path) -> None:
    """
    Сохранение карты в JSON-файл
    """
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(map_to_dict(m), f)
    logger.info(f"Карта сохранена в {path}")


def load_map(path) -> MapBundle:
    """
    Загрузка карты из JSON-файла

    Raises:
        MapFormatError: Если файл не читается или нарушает формат
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise MapFormatError(f"cannot read map {path}: {e}") from e
    m = map_from_dict(data, source=str(path))
    logger.info(f"Карта загружена из {path}: {m.header.width}x{m.header.height}")
    return m
