from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from geometry import CostWeights, DEFAULT_WEIGHTS, Path, SE2State, segment_cost
from logger import logger


@dataclass(frozen=True)
class EdgeRecord:
    """Запланированный путь между двумя позами (path=None если недостижимо)"""
    planned: bool
    cost: float
    path: Optional[Path] = None


class EdgeCache:
    """Кэш путей между позами для выбора PoI"""

    def __init__(self, weights: CostWeights = DEFAULT_WEIGHTS):
        """
        Инициализация кэша

        Args:
            weights (CostWeights): Веса стоимости для нижних оценок незапланированных пар
        """
        self._cache: Dict[Tuple[SE2State, SE2State], EdgeRecord] = {}
        self.weights = weights
        self.hits = 0
        self.misses = 0

    def get(self, a: SE2State, b: SE2State) -> Optional[EdgeRecord]:
        """
        Получение записи для направленной пары поз

        Returns:
            Optional[EdgeRecord]: Запись или None если пара не планировалась
        """
        record = self._cache.get((a, b))
        if record is None:
            self.misses += 1
        else:
            self.hits += 1
        return record

    def set(self, a: SE2State, b: SE2State, cost: float, path: Optional[Path]) -> None:
        """
        Сохранение запланированного пути

        Args:
            a (SE2State): Начало
            b (SE2State): Конец
            cost (float): Стоимость пути (inf если путь не найден)
            path (Optional[Path]): Путь
        """
        self._cache[(a, b)] = EdgeRecord(True, cost, path)
        logger.debug(f"Путь {a} -> {b} добавлен в кэш, cost={cost:.4f}")

    def is_planned(self, a: SE2State, b: SE2State) -> bool:
        return (a, b) in self._cache

    def cost(self, a: SE2State, b: SE2State) -> float:
        """Стоимость запланированного пути или нижняя оценка segment_cost"""
        record = self._cache.get((a, b))
        if record is not None:
            return record.cost
        if a == b:
            return 0.0
        return segment_cost(a, b, self.weights)

    def __len__(self) -> int:
        return len(self._cache)

    def get_stats(self) -> Dict[str, int]:
        """
        Получение статистики кэша

        Returns:
            Dict[str, int]: Число записей, попаданий и промахов
        """
        return {
            "size": len(self._cache),
            "hits": self.hits,
            "misses": self.misses,
        }
