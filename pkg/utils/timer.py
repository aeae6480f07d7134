from collections import defaultdict
from contextlib import contextmanager
from typing import Dict
import time


class PhaseTimer:
    """
    Учет времени по этапам (поиск, выборка, проверка вершин и ребер, ...)

    Attributes:
        totals (Dict[str, float]): Суммарное время этапов в секундах
    """

    def __init__(self):
        self.totals: Dict[str, float] = defaultdict(float)

    @contextmanager
    def phase(self, name: str):
        started = time.perf_counter()
        try:
            yield
        finally:
            self.totals[name] += time.perf_counter() - started

    def add(self, name: str, seconds: float) -> None:
        self.totals[name] += seconds

    def as_dict(self) -> Dict[str, float]:
        return dict(sorted(self.totals.items()))
