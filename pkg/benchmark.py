"""
Сравнительные запуски методов выбора PoI: повторные прогоны с разными
зернами, сводка среднего и разброса, отчет в JSON.
"""
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple
import json
import os
import time

import numpy as np
from pydantic import ValidationError
from tqdm import tqdm

from config import PlannerConfig
from exceptions import InputError, PlannerError
from gridmaps import MapBundle
from logger import log_error, logger
from mission import Mission, generate_mission, json_safe
from pipeline import make_checker, run_mission
from poi_selection import SELECTION_METHODS

AGGREGATED_FIELDS = ("wall_time", "total_cost", "paths_planned", "tsdf_queries",
                     "traversability_queries", "idp_iterations")


def run_trial(m: MapBundle, mission: Mission, config: PlannerConfig, trial: int) -> dict:
    """
    Один прогон конвейера; любое исключение помечает прогон как неудачный

    Returns:
        dict: Запись прогона
    """
    record = {
        "method": config.method,
        "trial": trial,
        "seed": config.seed,
        "t_low": config.t_low,
        "t_high": config.t_high,
        "n_tois": len(mission.tois),
        "status": "ok",
        "error": None,
    }
    started = time.perf_counter()
    try:
        plan = run_mission(m, mission, config)
    except PlannerError as e:
        log_error(e, f"Прогон {config.method} seed={config.seed}")
        record.update({"status": "failed", "error": str(e), "wall_time": time.perf_counter() - started})
        return record
    except Exception as e:
        # сбой вне иерархии планировщика не прерывает серию прогонов
        log_error(e, f"Непредвиденная ошибка в прогоне {config.method} seed={config.seed}")
        record.update({"status": "failed", "error": f"{type(e).__name__}: {e}",
                       "wall_time": time.perf_counter() - started})
        return record
    stats = plan.stats
    record.update({
        "wall_time": time.perf_counter() - started,
        "total_cost": plan.total_cost,
        "paths_planned": stats["paths_planned"],
        "tsdf_queries": stats["tsdf_queries"],
        "traversability_queries": stats["traversability_queries"],
        "idp_iterations": stats["idp_iterations"],
        "checker": stats["checker"],
        "query_timings": stats["query_timings"],
        "wall_times": stats["wall_times"],
        "edge_cache": stats["edge_cache"],
    })
    return record


def _run_trial_job(job: Tuple[MapBundle, Mission, dict, int]) -> dict:
    m, mission, config_values, trial = job
    return run_trial(m, mission, PlannerConfig(**config_values), trial)


def aggregate(records: Sequence[dict]) -> List[dict]:
    """
    Среднее и стандартное отклонение по группам (метод, пороги, число ToI)
    """
    groups: Dict[tuple, List[dict]] = {}
    for record in records:
        key = (record["method"], record["t_low"], record["t_high"], record["n_tois"])
        groups.setdefault(key, []).append(record)

    summary = []
    for (method, t_low, t_high, n_tois), group in groups.items():
        ok = [r for r in group if r["status"] == "ok"]
        row = {
            "method": method,
            "t_low": t_low,
            "t_high": t_high,
            "n_tois": n_tois,
            "trials": len(group),
            "failed": len(group) - len(ok),
        }
        for name in AGGREGATED_FIELDS:
            values = np.array([r[name] for r in ok], dtype=float)
            row[f"{name}_mean"] = float(values.mean()) if len(values) else None
            row[f"{name}_std"] = float(values.std()) if len(values) else None
        summary.append(row)
    return summary


def benchmark(m: MapBundle, mission: Optional[Mission], methods: Sequence[str], trials: int,
              seed: int = 0, config: PlannerConfig = None,
              checker_configs: Optional[Sequence[Tuple[float, float]]] = None,
              n_tois_list: Optional[Sequence[int]] = None, m_pois: int = 6,
              parallel: bool = False, workers: Optional[int] = None,
              progress: bool = True) -> dict:
    """
    Прогоны методов с зернами seed..seed+trials-1

    Args:
        m (MapBundle): Карта
        mission (Mission): Миссия (не нужна при n_tois_list)
        methods: Подмножество {'dp', 'idp', 'irba'}
        trials (int): Число прогонов на конфигурацию
        checker_configs: Пары (t_low, t_high) для сравнения режимов проверки
        n_tois_list: Размеры генерируемых миссий для оценки масштабируемости
        m_pois (int): Число PoI на ToI в генерируемых миссиях
        parallel (bool): Выполнять прогоны в пуле процессов

    Returns:
        dict: {"trials": [...], "aggregate": [...]}
    """
    if not methods:
        raise InputError("benchmark needs at least one method")
    unknown = [name for name in methods if name not in SELECTION_METHODS]
    if unknown:
        raise InputError(f"unknown methods {unknown}, expected a subset of {SELECTION_METHODS}")
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    config = config or PlannerConfig()
    checker_configs = list(checker_configs or [(config.t_low, config.t_high)])

    if n_tois_list:
        checker = make_checker(m, config)
        missions = [generate_mission(m, checker, n, m_pois, seed) for n in n_tois_list]
    elif mission is not None:
        missions = [mission]
    else:
        raise InputError("benchmark needs a mission or a list of ToI counts")

    jobs = []
    for current, method, (t_low, t_high), trial in product(missions, methods, checker_configs, range(trials)):
        values = config.model_dump()
        values.update({"method": method, "t_low": t_low, "t_high": t_high, "seed": seed + trial})
        try:
            PlannerConfig(**values)
        except ValidationError as e:
            raise InputError(f"invalid benchmark configuration {method} ({t_low}, {t_high}): {e.errors()[0]['msg']}") from e
        jobs.append((m, current, values, trial))
    logger.info(f"Бенчмарк: {len(jobs)} прогонов, методы {list(methods)}")

    if parallel:
        with ProcessPoolExecutor(max_workers=workers or os.cpu_count()) as executor:
            records = list(tqdm(executor.map(_run_trial_job, jobs), total=len(jobs),
                                desc="benchmark", disable=not progress))
    else:
        records = [_run_trial_job(job) for job in tqdm(jobs, desc="benchmark", disable=not progress)]

    failed = sum(1 for r in records if r["status"] != "ok")
    if failed:
        logger.warning(f"Неудачных прогонов: {failed} из {len(records)}")
    return {"trials": records, "aggregate": aggregate(records)}


def save_report(report: dict, path) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(json_safe(report), f, indent=2, allow_nan=False)
    logger.info(f"Отчет сохранен в {path}")
