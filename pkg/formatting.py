from typing import Optional, Sequence

from rich.console import Console
from rich.table import Table

from mission import Plan

# Отчеты идут в stdout, логи - в stderr
console = Console()


def _number(value: Optional[float], digits: int = 3) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def plan_summary_table(plan: Plan) -> Table:
    """
    Таблица участков плана

    Args:
        plan (Plan): План миссии

    Returns:
        Table: Таблица rich
    """
    table = Table(title=f"План: стоимость {plan.total_cost:.3f}, точек {len(plan.waypoints)}")
    table.add_column("#", justify="right")
    table.add_column("ToI")
    table.add_column("PoI", justify="right")
    table.add_column("Стоимость участка", justify="right")
    for i, (toi_id, poi) in enumerate(zip(plan.sequence, plan.chosen_pois)):
        table.add_row(str(i + 1), toi_id, str(poi), _number(plan.segment_costs[i]))
    if plan.segment_costs:
        table.add_row("", "start", "", _number(plan.segment_costs[-1]))
    return table


def plan_stats_table(plan: Plan) -> Table:
    """Статистика запуска: запросы к картам, пути, время этапов"""
    stats = plan.stats
    table = Table(title="Статистика", show_header=False)
    table.add_column("Параметр")
    table.add_column("Значение", justify="right")
    for key in ("method", "paths_planned", "idp_iterations", "tsdf_queries",
                "traversability_queries", "roadmap_vertices"):
        if key in stats:
            table.add_row(key, str(stats[key]))
    for phase, seconds in stats.get("wall_times", {}).items():
        table.add_row(f"time: {phase}", f"{seconds:.3f} s")
    return table


def benchmark_table(aggregate: Sequence[dict]) -> Table:
    """
    Сводная таблица бенчмарка: среднее ± отклонение по группам
    """
    table = Table(title="Бенчмарк")
    for column in ("method", "t_low/t_high", "N", "ok/all", "time, s", "cost",
                   "paths", "TSDF queries", "trav. queries"):
        table.add_column(column, justify="left" if column == "method" else "right")

    def mean_std(row: dict, name: str, digits: int = 3) -> str:
        mean = row.get(f"{name}_mean")
        if mean is None:
            return "-"
        return f"{mean:.{digits}f} ± {row[f'{name}_std']:.{digits}f}"

    for row in aggregate:
        table.add_row(
            row["method"],
            f"{row['t_low']}/{row['t_high']}",
            str(row["n_tois"]),
            f"{row['trials'] - row['failed']}/{row['trials']}",
            mean_std(row, "wall_time"),
            mean_std(row, "total_cost"),
            mean_std(row, "paths_planned", 1),
            mean_std(row, "tsdf_queries", 0),
            mean_std(row, "traversability_queries", 0),
        )
    return table


def print_plan(plan: Plan) -> None:
    console.print(plan_summary_table(plan))
    console.print(plan_stats_table(plan))


def print_benchmark(aggregate: Sequence[dict]) -> None:
    console.print(benchmark_table(aggregate))
