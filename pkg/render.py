"""
Отрисовка карты, миссии и плана в SVG через matplotlib.
"""
from typing import List, Optional
import io
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from exceptions import InputError
from geometry import SE2State
from gridmaps import UNKNOWN_TRAVERSABILITY, MapBundle
from logger import logger
from mission import Mission, Plan

PIXELS_PER_METER = 20.0
UNKNOWN_COLOR = "#9e9e9e"
OBSTACLE_COLOR = "#000000"
PATH_COLOR = "#1565c0"
POI_COLOR = "#ef6c00"
CHOSEN_POI_COLOR = "#c62828"
START_COLOR = "#2e7d32"

# фиксированная соль id и без упрощения линий: одинаковый вход дает одинаковый файл
SVG_RC = {"svg.hashsalt": "multi-goal-planner", "path.simplify": False}


def _check_bounds(m: MapBundle, poses: List[SE2State]) -> None:
    xmin, xmax, ymin, ymax = m.bounds
    for p in poses:
        if not (xmin <= p.x <= xmax and ymin <= p.y <= ymax):
            raise InputError(f"pose {p} lies outside map bounds {m.bounds}")


def _draw_map(ax, m: MapBundle) -> None:
    values = m.traversability.values
    layer = np.ma.masked_where(values == UNKNOWN_TRAVERSABILITY, values)
    cmap = matplotlib.colormaps["RdYlGn"].with_extremes(bad=UNKNOWN_COLOR)
    xmin, xmax, ymin, ymax = m.bounds
    image = ax.imshow(layer, cmap=cmap, vmin=0.0, vmax=1.0, origin="lower",
                      extent=(xmin, xmax, ymin, ymax), interpolation="nearest")
    image.set_gid("traversability")

    tsdf = m.tsdf.values
    if (tsdf <= 0.0).any() and (tsdf > 0.0).any():
        xs, ys = m.header.cell_centers()
        contour = ax.contour(xs, ys, tsdf, levels=[0.0], colors=OBSTACLE_COLOR, linewidths=1.5)
        contour.set_gid("obstacles")


def _draw_mission(ax, mission: Mission, plan: Optional[Plan]) -> None:
    chosen = set()
    if plan is not None:
        chosen = {(toi_id, index) for toi_id, index in zip(plan.sequence, plan.chosen_pois)}
    tois = [toi.pose for toi in mission.tois]
    picked = [poi for toi in mission.tois for i, poi in enumerate(toi.pois) if (toi.id, i) in chosen]
    others = [poi for toi in mission.tois for i, poi in enumerate(toi.pois) if (toi.id, i) not in chosen]
    for gid, poses, style in (
        ("tois", tois, dict(marker="s", markersize=5, markerfacecolor="none", color=POI_COLOR)),
        ("pois", others, dict(marker="o", markersize=4, color=POI_COLOR)),
        ("chosen-pois", picked, dict(marker="o", markersize=7, color=CHOSEN_POI_COLOR)),
    ):
        if poses:
            line, = ax.plot([p.x for p in poses], [p.y for p in poses], linestyle="none", **style)
            line.set_gid(gid)


def build_figure(m: MapBundle, plan: Optional[Plan] = None, mission: Optional[Mission] = None,
                 scale: float = PIXELS_PER_METER):
    """
    Фигура без осей, размер в точках равен размеру карты в метрах, умноженному на scale

    Raises:
        InputError: Если позы плана или миссии лежат вне границ карты
    """
    poses: List[SE2State] = []
    if plan is not None:
        poses.extend(plan.waypoints)
    if mission is not None:
        poses.append(mission.start)
        poses.extend(p for toi in mission.tois for p in toi.pois)
    _check_bounds(m, poses)

    xmin, xmax, ymin, ymax = m.bounds
    # SVG считает 72 точки на дюйм
    fig = plt.figure(figsize=((xmax - xmin) * scale / 72.0, (ymax - ymin) * scale / 72.0))
    ax = fig.add_axes((0.0, 0.0, 1.0, 1.0))
    ax.set_axis_off()
    _draw_map(ax, m)
    if mission is not None:
        _draw_mission(ax, mission, plan)

    start = None
    if plan is not None and len(plan.waypoints) > 0:
        path, = ax.plot([w.x for w in plan.waypoints], [w.y for w in plan.waypoints],
                        color=PATH_COLOR, linewidth=2.0, marker=".", markersize=3)
        path.set_gid("path")
        start = plan.waypoints[0]
    elif mission is not None:
        start = mission.start
    if start is not None:
        marker, = ax.plot([start.x], [start.y], marker="*", markersize=10, linestyle="none",
                          color=START_COLOR, markeredgecolor="white")
        marker.set_gid("start")

    ax.set_xlim(xmin, xmax)
    ax.set_ylim(ymin, ymax)
    return fig


def build_svg(m: MapBundle, plan: Optional[Plan] = None, mission: Optional[Mission] = None,
              scale: float = PIXELS_PER_METER) -> str:
    """Построение SVG-документа в памяти"""
    fig = build_figure(m, plan, mission, scale)
    buffer = io.BytesIO()
    try:
        with plt.rc_context(SVG_RC):
            fig.savefig(buffer, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return buffer.getvalue().decode("utf-8")


def render_svg(m: MapBundle, out_path, plan: Optional[Plan] = None,
               mission: Optional[Mission] = None) -> None:
    """
    Отрисовка карты с миссией и/или планом в файл SVG
    """
    svg = build_svg(m, plan, mission)
    directory = os.path.dirname(os.fspath(out_path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(out_path, 'w', encoding='utf-8') as f:
        f.write(svg)
    logger.info(f"SVG сохранен в {out_path}")
