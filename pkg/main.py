import argparse
import os
import sys
from typing import List, Optional

from benchmark import benchmark, save_report
from config import PlannerConfig
from exceptions import EXIT_INVARIANT_VIOLATION, EXIT_OK, InputError, PlannerError
from formatting import print_benchmark, print_plan
from gridmaps import generate_synthetic_env, load_env_spec, load_map, load_preset, save_map
from logger import log_error, logger
from mission import generate_mission, load_mission, load_plan, save_mission, save_plan
from pipeline import make_checker, prepare_roadmap, run_mission
from render import render_svg


def _add_planner_flags(parser: argparse.ArgumentParser, thresholds: bool = True) -> None:
    if thresholds:
        parser.add_argument("--t-low", type=float, help="порог проходимости: ниже - невалидно")
        parser.add_argument("--t-high", type=float, help="порог проходимости: выше - валидно")
    parser.add_argument("--wt", type=float, help="вес трансляционной стоимости")
    parser.add_argument("--wr", type=float, help="вес вращательной стоимости")
    parser.add_argument("--seed", type=int, help="зерно генератора")
    parser.add_argument("--max-vertices", type=int, help="предел вершин дорожной карты")
    parser.add_argument("--tsp", choices=["exact", "heuristic", "auto"], help="решатель TSP")
    parser.add_argument("--footprint", help="контур робота LxW, например 0.8x0.6")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planner",
        description="Безопасное планирование обхода целей: последовательность, выбор поз, пути",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="спланировать маршрут миссии")
    plan.add_argument("--map", required=True)
    plan.add_argument("--mission", required=True)
    plan.add_argument("--out", required=True)
    plan.add_argument("--method", choices=["idp", "dp", "irba"])
    plan.add_argument("--freeze-roadmap", action="store_true",
                      help="построить дорожную карту заранее и запретить ее рост")
    _add_planner_flags(plan)

    bench = sub.add_parser("bench", help="сравнить методы выбора PoI")
    bench.add_argument("--map", required=True)
    bench.add_argument("--mission", help="миссия (не нужна при --n-tois)")
    bench.add_argument("--out", required=True, help="JSON-отчет")
    bench.add_argument("--methods", default="dp,idp", help="список через запятую из dp, idp, irba")
    bench.add_argument("--trials", type=int, default=10)
    bench.add_argument("--t-low", type=float, nargs="+", help="один или несколько порогов t_low")
    bench.add_argument("--t-high", type=float, nargs="+", help="пороги t_high (по одному на t_low)")
    bench.add_argument("--n-tois", type=int, nargs="+", help="размеры генерируемых миссий")
    bench.add_argument("--m-pois", type=int, default=6)
    bench.add_argument("--parallel", action="store_true", help="прогоны в пуле процессов")
    bench.add_argument("--workers", type=int)
    _add_planner_flags(bench, thresholds=False)

    gen_env = sub.add_parser("gen-env", help="сгенерировать синтетическую карту")
    gen_env.add_argument("--spec", required=True, help="JSON-описание среды или имя пресета (lunar, indoor)")
    gen_env.add_argument("--seed", type=int, default=0)
    gen_env.add_argument("--out", required=True)

    gen_mission = sub.add_parser("gen-mission", help="сгенерировать миссию для карты")
    gen_mission.add_argument("--map", required=True)
    gen_mission.add_argument("--n-tois", type=int, required=True)
    gen_mission.add_argument("--m-pois", type=int, required=True)
    gen_mission.add_argument("--out", required=True)
    _add_planner_flags(gen_mission)

    render = sub.add_parser("render", help="отрисовать карту, миссию и план в SVG")
    render.add_argument("--map", required=True)
    render.add_argument("--plan")
    render.add_argument("--mission")
    render.add_argument("--out", required=True)
    return parser


def _config(args: argparse.Namespace, **extra) -> PlannerConfig:
    return PlannerConfig.from_env(
        t_low=getattr(args, "t_low", None),
        t_high=getattr(args, "t_high", None),
        w_t=args.wt,
        w_r=args.wr,
        seed=args.seed,
        max_vertices=args.max_vertices,
        tsp=args.tsp,
        footprint=args.footprint,
        **extra,
    )


def cmd_plan(args: argparse.Namespace) -> int:
    config = _config(args, method=args.method)
    m = load_map(args.map)
    mission = load_mission(args.mission)
    roadmap = prepare_roadmap(m, mission, config, freeze=True) if args.freeze_roadmap else None
    plan = run_mission(m, mission, config, roadmap=roadmap)
    save_plan(plan, args.out)
    print_plan(plan)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    config = _config(args)
    m = load_map(args.map)
    mission = load_mission(args.mission) if args.mission else None
    t_lows = args.t_low or [config.t_low]
    t_highs = args.t_high or [config.t_high]
    if len(t_lows) != len(t_highs):
        if len(t_highs) == 1:
            t_highs = t_highs * len(t_lows)
        elif len(t_lows) == 1:
            t_lows = t_lows * len(t_highs)
        else:
            raise InputError(
                f"--t-low and --t-high need the same number of values, got {len(t_lows)} and {len(t_highs)}"
            )
    methods = [name.strip() for name in args.methods.split(",") if name.strip()]
    report = benchmark(m, mission, methods, args.trials, seed=config.seed, config=config,
                       checker_configs=list(zip(t_lows, t_highs)), n_tois_list=args.n_tois,
                       m_pois=args.m_pois, parallel=args.parallel, workers=args.workers)
    save_report(report, args.out)
    print_benchmark(report["aggregate"])
    return EXIT_OK


def cmd_gen_env(args: argparse.Namespace) -> int:
    spec = load_env_spec(args.spec) if os.path.exists(args.spec) else load_preset(args.spec)
    save_map(generate_synthetic_env(spec, args.seed), args.out)
    return EXIT_OK


def cmd_gen_mission(args: argparse.Namespace) -> int:
    config = _config(args)
    m = load_map(args.map)
    mission = generate_mission(m, make_checker(m, config), args.n_tois, args.m_pois, config.seed)
    save_mission(mission, args.out)
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    m = load_map(args.map)
    plan = load_plan(args.plan) if args.plan else None
    mission = load_mission(args.mission) if args.mission else None
    render_svg(m, args.out, plan=plan, mission=mission)
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "bench": cmd_bench,
    "gen-env": cmd_gen_env,
    "gen-mission": cmd_gen_mission,
    "render": cmd_render,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Точка входа командной строки

    Returns:
        int: Код выхода (0 успех, 2 ошибка ввода, 3 неудача планирования, 4 нарушение инварианта)
    """
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except PlannerError as e:
        log_error(e, f"Команда {args.command}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"Непредвиденная ошибка в команде {args.command}: {e}")
        return EXIT_INVARIANT_VIOLATION


if __name__ == '__main__':
    sys.exit(main())
