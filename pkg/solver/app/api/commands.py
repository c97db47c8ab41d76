"""
Manejadores de los subcomandos de la CLI.

Cada manejador recibe el ``argparse.Namespace`` ya validado, hace su trabajo y
devuelve el código de salida; los errores se propagan como excepciones de
``app.errors`` y ``app.main`` los traduce a códigos de salida.
"""
import argparse
import time

import pandas as pd
from loguru import logger

from app.api.storage import (
    load_assignment,
    load_config,
    load_problem,
    load_report,
    load_scenario,
    save_assignment,
    save_problem,
    save_report,
    save_results,
)
from app.errors import ValidationError
from app.fixtures import verify_fixtures
from app.models.benchmark import CORE_VARIANTS, EXTENDED_VARIANTS, RESULT_COLUMNS, VARIANTS, run_benchmark
from app.models.core_model import SolverConfig, SolverMode, ensure_feasible, validate_problem
from app.models.evaluation import evaluate
from app.models.frank_wolfe import SolverContext, round_iterate, solve
from app.models.synth import ScenarioSpec, generate


def _scenario(args: argparse.Namespace) -> ScenarioSpec:
    spec = load_scenario(args.spec) if args.spec else ScenarioSpec()
    if args.seed is not None:
        spec = ScenarioSpec.parse_obj({**spec.dict(), "seed": args.seed})
    return spec


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else SolverConfig()
    return cfg.with_overrides(
        solver_mode=getattr(args, "mode", None),
        seed=args.seed,
        threads=args.threads,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    problem, _ = generate(_scenario(args))
    save_problem(problem, args.out)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    problem, _ = load_problem(args.problem)
    cfg = _solver_config(args)
    for diag in validate_problem(problem):
        logger.debug(f"Clip {diag.clip_id}: {diag.message}")
    ensure_feasible(problem)
    report = solve(problem, cfg)
    save_report(report, args.out, timings=args.timings)
    return 0


def cmd_round(args: argparse.Namespace) -> int:
    problem, _ = load_problem(args.problem)
    relajado, cfg, documento = load_report(args.report)
    cfg = cfg.with_overrides(threads=args.threads)
    ensure_feasible(problem)
    inicio = time.perf_counter()
    ctx = SolverContext.build(problem, cfg)
    asignacion, valor = round_iterate(ctx, relajado.check(ctx.problem))
    segundos = time.perf_counter() - inicio if args.timings else None
    save_assignment(
        asignacion, args.out, mode=cfg.solver_mode.value, variant=args.variant,
        integer_objective=valor, relaxed_objective=documento.relaxed_objective, seconds=segundos,
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    problem, gt = load_problem(args.problem)
    if gt is None:
        raise ValidationError(f"{args.problem}: el problema no trae verdad de terreno")
    asignacion, documento = load_assignment(args.assign)
    asignacion.check(problem)
    metricas = evaluate(asignacion, gt)
    fila = {
        "variant": documento.variant or documento.mode,
        **metricas,
        "relaxed_objective": documento.relaxed_objective,
        "integer_objective": documento.integer_objective,
        "seconds": documento.seconds if args.timings else None,
    }
    logger.info(
        f"Evaluación: precisión de estados {metricas['state_precision']:.3f}, "
        f"precisión de acción {metricas['action_precision']:.3f}"
    )
    save_results(pd.DataFrame([fila], columns=RESULT_COLUMNS), args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    if args.problem:
        problem, gt = load_problem(args.problem)
        if gt is None or not (gt.has_labels and gt.has_actions):
            raise ValidationError(f"{args.problem}: bench necesita verdad de terreno completa")
    else:
        problem, gt = generate(_scenario(args))

    if args.all_variants:
        variantes = list(CORE_VARIANTS) + (list(EXTENDED_VARIANTS) if args.extended else [])
    else:
        nombres = args.variant or ["joint"]
        desconocidas = [n for n in nombres if n not in VARIANTS]
        if desconocidas:
            raise ValidationError(f"variantes desconocidas: {', '.join(desconocidas)}")
        variantes = [VARIANTS[n] for n in nombres]

    cfg = _solver_config(args)
    tabla = run_benchmark(problem, gt, cfg, variantes, timings=args.timings, show_progress=args.progress)
    save_results(tabla, args.out)
    return 0


def cmd_fixtures(args: argparse.Namespace) -> int:
    report = verify_fixtures(args.dir) if args.dir else verify_fixtures()
    report.raise_for_failures()
    return 0


SOLVER_MODES = [mode.value for mode in SolverMode]
