"""
Optimización por Frank-Wolfe con búsqueda lineal exacta.

Primero se optimizan por separado los costos convexos de acciones f(Z) y de
estados g(Y); luego, en modo conjunto, el objetivo completo
f(Z) + g(Y) + d(Z, Y) - (κ/M)·puntajes a partir de ese iterado. Cada cierto número
de iteraciones de la última fase se redondea y se conserva la mejor solución
entera.
"""
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.errors import NonFiniteObjective
from app.models.core_model import (
    PHASE_ACTION,
    PHASE_JOINT,
    PHASE_STATE,
    Assignment,
    ConstraintMode,
    ProblemInstance,
    SolveReport,
    SolverConfig,
    SolverMode,
    TraceRecord,
    ensure_feasible,
)
from app.models.diffrac import ProjectionOperator, build_projection, eval_cost, grad
from app.models.joint_cost import eval_joint, grad_y as joint_grad_y, grad_z as joint_grad_z
from app.models.oracles import (
    SuccessorTable,
    build_successor_tables,
    object_cue_windows,
    saliency_lmo,
    tracklet_lmo,
)
from app.models.rounding import baseline_round, classifiers_at, integer_objective, joint_round

# Holgura relativa para aceptar un paso que no reduce el objetivo
_MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class CostOperators:
    video: ProjectionOperator
    state: ProjectionOperator


def build_operators(p: ProblemInstance, cfg: SolverConfig) -> CostOperators:
    return CostOperators(
        video=build_projection(p.video_features, cfg.lambda_),
        state=build_projection(p.tracklet_features, cfg.mu),
    )


def action_objective(a: Assignment, ops: CostOperators) -> float:
    return eval_cost(ops.video, a.z[:, None])


def state_objective(a: Assignment, p: ProblemInstance, ops: CostOperators, cfg: SolverConfig) -> float:
    return eval_cost(ops.state, a.y) - float(np.sum(p.detection_bonus(cfg.det_score_weight)[:, None] * a.y))


def total_objective(a: Assignment, p: ProblemInstance, ops: CostOperators, cfg: SolverConfig) -> float:
    """f(Z) + g(Y) + d(Z, Y) - (κ/M)·Σ_i score_i (y_i1 + y_i2)."""
    a.check(p)
    return action_objective(a, ops) + state_objective(a, p, ops, cfg) + eval_joint(a.z, a.y, p, cfg.nu)


def total_gradient(a: Assignment, p: ProblemInstance, ops: CostOperators,
                   cfg: SolverConfig) -> Tuple[np.ndarray, np.ndarray]:
    a.check(p)
    g_z = grad(ops.video, a.z) + joint_grad_z(a.y, p, cfg.nu)
    g_y = grad(ops.state, a.y) + joint_grad_y(a.z, p, cfg.nu) - p.detection_bonus(cfg.det_score_weight)[:, None]
    return g_z, g_y


def lmo(grad_z: np.ndarray, grad_y: np.ndarray, p: ProblemInstance, tables: Sequence[SuccessorTable],
        mode: ConstraintMode, windows: Optional[Sequence[Tuple[int, int]]] = None,
        threads: int = 1) -> Assignment:
    """Vértice entero del producto de politopos que minimiza la linealización."""
    if not (np.all(np.isfinite(grad_z)) and np.all(np.isfinite(grad_y))):
        raise NonFiniteObjective("gradiente no finito en el oráculo lineal")
    z, _ = saliency_lmo(grad_z, p, windows)
    y, _ = tracklet_lmo(grad_y, p, tables, mode, threads)
    return Assignment(z, y, integral=True)


def exact_line_search(f0: float, f_half: float, f1: float) -> float:
    """
    Paso óptimo en [0, 1] para un objetivo cuadrático sobre el segmento.

    La parábola aγ² + bγ + c se ajusta con los valores en γ = 0, 1/2 y 1. Si
    no es estrictamente convexa se elige el mejor extremo (empate: γ = 1).
    """
    if not (np.isfinite(f0) and np.isfinite(f_half) and np.isfinite(f1)):
        raise NonFiniteObjective(f"búsqueda lineal con valores no finitos ({f0}, {f_half}, {f1})")
    a = 2.0 * f0 + 2.0 * f1 - 4.0 * f_half
    b = -3.0 * f0 + 4.0 * f_half - f1
    if a > 0:
        return float(min(1.0, max(0.0, -b / (2.0 * a))))
    return 0.0 if f0 < f1 else 1.0


def uniform_z(p: ProblemInstance, windows: Optional[Sequence[Tuple[int, int]]] = None) -> np.ndarray:
    z = np.zeros(p.T)
    for n, clip in enumerate(p.clips):
        lo, hi = (0, clip.horizon - 1) if windows is None else windows[n]
        inicio = p.z_slice(n).start
        z[inicio + lo:inicio + hi + 1] = 1.0 / (hi - lo + 1)
    return z


def initial_assignment(p: ProblemInstance, tables: Sequence[SuccessorTable], mode: ConstraintMode,
                       windows: Optional[Sequence[Tuple[int, int]]] = None) -> Assignment:
    """Z uniforme por clip e Y = vértice de la programación dinámica con costos nulos."""
    y, _ = tracklet_lmo(np.zeros((p.M, 2)), p, tables, mode)
    return Assignment(uniform_z(p, windows), y)


def _run_phase(phase: str, x: Assignment, objective: Callable[[Assignment], float],
               gradient: Callable[[Assignment], Tuple[np.ndarray, np.ndarray]],
               vertex: Callable[[np.ndarray, np.ndarray, Assignment], Assignment],
               max_iters: int, tol: float, trace: List[TraceRecord],
               on_iteration: Optional[Callable[[int, Assignment], None]] = None) -> Tuple[Assignment, float]:
    valor = objective(x)
    if not np.isfinite(valor):
        raise NonFiniteObjective(f"fase {phase}: objetivo inicial no finito (revisar la escala de las características)")
    logger.info(f"Fase {phase}: inicio con objetivo {valor:.6g}")

    for k in range(max_iters + 1):
        g_z, g_y = gradient(x)
        s = vertex(g_z, g_y, x)
        gap = float(np.dot(g_z, x.z - s.z) + np.sum(g_y * (x.y - s.y)))
        trace.append(TraceRecord(phase, k, valor, gap))
        logger.debug(f"{phase} it={k} objetivo={valor:.10g} gap={gap:.3e}")
        if on_iteration is not None:
            on_iteration(k, x)

        if gap < tol:
            logger.info(f"Fase {phase}: convergió en {k} iteraciones (gap {gap:.3e})")
            break
        if k == max_iters:
            logger.warning(f"Fase {phase}: máximo de {max_iters} iteraciones alcanzado (gap {gap:.3e})")
            break

        f_one = objective(s)
        f_half = objective(x.move_towards(s, 0.5))
        gamma = exact_line_search(valor, f_half, f_one)
        candidato = x.move_towards(s, gamma)
        nuevo = f_one if gamma == 1.0 else objective(candidato)
        if not np.isfinite(nuevo):
            raise NonFiniteObjective(f"fase {phase}: objetivo no finito en la iteración {k + 1}")
        if nuevo > valor + _MONOTONE_SLACK * max(1.0, abs(valor)):
            logger.warning(f"Fase {phase}: sin progreso en la iteración {k} (gamma={gamma:.3g})")
            break
        x, valor = candidato, nuevo

    return x, valor


def prepare_problem(p: ProblemInstance, cfg: SolverConfig) -> ProblemInstance:
    """Sustituir las características de tracklets por ruido gaussiano en el modo de solo restricciones."""
    if cfg.solver_mode != SolverMode.CONSTRAINTS_ONLY:
        return p
    rng = np.random.default_rng(cfg.seed)
    return p.replace_features(tracklet_features=rng.standard_normal((p.M, p.d_s)))


@dataclass(frozen=True, eq=False)
class SolverContext:
    """Todo lo que se precalcula una vez por resolución."""
    problem: ProblemInstance
    cfg: SolverConfig
    ops: CostOperators
    tables: Sequence[SuccessorTable]
    windows: Optional[Sequence[Tuple[int, int]]]

    @classmethod
    def build(cls, p: ProblemInstance, cfg: SolverConfig) -> "SolverContext":
        p = prepare_problem(p, cfg)
        return cls(
            problem=p,
            cfg=cfg,
            ops=build_operators(p, cfg),
            tables=build_successor_tables(p),
            windows=object_cue_windows(p) if cfg.object_cues else None,
        )

    @property
    def rounding_nu(self) -> float:
        """El término conjunto solo participa del redondeo en modo conjunto."""
        return self.cfg.nu if self.cfg.solver_mode == SolverMode.JOINT else 0.0


def round_iterate(ctx: SolverContext, x: Assignment) -> Tuple[Assignment, float]:
    """
    Redondear un iterado relajado con los clasificadores óptimos en ese punto.

    Returns:
        Tupla (asignación entera, objetivo entero)
    """
    cfg = ctx.cfg
    fc = classifiers_at(ctx.ops.video, ctx.ops.state, x)
    if cfg.solver_mode == SolverMode.JOINT:
        redondeo, _ = joint_round(
            ctx.problem, fc, ctx.tables, ctx.rounding_nu, cfg.constraint_mode,
            det_score_weight=cfg.det_score_weight, windows=ctx.windows, threads=cfg.threads,
        )
    else:
        redondeo = baseline_round(
            ctx.problem, fc, ctx.tables, cfg.constraint_mode,
            det_score_weight=cfg.det_score_weight, windows=ctx.windows,
        )
    valor = integer_objective(redondeo.z, redondeo.y, ctx.problem, fc, ctx.rounding_nu, cfg.det_score_weight)
    logger.debug(f"Redondeo: objetivo entero {valor:.10g}")
    return redondeo, valor


def solve(p: ProblemInstance, cfg: SolverConfig) -> SolveReport:
    """
    Resolver el problema relajado y devolver el reporte con trazas y la mejor
    solución entera.

    Args:
        p: Instancia del problema (todos los clips deben admitir etiquetados)
        cfg: Configuración del solucionador

    Returns:
        SolveReport con la traza por fase, el iterado relajado final y la
        asignación entera de menor objetivo
    """
    ensure_feasible(p)
    inicio_total = time.perf_counter()
    ctx = SolverContext.build(p, cfg)
    p, ops, tables, windows = ctx.problem, ctx.ops, ctx.tables, ctx.windows
    modo = cfg.solver_mode

    x = initial_assignment(p, tables, cfg.constraint_mode, windows)
    trace: List[TraceRecord] = []
    tiempos = {}
    mejor = {"assignment": None, "objective": float("inf")}

    def ofrecer(iterado: Assignment):
        redondeo, valor = round_iterate(ctx, iterado)
        if valor < mejor["objective"]:
            mejor["assignment"], mejor["objective"] = redondeo, valor

    def redondear(k: int, iterado: Assignment):
        if k > 0 and k % cfg.rounding_cadence == 0:
            ofrecer(iterado)

    def vertice_accion(g_z, g_y, actual):
        s = lmo(g_z, g_y, p, tables, cfg.constraint_mode, windows, cfg.threads)
        return Assignment(s.z, actual.y.copy())

    def vertice_estado(g_z, g_y, actual):
        s = lmo(g_z, g_y, p, tables, cfg.constraint_mode, windows, cfg.threads)
        return Assignment(actual.z.copy(), s.y)

    def gradiente_accion(a):
        return grad(ops.video, a.z), np.zeros_like(a.y)

    def gradiente_estado(a):
        return np.zeros_like(a.z), grad(ops.state, a.y) - p.detection_bonus(cfg.det_score_weight)[:, None]

    fases = []
    if modo in (SolverMode.JOINT, SolverMode.ACTION_ONLY):
        fases.append((PHASE_ACTION, lambda a: action_objective(a, ops), gradiente_accion, vertice_accion))
    if modo in (SolverMode.JOINT, SolverMode.STATE_ONLY, SolverMode.CONSTRAINTS_ONLY):
        fases.append((PHASE_STATE, lambda a: state_objective(a, p, ops, cfg), gradiente_estado, vertice_estado))

    for indice, (nombre, objetivo, gradiente, vertice) in enumerate(fases):
        ultima = modo != SolverMode.JOINT and indice == len(fases) - 1
        inicio = time.perf_counter()
        x, _ = _run_phase(
            nombre, x, objetivo, gradiente, vertice, cfg.convex_max_iters, cfg.convex_tol, trace,
            on_iteration=redondear if ultima else None,
        )
        tiempos[nombre] = time.perf_counter() - inicio

    if modo == SolverMode.JOINT:
        inicio = time.perf_counter()
        x, _ = _run_phase(
            PHASE_JOINT, x,
            lambda a: total_objective(a, p, ops, cfg),
            lambda a: total_gradient(a, p, ops, cfg),
            lambda g_z, g_y, actual: lmo(g_z, g_y, p, tables, cfg.constraint_mode, windows, cfg.threads),
            cfg.max_iters, cfg.fw_tol, trace, on_iteration=redondear,
        )
        tiempos[PHASE_JOINT] = time.perf_counter() - inicio

    inicio = time.perf_counter()
    ofrecer(x)
    tiempos["rounding"] = time.perf_counter() - inicio
    tiempos["total"] = time.perf_counter() - inicio_total

    relajado = trace[-1].objective
    logger.info(
        f"Resolución {modo.value}: objetivo relajado {relajado:.6g}, mejor objetivo entero {mejor['objective']:.6g}"
    )
    return SolveReport(
        config=cfg,
        trace=trace,
        relaxed_final=x,
        relaxed_objective=relajado,
        best_integer=mejor["assignment"],
        best_integer_objective=mejor["objective"],
        wall_times=tiempos,
    )
