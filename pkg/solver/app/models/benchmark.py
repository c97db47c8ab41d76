"""
Comparación de variantes del solucionador sobre una instancia con verdad de terreno.

Cada variante produce una fila con precisión de estados, precisión de acción,
objetivos relajado y entero, y tiempo de pared (solo con ``timings``). Las
métricas que no aplican a una variante quedan en NaN.
"""
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from app.config import CHANCE_SAMPLES, DEFAULT_DET_SCORE_WEIGHT
from app.errors import ValidationError
from app.models.core_model import ConstraintMode, ProblemInstance, SolverConfig, SolverMode, TrackletLabel
from app.models.evaluation import (
    GroundTruth,
    action_chance,
    action_precision,
    kmeans_baseline,
    state_chance,
    state_precision,
)
from app.models.frank_wolfe import solve

RESULT_COLUMNS = ["variant", "state_precision", "action_precision", "relaxed_objective", "integer_objective", "seconds"]

_NAN = float("nan")


@dataclass(frozen=True)
class Variant:
    name: str
    overrides: Dict[str, object] = field(default_factory=dict)
    reports_states: bool = True
    reports_actions: bool = True
    features: Optional[str] = None
    baseline: Optional[str] = None


CORE_VARIANTS = (
    Variant("chance", baseline="chance"),
    Variant("kmeans", baseline="kmeans", reports_actions=False),
    Variant("constraints-only", {"solver_mode": SolverMode.CONSTRAINTS_ONLY}, reports_actions=False),
    Variant("exactly-one", {"solver_mode": SolverMode.STATE_ONLY, "constraint_mode": ConstraintMode.EXACTLY_ONE},
            reports_actions=False),
    Variant("at-least-one", {"solver_mode": SolverMode.STATE_ONLY}, reports_actions=False),
    Variant("joint", {"solver_mode": SolverMode.JOINT}),
    Variant("joint+scores", {"solver_mode": SolverMode.JOINT, "det_score_weight": DEFAULT_DET_SCORE_WEIGHT}),
)

EXTENDED_VARIANTS = (
    Variant("action-only", {"solver_mode": SolverMode.ACTION_ONLY}, reports_states=False),
    Variant("action-only+object-cues", {"solver_mode": SolverMode.ACTION_ONLY, "object_cues": True},
            reports_states=False),
    Variant("joint+gt-action-features", {"solver_mode": SolverMode.JOINT}, features="gt_action"),
    Variant("joint+gt-state-features", {"solver_mode": SolverMode.JOINT}, features="gt_state"),
)

VARIANTS = {variant.name: variant for variant in CORE_VARIANTS + EXTENDED_VARIANTS}


def gt_action_features(p: ProblemInstance, gt: GroundTruth) -> np.ndarray:
    """Columna indicadora (T x 1) del intervalo de acción verdadero."""
    if not gt.has_actions:
        raise ValidationError("la variante con acción verdadera necesita intervalos de acción")
    columna = np.zeros((p.T, 1))
    for n, (inicio, fin) in enumerate(gt.action_intervals):
        base = p.z_slice(n).start
        columna[base + inicio:base + fin + 1, 0] = 1.0
    return columna


def gt_state_features(p: ProblemInstance, gt: GroundTruth) -> np.ndarray:
    """One-hot (M x 4) de la etiqueta verdadera de cada tracklet."""
    if not gt.has_labels:
        raise ValidationError("la variante con estados verdaderos necesita etiquetas de tracklets")
    orden = list(TrackletLabel)
    etiquetas = [orden.index(label) for labels in gt.labels for label in labels]
    return np.eye(len(orden))[etiquetas]


def _row(name: str, states: float = _NAN, actions: float = _NAN, relaxed: float = _NAN,
         integer: float = _NAN, seconds: Optional[float] = None) -> Dict[str, object]:
    return {
        "variant": name,
        "state_precision": states,
        "action_precision": actions,
        "relaxed_objective": relaxed,
        "integer_objective": integer,
        "seconds": _NAN if seconds is None else seconds,
    }


def run_variant(variant: Variant, p: ProblemInstance, gt: GroundTruth, base_cfg: SolverConfig,
                timings: bool = False, chance_samples: int = CHANCE_SAMPLES) -> Dict[str, object]:
    """Ejecutar una variante y devolver su fila de resultados."""
    inicio = time.perf_counter()

    def segundos():
        return time.perf_counter() - inicio if timings else None

    if variant.baseline == "chance":
        estados = state_chance(p, gt, base_cfg.constraint_mode, samples=chance_samples, seed=base_cfg.seed)
        return _row(variant.name, estados, action_chance(gt), seconds=segundos())
    if variant.baseline == "kmeans":
        resultado = kmeans_baseline(p, gt, seed=base_cfg.seed)
        return _row(variant.name, resultado.precision, seconds=segundos())

    problema = p
    if variant.features == "gt_action":
        problema = p.replace_features(video_features=gt_action_features(p, gt))
    elif variant.features == "gt_state":
        problema = p.replace_features(tracklet_features=gt_state_features(p, gt))

    cfg = base_cfg.with_overrides(**variant.overrides)
    report = solve(problema, cfg)
    asignacion = report.best_integer
    return _row(
        variant.name,
        state_precision(asignacion, gt) if variant.reports_states else _NAN,
        action_precision(asignacion, gt) if variant.reports_actions else _NAN,
        report.relaxed_objective,
        report.best_integer_objective,
        seconds=segundos(),
    )


def run_benchmark(p: ProblemInstance, gt: GroundTruth, base_cfg: SolverConfig,
                  variants: Sequence[Variant] = CORE_VARIANTS, timings: bool = False,
                  chance_samples: int = CHANCE_SAMPLES,
                  show_progress: bool = False) -> pd.DataFrame:
    """
    Tabla comparativa con una fila por variante, en el orden recibido.

    Args:
        p: Instancia con verdad de terreno completa
        gt: Verdad de terreno
        base_cfg: Configuración común (semilla, hilos, hiperparámetros)
        variants: Variantes a ejecutar
        timings: Registrar el tiempo de pared de cada variante
        chance_samples: Muestras de la línea base de azar de estados
        show_progress: Mostrar una barra de progreso en stderr

    Returns:
        DataFrame con las columnas de RESULT_COLUMNS
    """
    filas: List[Dict[str, object]] = []
    for variant in tqdm(list(variants), desc="Variantes", disable=not show_progress):
        logger.info(f"Variante {variant.name}")
        filas.append(run_variant(variant, p, gt, base_cfg, timings=timings, chance_samples=chance_samples))
    return pd.DataFrame(filas, columns=RESULT_COLUMNS)
